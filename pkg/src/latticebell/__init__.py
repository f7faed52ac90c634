"""Exact Fock-space simulator and analysis toolkit for the lattice
Bell-nonlocality protocol: state preparation, cross-site and on-site
splitting, phase imprinting, parity readout, Bell-operator assembly and
phase optimization."""

__version__ = "0.1.0"

from . import bell, fock, optimize, protocol  # noqa: F401
