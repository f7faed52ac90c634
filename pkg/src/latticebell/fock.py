"""Bosonic Fock sector and exact operator construction.

The sector is fixed: N particles distributed over 2N modes, where mode
(well l, level s) has flat index 2*l + s.  Level 0 is the internal ground
state, level 1 the excited state.  All generators conserve total particle
number, so the N-particle sector is the whole Hilbert space.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np
import scipy.sparse as sp

DEFAULT_DIMENSION_CAP = 20_000
# Largest dimension for which full dense eigendecomposition is attempted.
# Beyond this, callers should use vector-level evolution (see protocol).
DENSE_EIG_LIMIT = 4_096

ALGEBRA_TOL = 1e-12
EVOLVED_TOL = 1e-9


class CapacityError(RuntimeError):
    """Requested basis or matrix exceeds the configured dimension cap."""


class Level(IntEnum):
    GROUND = 0
    EXCITED = 1


@dataclass(frozen=True)
class ModeIndex:
    well: int
    level: Level

    @property
    def flat(self) -> int:
        return 2 * self.well + int(self.level)


def basis_dimension(n_wells: int) -> int:
    """Number of ways to place N bosons in 2N modes: C(3N-1, N)."""
    return math.comb(3 * n_wells - 1, n_wells)


class FockBasis:
    """Ordered basis of occupation vectors for N bosons in 2N modes.

    Ordering is lexicographic descending on the occupation counts, which is
    deterministic across runs.  rank/unrank are inverse bijections.
    """

    def __init__(self, n_wells: int, states: list[tuple[int, ...]]):
        self.n_wells = n_wells
        self.n_modes = 2 * n_wells
        self.states = tuple(states)
        self._rank = {s: i for i, s in enumerate(self.states)}
        # dim x 2N integer array, handy for vectorized diagonal operators
        self.occupations = np.array(self.states, dtype=np.int64)

    @property
    def dim(self) -> int:
        return len(self.states)

    def rank(self, state: tuple[int, ...]) -> int:
        return self._rank[tuple(state)]

    def unrank(self, index: int) -> tuple[int, ...]:
        return self.states[index]

    def __contains__(self, state) -> bool:
        return tuple(state) in self._rank

    def __repr__(self) -> str:
        return f"FockBasis(n_wells={self.n_wells}, dim={self.dim})"


def enumerate_basis(n_wells: int, dimension_cap: int = DEFAULT_DIMENSION_CAP) -> FockBasis:
    """Enumerate all occupation vectors of N bosons in 2N modes.

    Raises CapacityError when the sector dimension exceeds ``dimension_cap``
    (or when n_wells < 1, which has no meaningful sector).
    """
    if n_wells < 1:
        raise CapacityError(f"n_wells must be >= 1, got {n_wells}")
    dim = basis_dimension(n_wells)
    if dim > dimension_cap:
        raise CapacityError(
            f"basis dimension {dim} for n_wells={n_wells} exceeds cap {dimension_cap}"
        )
    n_modes = 2 * n_wells
    states = []
    for state in _compositions(n_wells, n_modes):
        states.append(state)
    states.sort(reverse=True)
    return FockBasis(n_wells, states)


def _compositions(total: int, slots: int):
    """All ways to write ``total`` as an ordered sum of ``slots`` >= 0 ints."""
    if slots == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, slots - 1):
            yield (first,) + rest


@dataclass
class OperatorMatrix:
    """Dense operator over a FockBasis with a declared algebraic kind."""

    basis: FockBasis
    matrix: np.ndarray
    kind: str  # hermitian | unitary | diagonal | general

    def __post_init__(self):
        if self.kind not in ("hermitian", "unitary", "diagonal", "general"):
            raise ValueError(f"unknown operator kind {self.kind!r}")

    @property
    def dim(self) -> int:
        return self.basis.dim

    def dagger(self) -> "OperatorMatrix":
        return OperatorMatrix(self.basis, self.matrix.conj().T, self.kind)

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            return OperatorMatrix(self.basis, self.matrix @ other.matrix, "general")
        return self.matrix @ other


def quadratic_operator(basis: FockBasis, terms, as_sparse: bool = False):
    """Build sum_t coeff_t * c†_a(t) c_b(t) in the occupation basis.

    ``terms`` is an iterable of (create_mode, annihilate_mode, coeff) with
    flat mode indices.  Matrix elements carry the bosonic sqrt(n) factors.
    """
    rows, cols, vals = [], [], []
    for create, annihilate, coeff in terms:
        for j, s in enumerate(basis.states):
            nb = s[annihilate]
            if nb == 0:
                continue
            t = list(s)
            amp = math.sqrt(nb)
            t[annihilate] -= 1
            t[create] += 1
            amp *= math.sqrt(t[create])
            rows.append(basis.rank(tuple(t)))
            cols.append(j)
            vals.append(coeff * amp)
    mat = sp.csr_matrix(
        (np.array(vals, dtype=complex), (rows, cols)), shape=(basis.dim, basis.dim)
    )
    return mat if as_sparse else mat.toarray()


def _jy_terms(pairs):
    """(1/2i) * sum (c†_g c_e - c†_e c_g) over the given (g_mode, e_mode) pairs."""
    terms = []
    for g, e in pairs:
        terms.append((g, e, 1.0 / 2j))
        terms.append((e, g, -1.0 / 2j))
    return terms


def cross_site_jy(basis: FockBasis, as_sparse: bool = False):
    """Ring coupling of (ground, l) with (excited, l+1 mod N)."""
    n = basis.n_wells
    pairs = [(2 * l, 2 * ((l + 1) % n) + 1) for l in range(n)]
    mat = quadratic_operator(basis, _jy_terms(pairs), as_sparse=as_sparse)
    if as_sparse:
        return mat
    return OperatorMatrix(basis, mat, "hermitian")


def onsite_jy(basis: FockBasis, as_sparse: bool = False):
    """On-site coupling of (ground, l) with (excited, l) in each well."""
    n = basis.n_wells
    pairs = [(2 * l, 2 * l + 1) for l in range(n)]
    mat = quadratic_operator(basis, _jy_terms(pairs), as_sparse=as_sparse)
    if as_sparse:
        return mat
    return OperatorMatrix(basis, mat, "hermitian")


def number_operator(basis: FockBasis, mode: ModeIndex) -> OperatorMatrix:
    """Diagonal number operator for a single mode."""
    flat = mode.flat
    if not 0 <= flat < basis.n_modes:
        raise IndexError(f"mode {mode} out of range for {basis}")
    diag = basis.occupations[:, flat].astype(complex)
    return OperatorMatrix(basis, np.diag(diag), "diagonal")


def jz_diagonal(basis: FockBasis) -> np.ndarray:
    """Diagonal of (1/2) sum_l (n_g,l - n_e,l)."""
    occ = basis.occupations
    return 0.5 * (occ[:, 0::2].sum(axis=1) - occ[:, 1::2].sum(axis=1)).astype(float)


def jz_half_difference(basis: FockBasis) -> OperatorMatrix:
    """(1/2) sum_l (n_g,l - n_e,l) as a diagonal operator."""
    return OperatorMatrix(basis, np.diag(jz_diagonal(basis)).astype(complex), "diagonal")


def parity_diagonal(basis: FockBasis) -> np.ndarray:
    """Diagonal of (-1)^(N_g), N_g the total ground-level occupation."""
    n_g = basis.occupations[:, 0::2].sum(axis=1)
    return np.where(n_g % 2 == 0, 1.0, -1.0)


def parity_operator(basis: FockBasis) -> OperatorMatrix:
    return OperatorMatrix(basis, np.diag(parity_diagonal(basis)).astype(complex), "diagonal")


def exp_unitary(generator: OperatorMatrix, scale: float) -> OperatorMatrix:
    """exp(-i * scale * G) for Hermitian G, by full eigendecomposition."""
    if generator.kind not in ("hermitian", "diagonal"):
        raise ValueError(f"exp_unitary requires a hermitian generator, got kind {generator.kind!r}")
    mat = generator.matrix
    if np.max(np.abs(mat - mat.conj().T)) > ALGEBRA_TOL:
        raise ValueError("generator is not Hermitian within tolerance")
    if generator.kind == "diagonal":
        u = np.diag(np.exp(-1j * scale * np.diag(mat)))
    else:
        w, v = np.linalg.eigh(mat)
        u = (v * np.exp(-1j * scale * w)) @ v.conj().T
    return OperatorMatrix(generator.basis, u, "unitary")
