"""Bell-operator assembly from parity correlators.

The permutationally-invariant inequality with one- and two-body correlators
reads

    B_N = alpha * (S0 + S1/N) + (gamma/2) * S00 + (N/2) * S01 - S11/2 >= -beta_c

with alpha = N(N-1)(ceil(N/2) - N/2), gamma = N(N-1)/2 and classical bound
beta_c = (N(N-1)/2) * ceil((N+2)/2).  For N = 2 this is the CHSH inequality.

Correlators use operational semantics: a k-body term imprints the setting
phases at the probed wells only and measures the global ground-count parity.
On the post-selected, non-interacting protocol this gives cos(sum of the
imprinted phases) exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import protocol
from .fock import CapacityError

Evaluator = Callable[[Sequence[float]], float]


@dataclass(frozen=True)
class MeasurementSettings:
    theta: tuple[float, ...]
    phi: tuple[float, ...]

    def __post_init__(self):
        if len(self.theta) != len(self.phi):
            raise ValueError("theta and phi must have equal lengths")

    @property
    def n_wells(self) -> int:
        return len(self.theta)


@dataclass(frozen=True)
class TuraCoefficients:
    n: int
    alpha: float
    beta: float
    gamma: float
    delta: float
    epsilon: float
    classical_bound: float

    @classmethod
    def for_parties(cls, n: int) -> "TuraCoefficients":
        if n < 2:
            raise ValueError("the inequality needs at least two parties")
        alpha = n * (n - 1) * (math.ceil(n / 2) - n / 2)
        gamma = n * (n - 1) / 2
        beta_c = (n * (n - 1) / 2) * math.ceil((n + 2) / 2)
        return cls(
            n=n,
            alpha=alpha,
            beta=alpha / n,
            gamma=gamma,
            delta=n / 2,
            epsilon=-1.0,
            classical_bound=beta_c,
        )


@dataclass
class CorrelationSet:
    n: int
    s0: float
    s1: float
    s00: float
    s01: float
    s11: float


@dataclass
class ViolationSummary:
    n: int
    bell_value: float
    classical_bound: float
    xi: float
    settings: MeasurementSettings
    mode: str  # free_phases | global_phases
    postselected: bool = True
    chi: float = 0.0
    violation: bool = False
    metadata: dict = field(default_factory=dict)


def parity_correlator(
    n_wells: int,
    phases: Sequence[float],
    chi: float = 0.0,
    postselect: bool = True,
    selection_norm: str = "renormalized",
) -> float:
    """Run the protocol with the given phase vector and return <(-1)^N_g>."""
    engine = protocol.get_engine(n_wells, chi)
    return engine.parity_expectation(phases, postselect=postselect, selection_norm=selection_norm)


def closed_form_correlator(phases: Sequence[float]) -> float:
    """Analytic correlator of the post-selected two-branch state at chi = 0."""
    return math.cos(float(np.sum(np.asarray(phases, dtype=float))))


def correlation_set(
    n_wells: int, settings: MeasurementSettings, evaluator: Evaluator
) -> CorrelationSet:
    """Assemble one- and two-body sums; ordered pairs are counted separately."""
    if settings.n_wells != n_wells:
        raise ValueError(
            f"settings are for {settings.n_wells} wells, expected {n_wells}"
        )
    theta, phi = settings.theta, settings.phi

    def one_body(values):
        total = 0.0
        for k in range(n_wells):
            vec = np.zeros(n_wells)
            vec[k] = values[k]
            total += evaluator(vec)
        return total

    def two_body(values_k, values_l):
        total = 0.0
        for k, l in itertools.permutations(range(n_wells), 2):
            vec = np.zeros(n_wells)
            vec[k] = values_k[k]
            vec[l] += values_l[l]
            total += evaluator(vec)
        return total

    return CorrelationSet(
        n=n_wells,
        s0=one_body(theta),
        s1=one_body(phi),
        s00=two_body(theta, theta),
        s01=two_body(theta, phi),
        s11=two_body(phi, phi),
    )


def bell_value(coeffs: TuraCoefficients, corr: CorrelationSet) -> float:
    if coeffs.n != corr.n:
        raise ValueError(f"coefficient/correlation mismatch: {coeffs.n} vs {corr.n}")
    n = coeffs.n
    return (
        coeffs.alpha * (corr.s0 + corr.s1 / n)
        + coeffs.gamma / 2 * corr.s00
        + n / 2 * corr.s01
        - corr.s11 / 2
    )


def closed_form_bell(n_wells: int, theta: Sequence[float], phi: Sequence[float]) -> float:
    """Bell value assembled from the analytic pairwise cosine correlators.

    Equivalent to bell_value(correlation_set(..., closed_form_correlator))
    but O(N) via complex phasor sums; used as the optimizer objective.
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    c = TuraCoefficients.for_parties(n_wells)
    zt = np.exp(1j * theta)
    zp = np.exp(1j * phi)
    s0 = float(np.sum(zt.real))
    s1 = float(np.sum(zp.real))
    # sum_{k != l} cos(a_k + b_l) = Re[(sum e^{i a})(sum e^{i b})] - sum cos(a_k + b_k)
    s00 = float(np.real(np.sum(zt) ** 2) - np.sum(np.cos(2 * theta)))
    s11 = float(np.real(np.sum(zp) ** 2) - np.sum(np.cos(2 * phi)))
    # the phasor product runs over all ordered (k, l); removing the diagonal
    # leaves exactly the i != j double sum
    s01 = float(np.real(np.sum(zt) * np.sum(zp)) - np.sum(np.cos(theta + phi)))
    return c.alpha * (s0 + s1 / n_wells) + c.gamma / 2 * s00 + n_wells / 2 * s01 - s11 / 2


def global_phase_bell(n_wells: int, theta, phi):
    """closed_form_bell with all local phases equal; broadcasts over arrays."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    c = TuraCoefficients.for_parties(n_wells)
    n = n_wells
    pairs = n * (n - 1)
    s0 = n * np.cos(theta)
    s1 = n * np.cos(phi)
    s00 = pairs * np.cos(2 * theta)
    s01 = pairs * np.cos(theta + phi)
    s11 = pairs * np.cos(2 * phi)
    return c.alpha * (s0 + s1 / n) + c.gamma / 2 * s00 + n / 2 * s01 - s11 / 2


def chsh_value(theta_1, theta_2, phi_1, phi_2, evaluator: Evaluator) -> float:
    """E(t1,t2) - E(f1,f2) + E(f1,t2) + E(t1,f2) for the two-well protocol."""
    return (
        evaluator((theta_1, theta_2))
        - evaluator((phi_1, phi_2))
        + evaluator((phi_1, theta_2))
        + evaluator((theta_1, phi_2))
    )


def lhv_minimum(coeffs: TuraCoefficients, max_parties: int = 7) -> float:
    """Exact minimum of the Bell expression over deterministic local strategies.

    Enumerates all 4^N assignments m_0, m_1 in {-1, +1}^N.  The expression
    depends only on the sums M0 = sum m_0, M1 = sum m_1 and D = sum m_0 m_1:

        S0 = M0, S1 = M1, S00 = M0^2 - N, S11 = M1^2 - N, S01 = M0*M1 - D.
    """
    n = coeffs.n
    if n > max_parties:
        raise CapacityError(f"LHV enumeration for n={n} exceeds limit {max_parties}")
    best = math.inf
    for m0 in itertools.product((-1, 1), repeat=n):
        sum0 = sum(m0)
        for m1 in itertools.product((-1, 1), repeat=n):
            sum1 = sum(m1)
            dot = sum(a * b for a, b in zip(m0, m1))
            corr = CorrelationSet(
                n=n,
                s0=float(sum0),
                s1=float(sum1),
                s00=float(sum0 * sum0 - n),
                s01=float(sum0 * sum1 - dot),
                s11=float(sum1 * sum1 - n),
            )
            best = min(best, bell_value(coeffs, corr))
    return best


def relative_violation(value: float, classical_bound: float) -> tuple[float, bool]:
    """(classical_bound / |value|, violation flag)."""
    if value == 0.0:
        raise ZeroDivisionError("relative violation undefined for zero Bell value")
    return classical_bound / abs(value), value < -classical_bound
