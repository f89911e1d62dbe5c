"""Known-CSIT extension: capacity-adapted rate and optimal power loading.

With channel knowledge at the transmitter the accepted-and-serving state
delivers the instantaneous capacity T_s * delta_f * log2(1 + snr) instead of
a fixed rate, so its moment generating function is an integral over the SNR
law; the remaining (non-serving) authentication outcomes contribute their
probability mass unchanged. Consistent with the rest of the package the
negative-exponent convention is used, and the slot bits carry the
T_s * delta_f factor that converts spectral efficiency into per-slot bits.

Power over subcarriers is a water-filling problem with one total-power
constraint, solved two ways: closed-form per-subcarrier allocation at a
given dual variable, and the projected subgradient iteration on that dual
variable. A bisection on the dual variable serves as the independent oracle
in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import SnrDistribution
from .markov_ec import QosParams
from .specialfn import ConvergenceError, Tolerance, integrate, log_bessel_i0

__all__ = [
    "CsitPowerProblem",
    "ec_known_csit",
    "optimal_power",
    "solve_power_dual",
]

_QUAD_TOL = Tolerance(abs_tol=1e-12, rel_tol=1e-10, max_terms=500_000)


@dataclass(frozen=True)
class CsitPowerProblem:
    """Water-filling instance: channel power gains, total budget, QoS
    exponent, and the probability mass of the accepted-and-serving state."""

    gains: tuple
    total_power: float
    theta: float
    p_accept: float

    def __post_init__(self):
        gains = tuple(float(g) for g in self.gains)
        object.__setattr__(self, "gains", gains)
        if not gains or any(g <= 0 for g in gains):
            raise ValueError("gains must be positive")
        if self.total_power <= 0:
            raise ValueError("total_power must be positive")
        if self.theta <= 0:
            raise ValueError("theta must be positive")
        if not 0.0 < self.p_accept <= 1.0:
            raise ValueError("p_accept must lie in (0, 1]")

    @property
    def n(self) -> int:
        return len(self.gains)


def _snr_log_pdf(x: float, lam: float, scale: float) -> float:
    # scaled non-central chi-squared density with 2 degrees of freedom
    xs = x / scale
    return (
        -math.log(2.0 * scale)
        - 0.5 * (xs + lam)
        + log_bessel_i0(math.sqrt(lam * xs))
    )


def ec_known_csit(
    dist: SnrDistribution,
    qos: QosParams,
    delta_f: float,
    p_accept: float,
    tol: Tolerance = _QUAD_TOL,
) -> float:
    """Effective capacity (bits/sec) when the serving rate tracks capacity.

    The accepted-state MGF integral E[(1 + snr)^(-theta T_s delta_f / ln 2)]
    is evaluated by adaptive quadrature over the SNR density; the remaining
    probability mass 1 - p_accept enters with MGF 1.
    """
    if delta_f <= 0:
        raise ValueError("delta_f must be positive")
    if not 0.0 <= p_accept <= 1.0:
        raise ValueError("p_accept must lie in [0, 1]")
    if p_accept == 0.0:
        return 0.0
    exponent = qos.theta * qos.ts * delta_f / math.log(2.0)

    def integrand(x: float) -> float:
        if x <= 0.0:
            x = 1e-300
        return math.exp(_snr_log_pdf(x, dist.lam, dist.scale) - exponent * math.log1p(x))

    # tail cut where the chi-squared mass is below ~e^-50
    upper = dist.scale * (math.sqrt(dist.lam) + 10.0) ** 2 + 10.0 * dist.scale
    mgf = integrate(integrand, 0.0, upper, tol)
    mgf = min(mgf, 1.0)
    inside = p_accept * mgf + (1.0 - p_accept)
    return -math.log(inside) / (qos.theta * qos.ts)


def optimal_power(problem: CsitPowerProblem, kappa: float) -> np.ndarray:
    """Per-subcarrier allocation at dual value kappa: water level minus
    inverse gain, clipped at zero."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    level = (problem.theta / math.log(2.0) + 1.0) / (kappa * problem.p_accept)
    gains = np.asarray(problem.gains)
    return np.maximum(level - 1.0 / gains, 0.0)


def solve_power_dual(
    problem: CsitPowerProblem,
    step: float | None = None,
    max_iters: int = 100_000,
    budget_rtol: float = 1e-9,
) -> tuple[np.ndarray, float, list]:
    """Projected subgradient iteration on the dual variable.

    kappa(m) = kappa(m-1) - alpha (P_T - sum P_i(kappa)), projected to stay
    positive. The default step comes from the all-active water-level guess,
    which makes the first update nearly a Newton step; the step is halved
    whenever the budget residual oscillates without shrinking (the printed
    control law fixes no step size). Returns (allocation, kappa, trace of
    (kappa, residual) pairs); raises ConvergenceError when max_iters is
    exhausted.
    """
    gains = np.asarray(problem.gains)
    pt = problem.total_power
    coeff = problem.theta / math.log(2.0) + 1.0
    # all-active closed form: level = (P_T + sum 1/g) / n
    level0 = (pt + float(np.sum(1.0 / gains))) / problem.n
    kappa = coeff / (level0 * problem.p_accept)
    if step is None:
        step = kappa / (problem.n * level0)
    if step <= 0:
        raise ValueError("step must be positive")

    trace = []
    prev_residual = None
    for _ in range(max_iters):
        alloc = optimal_power(problem, kappa)
        residual = pt - float(np.sum(alloc))
        trace.append((kappa, residual))
        if abs(residual) <= budget_rtol * pt:
            return alloc, kappa, trace
        if prev_residual is not None and residual * prev_residual < 0:
            if abs(residual) >= abs(prev_residual):
                step *= 0.5  # oscillating without progress: damp
        prev_residual = residual
        kappa = max(kappa - step * residual, 1e-300)
    raise ConvergenceError(
        f"solve_power_dual: no convergence in {max_iters} iterations"
    )
