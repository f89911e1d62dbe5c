"""Self-contained special functions and quadrature.

Everything here is pure 64-bit float arithmetic with no dependency on an
external math library: the Gaussian tail and its inverse, the zero-order
modified Bessel function, the first-order Marcum Q function (equivalently
the non-central chi-squared tail with two degrees of freedom), and an
adaptive Simpson integrator. All functions are reentrant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "Tolerance",
    "ConvergenceError",
    "DEFAULT_TOL",
    "gaussian_q",
    "gaussian_q_inv",
    "bessel_i0",
    "log_bessel_i0",
    "marcum_q1",
    "noncentral_chi2_ccdf",
    "integrate",
]


class ConvergenceError(RuntimeError):
    """A series or quadrature failed to reach the requested tolerance."""


@dataclass(frozen=True)
class Tolerance:
    """Convergence budget for iterative evaluations.

    abs_tol and rel_tol may not both be zero; max_terms bounds series terms
    (for Marcum Q) or interval bisections (for the integrator).
    """

    abs_tol: float = 1e-12
    rel_tol: float = 1e-12
    max_terms: int = 100_000

    def __post_init__(self):
        if self.abs_tol < 0 or self.rel_tol < 0:
            raise ValueError("tolerances must be non-negative")
        if self.abs_tol + self.rel_tol <= 0:
            raise ValueError("abs_tol and rel_tol cannot both be zero")
        if self.max_terms < 1:
            raise ValueError("max_terms must be at least 1")


DEFAULT_TOL = Tolerance()

_SQRT2 = math.sqrt(2.0)
# Power series below this point, asymptotic expansion above; both routes
# deliver full double accuracy at the boundary.
_I0_SWITCH = 25.0
# exp(-x) underflows past ~745; used to guard Poisson-weight start terms.
_EXP_UNDERFLOW = 700.0


def gaussian_q(x: float) -> float:
    """Upper-tail probability Q(x) of the standard normal distribution.

    Computed from the complementary error function; saturates to 0/1 in
    the extreme tails instead of raising.
    """
    return 0.5 * math.erfc(x / _SQRT2)


def gaussian_q_inv(p: float) -> float:
    """Inverse of :func:`gaussian_q` on (0, 1).

    Bracketing bisection to locate the root, then Newton polish using the
    exact derivative -phi(x).
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"gaussian_q_inv requires 0 < p < 1, got {p}")
    if p == 0.5:
        return 0.0
    lo, hi = -40.0, 40.0  # Q spans (1, 0) over this bracket to beyond double precision
    for _ in range(90):
        mid = 0.5 * (lo + hi)
        if gaussian_q(mid) > p:
            lo = mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    for _ in range(3):
        fx = gaussian_q(x) - p
        dfx = -math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
        if dfx == 0.0:
            break
        step = fx / dfx
        if not math.isfinite(step):
            break
        x -= step
    return x


def bessel_i0(x: float) -> float:
    """Zero-order modified Bessel function of the first kind, x >= 0.

    Power series for small arguments, asymptotic expansion for large ones.
    Raises OverflowError once the value exceeds the double range (x > ~713)
    rather than saturating.
    """
    if x < 0:
        raise ValueError("bessel_i0 is defined here for x >= 0 only")
    if x <= _I0_SWITCH:
        return _i0_series(x)
    log_i0 = log_bessel_i0(x)
    if log_i0 > math.log(1.7976931348623157e308):
        raise OverflowError(f"bessel_i0({x}) exceeds the double-precision range")
    return math.exp(log_i0)


def log_bessel_i0(x: float) -> float:
    """Natural log of bessel_i0, safe for arguments where I0 itself overflows."""
    if x < 0:
        raise ValueError("log_bessel_i0 is defined here for x >= 0 only")
    if x <= _I0_SWITCH:
        return math.log(_i0_series(x))
    return x - 0.5 * math.log(2.0 * math.pi * x) + math.log(_i0_asymptotic_sum(x))


def _i0_series(x: float) -> float:
    # sum_k (x^2/4)^k / (k!)^2 ; all terms positive, no cancellation
    q = 0.25 * x * x
    term = 1.0
    total = 1.0
    for k in range(1, 200):
        term *= q / (k * k)
        total += term
        if term < 1e-18 * total:
            break
    return total


def _i0_asymptotic_sum(x: float) -> float:
    # I0(x) = e^x / sqrt(2 pi x) * S(x); terms t_k = t_{k-1} (2k-1)^2 / (8 k x)
    term = 1.0
    total = 1.0
    for k in range(1, 40):
        nxt = term * (2 * k - 1) ** 2 / (8.0 * k * x)
        if nxt >= term:  # asymptotic series: stop at the smallest term
            break
        term = nxt
        total += term
        if term < 1e-18 * total:
            break
    return total


def marcum_q1(alpha: float, beta: float, tol: Tolerance = DEFAULT_TOL) -> float:
    """First-order Marcum Q function Q1(alpha, beta).

    Tail probability P(X > beta^2) for X ~ chi-squared with 2 degrees of
    freedom and non-centrality alpha^2. Evaluated as the canonical series
    of Poisson-weighted central chi-squared tails with term-wise early
    exit once the un-summed Poisson mass drops below tol.abs_tol.
    """
    if alpha < 0 or beta < 0:
        raise ValueError("marcum_q1 requires alpha >= 0 and beta >= 0")
    if beta == 0.0:
        return 1.0
    if math.isinf(beta):
        return 0.0
    half_lam = 0.5 * alpha * alpha  # Poisson intensity of the mixture
    y = 0.5 * beta * beta
    if half_lam > _EXP_UNDERFLOW:
        # Poisson start weight underflows. Gaussian geometry gives
        # 1 - e^{-(a-b)^2/2} <= Q1(a,b) <= 1 (a > b) and Q1 <= e^{-(b-a)^2/2}
        # (b > a), so extreme separations are decidable within tolerance.
        gap = alpha - beta
        if gap >= 9.0:
            return 1.0
        if gap <= -9.0:
            return 0.0
        raise ConvergenceError(
            f"marcum_q1({alpha}, {beta}): arguments too large for the series"
        )
    w = math.exp(-half_lam)  # Poisson weight at k = 0
    w_cum = w
    g_term = math.exp(-y) if y < _EXP_UNDERFLOW else 0.0
    g = g_term  # chi-squared tail P(chi2_{2k+2} > beta^2), k = 0
    total = w * g
    for k in range(1, tol.max_terms):
        w *= half_lam / k
        w_cum += w
        if g_term > 0.0:
            g_term *= y / k
            g += g_term
        total += w * g
        remaining = 1.0 - w_cum  # each un-summed term is bounded by its Poisson weight
        if remaining <= tol.abs_tol or remaining <= tol.rel_tol * total:
            return min(total, 1.0)
    raise ConvergenceError(
        f"marcum_q1({alpha}, {beta}): {tol.max_terms} terms exhausted"
    )


def noncentral_chi2_ccdf(
    x: float, lam: float, tol: Tolerance = DEFAULT_TOL
) -> float:
    """Tail P(X > x) for X ~ non-central chi-squared, 2 degrees of freedom."""
    if x < 0 or lam < 0:
        raise ValueError("noncentral_chi2_ccdf requires x >= 0 and lambda >= 0")
    return marcum_q1(math.sqrt(lam), math.sqrt(x), tol)


def integrate(f, lo: float, hi: float, tol: Tolerance = DEFAULT_TOL) -> float:
    """Adaptive Simpson quadrature of f over [lo, hi].

    Interval bisection with the standard 1/15 Richardson error estimate;
    suited to the smooth Gaussian/exponential integrands used here.
    Raises ConvergenceError when the bisection budget runs out.
    """
    if lo > hi:
        raise ValueError("integrate requires lo <= hi")
    if lo == hi:
        return 0.0
    budget = [tol.max_terms]
    f_lo, f_hi = f(lo), f(hi)
    mid = 0.5 * (lo + hi)
    f_mid = f(mid)
    whole = (hi - lo) / 6.0 * (f_lo + 4.0 * f_mid + f_hi)
    eps = max(tol.abs_tol, tol.rel_tol * abs(whole))
    return _simpson_recurse(f, lo, hi, f_lo, f_mid, f_hi, whole, eps, budget, 50)


def _simpson_recurse(f, lo, hi, f_lo, f_mid, f_hi, whole, eps, budget, depth):
    if budget[0] <= 0:
        raise ConvergenceError("integrate: subdivision budget exhausted")
    if depth <= 0:
        raise ConvergenceError("integrate: maximum recursion depth reached")
    budget[0] -= 1
    mid = 0.5 * (lo + hi)
    lm = 0.5 * (lo + mid)
    rm = 0.5 * (mid + hi)
    f_lm, f_rm = f(lm), f(rm)
    left = (mid - lo) / 6.0 * (f_lo + 4.0 * f_lm + f_mid)
    right = (hi - mid) / 6.0 * (f_mid + 4.0 * f_rm + f_hi)
    err = left + right - whole
    if abs(err) <= 15.0 * eps:
        return left + right + err / 15.0
    half_eps = 0.5 * eps
    return _simpson_recurse(
        f, lo, mid, f_lo, f_lm, f_mid, left, half_eps, budget, depth - 1
    ) + _simpson_recurse(
        f, mid, hi, f_mid, f_rm, f_hi, right, half_eps, budget, depth - 1
    )
