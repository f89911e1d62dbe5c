"""Statistical wideband multipath OFDM channel and per-subcarrier SNR law.

The frequency response at each subcarrier is a sum of L delayed path gains,
so it is complex Gaussian; its squared magnitude scaled by transmit power
over noise follows a scaled non-central chi-squared law with two degrees of
freedom. SnrDistribution carries that law explicitly: `lam` is printed-form
non-centrality and `scale` the multiplier that the printed form absorbs.
With per-subcarrier power equal to the noise variance (the default operating
point) the printed non-centrality is exact and scale reduces to
sigma_H^2 / 2.

Two gain generators are provided: the multipath profile sampler (complex
Gaussian with the profile-induced mean and variance) and a direct Rician
magnitude sampler parameterized by the shape factor K, which corresponds to
non-centrality 2K at unit per-component variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .specialfn import DEFAULT_TOL, Tolerance, marcum_q1

__all__ = [
    "OfdmGrid",
    "MultipathProfile",
    "TransmitterProfile",
    "SnrDistribution",
    "subcarrier_frequency",
    "path_coefficients",
    "noncentrality",
    "link_on_prob",
    "snr_threshold",
    "sample_cfr",
    "sample_gain_rice",
]


@dataclass(frozen=True)
class OfdmGrid:
    """OFDM time-frequency grid: N subcarriers of width delta_f, slots of
    length slot_t plus a guard interval."""

    n_subcarriers: int
    delta_f: float
    slot_t: float
    guard_t: float
    f0: float = 10_000.0  # carrier base; default is a placeholder, not a measured value

    def __post_init__(self):
        if self.n_subcarriers < 1:
            raise ValueError("n_subcarriers must be positive")
        if self.slot_t <= 0 or self.guard_t < 0:
            raise ValueError("slot_t must be positive and guard_t non-negative")
        if not math.isclose(self.delta_f, 1.0 / self.slot_t, rel_tol=1e-9):
            raise ValueError("delta_f must equal 1/slot_t")

    @property
    def effective_slot(self) -> float:
        return self.slot_t + self.guard_t


@dataclass(frozen=True)
class MultipathProfile:
    """L-path channel: common attenuation, per-path mean gains and delays,
    shared per-path standard deviation."""

    n_paths: int
    attenuation: float
    mean_path_gains: tuple = ()
    path_delays: tuple = ()
    path_sigma: float = 1.0
    rice_k: float = 0.0  # shape factor for the direct magnitude sampler

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError("n_paths must be positive")
        if self.attenuation <= 0:
            raise ValueError("attenuation must be positive")
        if self.path_sigma <= 0:
            raise ValueError("path_sigma must be positive")
        if self.rice_k < 0:
            raise ValueError("rice_k must be non-negative")
        object.__setattr__(self, "mean_path_gains", tuple(complex(g) for g in self.mean_path_gains))
        object.__setattr__(self, "path_delays", tuple(float(d) for d in self.path_delays))
        if len(self.mean_path_gains) != self.n_paths or len(self.path_delays) != self.n_paths:
            raise ValueError("gain and delay sequences must both have n_paths entries")


@dataclass(frozen=True)
class TransmitterProfile:
    """Total power budget split equally over subcarriers, one constant rate."""

    total_power: float
    rate: float
    label: str = "alice"

    def __post_init__(self):
        if self.total_power <= 0:
            raise ValueError("total_power must be positive")
        if self.rate < 0:
            raise ValueError("rate must be non-negative")
        if self.label not in ("alice", "eve"):
            raise ValueError("label must be 'alice' or 'eve'")

    def per_subcarrier_power(self, n_subcarriers: int) -> float:
        return self.total_power / n_subcarriers


@dataclass(frozen=True)
class SnrDistribution:
    """Per-subcarrier SNR law: scale times a non-central chi-squared(2, lam)."""

    lam: float
    scale: float = 1.0

    def __post_init__(self):
        if self.lam < 0 or not math.isfinite(self.lam):
            raise ValueError("lam must be finite and non-negative")
        if self.scale <= 0:
            raise ValueError("scale must be positive")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw n SNR values via the defining chi-squared representation."""
        z1 = rng.standard_normal(n) + math.sqrt(self.lam)
        z2 = rng.standard_normal(n)
        return self.scale * (z1 * z1 + z2 * z2)

    def mean(self) -> float:
        return self.scale * (2.0 + self.lam)


def subcarrier_frequency(grid: OfdmGrid, i: int) -> float:
    """Center frequency of subcarrier i."""
    if not 0 <= i < grid.n_subcarriers:
        raise IndexError(f"subcarrier index {i} out of range [0, {grid.n_subcarriers})")
    return grid.f0 + i * grid.delta_f

def path_coefficients(profile: MultipathProfile, f: float) -> np.ndarray:
    """Deterministic per-path phasors at frequency f; all have magnitude
    1/sqrt(attenuation)."""
    delays = np.asarray(profile.path_delays)
    return np.exp(-2j * math.pi * f * delays) / math.sqrt(profile.attenuation)


def noncentrality(
    profile: MultipathProfile,
    per_sc_power: float,
    noise_var: float,
    f: float,
) -> SnrDistribution:
    """SNR law induced by the profile at frequency f.

    `lam` follows the printed closed form
    2 * P * A / (noise * L) * |sum_l c_l E{h_l}|^2; `scale` carries the
    factor P * sigma_H^2 / (2 * noise) that the printed form treats as 1,
    with sigma_H^2 = sigma_l^2 * sum |c_l|^2.
    """
    if noise_var <= 0:
        raise ValueError("noise_var must be positive")
    if per_sc_power <= 0:
        raise ValueError("per_sc_power must be positive")
    c = path_coefficients(profile, f)
    mean_sum = complex(np.sum(c * np.asarray(profile.mean_path_gains)))
    lam = (
        2.0
        * per_sc_power
        * profile.attenuation
        / (noise_var * profile.n_paths)
        * abs(mean_sum) ** 2
    )
    sigma_h2 = profile.path_sigma**2 * float(np.sum(np.abs(c) ** 2))
    scale = per_sc_power * sigma_h2 / (2.0 * noise_var)
    return SnrDistribution(lam=lam, scale=scale)


def snr_threshold(rate: float, delta_f: float) -> float:
    """SNR above which a fixed-rate link of `rate` bits/sec stays on."""
    if delta_f <= 0:
        raise ValueError("delta_f must be positive")
    if rate < 0:
        raise ValueError("rate must be non-negative")
    exponent = rate / delta_f
    if exponent > 1020.0:  # 2**x overflows past ~1024; the link is surely off
        return math.inf
    return 2.0**exponent - 1.0


def link_on_prob(
    dist: SnrDistribution,
    rate: float,
    delta_f: float,
    tol: Tolerance = DEFAULT_TOL,
) -> float:
    """Probability that the fixed rate stays below the instantaneous capacity
    delta_f * log2(1 + snr)."""
    threshold = snr_threshold(rate, delta_f)
    if threshold == 0.0:
        return 1.0
    if math.isinf(threshold):
        return 0.0
    return marcum_q1(math.sqrt(dist.lam), math.sqrt(threshold / dist.scale), tol)


def sample_cfr(
    profile: MultipathProfile,
    grid: OfdmGrid,
    i: int,
    rng: np.random.Generator,
    n: int = 1,
) -> np.ndarray:
    """Draw channel frequency responses for subcarrier i.

    Complex Gaussian with mean sum_l c_l E{h_l} and total complex variance
    sigma_l^2 * sum |c_l|^2 (independent path contributions add in squared
    magnitude).
    """
    f = subcarrier_frequency(grid, i)
    c = path_coefficients(profile, f)
    mean = complex(np.sum(c * np.asarray(profile.mean_path_gains)))
    sigma_h2 = profile.path_sigma**2 * float(np.sum(np.abs(c) ** 2))
    s = math.sqrt(sigma_h2 / 2.0)
    return mean + s * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


def sample_gain_rice(
    rice_k: float, rng: np.random.Generator, n: int = 1
) -> np.ndarray:
    """Draw complex gains whose magnitude is Rician with shape factor K.

    Unit per-component variance, so |H|^2 is non-central chi-squared with
    two degrees of freedom and non-centrality 2K.
    """
    if rice_k < 0:
        raise ValueError("rice_k must be non-negative")
    nu = math.sqrt(2.0 * rice_k)
    return nu + rng.standard_normal(n) + 1j * rng.standard_normal(n)
