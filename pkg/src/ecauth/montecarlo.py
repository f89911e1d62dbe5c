"""Slot-level simulator of the full authenticated fading link.

Every slot: draw the channel occupant from the priors, authenticate it from
a noisy distance measurement, draw the channel SNR, and compare the
occupant's fixed rate against the instantaneous capacity. The resulting
(occupant, decision, on/off) triple is one of the eight service states;
states 1 and 7 deliver rate * T_s bits, the rest deliver nothing. Episodes
restart independently, which is valid because both stochastic processes are
memoryless.

Randomness: a counter-based 64-bit generator (numpy Philox). Episode m uses
the substream SeedSequence(seed, spawn_key=(m,)), so any episode can be
reproduced in isolation and episodes may be simulated concurrently. Within
an episode, draws happen in field order: occupant uniforms, distance-noise
normals, impersonator-distance uniforms (redraw mode only), then the two
gain normals. Episode results are reduced in episode order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .auth import AuthModel, expected_missed_detection, false_alarm_prob, missed_detection_prob, threshold_for_pfa
from .channel import SnrDistribution, link_on_prob, snr_threshold
from .markov_ec import MarkovRow, Priors, QosParams, transition_row

__all__ = [
    "Scenario",
    "SimConfig",
    "SimSummary",
    "episode_rng",
    "simulate_slot",
    "simulate_states",
    "empirical_ec",
    "closed_form_row",
]


@dataclass(frozen=True)
class Scenario:
    """Complete parameter bundle for one simulated link."""

    auth: AuthModel
    priors: Priors
    qos: QosParams
    delta_f: float
    dist_alice: SnrDistribution
    dist_eve: SnrDistribution
    rate_alice: float
    rate_eve: float
    d_eve: float | None = None  # fixed impersonator distance; default prior midpoint
    redraw_eve_distance: bool = False
    folded: bool = False

    def __post_init__(self):
        if self.delta_f <= 0:
            raise ValueError("delta_f must be positive")
        if self.rate_alice < 0 or self.rate_eve < 0:
            raise ValueError("rates must be non-negative")
        if self.d_eve is None:
            object.__setattr__(self, "d_eve", 0.5 * (self.auth.de_min + self.auth.de_max))

    @property
    def epsilon(self) -> float:
        return threshold_for_pfa(self.auth, self.folded)


@dataclass(frozen=True)
class SimConfig:
    scenario: Scenario
    n_episodes: int
    slots_per_episode: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.n_episodes < 1 or self.slots_per_episode < 1:
            raise ValueError("n_episodes and slots_per_episode must be at least 1")


@dataclass(frozen=True)
class SimSummary:
    """Empirical state occupation and effective-capacity estimate."""

    state_frequencies: tuple
    empirical_ec: float
    std_error: float
    per_state_bits: tuple
    n_slots: int
    degenerate: bool = False
    episode_bits: tuple = ()
    episode_state_counts: tuple = ()


def episode_rng(seed: int, episode: int) -> np.random.Generator:
    """Counter-based substream for one episode, derived from its index."""
    ss = np.random.SeedSequence(seed, spawn_key=(episode,))
    return np.random.Generator(np.random.Philox(ss))


def _episode_arrays(scenario: Scenario, t: int, rng: np.random.Generator):
    """Vectorized draw of one episode; returns (states 1..8, bits per slot)."""
    s = scenario
    occ_alice = rng.random(t) < s.priors.pi_alice
    noise = s.auth.sigma * rng.standard_normal(t)
    if s.redraw_eve_distance:
        d_eve = rng.uniform(s.auth.de_min, s.auth.de_max, t)
    else:
        d_eve = np.full(t, s.d_eve)
    z1 = rng.standard_normal(t)
    z2 = rng.standard_normal(t)

    offset = np.where(occ_alice, 0.0, d_eve - s.auth.d_alice) + noise
    eps = s.epsilon
    accept = (np.abs(offset) < eps) if s.folded else (offset < eps)

    lam = np.where(occ_alice, s.dist_alice.lam, s.dist_eve.lam)
    scale = np.where(occ_alice, s.dist_alice.scale, s.dist_eve.scale)
    snr = scale * ((z1 + np.sqrt(lam)) ** 2 + z2**2)
    thr_a = snr_threshold(s.rate_alice, s.delta_f)
    thr_e = snr_threshold(s.rate_eve, s.delta_f)
    on = snr > np.where(occ_alice, thr_a, thr_e)

    # occupant/decision/on triple -> state index
    states = np.where(
        occ_alice,
        np.where(accept, np.where(on, 1, 2), np.where(on, 5, 6)),
        np.where(accept, np.where(on, 7, 8), np.where(on, 3, 4)),
    )
    ts = s.qos.ts
    bits = np.where(states == 1, s.rate_alice * ts, 0.0)
    bits = np.where(states == 7, s.rate_eve * ts, bits)
    return states, bits


def simulate_slot(scenario: Scenario, rng: np.random.Generator) -> tuple[int, float]:
    """One slot: returns (state in 1..8, bits delivered)."""
    states, bits = _episode_arrays(scenario, 1, rng)
    return int(states[0]), float(bits[0])


def simulate_states(scenario: Scenario, n_slots: int, rng: np.random.Generator):
    """n_slots of iid states and bits as arrays (single stream)."""
    return _episode_arrays(scenario, n_slots, rng)


def empirical_ec(cfg: SimConfig, collect_episodes: bool = False) -> SimSummary:
    """Run independent episodes and estimate the effective capacity.

    Estimator: -(1 / (theta t T_s)) ln of the episode average of
    e^{-theta S_m}; the standard error follows from the delta method over
    episode resampling.
    """
    s = cfg.scenario
    theta, ts = s.qos.theta, s.qos.ts
    t = cfg.slots_per_episode
    m = cfg.n_episodes

    episode_bits = np.empty(m)
    state_counts = np.zeros(8, dtype=np.int64)
    state_bits = np.zeros(8)
    per_episode_counts = [] if collect_episodes else None
    for ep in range(m):
        rng = episode_rng(cfg.seed, ep)
        states, bits = _episode_arrays(s, t, rng)
        episode_bits[ep] = bits.sum()
        counts = np.bincount(states, minlength=9)[1:]
        state_counts += counts
        np.add.at(state_bits, states - 1, bits)
        if collect_episodes:
            per_episode_counts.append(tuple(int(c) for c in counts))

    y = np.exp(-theta * episode_bits)
    y_bar = float(np.mean(y))
    est = -math.log(y_bar) / (theta * t * ts)
    se = float(np.std(y) / (math.sqrt(m) * y_bar * theta * t * ts))
    degenerate = bool(np.all(episode_bits == episode_bits[0]))

    n_slots = m * t
    freqs = tuple(state_counts / n_slots)
    mean_bits = tuple(
        state_bits[k] / state_counts[k] if state_counts[k] > 0 else 0.0 for k in range(8)
    )
    return SimSummary(
        state_frequencies=freqs,
        empirical_ec=est,
        std_error=se,
        per_state_bits=mean_bits,
        n_slots=n_slots,
        degenerate=degenerate,
        episode_bits=tuple(float(b) for b in episode_bits) if collect_episodes else (),
        episode_state_counts=tuple(per_episode_counts) if collect_episodes else (),
    )


def closed_form_row(scenario: Scenario) -> MarkovRow:
    """Transition row implied by the scenario's closed-form probabilities."""
    s = scenario
    eps = s.epsilon
    pfa = false_alarm_prob(eps, s.auth.sigma, s.folded)
    if s.redraw_eve_distance:
        pmd = expected_missed_detection(s.auth, eps, s.folded)
    else:
        pmd = missed_detection_prob(eps, s.auth.sigma, s.d_eve, s.auth.d_alice, s.folded)
    q_alice = link_on_prob(s.dist_alice, s.rate_alice, s.delta_f)
    q_eve = link_on_prob(s.dist_eve, s.rate_eve, s.delta_f)
    return transition_row(s.priors, pfa, pmd, q_alice, q_eve)
