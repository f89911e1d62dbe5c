"""Eight-state service chain and closed-form effective capacity.

Each slot the channel occupant (legitimate node or impersonator, by prior),
the authentication outcome, and the link ON/OFF condition determine one of
eight states. The two stochastic processes are memoryless and independent,
so every row of the transition matrix is the same: the chain is rank-1 and
the stationary law equals the row itself. Only state 1 (legitimate node
accepted, link on) and state 7 (impersonator accepted, link on) deliver
bits; state 7 counts the impersonator's throughput as service by
construction of the model.

Sign convention: the effective capacity is defined through the negative-
exponent moment generating function, EC = -(1/(theta T_s)) ln E[e^{-theta s}],
which keeps EC in [0, mean service rate]. The positive-exponent variant
printed alongside the definition in the source material yields negative
values and is retained only behind `paper_verbatim=True` for side-by-side
documentation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .channel import OfdmGrid

__all__ = [
    "Priors",
    "MarkovRow",
    "QosParams",
    "EcResult",
    "transition_row",
    "ec_subcarrier",
    "ec_total",
    "ec_small_theta_limit",
]

_ROW_SUM_TOL = 1e-12


@dataclass(frozen=True)
class Priors:
    """Occupancy priors; the impersonator uses exactly the idle slots."""

    pi_alice: float

    def __post_init__(self):
        if not 0.0 <= self.pi_alice <= 1.0:
            raise ValueError("pi_alice must lie in [0, 1]")

    @property
    def pi_eve(self) -> float:
        return 1.0 - self.pi_alice


@dataclass(frozen=True)
class MarkovRow:
    """The common row (p1..p8) of the rank-1 transition matrix."""

    p: tuple

    def __post_init__(self):
        object.__setattr__(self, "p", tuple(float(v) for v in self.p))
        if len(self.p) != 8:
            raise ValueError("a row has exactly 8 entries")
        for v in self.p:
            if not -1e-15 <= v <= 1.0 + 1e-15:
                raise ValueError(f"transition probability {v} outside [0, 1]")
        if abs(sum(self.p) - 1.0) > _ROW_SUM_TOL:
            raise ValueError(f"row must sum to 1, got {sum(self.p)!r}")


@dataclass(frozen=True)
class QosParams:
    """Delay-constraint severity theta (1/bits) and effective slot length."""

    theta: float
    ts: float

    def __post_init__(self):
        if self.theta <= 0:
            raise ValueError("theta must be positive")
        if self.ts <= 0:
            raise ValueError("ts must be positive")


@dataclass(frozen=True)
class EcResult:
    """Per-subcarrier effective capacities and their total (bits/sec)."""

    per_subcarrier: tuple
    total: float


def transition_row(
    priors: Priors,
    pfa: float,
    pmd: float,
    q_alice: float,
    q_eve: float,
) -> MarkovRow:
    """Build the common transition row from authentication and link-ON
    probabilities.

    q_alice and q_eve are the ON probabilities of the respective links.
    """
    for name, v in (("pfa", pfa), ("pmd", pmd), ("q_alice", q_alice), ("q_eve", q_eve)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {v}")
    pa, pe = priors.pi_alice, priors.pi_eve
    return MarkovRow(
        p=(
            pa * (1.0 - pfa) * q_alice,
            pa * (1.0 - pfa) * (1.0 - q_alice),
            pe * (1.0 - pmd) * q_eve,
            pe * (1.0 - pmd) * (1.0 - q_eve),
            pa * pfa * q_alice,
            pa * pfa * (1.0 - q_alice),
            pe * pmd * q_eve,
            pe * pmd * (1.0 - q_eve),
        )
    )


def _state_mgf_sum(
    row: MarkovRow, theta_eff: float, r_alice: float, r_eve: float
) -> float:
    # sum_u p_u E[e^{theta_eff * s_u}] with s_1 = r_A Ts, s_7 = r_E Ts, else 0
    p = row.p
    return (
        p[0] * math.exp(theta_eff * r_alice)
        + p[1]
        + p[2]
        + p[3]
        + p[4]
        + p[5]
        + p[6] * math.exp(theta_eff * r_eve)
        + p[7]
    )


def ec_subcarrier(
    row: MarkovRow,
    qos: QosParams,
    r_alice: float,
    r_eve: float,
    paper_verbatim: bool = False,
) -> float:
    """Closed-form effective capacity of one subcarrier in bits/sec.

    The rank-1 chain makes the spectral radius of the MGF-weighted
    transition matrix equal to its trace, so the log-MGF reduces to the
    log of an eight-term sum.
    """
    if r_alice < 0 or r_eve < 0:
        raise ValueError("rates must be non-negative")
    sign = 1.0 if paper_verbatim else -1.0
    theta_eff = sign * qos.theta * qos.ts
    total = _state_mgf_sum(row, theta_eff, r_alice, r_eve)
    return -math.log(total) / (qos.theta * qos.ts)


def ec_total(
    grid: OfdmGrid,
    qos: QosParams,
    rows: Sequence[MarkovRow] | MarkovRow,
    rates_alice: Sequence[float] | float,
    rates_eve: Sequence[float] | float,
    paper_verbatim: bool = False,
) -> EcResult:
    """Sum of per-subcarrier effective capacities over the OFDM grid.

    Scalar arguments broadcast to every subcarrier; sequences must have one
    entry per subcarrier.
    """
    n = grid.n_subcarriers

    def expand(v, scalar_types):
        if isinstance(v, scalar_types):
            return [v] * n
        v = list(v)
        if len(v) != n:
            raise ValueError(f"expected {n} per-subcarrier values, got {len(v)}")
        return v

    rows_l = expand(rows, MarkovRow)
    ra_l = expand(rates_alice, (int, float))
    re_l = expand(rates_eve, (int, float))
    per = tuple(
        ec_subcarrier(rows_l[i], qos, float(ra_l[i]), float(re_l[i]), paper_verbatim)
        for i in range(n)
    )
    return EcResult(per_subcarrier=per, total=math.fsum(per))


def ec_small_theta_limit(row: MarkovRow, r_alice: float, r_eve: float) -> float:
    """Mean service rate p1 r_A + p7 r_E, the delay-tolerant limit."""
    return row.p[0] * r_alice + row.p[6] * r_eve
