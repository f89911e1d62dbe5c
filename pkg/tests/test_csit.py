"""Known-CSIT capacity and power loading vs sampling and bisection oracles."""

import math

import numpy as np
import pytest

from ecauth.channel import SnrDistribution
from ecauth.csit import CsitPowerProblem, ec_known_csit, optimal_power, solve_power_dual
from ecauth.markov_ec import QosParams


def bisect_kappa(problem, lo=1e-12, hi=1e12, iters=200):
    """Independent oracle: bisection on the monotone budget curve."""

    def spent(kappa):
        return float(np.sum(optimal_power(problem, kappa)))

    while spent(hi) > problem.total_power:
        hi *= 10.0
    while spent(lo) < problem.total_power:
        lo /= 10.0
    for _ in range(iters):
        mid = math.sqrt(lo * hi)  # geometric: kappa spans decades
        if spent(mid) > problem.total_power:
            lo = mid
        else:
            hi = mid
    return math.sqrt(lo * hi)


class TestEcKnownCsit:
    QOS = QosParams(theta=0.01, ts=0.066)

    def test_small_theta_limit_is_mean_capacity(self):
        dist = SnrDistribution(lam=2.0, scale=1.0)
        p_acc, delta_f = 0.45, 20.0
        rng = np.random.default_rng(51)
        snr = dist.sample(rng, 1_000_000)
        mean_cap = float(np.mean(delta_f * np.log2(1.0 + snr)))
        tiny = QosParams(theta=1e-7, ts=0.066)
        ec = ec_known_csit(dist, tiny, delta_f, p_acc)
        assert ec == pytest.approx(p_acc * mean_cap, rel=2e-3)

    def test_degenerate_snr_gives_zero(self):
        dist = SnrDistribution(lam=0.0, scale=1e-12)
        ec = ec_known_csit(dist, self.QOS, 20.0, 0.45)
        assert ec == pytest.approx(0.0, abs=1e-6)

    def test_never_accepted_gives_zero(self):
        assert ec_known_csit(SnrDistribution(2.0), self.QOS, 20.0, 0.0) == 0.0

    def test_against_sampling_oracle(self):
        # 1e6 draws of e^{-theta s} with s = T_s delta_f log2(1 + snr)
        dist = SnrDistribution(lam=2.0, scale=1.0)
        p_acc, delta_f = 0.45, 20.0
        rng = np.random.default_rng(52)
        snr = dist.sample(rng, 1_000_000)
        s = self.QOS.ts * delta_f * np.log2(1.0 + snr)
        mgf_hat = float(np.mean(np.exp(-self.QOS.theta * s)))
        ec_hat = -math.log(p_acc * mgf_hat + (1 - p_acc)) / (self.QOS.theta * self.QOS.ts)
        ec = ec_known_csit(dist, self.QOS, delta_f, p_acc)
        assert ec == pytest.approx(ec_hat, rel=0.01)

    def test_adapted_rate_beats_any_fixed_rate_service(self):
        # serving capacity whenever accepted dominates the fixed-rate chain
        from ecauth.markov_ec import Priors, ec_subcarrier, transition_row
        from ecauth.channel import link_on_prob

        dist = SnrDistribution(lam=2.0, scale=1.0)
        p_acc, delta_f = 0.45, 20.0
        ec_adapted = ec_known_csit(dist, self.QOS, delta_f, p_acc)
        for rate in (10.0, 30.0, 60.0, 120.0):
            row = transition_row(
                Priors(0.5), 0.1, 0.0, link_on_prob(dist, rate, delta_f), 1.0
            )
            ec_fixed = ec_subcarrier(row, self.QOS, rate, 0.0)
            assert ec_adapted > ec_fixed

    def test_monotone_decreasing_in_theta(self):
        dist = SnrDistribution(lam=2.0, scale=1.0)
        ecs = [
            ec_known_csit(dist, QosParams(th, 0.066), 20.0, 0.45)
            for th in (1e-4, 1e-3, 1e-2, 1e-1)
        ]
        assert all(b < a for a, b in zip(ecs, ecs[1:]))


class TestOptimalPower:
    def test_equal_gains_equal_powers(self):
        prob = CsitPowerProblem(gains=(2.0, 2.0, 2.0, 2.0), total_power=4.0, theta=0.01, p_accept=0.5)
        alloc = optimal_power(prob, kappa=1.0)
        assert np.ptp(alloc) == 0.0

    def test_huge_kappa_allocates_nothing(self):
        prob = CsitPowerProblem(gains=(0.5, 1.0, 2.0), total_power=3.0, theta=0.01, p_accept=0.5)
        alloc = optimal_power(prob, kappa=1e9)
        assert np.all(alloc == 0.0)

    def test_bisected_kappa_meets_budget_and_orders_by_gain(self):
        prob = CsitPowerProblem(gains=(0.4, 1.3, 3.7), total_power=5.0, theta=0.02, p_accept=0.6)
        kappa = bisect_kappa(prob)
        alloc = optimal_power(prob, kappa)
        assert float(np.sum(alloc)) == pytest.approx(5.0, rel=1e-9)
        assert alloc[0] < alloc[1] < alloc[2]

    def test_water_level_form(self):
        prob = CsitPowerProblem(gains=(1.0, 4.0), total_power=2.0, theta=0.01, p_accept=0.5)
        kappa = 0.7
        level = (0.01 / math.log(2.0) + 1.0) / (kappa * 0.5)
        alloc = optimal_power(prob, kappa)
        assert alloc[0] == pytest.approx(max(level - 1.0, 0.0))
        assert alloc[1] == pytest.approx(max(level - 0.25, 0.0))

    def test_kappa_must_be_positive(self):
        prob = CsitPowerProblem(gains=(1.0,), total_power=1.0, theta=0.01, p_accept=0.5)
        with pytest.raises(ValueError):
            optimal_power(prob, 0.0)


class TestSolvePowerDual:
    def test_single_subcarrier_exhausts_budget(self):
        prob = CsitPowerProblem(gains=(1.7,), total_power=3.0, theta=0.01, p_accept=0.45)
        alloc, kappa, trace = solve_power_dual(prob)
        assert alloc[0] == pytest.approx(3.0, rel=1e-9)
        assert kappa > 0

    def test_equal_gains_split_evenly(self):
        prob = CsitPowerProblem(gains=(2.0,) * 4, total_power=4.0, theta=0.01, p_accept=0.5)
        alloc, _, _ = solve_power_dual(prob)
        np.testing.assert_allclose(alloc, 1.0, rtol=1e-8)

    def test_matches_bisection_oracle_on_random_instances(self):
        rng = np.random.default_rng(53)
        for _ in range(20):
            n = int(rng.integers(2, 9))
            gains = tuple(rng.uniform(0.05, 5.0, n))
            prob = CsitPowerProblem(
                gains=gains,
                total_power=float(rng.uniform(0.5, 10.0)),
                theta=float(rng.uniform(0.001, 0.1)),
                p_accept=float(rng.uniform(0.2, 1.0)),
            )
            alloc, kappa, _ = solve_power_dual(prob)
            ref = optimal_power(prob, bisect_kappa(prob))
            np.testing.assert_allclose(alloc, ref, atol=1e-5)

    def test_complementary_slackness(self):
        prob = CsitPowerProblem(gains=(0.3, 1.0, 2.5), total_power=6.0, theta=0.05, p_accept=0.7)
        alloc, kappa, _ = solve_power_dual(prob)
        assert kappa * abs(prob.total_power - float(np.sum(alloc))) <= 1e-6 * kappa * prob.total_power

    def test_allocation_monotone_in_gain(self):
        gains = (0.2, 0.9, 1.4, 4.0, 8.0)
        prob = CsitPowerProblem(gains=gains, total_power=3.0, theta=0.01, p_accept=0.5)
        alloc, _, _ = solve_power_dual(prob)
        assert all(b >= a for a, b in zip(alloc, alloc[1:]))

    def test_weak_channels_get_zero_when_budget_is_tight(self):
        prob = CsitPowerProblem(
            gains=(0.001, 10.0, 12.0), total_power=0.05, theta=0.01, p_accept=0.5
        )
        alloc, _, _ = solve_power_dual(prob)
        assert alloc[0] == 0.0
        assert float(np.sum(alloc)) == pytest.approx(0.05, rel=1e-8)


class TestCsitPowerProblemValidation:
    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            CsitPowerProblem(gains=(), total_power=1.0, theta=0.01, p_accept=0.5)
        with pytest.raises(ValueError):
            CsitPowerProblem(gains=(1.0, -2.0), total_power=1.0, theta=0.01, p_accept=0.5)
        with pytest.raises(ValueError):
            CsitPowerProblem(gains=(1.0,), total_power=0.0, theta=0.01, p_accept=0.5)
        with pytest.raises(ValueError):
            CsitPowerProblem(gains=(1.0,), total_power=1.0, theta=0.01, p_accept=0.0)
