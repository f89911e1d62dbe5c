"""Rate optimizer: analytic gradient vs finite differences, iteration vs
exhaustive search, and the qualitative shape of the capacity-vs-rate curve."""

import math

import numpy as np
import pytest

from ecauth.channel import SnrDistribution
from ecauth.markov_ec import Priors, QosParams
from ecauth.rate_opt import (
    DivergenceError,
    GdConfig,
    RateContext,
    cost_and_gradient,
    gd_optimize,
    grid_search_rate,
)
from ecauth.specialfn import Tolerance

TIGHT = Tolerance(1e-15, 1e-15, 200_000)
QOS = QosParams(theta=0.01, ts=0.066)
DIST = SnrDistribution(lam=2.0, scale=1.0)
DELTA_F = 20.0


def default_ctx(**overrides):
    base = dict(
        priors=Priors(0.5),
        pfa=0.1,
        pmd=0.2,
        dist_alice=DIST,
        dist_eve=SnrDistribution(2.0, 1.0),
        rate_eve=40.0,
        qos=QOS,
        delta_f=DELTA_F,
    )
    base.update(overrides)
    return RateContext(**base)


def random_instance(rng):
    lam = rng.uniform(0.5, 8.0)
    theta = rng.uniform(0.005, 0.05)
    pa = rng.uniform(0.3, 0.9)
    pfa = rng.uniform(0.05, 0.4)
    pmd = rng.uniform(0.05, 0.5)
    return default_ctx(
        priors=Priors(pa),
        pfa=pfa,
        pmd=pmd,
        dist_alice=SnrDistribution(lam, 1.0),
        qos=QosParams(theta, 0.066),
    )


def central_fd(r, qos, dist, p_ca, h=0.05):
    """Fourth-order central finite difference of the cost."""
    c = [
        cost_and_gradient(r + k * h, qos, dist, DELTA_F, p_ca, tol=TIGHT)[0]
        for k in (-2, -1, 1, 2)
    ]
    return (8.0 * (c[2] - c[1]) - (c[3] - c[0])) / (12.0 * h)


class TestCostAndGradient:
    def test_never_accepted_degenerates_to_zero(self):
        cost, grad = cost_and_gradient(50.0, QOS, DIST, DELTA_F, 0.0)
        assert cost == 0.0 and grad == 0.0

    def test_vanishes_uniformly_as_theta_vanishes(self):
        tiny = QosParams(1e-12, 0.066)
        for r in np.linspace(0.0, 300.0, 31):
            cost, _ = cost_and_gradient(float(r), tiny, DIST, DELTA_F, 0.45)
            assert 0.0 <= cost <= 1e-10

    def test_far_tail_point(self):
        # r/delta_f = 50 puts the link-on probability at exact zero, so both
        # the analytic gradient and any finite difference are exactly zero
        cost, grad = cost_and_gradient(1000.0, QOS, DIST, DELTA_F, 0.45)
        assert cost == 0.0 and grad == 0.0
        assert central_fd(1000.0, QOS, DIST, 0.45, h=1e-3) == 0.0

    def test_gradient_matches_finite_differences(self):
        # 100 random points with non-negligible gradient, 1e-6 relative
        rng = np.random.default_rng(0)
        kept = 0
        while kept < 100:
            lam = rng.uniform(0.5, 8.0)
            theta = rng.uniform(0.005, 0.05)
            p_ca = rng.uniform(0.2, 1.0)
            r = rng.uniform(5.0, 160.0)
            qos = QosParams(theta, 0.066)
            dist = SnrDistribution(lam, 1.0)
            _, grad = cost_and_gradient(r, qos, dist, DELTA_F, p_ca, tol=TIGHT)
            if abs(grad) < 1e-7:  # relative comparison meaningless in the dead tail
                continue
            kept += 1
            fd = central_fd(r, qos, dist, p_ca)
            assert abs(grad - fd) / max(abs(grad), abs(fd)) <= 1e-6

    def test_scale_aware_gradient(self):
        dist = SnrDistribution(lam=3.0, scale=0.5)
        _, grad = cost_and_gradient(30.0, QOS, dist, DELTA_F, 0.6, tol=TIGHT)
        c = [
            cost_and_gradient(30.0 + k * 0.05, QOS, dist, DELTA_F, 0.6, tol=TIGHT)[0]
            for k in (-2, -1, 1, 2)
        ]
        fd = (8.0 * (c[2] - c[1]) - (c[3] - c[0])) / (12.0 * 0.05)
        assert grad == pytest.approx(fd, rel=1e-6)

    def test_zero_rate_one_sided_limit(self):
        # kernel at b = 0 stays finite: grad(0) from below-right differences
        p_ca = 0.45
        cost0, grad0 = cost_and_gradient(0.0, QOS, DIST, DELTA_F, p_ca)
        assert cost0 == 0.0
        h = 1e-4
        fd = (
            cost_and_gradient(h, QOS, DIST, DELTA_F, p_ca, tol=TIGHT)[0] - 0.0
        ) / h
        assert grad0 == pytest.approx(fd, rel=1e-3)
        # at r = 0 only the growth-rate term survives: p_ca * theta * ts
        assert grad0 == pytest.approx(p_ca * QOS.theta * QOS.ts, rel=1e-12)

    def test_paper_objective_gradient_matches_fd(self):
        qos, dist, p_ca = QosParams(0.02, 0.066), SnrDistribution(3.0, 1.0), 0.5
        _, grad = cost_and_gradient(40.0, qos, dist, DELTA_F, p_ca, paper_objective=True, tol=TIGHT)
        h = 0.05
        c = [
            cost_and_gradient(40.0 + k * h, qos, dist, DELTA_F, p_ca, paper_objective=True, tol=TIGHT)[0]
            for k in (-2, -1, 1, 2)
        ]
        fd = (8.0 * (c[2] - c[1]) - (c[3] - c[0])) / (12.0 * h)
        assert grad == pytest.approx(fd, rel=1e-6)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            cost_and_gradient(-1.0, QOS, DIST, DELTA_F, 0.5)
        with pytest.raises(ValueError):
            cost_and_gradient(1.0, QOS, DIST, DELTA_F, 1.5)


class TestGdOptimize:
    def test_degenerate_acceptance_returns_init(self):
        trace = gd_optimize(GdConfig(r_init=12.0), QOS, DIST, DELTA_F, 0.0)
        assert trace.degenerate
        assert trace.converged
        assert trace.r_star == 12.0

    def test_agrees_with_grid_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            ctx = random_instance(rng)
            r_grid = grid_search_rate(0.0, 400.0, 201, ctx)
            trace = gd_optimize(
                GdConfig(grad_tol=1e-5), ctx.qos, ctx.dist_alice, DELTA_F, ctx.p_ca
            )
            assert trace.converged
            assert abs(trace.r_star - r_grid) <= 400.0 / 200  # one grid step

    def test_stationary_start_stops_immediately(self):
        rng = np.random.default_rng(2)
        for _ in range(5):
            ctx = random_instance(rng)
            r_fine = grid_search_rate(0.0, 400.0, 4001, ctx)
            trace = gd_optimize(
                GdConfig(r_init=r_fine), ctx.qos, ctx.dist_alice, DELTA_F, ctx.p_ca
            )
            assert trace.converged
            assert trace.n_updates <= 2

    def test_divergence_guard(self):
        with pytest.raises(DivergenceError):
            gd_optimize(
                GdConfig(step=300.0, grad_tol=1e-30, max_iters=200),
                QOS,
                DIST,
                DELTA_F,
                0.45,
            )

    def test_nonconvergence_flagged(self):
        trace = gd_optimize(
            GdConfig(step=250.0, grad_tol=1e-30, max_iters=50), QOS, DIST, DELTA_F, 0.45
        )
        assert not trace.converged

    def test_rate_stays_nonnegative(self):
        trace = gd_optimize(GdConfig(r_init=0.0, grad_tol=1e-6), QOS, DIST, DELTA_F, 0.45)
        assert trace.r_star >= 0.0
        assert all(r >= 0.0 for r, _, _ in trace.iterates)


class TestGridSearchRate:
    def test_tie_break_toward_smaller_rate(self):
        # no legitimate occupancy: capacity is flat in the candidate rate
        ctx = default_ctx(priors=Priors(0.0))
        assert grid_search_rate(5.0, 105.0, 11, ctx) == 5.0

    def test_unimodal_interior_argmax(self):
        ctx = default_ctx()
        rates = np.linspace(0.0, 200.0, 201)
        ecs = [ctx.ec_at(float(r)) for r in rates]
        diffs = np.diff(ecs)
        rises = np.where(diffs > 1e-10)[0]
        falls = np.where(diffs < -1e-10)[0]
        assert rises.size and falls.size
        assert rises.max() < falls.min()
        r_star = grid_search_rate(0.0, 200.0, 201, ctx)
        assert 0.0 < r_star < 200.0

    def test_argmax_vs_theta_on_positive_exponent_branch(self):
        # on the positive-exponent branch the best rate creeps up with theta
        lo = default_ctx(qos=QosParams(0.01, 0.066))
        hi = default_ctx(qos=QosParams(0.05, 0.066))
        r_lo = grid_search_rate(0.0, 200.0, 401, lo, positive_exponent=True)
        r_hi = grid_search_rate(0.0, 200.0, 401, hi, positive_exponent=True)
        assert r_hi >= r_lo

    def test_argmax_vs_theta_on_default_branch_decreases(self):
        # with the negative-exponent convention a harsher delay constraint
        # pushes the best rate down
        lo = default_ctx(qos=QosParams(0.01, 0.066))
        hi = default_ctx(qos=QosParams(0.1, 0.066))
        r_lo = grid_search_rate(0.0, 200.0, 401, lo)
        r_hi = grid_search_rate(0.0, 200.0, 401, hi)
        assert r_hi <= r_lo

    def test_objective_equivalence(self):
        # capacity argmax equals cost argmax on the same grid
        rng = np.random.default_rng(3)
        rates = np.linspace(0.0, 400.0, 201)
        for _ in range(10):
            ctx = random_instance(rng)
            ec_arg = grid_search_rate(0.0, 400.0, 201, ctx)
            costs = [
                cost_and_gradient(float(r), ctx.qos, ctx.dist_alice, DELTA_F, ctx.p_ca)[0]
                for r in rates
            ]
            cost_arg = float(rates[int(np.argmax(costs))])
            assert ec_arg == cost_arg

    def test_validation(self):
        ctx = default_ctx()
        with pytest.raises(ValueError):
            grid_search_rate(10.0, 10.0, 5, ctx)
        with pytest.raises(ValueError):
            grid_search_rate(0.0, 10.0, 1, ctx)
