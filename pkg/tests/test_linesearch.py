"""Backtracking, two-way backtracking, the LR probe, and Wolfe checks."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from btgd import (
    GrowthDirection,
    LineSearchConfig,
    NonDescentDirection,
    ScalarField,
    StalledLineSearch,
    StopRule,
    armijo_holds,
    backtrack,
    backtrack_direction,
    cubic,
    mexican_hat,
    probe_step_size,
    run_backtracking_gd,
    run_two_way_gd,
    two_way_backtrack,
    wolfe_holds,
)
from conftest import (
    brute_force_backtrack_sigma,
    corpus_with_gradients,
    cubic_feasible_root,
)


class TestBacktrack:
    def test_parabola(self, parabola, default_cfg):
        r = backtrack(parabola, np.array([1.0]), default_cfg)
        assert r.sigma == 0.5
        assert r.trials == 2
        assert r.direction is GrowthDirection.SHRUNK_OR_KEPT

    def test_zero_gradient_accepts_delta0(self, parabola, default_cfg):
        r = backtrack(parabola, np.array([0.0]), default_cfg)
        assert r.sigma == default_cfg.delta0
        assert r.trials == 1

    def test_cubic_root_accepts_immediately(self):
        d0 = cubic_feasible_root(minus=True)
        cfg = LineSearchConfig(0.5, 0.5, d0)
        r = backtrack(cubic().field, np.array([1.0]), cfg)
        assert r.sigma == d0
        assert r.trials == 1

    def test_stall_on_flat_noise_floor(self):
        # objective whose achievable decrease stays below the Armijo demand
        f = ScalarField(1, lambda x: 1.0 + abs(float(x[0])),
                        lambda x: np.array([math.copysign(1e6, x[0])]))
        cfg = LineSearchConfig(0.5, 0.5, 1.0, max_halvings=30)
        with pytest.raises(StalledLineSearch):
            backtrack(f, np.array([0.5]), cfg)

    def test_maximality_against_grid_oracle(self, default_cfg):
        rng = np.random.default_rng(7)
        for obj, box, _joins in corpus_with_gradients():
            for _ in range(100):
                x = rng.uniform(-box, box, size=obj.field.dimension)
                g = obj.field.grad(x)
                if not np.all(np.isfinite(g)):
                    continue
                r = backtrack(obj.field, x, default_cfg)
                oracle = brute_force_backtrack_sigma(obj.field, x, default_cfg)
                assert r.sigma == oracle, f"{obj.name} at {x}"
                if r.trials > 1:
                    assert not armijo_holds(
                        obj.field, x, g, r.sigma / default_cfg.beta, default_cfg.alpha
                    )


class TestBacktrackDirection:
    def test_gradient_direction_matches_backtrack(self, bowl2d, default_cfg):
        x = np.array([0.7, -0.4])
        v = bowl2d.grad(x)
        assert backtrack_direction(bowl2d, x, v, default_cfg) == backtrack(bowl2d, x, default_cfg)

    def test_separable_bowl(self, bowl2d, default_cfg):
        r = backtrack_direction(bowl2d, np.array([1.0, 0.0]), np.array([2.0, 0.0]), default_cfg)
        assert r.sigma == 0.5

    def test_zero_direction_trivial(self, bowl2d, default_cfg):
        r = backtrack_direction(bowl2d, np.array([1.0, 1.0]), np.zeros(2), default_cfg)
        assert r.sigma == default_cfg.delta0
        assert r.trials == 1

    def test_rejects_ascent_direction(self, bowl2d, default_cfg):
        with pytest.raises(NonDescentDirection):
            backtrack_direction(bowl2d, np.array([1.0, 0.0]), np.array([-1.0, 0.0]), default_cfg)


class TestTwoWayBacktrack:
    def test_growth_path(self, parabola, default_cfg):
        r = two_way_backtrack(parabola, np.array([1.0]), 0.125, default_cfg)
        assert r.sigma == 0.5
        assert r.trials == 4  # 0.125 ok, 0.25 ok, 0.5 ok, 1.0 fails
        assert r.direction is GrowthDirection.GROWN

    def test_shrink_path(self, parabola, default_cfg):
        r = two_way_backtrack(parabola, np.array([1.0]), 1.0, default_cfg)
        assert r.sigma == 0.5
        assert r.direction is GrowthDirection.SHRUNK_OR_KEPT

    def test_seeded_at_delta0_equals_backtrack(self, default_cfg):
        rng = np.random.default_rng(11)
        for obj, box, _joins in corpus_with_gradients():
            for _ in range(100):
                x = rng.uniform(-box, box, size=obj.field.dimension)
                a = two_way_backtrack(obj.field, x, default_cfg.delta0, default_cfg)
                b = backtrack(obj.field, x, default_cfg)
                assert a.sigma == b.sigma, f"{obj.name} at {x}"

    def test_rejects_bad_prev_sigma(self, parabola, default_cfg):
        with pytest.raises(ValueError):
            two_way_backtrack(parabola, np.array([1.0]), 2.0, default_cfg)
        with pytest.raises(ValueError):
            two_way_backtrack(parabola, np.array([1.0]), 0.0, default_cfg)

    @given(
        x0=st.floats(min_value=-2.0, max_value=2.0),
        prev=st.sampled_from([1.0, 0.5, 0.25, 0.125, 0.0625, 2.0 ** -10]),
    )
    @settings(max_examples=150, deadline=None)
    def test_result_capped_and_satisfies_armijo(self, x0, prev):
        f = ScalarField(1, lambda x: float(x[0]) ** 4,
                        lambda x: np.array([4.0 * float(x[0]) ** 3]))
        cfg = LineSearchConfig(0.5, 0.5, 1.0)
        try:
            r = two_way_backtrack(f, np.array([x0]), prev, cfg)
        except StalledLineSearch:
            # near-denormal starts can demand more decrease than f can resolve
            return
        assert r.sigma <= cfg.delta0
        assert armijo_holds(f, np.array([x0]), f.grad(np.array([x0])), r.sigma, cfg.alpha)

    def test_grid_membership_exact(self, parabola):
        cfg = LineSearchConfig(0.5, 0.7, 0.9)
        ladder = [cfg.delta0]
        for _ in range(60):
            ladder.append(ladder[-1] * cfg.beta)
        for prev in (0.9, ladder[3], ladder[7], 0.31):
            r = two_way_backtrack(parabola, np.array([1.3]), prev, cfg)
            assert r.sigma in ladder

    def test_eval_economy_on_mexican_hat_valley(self):
        # deep in-disk start whose run tracks the rim valley: the re-descent
        # from delta0 every step is what two-way amortizes away
        obj = mexican_hat()
        r, th = 0.884, 6.12
        z0 = [r * math.cos(th), r * math.sin(th)]
        cfg = LineSearchConfig(0.5, 0.5, 100.0)
        stop = StopRule(eps=1e-12, max_iters=400)
        plain = run_backtracking_gd(obj.field, z0, cfg, stop)
        two_way = run_two_way_gd(obj.field, z0, cfg, stop)
        assert two_way.records[-1].func_evals <= plain.records[-1].func_evals


class TestProbeStepSize:
    def test_grows_from_tiny_start(self, parabola):
        cfg = LineSearchConfig(0.5, 0.5, 1e-6)
        sigma, _ = probe_step_size(parabola, np.array([1.0]), cfg)
        # true acceptance threshold is 1/2; the probe must climb back to it
        assert 0.25 < sigma <= 0.5

    def test_shrinks_from_huge_start(self, parabola):
        cfg = LineSearchConfig(0.5, 0.5, 1e6)
        sigma, _ = probe_step_size(parabola, np.array([1.0]), cfg)
        assert sigma <= 0.5
        assert armijo_holds(parabola, np.array([1.0]), parabola.grad(np.array([1.0])), sigma, 0.5)

    def test_growth_capped_on_linear_objective(self):
        f = ScalarField(1, lambda x: float(x[0]), lambda x: np.array([1.0]))
        cfg = LineSearchConfig(0.5, 0.5, 1.0, max_halvings=20)
        sigma, _ = probe_step_size(f, np.array([0.0]), cfg)
        assert sigma == 2.0 ** 20  # every candidate passes; growth stops at the cap


class TestWolfe:
    def test_full_step_satisfies_both(self, half_parabola):
        ok_decrease, ok_curvature = wolfe_holds(
            half_parabola, np.array([1.0]), np.array([1.0]), 1.0, 1e-4, 0.9
        )
        assert ok_decrease and ok_curvature

    def test_tiny_step_fails_curvature(self, parabola):
        ok_decrease, ok_curvature = wolfe_holds(
            parabola, np.array([1.0]), np.array([2.0]), 1e-6, 1e-4, 0.9
        )
        assert ok_decrease and not ok_curvature

    def test_scaling_invariance(self, parabola):
        x = np.array([1.0])
        v = parabola.grad(x)
        base = wolfe_holds(parabola, x, v, 0.25, 1e-4, 0.9)
        # power-of-two rescale keeps every float product exact
        assert wolfe_holds(parabola, x, 4.0 * v, 0.25 / 4.0, 1e-4, 0.9) == base

    def test_parameter_validation(self, parabola):
        with pytest.raises(ValueError):
            wolfe_holds(parabola, np.array([1.0]), np.array([2.0]), 1.0, 0.9, 0.1)
        with pytest.raises(NonDescentDirection):
            wolfe_holds(parabola, np.array([1.0]), np.array([-1.0]), 1.0, 1e-4, 0.9)
