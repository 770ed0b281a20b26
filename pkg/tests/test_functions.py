"""The adversarial/baseline objective corpus."""

from __future__ import annotations

import math

import numpy as np
import pytest

from btgd import (
    CriticalPointKind,
    classify_critical_point,
    cubic,
    holder,
    l2_regularize,
    linear_perturb,
    make_objective,
    mexican_hat,
    quadratic_form,
    rosenbrock,
    smoothed_abs,
)


class TestMexicanHat:
    def test_zero_outside_unit_disk(self):
        f = mexican_hat().field
        rng = np.random.default_rng(5)
        for _ in range(50):
            theta = rng.uniform(0, 2 * np.pi)
            r = rng.uniform(1.0, 3.0)
            p = np.array([r * np.cos(theta), r * np.sin(theta)])
            assert f.eval(p) == 0.0
            assert np.allclose(f.grad(p), 0.0)

    def test_continuity_toward_rim(self):
        f = mexican_hat().field
        for r in (0.9, 0.99, 0.999):
            p = np.array([r, 0.0])
            bound = 2.0 * math.exp(-1.0 / (1.0 - r * r))
            assert abs(f.eval(p)) <= bound + 1e-15

    def test_spiral_curve_value(self):
        # on theta (1 - r^2) = 1 the oscillatory factor vanishes:
        # r = 0.5, theta = 4/3 gives f = exp(-4/3)
        f = mexican_hat().field
        r, theta = 0.5, 4.0 / 3.0
        p = np.array([r * math.cos(theta), r * math.sin(theta)])
        assert abs(f.eval(p) - math.exp(-4.0 / 3.0)) <= 1e-12

    def test_bounded_on_disk_grid(self):
        f = mexican_hat().field
        bound = 2.0 * math.exp(-1.0)
        grid = np.linspace(-0.999, 0.999, 81)
        for x in grid:
            for y in grid:
                if x * x + y * y < 1.0:
                    assert abs(f.eval(np.array([x, y]))) <= bound + 1e-12

    def test_center_is_generalized_saddle(self):
        obj = mexican_hat()
        (point, kind), = obj.known_critical_points
        cls = classify_critical_point(obj.field, point)
        assert cls.kind is kind is CriticalPointKind.GENERALIZED_SADDLE

    def test_branch_cut_continuity(self):
        # crossing the negative x-axis must not jump: theta enters only
        # through sin/cos expansion
        f = mexican_hat().field
        above = f.eval(np.array([-0.5, 1e-12]))
        below = f.eval(np.array([-0.5, -1e-12]))
        assert abs(above - below) < 1e-9


class TestHolder:
    def test_minimum_at_zero(self):
        obj = holder(0.5)
        assert obj.field.eval(np.zeros(1)) == 0.0
        assert obj.field.grad(np.zeros(1))[0] == 0.0

    def test_values_and_slopes(self):
        f = holder(0.5).field
        assert abs(f.eval(np.array([4.0])) - 8.0) <= 1e-12
        assert abs(f.grad(np.array([4.0]))[0] - 3.0) <= 1e-12
        assert abs(f.eval(np.array([-1.0])) - 1.0) <= 1e-12
        assert abs(f.grad(np.array([-1.0]))[0] + 1.5) <= 1e-12

    def test_gamma_validated(self):
        with pytest.raises(ValueError):
            holder(0.0)
        with pytest.raises(ValueError):
            holder(1.0)


class TestSmoothedAbs:
    def test_join_is_c1(self):
        eps0 = 0.1
        f = smoothed_abs(eps0).field
        for s in (+1.0, -1.0):
            x = np.array([s * eps0])
            assert abs(f.eval(x) - eps0) <= 1e-15
            assert abs(f.grad(x)[0] - s) <= 1e-15

    def test_cap_minimum(self):
        f = smoothed_abs(0.1).field
        assert abs(f.eval(np.zeros(1)) - 0.05) <= 1e-15
        assert f.grad(np.zeros(1))[0] == 0.0

    def test_outer_slope(self):
        f = smoothed_abs(0.1).field
        assert f.eval(np.array([0.2])) == 0.2
        assert f.grad(np.array([0.2]))[0] == 1.0


class TestPolynomialFamilies:
    def test_cubic(self):
        f = cubic().field
        assert f.eval(np.array([1.0])) == 1.0
        assert f.grad(np.array([1.0]))[0] == 3.0

    def test_quadratic_saddle_at_origin(self):
        obj = quadratic_form(np.diag([1.0, -1.0]))
        origin = np.zeros(2)
        assert obj.field.eval(origin) == 0.0
        assert np.array_equal(obj.field.grad(origin), origin)
        cls = classify_critical_point(obj.field, origin)
        assert cls.kind is CriticalPointKind.GENERALIZED_SADDLE
        assert np.allclose(sorted(cls.eigenvalues), [-1.0, 1.0], atol=1e-4)

    def test_quadratic_form_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            quadratic_form([[1.0, 2.0], [0.0, 1.0]])

    def test_rosenbrock_minimum(self):
        f = rosenbrock().field
        p = np.array([1.0, 1.0])
        assert f.eval(p) == 0.0
        assert np.array_equal(f.grad(p), np.zeros(2))


class TestTransforms:
    def test_l2_of_zero_field_is_pure_penalty(self):
        zero = quadratic_form([[0.0]])
        g = l2_regularize(zero, 0.7)
        assert g.field.eval(np.array([2.0])) == pytest.approx(0.7 * 4.0)
        assert g.field.eval(np.zeros(1)) == zero.field.eval(np.zeros(1))

    def test_l2_coefficient_addition(self, half_parabola):
        from btgd import NamedObjective

        base = NamedObjective("half_parabola", half_parabola)
        x = np.array([1.3])
        # x^2/2 + lambda x^2: lambda = 1/4 gives 3/4 x^2, lambda = 1/2 gives x^2
        g = l2_regularize(base, 0.25)
        assert g.field.eval(x) == pytest.approx(0.75 * 1.3 ** 2)
        assert g.field.grad(x)[0] == pytest.approx(1.5 * 1.3)
        g2 = l2_regularize(base, 0.5)
        assert g2.field.eval(x) == pytest.approx(1.3 ** 2)
        assert g2.field.grad(x)[0] == pytest.approx(2.0 * 1.3)

    def test_linear_perturb_identity(self):
        base = cubic()
        same = linear_perturb(base, [0.0])
        x = np.array([0.7])
        assert same.field.eval(x) == base.field.eval(x)
        assert same.field.grad(x)[0] == base.field.grad(x)[0]

    def test_perturbed_cubic_critical_structure(self):
        up = linear_perturb(cubic(), [3.0])
        # f' = 3x^2 + 3 > 0: no real critical points
        for x in np.linspace(-2, 2, 41):
            assert up.field.grad(np.array([x]))[0] >= 3.0
        down = linear_perturb(cubic(), [-3.0])
        plus = classify_critical_point(down.field, np.array([1.0]))
        minus = classify_critical_point(down.field, np.array([-1.0]))
        assert plus.kind is CriticalPointKind.MINIMUM
        assert minus.kind is CriticalPointKind.GENERALIZED_SADDLE


class TestCorpusInvariants:
    def test_known_critical_points_have_zero_gradient(self):
        objectives = [
            mexican_hat(), holder(0.5), smoothed_abs(0.1), cubic(),
            quadratic_form(np.diag([1.0, -1.0])), rosenbrock(),
        ]
        for obj in objectives:
            assert obj.known_critical_points, obj.name
            for point, _kind in obj.known_critical_points:
                gn = float(np.linalg.norm(obj.field.grad(point)))
                assert gn < 1e-8, f"{obj.name}: ||grad|| = {gn}"

    def test_registry_round_trip(self):
        for name in ("mexican_hat", "holder", "smoothed_abs", "cubic",
                     "quadratic_saddle", "quadratic_bowl", "rosenbrock",
                     "perturbed_cubic"):
            obj = make_objective(name)
            assert obj.field.dimension >= 1

    def test_registry_rejects_unknown(self):
        with pytest.raises(KeyError):
            make_objective("does_not_exist")
