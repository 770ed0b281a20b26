"""Shared fixtures and independent oracles for the test suite."""

from __future__ import annotations

import math

import numpy as np
import pytest

from btgd import (
    LineSearchConfig,
    ScalarField,
    StopRule,
    armijo_holds,
    cubic,
    holder,
    make_objective,
    mexican_hat,
    quadratic_form,
    rosenbrock,
    smoothed_abs,
)


@pytest.fixture
def parabola():
    """f(x) = x^2 with analytic gradient."""
    return ScalarField(1, lambda x: float(x[0]) ** 2, lambda x: np.array([2.0 * x[0]]))


@pytest.fixture
def half_parabola():
    """f(x) = x^2 / 2."""
    return ScalarField(1, lambda x: 0.5 * float(x[0]) ** 2, lambda x: np.array([float(x[0])]))


@pytest.fixture
def bowl2d():
    """f(x, y) = x^2 + y^2."""
    return ScalarField(
        2,
        lambda x: float(x[0]) ** 2 + float(x[1]) ** 2,
        lambda x: np.array([2.0 * x[0], 2.0 * x[1]]),
    )


@pytest.fixture
def default_cfg():
    return LineSearchConfig(alpha=0.5, beta=0.5, delta0=1.0)


@pytest.fixture
def default_stop():
    return StopRule(eps=1e-8, max_iters=10_000)


def brute_force_backtrack_sigma(f, x, cfg, max_steps=200):
    """Independent grid oracle: walk beta^n * delta0 downward, return the first
    (hence largest) value satisfying the Armijo inequality."""
    sigma = cfg.delta0
    for _ in range(max_steps):
        if armijo_holds(f, x, f.grad(x), sigma, cfg.alpha):
            return sigma
        sigma = sigma * cfg.beta
    raise AssertionError("oracle exhausted the grid")


def cubic_feasible_root(minus: bool = True) -> float:
    """Float representative of a root of 6 t^2 - 6 t + 1 on the Armijo-feasible
    side.

    At either exact root the Armijo inequality for x^3 at x = 1 holds with
    equality; the nearest double can land a hair on the failing side, so walk
    a few ulps (closest candidate first) until the predicate accepts.
    """
    root = (3.0 - math.sqrt(3.0)) / 6.0 if minus else (3.0 + math.sqrt(3.0)) / 6.0
    f = cubic().field
    x, v = np.array([1.0]), np.array([3.0])
    lo = hi = root
    for _ in range(8):
        for cand in (lo, hi):
            if armijo_holds(f, x, v, cand, 0.5):
                return cand
        lo = math.nextafter(lo, -math.inf)
        hi = math.nextafter(hi, math.inf)
    raise AssertionError("no feasible representative within 8 ulps")


def corpus_with_gradients():
    """Objectives carrying analytic gradients, with probe boxes and the radii
    of non-C^2 joins to skip during finite-difference comparison."""
    return [
        (holder(0.5), 2.0, ()),
        (smoothed_abs(0.1), 1.0, (-0.1, 0.1)),
        (cubic(), 2.0, ()),
        (quadratic_form(np.diag([1.0, -1.0])), 2.0, ()),
        (quadratic_form(np.diag([2.0, 0.5])), 2.0, ()),
        (rosenbrock(), 2.0, ()),
        (make_objective("perturbed_cubic", a=-3.0), 2.0, ()),
    ]


def bounded_descent_corpus():
    """(objective, z0) pairs on which Armijo descent stays bounded."""
    return [
        (quadratic_form([[3.0]]), [1.0]),
        (quadratic_form(np.diag([1.0, 3.0])), [1.0, 1.0]),
        (make_objective("perturbed_cubic", a=-3.0), [0.0]),
        (rosenbrock(), [-0.5, 0.5]),
        (holder(0.5), [1.0]),
        (smoothed_abs(0.1), [0.5]),
        (mexican_hat(), [0.3, 0.4]),
    ]
