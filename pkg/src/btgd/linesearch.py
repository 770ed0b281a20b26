"""Step-size selection: Armijo backtracking, two-way backtracking, Wolfe checks.

The candidate step sizes form the discrete grid {beta^n * delta0}. Grid
values are always produced by repeated multiplication by beta starting from
delta0 (never by powering), so the grid is bit-reproducible and a two-way
search lands on exactly the same floats as a plain backtracking search.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import (
    LineSearchConfig,
    NonDescentDirection,
    ScalarField,
    StalledLineSearch,
    Vector,
    armijo_displacement_holds,
)

__all__ = [
    "GrowthDirection",
    "LineSearchResult",
    "backtrack",
    "backtrack_direction",
    "two_way_backtrack",
    "probe_step_size",
    "wolfe_holds",
]


class GrowthDirection(str, Enum):
    SHRUNK_OR_KEPT = "ShrunkOrKept"
    GROWN = "Grown"


@dataclass(frozen=True)
class LineSearchResult:
    """Accepted step size, number of Armijo evaluations, and growth direction."""

    sigma: float
    trials: int
    direction: GrowthDirection


@dataclass(frozen=True)
class _StepSearch:
    """Rich internal search outcome; lets optimizers commit the accepted trial
    (point and value) without re-evaluating the objective."""

    sigma: float
    trials: int
    direction: GrowthDirection
    rung: int
    w: Vector
    y: Vector
    fy: float


class _Ladder:
    """Lazily extended grid delta0, delta0*beta, (delta0*beta)*beta, ..."""

    def __init__(self, delta0: float, beta: float) -> None:
        self.values = [delta0]
        self.beta = beta

    def __getitem__(self, rung: int) -> float:
        while rung >= len(self.values):
            self.values.append(self.values[-1] * self.beta)
        return self.values[rung]


def _shrink_search(
    f: ScalarField,
    x: Vector,
    fx: float,
    g: Vector,
    v: Vector,
    cfg: LineSearchConfig,
    ladder: _Ladder,
    start_rung: int,
    trials: int,
) -> _StepSearch:
    rung = start_rung
    shrinks = 0
    while True:
        sigma = ladder[rung]
        w = sigma * v
        trials += 1
        ok, y, fy = armijo_displacement_holds(f, x, fx, g, w, cfg.alpha)
        if ok:
            direction = GrowthDirection.GROWN if rung < start_rung else GrowthDirection.SHRUNK_OR_KEPT
            return _StepSearch(sigma, trials, direction, rung, w, y, fy)
        rung += 1
        shrinks += 1
        if shrinks > cfg.max_halvings:
            raise StalledLineSearch(
                f"no Armijo step after {cfg.max_halvings} halvings (||v|| = {np.linalg.norm(v):.3e})"
            )


def _backtrack_search(
    f: ScalarField, x: Vector, fx: float, g: Vector, v: Vector, cfg: LineSearchConfig
) -> _StepSearch:
    ladder = _Ladder(cfg.delta0, cfg.beta)
    return _shrink_search(f, x, fx, g, v, cfg, ladder, start_rung=0, trials=0)


def _two_way_search(
    f: ScalarField,
    x: Vector,
    fx: float,
    g: Vector,
    v: Vector,
    cfg: LineSearchConfig,
    ladder: _Ladder,
    start_rung: int,
) -> _StepSearch:
    sigma = ladder[start_rung]
    w = sigma * v
    trials = 1
    ok, y, fy = armijo_displacement_holds(f, x, fx, g, w, cfg.alpha)
    if not ok:
        return _shrink_search(f, x, fx, g, v, cfg, ladder, start_rung + 1, trials)
    rung = start_rung
    # Growth tests the candidate one rung up before committing; rung 0 is the
    # delta0 cap.
    while rung > 0:
        cand = ladder[rung - 1]
        trials += 1
        cand_ok, cand_y, cand_fy = armijo_displacement_holds(f, x, fx, g, cand * v, cfg.alpha)
        if not cand_ok:
            break
        rung -= 1
        sigma, w, y, fy = cand, cand * v, cand_y, cand_fy
    direction = GrowthDirection.GROWN if rung < start_rung else GrowthDirection.SHRUNK_OR_KEPT
    return _StepSearch(sigma, trials, direction, rung, w, y, fy)


def _as_result(s: _StepSearch) -> LineSearchResult:
    return LineSearchResult(sigma=s.sigma, trials=s.trials, direction=s.direction)


def backtrack(f: ScalarField, x: Vector, cfg: LineSearchConfig) -> LineSearchResult:
    """Largest sigma in {beta^n delta0} whose step -sigma*grad f(x) satisfies Armijo.

    Candidates are tested in order n = 0, 1, 2, ...; ``trials`` counts the
    Armijo evaluations performed. A zero gradient accepts delta0 on the first
    trial (both sides of the inequality vanish).
    """
    x = np.asarray(x, dtype=np.float64)
    g = f.grad(x)
    return _as_result(_backtrack_search(f, x, f.eval(x), g, g, cfg))


def backtrack_direction(
    f: ScalarField, x: Vector, v: Vector, cfg: LineSearchConfig
) -> LineSearchResult:
    """Backtracking along an arbitrary direction v with <grad f(x), v> >= 0."""
    x = np.asarray(x, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    g = f.grad(x)
    if float(g @ v) < 0.0:
        raise NonDescentDirection(f"<grad, v> = {float(g @ v):.3e} < 0")
    return _as_result(_backtrack_search(f, x, f.eval(x), g, v, cfg))


def two_way_backtrack(
    f: ScalarField, x: Vector, prev_sigma: float, cfg: LineSearchConfig
) -> LineSearchResult:
    """Armijo search seeded at the previous step size instead of delta0.

    Starts from the grid rung at or just below ``prev_sigma``. If Armijo
    fails there, the step shrinks by beta until it holds; if it holds, the
    step grows (testing each candidate before committing) while Armijo still
    holds and the candidate does not exceed delta0. The result satisfies
    Armijo and never exceeds delta0; with ``prev_sigma == delta0`` it is
    bit-identical to ``backtrack``.
    """
    if not 0.0 < prev_sigma <= cfg.delta0:
        raise ValueError(f"prev_sigma must lie in (0, delta0], got {prev_sigma}")
    x = np.asarray(x, dtype=np.float64)
    ladder = _Ladder(cfg.delta0, cfg.beta)
    rung = 0
    while ladder[rung] > prev_sigma and rung < cfg.max_halvings:
        rung += 1
    g = f.grad(x)
    return _as_result(_two_way_search(f, x, f.eval(x), g, g, cfg, ladder, rung))


def probe_step_size(
    f: ScalarField, x: Vector, cfg: LineSearchConfig, start_sigma: float | None = None
) -> tuple[float, int]:
    """Armijo step-size probe whose start value is a guess, not a cap.

    Used by the learning-rate finder: starting from ``start_sigma`` (default
    delta0), the step shrinks by beta while Armijo fails, or grows by 1/beta
    while the grown candidate still satisfies Armijo. Growth is capped at
    ``max_halvings`` doublings so objectives with no Armijo ceiling (for
    example linear ones) terminate. Returns (sigma, trials).
    """
    x = np.asarray(x, dtype=np.float64)
    g = f.grad(x)
    fx = f.eval(x)
    sigma = cfg.delta0 if start_sigma is None else float(start_sigma)
    if not sigma > 0.0:
        raise ValueError(f"start_sigma must be positive, got {sigma}")
    if not np.any(g):
        # a critical anchor accepts any step; growing would be meaningless
        return sigma, 1
    trials = 1
    ok, _, _ = armijo_displacement_holds(f, x, fx, g, sigma * g, cfg.alpha)
    if not ok:
        shrinks = 0
        while True:
            sigma = sigma * cfg.beta
            trials += 1
            ok, _, _ = armijo_displacement_holds(f, x, fx, g, sigma * g, cfg.alpha)
            if ok:
                return sigma, trials
            shrinks += 1
            if shrinks > cfg.max_halvings:
                raise StalledLineSearch("learning-rate probe stalled")
    for _ in range(cfg.max_halvings):
        cand = sigma / cfg.beta
        trials += 1
        cand_ok, _, _ = armijo_displacement_holds(f, x, fx, g, cand * g, cfg.alpha)
        if not cand_ok:
            break
        sigma = cand
    return sigma, trials


def wolfe_holds(
    f: ScalarField, x: Vector, v: Vector, sigma: float, c1: float, c2: float
) -> tuple[bool, bool]:
    """(sufficient-decrease, curvature) booleans of the Wolfe conditions.

    Sufficient decrease: f(x - sigma v) - f(x) <= -c1 sigma <grad f(x), v>.
    Curvature: <grad f(x - sigma v), v> <= c2 <grad f(x), v>.

    Only the predicate is provided; no search for a sigma satisfying both
    conditions is attempted.
    """
    if not 0.0 < c1 < c2 < 1.0:
        raise ValueError(f"need 0 < c1 < c2 < 1, got c1={c1}, c2={c2}")
    if not sigma > 0.0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    x = np.asarray(x, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    g = f.grad(x)
    dgv = float(g @ v)
    if dgv <= 0.0:
        raise NonDescentDirection(f"<grad, v> = {dgv:.3e} must be positive")
    y = x - sigma * v
    decrease = (f.eval(y) - f.eval(x)) <= -c1 * sigma * dgv
    curvature = float(f.grad(y) @ v) <= c2 * dgv
    return decrease, curvature
