"""Iteration schemes: standard/scheduled GD, backtracking GD and variants,
momentum and Nesterov recurrences in standard, backtracking, and simplified
backtracking forms.

Every run is single-threaded and deterministic given its seed; distinct runs
share no mutable state. Committed-step length below ``stop.eps`` declares
convergence (for gradient methods this is delta_n * ||grad f(z_n)||), norm
above ``stop.divergence_radius`` declares divergence, and a stalled line
search stops the run with ``Termination.STALLED``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .core import (
    IterateRecord,
    LineSearchConfig,
    NonDescentDirection,
    NonFiniteEvaluation,
    ScalarField,
    StalledLineSearch,
    StopRule,
    Termination,
    Trajectory,
    Vector,
    armijo_displacement_holds,
    as_point,
)
from .linesearch import _backtrack_search, _Ladder, _two_way_search

__all__ = [
    "Constant",
    "ExplicitSequence",
    "RobbinsMonro",
    "Schedule",
    "DirectionOracle",
    "MomentumState",
    "run_standard_gd",
    "run_scheduled_gd",
    "run_backtracking_gd",
    "run_two_way_gd",
    "run_inexact_backtracking_gd",
    "run_mmt",
    "run_nag",
    "run_backtracking_mmt",
    "run_backtracking_nag",
    "run_simplified_bmmt",
    "run_simplified_bnag",
]


# -- learning-rate schedules -------------------------------------------------


@dataclass(frozen=True)
class Constant:
    delta: float

    def __post_init__(self) -> None:
        if not self.delta > 0.0:
            raise ValueError(f"delta must be positive, got {self.delta}")

    def rate(self, n: int) -> float | None:
        return self.delta


@dataclass(frozen=True)
class ExplicitSequence:
    deltas: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "deltas", tuple(float(d) for d in self.deltas))
        if any(d <= 0.0 for d in self.deltas):
            raise ValueError("all schedule entries must be positive")

    def rate(self, n: int) -> float | None:
        return self.deltas[n] if n < len(self.deltas) else None


@dataclass(frozen=True)
class RobbinsMonro:
    """delta_n = c / (n + 1): divergent sum, summable squares."""

    c: float

    def __post_init__(self) -> None:
        if not self.c > 0.0:
            raise ValueError(f"c must be positive, got {self.c}")

    def rate(self, n: int) -> float | None:
        return self.c / (n + 1)


Schedule = Union[Constant, ExplicitSequence, RobbinsMonro]


# -- direction oracle for inexact descent ------------------------------------


@dataclass(frozen=True)
class DirectionOracle:
    """Seeded generator of descent directions near the gradient.

    Every drawn v satisfies a1*||g|| <= ||v|| <= a2*||g|| and
    <g, v> >= mu*||g||*||v||: a random unit vector is rejection-sampled into
    the mu-cone around the gradient, then scaled by a uniform factor in
    [a1, a2] times the gradient norm. mu = 1 with a1 = a2 = 1 returns the
    gradient itself.
    """

    a1: float = 0.5
    a2: float = 2.0
    mu: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.a1 <= 1.0:
            raise ValueError(f"a1 must be in (0,1], got {self.a1}")
        if not self.a2 >= 1.0:
            raise ValueError(f"a2 must be >= 1, got {self.a2}")
        if not 0.0 < self.mu <= 1.0:
            raise ValueError(f"mu must be in (0,1], got {self.mu}")

    def draw(self, g: Vector, rng: np.random.Generator) -> Vector:
        gn = float(np.linalg.norm(g))
        if gn == 0.0:
            return np.zeros_like(g)
        if self.mu >= 1.0:
            if self.a1 == 1.0 and self.a2 == 1.0:
                return g.copy()
            scale = self.a1 if self.a1 == self.a2 else rng.uniform(self.a1, self.a2)
            return scale * g
        u = g / gn
        for _ in range(10_000):
            cand = rng.standard_normal(g.size)
            norm = float(np.linalg.norm(cand))
            if norm == 0.0:
                continue
            cand /= norm
            if float(cand @ g) / gn >= self.mu:
                u = cand
                break
        scale = rng.uniform(self.a1, self.a2)
        return u * (scale * gn)


@dataclass(frozen=True)
class MomentumState:
    """Initial momentum vector plus the gamma0/delta0 pair of the two-phase
    backtracking momentum rule."""

    v_prev: Vector
    gamma0: float
    delta0: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "v_prev", np.array(self.v_prev, dtype=np.float64))
        if self.gamma0 < 0.0:
            raise ValueError(f"gamma0 must be >= 0, got {self.gamma0}")
        if not self.delta0 > 0.0:
            raise ValueError(f"delta0 must be positive, got {self.delta0}")


# -- shared plumbing ----------------------------------------------------------


class _EvalCounter:
    __slots__ = ("n",)

    def __init__(self) -> None:
        self.n = 0


def _counting(f: ScalarField) -> tuple[ScalarField, _EvalCounter]:
    counter = _EvalCounter()
    raw = f.value

    def value(x: Vector) -> float:
        counter.n += 1
        return raw(x)

    return ScalarField(f.dimension, value, f.gradient), counter


def _frozen(x: Vector) -> Vector:
    y = np.array(x, dtype=np.float64)
    y.flags.writeable = False
    return y


class _Run:
    """Record accumulator shared by all runners."""

    def __init__(self, f: ScalarField, z0: Sequence[float] | Vector, stop: StopRule) -> None:
        self.f, self.counter = _counting(f)
        self.z = np.array(as_point(z0, f.dimension))
        self.stop = stop
        self.records: list[IterateRecord] = []
        self.aux: dict = {}

    def record(self, n: int, z: Vector, value: float, grad_norm: float,
               step_size: float, backtrack_count: int) -> None:
        self.records.append(IterateRecord(
            index=n, point=_frozen(z), value=value, grad_norm=grad_norm,
            step_size=step_size, backtrack_count=backtrack_count,
            func_evals=self.counter.n,
        ))

    def guard(self) -> Termination | None:
        """Non-finite iterate check; the radius check happens after evaluation
        so the diverged point itself still gets a record."""
        if not np.all(np.isfinite(self.z)):
            self.aux["nonfinite"] = True
            return Termination.DIVERGED
        return None

    def done(self, termination: Termination) -> Trajectory:
        return Trajectory(records=self.records, termination=termination, aux=self.aux)


# -- plain and scheduled gradient descent -------------------------------------


def run_scheduled_gd(
    f: ScalarField,
    z0: Sequence[float] | Vector,
    schedule: Schedule,
    stop: StopRule,
    verify_armijo: float | None = None,
) -> Trajectory:
    """z_{n+1} = z_n - delta_n grad f(z_n) with delta_n from a schedule.

    When ``verify_armijo`` is an alpha value, each committed step is checked
    against f(z_{n+1}) - f(z_n) <= -alpha delta_n ||grad f(z_n)||^2 and the
    indices of violating steps land in ``aux['armijo_violations']``.
    """
    run = _Run(f, z0, stop)
    if verify_armijo is not None:
        run.aux["armijo_violations"] = []
    prev: tuple[float, float, float] | None = None  # (f(z_n), delta_n, ||g_n||)
    for n in range(stop.max_iters + 1):
        term = run.guard()
        if term is not None:
            return run.done(term)
        try:
            fz = run.f.eval(run.z)
            g = run.f.grad(run.z)
        except NonFiniteEvaluation:
            run.aux["nonfinite"] = True
            return run.done(Termination.DIVERGED)
        gn = float(np.linalg.norm(g))
        if verify_armijo is not None and prev is not None:
            f_prev, d_prev, gn_prev = prev
            if fz - f_prev > -verify_armijo * d_prev * gn_prev * gn_prev:
                run.aux["armijo_violations"].append(n - 1)
        if float(np.linalg.norm(run.z)) > stop.divergence_radius:
            run.record(n, run.z, fz, gn, 0.0, 0)
            return run.done(Termination.DIVERGED)
        delta = schedule.rate(n)
        if delta is None:
            run.record(n, run.z, fz, gn, 0.0, 0)
            return run.done(Termination.MAX_ITERS)
        w = delta * g
        run.record(n, run.z, fz, gn, delta, 0)
        if float(np.linalg.norm(w)) < stop.eps:
            return run.done(Termination.CONVERGED)
        if n == stop.max_iters:
            return run.done(Termination.MAX_ITERS)
        prev = (fz, delta, gn)
        run.z = run.z - w
    return run.done(Termination.MAX_ITERS)


def run_standard_gd(
    f: ScalarField, z0: Sequence[float] | Vector, delta: float, stop: StopRule
) -> Trajectory:
    """Fixed-rate gradient descent: z_{n+1} = z_n - delta grad f(z_n)."""
    return run_scheduled_gd(f, z0, Constant(delta), stop)


# -- Armijo backtracking runners ----------------------------------------------


def run_backtracking_gd(
    f: ScalarField, z0: Sequence[float] | Vector, cfg: LineSearchConfig, stop: StopRule
) -> Trajectory:
    """Gradient descent with the Armijo backtracking step size at every iterate.

    Each step satisfies the sufficient-decrease inequality, so recorded
    values are nonincreasing.
    """
    run = _Run(f, z0, stop)
    fz: float | None = None
    for n in range(stop.max_iters + 1):
        term = run.guard()
        if term is not None:
            return run.done(term)
        try:
            if fz is None:
                fz = run.f.eval(run.z)
            g = run.f.grad(run.z)
        except NonFiniteEvaluation:
            run.aux["nonfinite"] = True
            return run.done(Termination.DIVERGED)
        gn = float(np.linalg.norm(g))
        if float(np.linalg.norm(run.z)) > stop.divergence_radius:
            run.record(n, run.z, fz, gn, 0.0, 0)
            return run.done(Termination.DIVERGED)
        try:
            s = _backtrack_search(run.f, run.z, fz, g, g, cfg)
        except StalledLineSearch:
            run.record(n, run.z, fz, gn, 0.0, cfg.max_halvings + 1)
            return run.done(Termination.STALLED)
        run.record(n, run.z, fz, gn, s.sigma, s.trials)
        if float(np.linalg.norm(s.w)) < stop.eps:
            return run.done(Termination.CONVERGED)
        if n == stop.max_iters:
            return run.done(Termination.MAX_ITERS)
        run.z, fz = s.y, s.fy
    return run.done(Termination.MAX_ITERS)


def run_two_way_gd(
    f: ScalarField, z0: Sequence[float] | Vector, cfg: LineSearchConfig, stop: StopRule
) -> Trajectory:
    """Backtracking GD whose step-n search starts from the step accepted at
    n-1 (delta0 at n = 0) and may grow as well as shrink, capped at delta0."""
    run = _Run(f, z0, stop)
    ladder = _Ladder(cfg.delta0, cfg.beta)
    rung = 0
    fz: float | None = None
    for n in range(stop.max_iters + 1):
        term = run.guard()
        if term is not None:
            return run.done(term)
        try:
            if fz is None:
                fz = run.f.eval(run.z)
            g = run.f.grad(run.z)
        except NonFiniteEvaluation:
            run.aux["nonfinite"] = True
            return run.done(Termination.DIVERGED)
        gn = float(np.linalg.norm(g))
        if float(np.linalg.norm(run.z)) > stop.divergence_radius:
            run.record(n, run.z, fz, gn, 0.0, 0)
            return run.done(Termination.DIVERGED)
        try:
            s = _two_way_search(run.f, run.z, fz, g, g, cfg, ladder, rung)
        except StalledLineSearch:
            run.record(n, run.z, fz, gn, 0.0, cfg.max_halvings + 1)
            return run.done(Termination.STALLED)
        rung = s.rung
        run.record(n, run.z, fz, gn, s.sigma, s.trials)
        if float(np.linalg.norm(s.w)) < stop.eps:
            return run.done(Termination.CONVERGED)
        if n == stop.max_iters:
            return run.done(Termination.MAX_ITERS)
        run.z, fz = s.y, s.fy
    return run.done(Termination.MAX_ITERS)


def run_inexact_backtracking_gd(
    f: ScalarField,
    z0: Sequence[float] | Vector,
    oracle: DirectionOracle,
    cfg: LineSearchConfig,
    stop: StopRule,
) -> Trajectory:
    """Backtracking descent along oracle directions instead of the gradient.

    Each step draws v_n from the oracle (norm sandwich plus mu-cone by
    construction), finds the Armijo step along v_n, and commits
    z_{n+1} = z_n - delta_n v_n. The recorded (gradient, direction) pairs
    land in ``aux['direction_pairs']``.
    """
    run = _Run(f, z0, stop)
    rng = np.random.default_rng(oracle.seed)
    pairs: list[tuple[Vector, Vector]] = []
    run.aux["direction_pairs"] = pairs
    fz: float | None = None
    for n in range(stop.max_iters + 1):
        term = run.guard()
        if term is not None:
            return run.done(term)
        try:
            if fz is None:
                fz = run.f.eval(run.z)
            g = run.f.grad(run.z)
        except NonFiniteEvaluation:
            run.aux["nonfinite"] = True
            return run.done(Termination.DIVERGED)
        gn = float(np.linalg.norm(g))
        if float(np.linalg.norm(run.z)) > stop.divergence_radius:
            run.record(n, run.z, fz, gn, 0.0, 0)
            return run.done(Termination.DIVERGED)
        v = oracle.draw(g, rng)
        if float(g @ v) < 0.0:
            raise NonDescentDirection(
                f"oracle produced <g, v> = {float(g @ v):.3e} < 0 at step {n}"
            )
        try:
            s = _backtrack_search(run.f, run.z, fz, g, v, cfg)
        except StalledLineSearch:
            run.record(n, run.z, fz, gn, 0.0, cfg.max_halvings + 1)
            return run.done(Termination.STALLED)
        pairs.append((_frozen(g), _frozen(v)))
        run.record(n, run.z, fz, gn, s.sigma, s.trials)
        if float(np.linalg.norm(s.w)) < stop.eps:
            return run.done(Termination.CONVERGED)
        if n == stop.max_iters:
            return run.done(Termination.MAX_ITERS)
        run.z, fz = s.y, s.fy
    return run.done(Termination.MAX_ITERS)


# -- momentum and Nesterov ----------------------------------------------------


def _run_momentum(
    f: ScalarField,
    z0: Sequence[float] | Vector,
    v_init: Sequence[float] | Vector,
    gamma: float,
    delta: float,
    stop: StopRule,
    nesterov: bool,
) -> Trajectory:
    run = _Run(f, z0, stop)
    v = np.array(as_point(v_init, f.dimension))
    for n in range(stop.max_iters + 1):
        term = run.guard()
        if term is not None:
            return run.done(term)
        try:
            fz = run.f.eval(run.z)
            g = run.f.grad(run.z)
            if nesterov and gamma != 0.0:
                g_dir = run.f.grad(run.z - gamma * v)
            else:
                g_dir = g
        except NonFiniteEvaluation:
            run.aux["nonfinite"] = True
            return run.done(Termination.DIVERGED)
        gn = float(np.linalg.norm(g))
        if float(np.linalg.norm(run.z)) > stop.divergence_radius:
            run.record(n, run.z, fz, gn, 0.0, 0)
            return run.done(Termination.DIVERGED)
        vn = gamma * v + delta * g_dir
        run.record(n, run.z, fz, gn, delta, 0)
        if float(np.linalg.norm(vn)) < stop.eps:
            return run.done(Termination.CONVERGED)
        if n == stop.max_iters:
            return run.done(Termination.MAX_ITERS)
        run.z = run.z - vn
        v = vn
    return run.done(Termination.MAX_ITERS)


def run_mmt(
    f: ScalarField,
    z0: Sequence[float] | Vector,
    v_init: Sequence[float] | Vector,
    gamma: float,
    delta: float,
    stop: StopRule,
) -> Trajectory:
    """Momentum: v_n = gamma v_{n-1} + delta grad f(z_n); z_{n+1} = z_n - v_n."""
    return _run_momentum(f, z0, v_init, gamma, delta, stop, nesterov=False)


def run_nag(
    f: ScalarField,
    z0: Sequence[float] | Vector,
    v_init: Sequence[float] | Vector,
    gamma: float,
    delta: float,
    stop: StopRule,
) -> Trajectory:
    """Nesterov: v_n = gamma v_{n-1} + delta grad f(z_n - gamma v_{n-1})."""
    return _run_momentum(f, z0, v_init, gamma, delta, stop, nesterov=True)


def _run_backtracking_momentum(
    f: ScalarField,
    z0: Sequence[float] | Vector,
    state: MomentumState,
    cfg: LineSearchConfig,
    stop: StopRule,
    a1: float,
    a2: float,
    mu: float,
    nesterov: bool,
) -> Trajectory:
    """Two-phase backtracking momentum rule.

    Phase 1 builds v_n = gamma' v_{n-1} + delta0 g and shrinks gamma' by beta
    until v_n lands in the norm sandwich [a1, a2]*||grad f(z_n)|| and the
    mu-cone around grad f(z_n). Phase 2 scales the whole displacement by the
    Armijo multiplier sigma, starting at 1, shrinking by beta until
    sufficient decrease holds; the effective pair (sigma gamma', sigma delta0)
    is committed. gamma0 = 0 (with a1 <= delta0 <= a2) reproduces plain
    backtracking GD bit for bit.
    """
    run = _Run(f, z0, stop)
    if state.v_prev.size != f.dimension:
        raise ValueError("v_prev dimension does not match the objective")
    v_prev = state.v_prev.copy()
    pairs: list[tuple[Vector, Vector]] = []
    gammas: list[float] = []
    phase1_trials: list[int] = []
    run.aux["direction_pairs"] = pairs
    run.aux["gamma_eff"] = gammas
    run.aux["phase1_trials"] = phase1_trials
    fz: float | None = None
    for n in range(stop.max_iters + 1):
        term = run.guard()
        if term is not None:
            return run.done(term)
        try:
            if fz is None:
                fz = run.f.eval(run.z)
            g = run.f.grad(run.z)
        except NonFiniteEvaluation:
            run.aux["nonfinite"] = True
            return run.done(Termination.DIVERGED)
        gn = float(np.linalg.norm(g))
        if float(np.linalg.norm(run.z)) > stop.divergence_radius:
            run.record(n, run.z, fz, gn, 0.0, 0)
            return run.done(Termination.DIVERGED)
        # phase 1: shrink gamma' until the direction conditions hold
        gamma_p = state.gamma0
        attempts = 0
        v = None
        g_dir = g
        while attempts <= cfg.max_halvings:
            try:
                if nesterov and gamma_p != 0.0:
                    g_dir = run.f.grad(run.z - gamma_p * v_prev)
                else:
                    g_dir = g
            except NonFiniteEvaluation:
                run.aux["nonfinite"] = True
                return run.done(Termination.DIVERGED)
            cand = gamma_p * v_prev + state.delta0 * g_dir
            vn = float(np.linalg.norm(cand))
            sandwich = a1 * gn <= vn <= a2 * gn
            cone = float(g @ cand) >= mu * gn * vn
            if sandwich and cone:
                v = cand
                break
            gamma_p *= cfg.beta
            attempts += 1
        if v is None:
            if gn == 0.0:
                # critical point with residual momentum: the norm sandwich
                # demands v_n = 0, which shrinking gamma' alone cannot reach
                run.record(n, run.z, fz, gn, 0.0, 0)
                return run.done(Termination.CONVERGED)
            run.aux["stall_phase"] = "direction"
            run.record(n, run.z, fz, gn, 0.0, 0)
            return run.done(Termination.STALLED)
        phase1_trials.append(attempts + 1)
        # phase 2: scale (gamma', delta0) jointly by the Armijo multiplier
        gamma_c = gamma_p
        delta_c = state.delta0
        trials = 0
        shrinks = 0
        while True:
            w = gamma_c * v_prev + delta_c * g_dir
            trials += 1
            try:
                ok, y, fy = armijo_displacement_holds(run.f, run.z, fz, g, w, cfg.alpha)
            except NonFiniteEvaluation:
                ok = False
                y = fy = None  # type: ignore[assignment]
            if ok:
                break
            gamma_c *= cfg.beta
            delta_c *= cfg.beta
            shrinks += 1
            if shrinks > cfg.max_halvings:
                run.aux["stall_phase"] = "armijo"
                run.record(n, run.z, fz, gn, 0.0, trials)
                return run.done(Termination.STALLED)
        pairs.append((_frozen(g), _frozen(v)))
        gammas.append(gamma_c)
        run.record(n, run.z, fz, gn, delta_c, trials)
        if float(np.linalg.norm(w)) < stop.eps:
            return run.done(Termination.CONVERGED)
        if n == stop.max_iters:
            return run.done(Termination.MAX_ITERS)
        run.z, fz = y, fy
        v_prev = w
    return run.done(Termination.MAX_ITERS)


def run_backtracking_mmt(
    f: ScalarField,
    z0: Sequence[float] | Vector,
    state: MomentumState,
    cfg: LineSearchConfig,
    stop: StopRule,
    a1: float = 0.5,
    a2: float = 2.0,
    mu: float = 0.1,
) -> Trajectory:
    """Backtracking momentum: the two-phase rule on v_n = gamma v_{n-1} + delta g(z_n)."""
    return _run_backtracking_momentum(f, z0, state, cfg, stop, a1, a2, mu, nesterov=False)


def run_backtracking_nag(
    f: ScalarField,
    z0: Sequence[float] | Vector,
    state: MomentumState,
    cfg: LineSearchConfig,
    stop: StopRule,
    a1: float = 0.5,
    a2: float = 2.0,
    mu: float = 0.1,
) -> Trajectory:
    """Backtracking Nesterov: phase-1 gradient taken at z_n - gamma' v_{n-1}."""
    return _run_backtracking_momentum(f, z0, state, cfg, stop, a1, a2, mu, nesterov=True)


def _run_simplified(
    f: ScalarField,
    z0: Sequence[float] | Vector,
    v_init: Sequence[float] | Vector,
    cfg: LineSearchConfig,
    stop: StopRule,
    gamma: float,
    nesterov: bool,
) -> Trajectory:
    run = _Run(f, z0, stop)
    v = np.array(as_point(v_init, f.dimension))
    fz: float | None = None
    for n in range(stop.max_iters + 1):
        term = run.guard()
        if term is not None:
            return run.done(term)
        try:
            if fz is None:
                fz = run.f.eval(run.z)
            g = run.f.grad(run.z)
        except NonFiniteEvaluation:
            run.aux["nonfinite"] = True
            return run.done(Termination.DIVERGED)
        gn = float(np.linalg.norm(g))
        if float(np.linalg.norm(run.z)) > stop.divergence_radius:
            run.record(n, run.z, fz, gn, 0.0, 0)
            return run.done(Termination.DIVERGED)
        try:
            s = _backtrack_search(run.f, run.z, fz, g, g, cfg)
            if nesterov and gamma != 0.0:
                g_dir = run.f.grad(run.z - gamma * v)
            else:
                g_dir = g
        except StalledLineSearch:
            run.record(n, run.z, fz, gn, 0.0, cfg.max_halvings + 1)
            return run.done(Termination.STALLED)
        except NonFiniteEvaluation:
            run.aux["nonfinite"] = True
            return run.done(Termination.DIVERGED)
        vn = gamma * v + s.sigma * g_dir
        run.record(n, run.z, fz, gn, s.sigma, s.trials)
        if float(np.linalg.norm(vn)) < stop.eps:
            return run.done(Termination.CONVERGED)
        if n == stop.max_iters:
            return run.done(Termination.MAX_ITERS)
        if gamma == 0.0:
            run.z, fz = s.y, s.fy
        else:
            run.z = run.z - vn
            fz = None
        v = vn
    return run.done(Termination.MAX_ITERS)


def run_simplified_bmmt(
    f: ScalarField,
    z0: Sequence[float] | Vector,
    v_init: Sequence[float] | Vector,
    cfg: LineSearchConfig,
    stop: StopRule,
    gamma: float = 0.9,
) -> Trajectory:
    """Momentum recurrence with gamma fixed and delta_n re-found each step by
    plain Armijo backtracking at the current point."""
    return _run_simplified(f, z0, v_init, cfg, stop, gamma, nesterov=False)


def run_simplified_bnag(
    f: ScalarField,
    z0: Sequence[float] | Vector,
    v_init: Sequence[float] | Vector,
    cfg: LineSearchConfig,
    stop: StopRule,
    gamma: float = 0.9,
) -> Trajectory:
    """Nesterov recurrence with gamma fixed and delta_n from backtracking."""
    return _run_simplified(f, z0, v_init, cfg, stop, gamma, nesterov=True)
