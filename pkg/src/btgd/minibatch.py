"""Synthetic stochastic problems and the mini-batch machinery: seeded batch
sampling, the averaged learning-rate finder with batch-size rescaling, and
the MBT-GD/MMT/NAG schedulers with stuck detection."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Sequence

import numpy as np

from .core import (
    IterateRecord,
    LineSearchConfig,
    LrFinderFailed,
    NonFiniteEvaluation,
    ScalarField,
    StalledLineSearch,
    StopRule,
    Termination,
    Trajectory,
    Vector,
    as_point,
)
from .linesearch import probe_step_size, _backtrack_search
from .optimizers import _EvalCounter, _frozen

__all__ = [
    "MiniBatchProblem",
    "BatchSampler",
    "RescaleMode",
    "LRFinderReport",
    "StuckDetector",
    "make_least_squares_problem",
    "problem_to_json",
    "problem_from_json",
    "lr_finder",
    "run_mbt_gd",
    "run_mbt_mmt",
    "run_mbt_nag",
    "run_objective_sequence",
]


@dataclass(frozen=True)
class MiniBatchProblem:
    """A finite family of component objectives whose mean is the full objective."""

    components: tuple[ScalarField, ...]
    meta: dict

    def __post_init__(self) -> None:
        if not self.components:
            raise ValueError("a mini-batch problem needs at least one component")
        dims = {c.dimension for c in self.components}
        if len(dims) != 1:
            raise ValueError(f"components disagree on dimension: {sorted(dims)}")

    @property
    def n_components(self) -> int:
        return len(self.components)

    @property
    def dimension(self) -> int:
        return self.components[0].dimension

    def batch_objective(self, indices: Sequence[int]) -> ScalarField:
        """Mean of the selected components, with a mean analytic gradient when
        every component has one.

        Components are accumulated in ascending index order, so a batch is a
        pure function of its index set: shuffling cannot perturb low bits.
        """
        comps = [self.components[i] for i in sorted(indices)]
        inv = 1.0 / len(comps)

        def value(x: Vector) -> float:
            return math.fsum(c.value(x) for c in comps) * inv

        gradient = None
        if all(c.gradient is not None for c in comps):

            def gradient(x: Vector) -> Vector:  # noqa: F811
                acc = np.zeros(x.size)
                for c in comps:
                    acc += c.gradient(x)
                return acc * inv

        return ScalarField(self.dimension, value, gradient)

    @property
    def full_objective(self) -> ScalarField:
        return self.batch_objective(range(self.n_components))


@dataclass(frozen=True)
class BatchSampler:
    """Shuffle-and-partition batch stream: each epoch visits every component
    exactly once (the last batch may be smaller); the sequence is a pure
    function of the seed."""

    n: int
    batch_size: int
    seed: int

    def __post_init__(self) -> None:
        if not 1 <= self.batch_size <= self.n:
            raise ValueError(f"need 1 <= batch_size <= {self.n}, got {self.batch_size}")

    @property
    def batches_per_epoch(self) -> int:
        return math.ceil(self.n / self.batch_size)

    def batches(self) -> Iterator[list[int]]:
        """Fresh infinite batch stream from this sampler's seed."""
        rng = np.random.default_rng(self.seed)
        while True:
            perm = rng.permutation(self.n)
            for lo in range(0, self.n, self.batch_size):
                yield [int(i) for i in perm[lo:lo + self.batch_size]]


def make_least_squares_problem(
    n_samples: int, dimension: int, noise: float, seed: int
) -> MiniBatchProblem:
    """Least-squares components f_i(k) = 1/2 (<x_i, k> - y_i)^2 with random
    unit-scale features and targets from a hidden coefficient vector.

    The hidden vector is kept in ``meta['true_kappa']``; with zero noise the
    full objective vanishes there.
    """
    if n_samples < 1 or dimension < 1:
        raise ValueError("n_samples and dimension must be positive")
    if noise < 0.0:
        raise ValueError(f"noise must be nonnegative, got {noise}")
    rng = np.random.default_rng(seed)
    xs = rng.standard_normal((n_samples, dimension))
    kappa_star = rng.standard_normal(dimension)
    # targets use the same per-row dot as component evaluation, so with zero
    # noise the full objective vanishes at kappa_star exactly
    ys = np.array([float(xs[i] @ kappa_star) for i in range(n_samples)])
    if noise > 0.0:
        ys = ys + noise * rng.standard_normal(n_samples)

    def make_component(i: int) -> ScalarField:
        xi = xs[i].copy()
        xi.flags.writeable = False
        yi = float(ys[i])

        def value(k: Vector) -> float:
            r = float(xi @ k) - yi
            return 0.5 * r * r

        def gradient(k: Vector) -> Vector:
            return (float(xi @ k) - yi) * xi

        return ScalarField(dimension, value, gradient)

    components = tuple(make_component(i) for i in range(n_samples))
    meta = {
        "kind": "least_squares",
        "n_samples": n_samples,
        "dimension": dimension,
        "noise": noise,
        "seed": seed,
        "true_kappa": [float(v) for v in kappa_star],
    }
    return MiniBatchProblem(components=components, meta=meta)


def problem_to_json(problem: MiniBatchProblem) -> dict:
    """JSON description (kind, sizes, seed) sufficient to rebuild the problem."""
    meta = dict(problem.meta)
    meta.pop("true_kappa", None)
    return meta


def problem_from_json(desc: dict) -> MiniBatchProblem:
    kind = desc.get("kind")
    if kind != "least_squares":
        raise KeyError(f"unknown problem kind {kind!r}")
    return make_least_squares_problem(
        n_samples=int(desc["n_samples"]),
        dimension=int(desc["dimension"]),
        noise=float(desc.get("noise", 0.0)),
        seed=int(desc["seed"]),
    )


class RescaleMode(str, Enum):
    LINEAR = "Linear"
    SQRT = "Sqrt"
    NONE = "None"


def _rescale_factor(mode: RescaleMode, rho: float) -> float:
    if mode is RescaleMode.LINEAR:
        return rho
    if mode is RescaleMode.SQRT:
        return math.sqrt(rho)
    return 1.0


@dataclass(frozen=True)
class LRFinderReport:
    """Per-batch Armijo step sizes, their mean, and the batch-size rescaling.

    rho = batch_size / n_components; Sqrt mode rescales the mean by sqrt(rho)
    (noise-matching), Linear by rho, None not at all.
    """

    per_batch_sigmas: tuple[float, ...]
    mean_sigma: float
    rho: float
    rescaled_sigma: float
    mode: RescaleMode
    excluded_batches: tuple[int, ...] = ()


def lr_finder(
    problem: MiniBatchProblem,
    sampler: BatchSampler,
    cfg: LineSearchConfig,
    n_batches: int = 20,
    at: Sequence[float] | Vector | None = None,
    mode: RescaleMode = RescaleMode.SQRT,
) -> LRFinderReport:
    """Estimate a learning rate by averaging per-batch Armijo step sizes.

    Runs the step-size probe on each of the first ``n_batches`` batch
    objectives at the anchor point ``at`` (default: the origin). The probe
    treats delta0 as a starting guess and may grow above it, so the reported
    mean is stable across wildly different starting rates. Batches whose
    probe stalls are excluded and listed in the report; if every batch
    stalls, ``LrFinderFailed`` is raised.
    """
    if n_batches < 1:
        raise ValueError(f"n_batches must be >= 1, got {n_batches}")
    anchor = (
        np.zeros(problem.dimension)
        if at is None
        else np.array(as_point(at, problem.dimension))
    )
    stream = sampler.batches()
    sigmas: list[float] = []
    excluded: list[int] = []
    for b in range(n_batches):
        batch = next(stream)
        objective = problem.batch_objective(batch)
        try:
            sigma, _ = probe_step_size(objective, anchor, cfg)
        except StalledLineSearch:
            excluded.append(b)
            continue
        sigmas.append(sigma)
    if not sigmas:
        raise LrFinderFailed(f"all {n_batches} probed batches stalled")
    mean = math.fsum(sigmas) / len(sigmas)
    rho = sampler.batch_size / problem.n_components
    return LRFinderReport(
        per_batch_sigmas=tuple(sigmas),
        mean_sigma=mean,
        rho=rho,
        rescaled_sigma=mean * _rescale_factor(mode, rho),
        mode=mode,
        excluded_batches=tuple(excluded),
    )


@dataclass
class StuckDetector:
    """Declares stagnation when the epoch-end loss fails to improve on the
    best seen for ``window`` consecutive epochs."""

    window: int = 5
    best_loss_seen: float = math.inf
    consecutive: int = 0

    def update(self, loss: float) -> bool:
        if loss < self.best_loss_seen:
            self.best_loss_seen = loss
            self.consecutive = 0
            return False
        self.consecutive += 1
        if self.consecutive >= self.window:
            self.consecutive = 0
            return True
        return False


def _counted_problem(problem: MiniBatchProblem) -> tuple[MiniBatchProblem, _EvalCounter]:
    counter = _EvalCounter()

    def wrap(c: ScalarField) -> ScalarField:
        raw = c.value

        def value(x: Vector) -> float:
            counter.n += 1
            return raw(x)

        return ScalarField(c.dimension, value, c.gradient)

    counted = MiniBatchProblem(
        components=tuple(wrap(c) for c in problem.components),
        meta=problem.meta,
    )
    return counted, counter


def _run_mbt(
    problem: MiniBatchProblem,
    sampler: BatchSampler,
    kappa0: Sequence[float] | Vector,
    cfg: LineSearchConfig,
    stop: StopRule,
    epochs: int,
    gamma: float,
    nesterov: bool,
    momentum: bool,
    refresh_each_epoch: bool,
    n_finder_batches: int,
) -> Trajectory:
    if epochs < 1:
        raise ValueError(f"epochs must be >= 1, got {epochs}")
    problem, counter = _counted_problem(problem)
    kappa = np.array(as_point(kappa0, problem.dimension))
    full = problem.full_objective
    records: list[IterateRecord] = []
    aux: dict = {"lr_history": [], "stuck_epochs": []}
    detector = StuckDetector()
    alpha_now = cfg.alpha
    gamma_now = gamma if momentum else 0.0
    v = np.zeros(problem.dimension)

    def find_lr(at: Vector) -> float:
        finder_cfg = LineSearchConfig(alpha_now, cfg.beta, cfg.delta0, cfg.max_halvings)
        report = lr_finder(problem, sampler, finder_cfg, n_finder_batches, at, RescaleMode.SQRT)
        return report.rescaled_sigma

    lr = find_lr(kappa)
    aux["lr_history"].append((0, lr))

    def snapshot(epoch: int, rate: float) -> tuple[float, float]:
        loss = full.eval(kappa)
        gn = float(np.linalg.norm(full.grad(kappa)))
        records.append(IterateRecord(
            index=epoch, point=_frozen(kappa), value=loss, grad_norm=gn,
            step_size=rate, backtrack_count=0, func_evals=counter.n,
        ))
        return loss, gn

    snapshot(0, lr)
    stream = sampler.batches()
    termination = Termination.MAX_ITERS
    for epoch in range(1, epochs + 1):
        if refresh_each_epoch and epoch > 1:
            lr = find_lr(kappa)
            aux["lr_history"].append((epoch - 1, lr))
        for _ in range(sampler.batches_per_epoch):
            batch_field = problem.batch_objective(next(stream))
            try:
                if nesterov and gamma_now != 0.0:
                    g = batch_field.grad(kappa - gamma_now * v)
                else:
                    g = batch_field.grad(kappa)
            except NonFiniteEvaluation:
                aux["nonfinite"] = True
                return Trajectory(records, Termination.DIVERGED, aux)
            v = gamma_now * v + lr * g
            kappa = kappa - v
            if not np.all(np.isfinite(kappa)):
                aux["nonfinite"] = True
                return Trajectory(records, Termination.DIVERGED, aux)
        loss, gn = snapshot(epoch, lr)
        if float(np.linalg.norm(kappa)) > stop.divergence_radius:
            termination = Termination.DIVERGED
            break
        if lr * gn < stop.eps:
            termination = Termination.CONVERGED
            break
        if detector.update(loss):
            aux["stuck_epochs"].append(epoch)
            alpha_now = 0.5
            if momentum:
                gamma_now = 0.0  # momentum off for the rest of the run
            lr = find_lr(kappa)
            aux["lr_history"].append((epoch, lr))
    return Trajectory(records, termination, aux)


def run_mbt_gd(
    problem: MiniBatchProblem,
    sampler: BatchSampler,
    kappa0: Sequence[float] | Vector,
    cfg: LineSearchConfig,
    stop: StopRule,
    epochs: int,
    refresh_each_epoch: bool = False,
    n_finder_batches: int = 20,
) -> Trajectory:
    """Mini-batch GD at the rescaled rate found by the learning-rate finder.

    The rate is found once at the start (per epoch when
    ``refresh_each_epoch``); whenever the stuck detector fires, the finder
    reruns at the current point with alpha = 0.5 and that alpha sticks for
    later refinds. Records are epoch-end snapshots of the full objective;
    the recommended finder alpha is 1e-4.
    """
    return _run_mbt(problem, sampler, kappa0, cfg, stop, epochs,
                    gamma=0.0, nesterov=False, momentum=False,
                    refresh_each_epoch=refresh_each_epoch,
                    n_finder_batches=n_finder_batches)


def run_mbt_mmt(
    problem: MiniBatchProblem,
    sampler: BatchSampler,
    kappa0: Sequence[float] | Vector,
    cfg: LineSearchConfig,
    stop: StopRule,
    epochs: int,
    gamma: float = 0.9,
    n_finder_batches: int = 20,
) -> Trajectory:
    """Mini-batch momentum: per-batch MMT steps at a rate refreshed by the
    finder at the start of every epoch; a stuck trigger switches the finder
    alpha to 0.5 and turns momentum off for the rest of the run."""
    return _run_mbt(problem, sampler, kappa0, cfg, stop, epochs,
                    gamma=gamma, nesterov=False, momentum=True,
                    refresh_each_epoch=True, n_finder_batches=n_finder_batches)


def run_mbt_nag(
    problem: MiniBatchProblem,
    sampler: BatchSampler,
    kappa0: Sequence[float] | Vector,
    cfg: LineSearchConfig,
    stop: StopRule,
    epochs: int,
    gamma: float = 0.9,
    n_finder_batches: int = 20,
) -> Trajectory:
    """Mini-batch Nesterov variant of ``run_mbt_mmt``."""
    return _run_mbt(problem, sampler, kappa0, cfg, stop, epochs,
                    gamma=gamma, nesterov=True, momentum=True,
                    refresh_each_epoch=True, n_finder_batches=n_finder_batches)


def run_objective_sequence(
    fields: Sequence[ScalarField],
    z0: Sequence[float] | Vector,
    cfg: LineSearchConfig,
    stop: StopRule,
) -> Trajectory:
    """Backtracking steps against a drifting objective: step n uses the n-th
    field in the list (last one repeated once exhausted)."""
    if not fields:
        raise ValueError("need at least one objective")
    dims = {f.dimension for f in fields}
    if len(dims) != 1:
        raise ValueError(f"objectives disagree on dimension: {sorted(dims)}")
    counter = _EvalCounter()
    counted = []
    for f in fields:
        # one shared evaluation counter across the whole sequence
        def value(x: Vector, _raw=f.value) -> float:
            counter.n += 1
            return _raw(x)

        counted.append(ScalarField(f.dimension, value, f.gradient))
    z = np.array(as_point(z0, fields[0].dimension))
    records: list[IterateRecord] = []
    aux: dict = {}
    termination = Termination.MAX_ITERS
    for n in range(stop.max_iters + 1):
        fn = counted[min(n, len(counted) - 1)]
        if not np.all(np.isfinite(z)):
            aux["nonfinite"] = True
            return Trajectory(records, Termination.DIVERGED, aux)
        try:
            fz = fn.eval(z)
            g = fn.grad(z)
        except NonFiniteEvaluation:
            aux["nonfinite"] = True
            return Trajectory(records, Termination.DIVERGED, aux)
        gn = float(np.linalg.norm(g))
        if float(np.linalg.norm(z)) > stop.divergence_radius:
            records.append(IterateRecord(n, _frozen(z), fz, gn, 0.0, 0, counter.n))
            return Trajectory(records, Termination.DIVERGED, aux)
        try:
            s = _backtrack_search(fn, z, fz, g, g, cfg)
        except StalledLineSearch:
            records.append(IterateRecord(n, _frozen(z), fz, gn, 0.0, cfg.max_halvings + 1, counter.n))
            return Trajectory(records, Termination.STALLED, aux)
        records.append(IterateRecord(n, _frozen(z), fz, gn, s.sigma, s.trials, counter.n))
        if float(np.linalg.norm(s.w)) < stop.eps:
            termination = Termination.CONVERGED
            break
        if n == stop.max_iters:
            termination = Termination.MAX_ITERS
            break
        z = s.y
    return Trajectory(records, termination, aux)
