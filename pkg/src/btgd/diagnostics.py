"""Verification instruments: critical-point classification, projective
distance, step-size stabilization detection, saddle-escape Monte Carlo, and
run summaries."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .core import (
    LineSearchConfig,
    NotASaddle,
    ScalarField,
    StopRule,
    Trajectory,
    Vector,
    as_point,
    fd_hessian,
)
from .optimizers import run_backtracking_gd

__all__ = [
    "CriticalPointKind",
    "CriticalPointClass",
    "StabilizationReport",
    "ConvergenceReport",
    "jacobi_eigenvalues",
    "classify_critical_point",
    "projective_dist",
    "detect_stabilization",
    "saddle_escape_outcomes",
    "saddle_basin_fraction",
    "convergence_report",
]


class CriticalPointKind(str, Enum):
    MINIMUM = "Minimum"
    GENERALIZED_SADDLE = "GeneralizedSaddle"
    DEGENERATE = "Degenerate"
    NOT_CRITICAL = "NotCritical"


@dataclass(frozen=True)
class CriticalPointClass:
    """Classification of a point by gradient norm and Hessian eigenvalues.

    A generalized saddle has at least one eigenvalue below -tol (local maxima
    included); a minimum has all eigenvalues above tol; degenerate means some
    eigenvalue sits inside [-tol, tol] and none below.
    """

    kind: CriticalPointKind
    eigenvalues: tuple[float, ...]
    grad_norm: float


def jacobi_eigenvalues(matrix: Vector, off_tol: float = 1e-10, max_sweeps: int = 100) -> Vector:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps run until the off-diagonal Frobenius norm drops below ``off_tol``.
    Suited to the small dense Hessians produced here; returns eigenvalues in
    ascending order.
    """
    a = np.array(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.allclose(a, a.T, rtol=0.0, atol=1e-12 * max(1.0, float(np.abs(a).max(initial=0.0)))):
        raise ValueError("matrix must be symmetric")
    a = 0.5 * (a + a.T)
    m = a.shape[0]
    if m == 1:
        return a[0, :1].copy()
    for _ in range(max_sweeps):
        off = math.sqrt(max(0.0, float(np.sum(a * a) - np.sum(np.diag(a) ** 2))))
        if off < off_tol:
            break
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                h = a[q, q] - a[p, p]
                if abs(h) + 100.0 * abs(apq) == abs(h):
                    # off-diagonal negligible against the diagonal gap
                    t = apq / h
                else:
                    theta = h / (2.0 * apq)
                    t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                app, aqq = a[p, p], a[q, q]
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = a[q, p] = 0.0
                for k in range(m):
                    if k == p or k == q:
                        continue
                    akp, akq = a[k, p], a[k, q]
                    a[k, p] = a[p, k] = c * akp - s * akq
                    a[k, q] = a[q, k] = s * akp + c * akq
    return np.sort(np.diag(a))


def classify_critical_point(
    f: ScalarField,
    x: Sequence[float] | Vector,
    grad_tol: float = 1e-6,
    eig_tol: float = 1e-6,
) -> CriticalPointClass:
    """Classify x as minimum / generalized saddle / degenerate / non-critical.

    The eigenvalue tolerance is ``eig_tol`` scaled by the largest absolute
    eigenvalue of the finite-difference Hessian.
    """
    if not (grad_tol > 0.0 and eig_tol > 0.0):
        raise ValueError("tolerances must be positive")
    x = np.asarray(x, dtype=np.float64)
    gn = float(np.linalg.norm(f.grad(x)))
    if gn > grad_tol:
        return CriticalPointClass(CriticalPointKind.NOT_CRITICAL, (), gn)
    h = max(1e-4, 1e-4 * float(np.linalg.norm(x)))
    eigs = jacobi_eigenvalues(fd_hessian(f, x, h))
    tol = eig_tol * float(np.max(np.abs(eigs))) if eigs.size else 0.0
    values = tuple(float(v) for v in eigs)
    if any(v < -tol for v in values):
        kind = CriticalPointKind.GENERALIZED_SADDLE
    elif all(v > tol for v in values):
        kind = CriticalPointKind.MINIMUM
    else:
        kind = CriticalPointKind.DEGENERATE
    return CriticalPointClass(kind, values, gn)


def projective_dist(x: Sequence[float] | Vector, y: Sequence[float] | Vector) -> float:
    """arccos(|1 + <x,y>| / (sqrt(1+||x||^2) sqrt(1+||y||^2))), in [0, pi/2].

    The metric of the projective compactification of R^m restricted to the
    affine chart. Evaluated as atan2 of the wedge norm of the lifted vectors
    (1, x) and (1, y) against |1 + <x,y>|: the same angle, but exact at x = y
    where the direct arccos form loses ~1e-8 to cancellation.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError("points must share a dimension")
    cos_part = abs(1.0 + float(x @ y))
    diff = y - x
    cross = np.outer(x, y) - np.outer(y, x)
    wedge_sq = float(diff @ diff) + 0.5 * float(np.sum(cross * cross))
    return math.atan2(math.sqrt(max(0.0, wedge_sq)), cos_part)


@dataclass(frozen=True)
class StabilizationReport:
    """Whether the recorded step sizes settled onto a single grid value.

    ``stabilized`` is true when the final max(50, 10% of run length) observed
    step sizes are all identical. Runs shorter than that window set
    ``short_run`` and report ``stabilized = False``: too little evidence.
    """

    distinct_sigmas: tuple[float, ...]
    tail_constant_length: int
    stabilized: bool
    short_run: bool
    window: int


def detect_stabilization(traj: Trajectory) -> StabilizationReport:
    """Inspect an Armijo-based trajectory for a constant step-size tail.

    Records with zero step size (diverged or stalled exits) are ignored.
    """
    sigmas = [r.step_size for r in traj.records if r.step_size > 0.0]
    if len(sigmas) < 2:
        return StabilizationReport(tuple(sorted(set(sigmas))), len(sigmas), False, True, 50)
    window = max(50, math.ceil(0.10 * len(sigmas)))
    tail = 1
    for a, b in zip(reversed(sigmas[:-1]), reversed(sigmas[1:])):
        if a != b:
            break
        tail += 1
    short_run = len(sigmas) < window
    stabilized = (not short_run) and tail >= window
    return StabilizationReport(
        distinct_sigmas=tuple(sorted(set(sigmas))),
        tail_constant_length=tail,
        stabilized=stabilized,
        short_run=short_run,
        window=window,
    )


def _uniform_in_ball(rng: np.random.Generator, center: Vector, radius: float) -> Vector:
    m = center.size
    while True:
        direction = rng.standard_normal(m)
        norm = float(np.linalg.norm(direction))
        if norm > 0.0:
            break
    r = radius * rng.uniform() ** (1.0 / m)
    return center + direction * (r / norm)


def saddle_escape_outcomes(
    f: ScalarField,
    saddle: Sequence[float] | Vector,
    eps: float,
    n_samples: int,
    cfg: LineSearchConfig,
    stop: StopRule,
    seed: int,
    exclusion_radius: float | None = None,
) -> list[tuple[Vector, bool]]:
    """Per-sample (start, escaped) pairs behind ``saddle_basin_fraction``.

    Samples ``n_samples`` points uniformly in B(saddle, eps), runs
    backtracking GD from each, and marks a run as escaping when no iterate
    after a 10-step burn-in comes within ``exclusion_radius`` (default
    eps/100) of the saddle. Sample i uses seed + i, so outcomes are
    independent of evaluation order.
    """
    saddle = as_point(saddle, f.dimension)
    cls = classify_critical_point(f, saddle)
    if cls.kind is not CriticalPointKind.GENERALIZED_SADDLE:
        raise NotASaddle(f"classification at the given point is {cls.kind.value}")
    if not (eps > 0.0 and n_samples >= 1):
        raise ValueError("eps must be positive and n_samples >= 1")
    excl = eps / 100.0 if exclusion_radius is None else exclusion_radius
    burn_in = 10
    outcomes: list[tuple[Vector, bool]] = []
    for i in range(n_samples):
        rng = np.random.default_rng(seed + i)
        z0 = _uniform_in_ball(rng, saddle, eps)
        traj = run_backtracking_gd(f, z0, cfg, stop)
        escaped = all(
            float(np.linalg.norm(r.point - saddle)) > excl
            for r in traj.records
            if r.index > burn_in
        )
        z0.flags.writeable = False
        outcomes.append((z0, escaped))
    return outcomes


def saddle_basin_fraction(
    f: ScalarField,
    saddle: Sequence[float] | Vector,
    eps: float,
    n_samples: int,
    cfg: LineSearchConfig,
    stop: StopRule,
    seed: int,
    exclusion_radius: float | None = None,
) -> float:
    """Fraction of nearby starts whose backtracking run escapes the saddle."""
    outcomes = saddle_escape_outcomes(
        f, saddle, eps, n_samples, cfg, stop, seed, exclusion_radius
    )
    return sum(escaped for _, escaped in outcomes) / n_samples


@dataclass(frozen=True)
class ConvergenceReport:
    """Endpoint summary: last step length, final gradient norm, limit estimate
    and its critical-point classification."""

    last_step_norm: float
    final_grad_norm: float
    final_point: Vector
    final_value: float
    classification: CriticalPointClass
    termination: str


def convergence_report(traj: Trajectory, f: ScalarField) -> ConvergenceReport:
    if not traj.records:
        raise ValueError("trajectory has no records")
    last = traj.records[-1]
    if len(traj.records) >= 2:
        step = float(np.linalg.norm(last.point - traj.records[-2].point))
    else:
        step = 0.0
    return ConvergenceReport(
        last_step_norm=step,
        final_grad_norm=last.grad_norm,
        final_point=last.point,
        final_value=last.value,
        classification=classify_critical_point(f, last.point),
        termination=traj.termination.value,
    )
