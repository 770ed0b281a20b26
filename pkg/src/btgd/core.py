"""Shared domain types: objectives, finite differences, trajectories, Armijo test.

Points are 1-D ``float64`` numpy arrays. Every type here is immutable after
construction (recorded points are marked read-only), so instances can be
shared freely across threads; all operations are pure functions of their
inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.typing import NDArray

Vector = NDArray[np.float64]

__all__ = [
    "BtgdError",
    "NonFiniteEvaluation",
    "StalledLineSearch",
    "NonDescentDirection",
    "NotASaddle",
    "LrFinderFailed",
    "Vector",
    "as_point",
    "ScalarField",
    "LineSearchConfig",
    "StopRule",
    "Termination",
    "IterateRecord",
    "Trajectory",
    "default_fd_step",
    "fd_gradient",
    "fd_hessian",
    "armijo_holds",
]


class BtgdError(Exception):
    """Base class for all library errors."""


class NonFiniteEvaluation(BtgdError):
    """An objective or derivative evaluation produced NaN or infinity."""


class StalledLineSearch(BtgdError):
    """The step-size search shrank past its halving cap without success.

    Signals a numerically zero descent direction or a broken gradient.
    """


class NonDescentDirection(BtgdError):
    """A search direction had negative inner product with the gradient."""


class NotASaddle(BtgdError):
    """A point required to be a generalized saddle failed classification."""


class LrFinderFailed(BtgdError):
    """Every probed mini-batch stalled; no learning rate could be estimated."""


def as_point(coords: Sequence[float] | Vector, dimension: int | None = None) -> Vector:
    """Validate and freeze a point: finite float64 coordinates, fixed dimension."""
    x = np.array(coords, dtype=np.float64)
    if x.ndim != 1 or x.size < 1:
        raise ValueError(f"a point must be a 1-D vector, got shape {x.shape}")
    if dimension is not None and x.size != dimension:
        raise ValueError(f"expected dimension {dimension}, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValueError("point coordinates must be finite")
    x.flags.writeable = False
    return x


def default_fd_step(x: Vector, scale: float = 1e-6) -> float:
    """Finite-difference step balancing truncation and rounding across scales."""
    return max(scale, scale * float(np.linalg.norm(x)))


@dataclass(frozen=True)
class ScalarField:
    """A real-valued objective on R^m with an optional analytic gradient.

    ``value`` must be deterministic. When ``gradient`` is absent, central
    finite differences are used.
    """

    dimension: int
    value: Callable[[Vector], float]
    gradient: Optional[Callable[[Vector], Vector]] = None

    def eval(self, x: Vector) -> float:
        v = float(self.value(x))
        if not math.isfinite(v):
            raise NonFiniteEvaluation(f"objective returned {v!r}")
        return v

    def grad(self, x: Vector) -> Vector:
        if self.gradient is not None:
            g = np.asarray(self.gradient(x), dtype=np.float64)
            if not np.all(np.isfinite(g)):
                raise NonFiniteEvaluation("gradient returned non-finite components")
            return g
        return fd_gradient(self, x, default_fd_step(x))


@dataclass(frozen=True)
class LineSearchConfig:
    """Armijo line-search hyper-parameters: alpha, beta in (0,1), delta0 > 0.

    ``max_halvings`` caps the number of shrink steps; with beta = 0.5 the
    default cap reaches ~1e-30 * delta0, far below any meaningful step at
    double precision.
    """

    alpha: float = 0.5
    beta: float = 0.5
    delta0: float = 1.0
    max_halvings: int = 100

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0,1), got {self.alpha}")
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must be in (0,1), got {self.beta}")
        if not self.delta0 > 0.0:
            raise ValueError(f"delta0 must be positive, got {self.delta0}")
        if self.max_halvings < 1:
            raise ValueError(f"max_halvings must be >= 1, got {self.max_halvings}")


@dataclass(frozen=True)
class StopRule:
    """Termination thresholds for an optimizer run.

    ``eps`` bounds the committed step length (for gradient methods this is
    delta_n * ||grad f(z_n)||), ``max_iters`` caps the number of steps and
    ``divergence_radius`` declares divergence once ||z_n|| exceeds it.
    """

    eps: float = 1e-8
    max_iters: int = 10_000
    divergence_radius: float = 1e12

    def __post_init__(self) -> None:
        if not self.eps > 0.0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if not self.divergence_radius > 0.0:
            raise ValueError(f"divergence_radius must be positive, got {self.divergence_radius}")


class Termination(str, Enum):
    CONVERGED = "Converged"
    MAX_ITERS = "MaxIters"
    DIVERGED = "Diverged"
    STALLED = "Stalled"


@dataclass(frozen=True)
class IterateRecord:
    """One trajectory row.

    ``step_size`` is the step length coefficient actually used to leave this
    point (the final record keeps the value its line search found even though
    no step was taken; 0.0 on diverged or stalled exits). ``func_evals`` is
    the cumulative number of objective-value evaluations, including those
    spent inside finite-difference gradients.
    """

    index: int
    point: Vector
    value: float
    grad_norm: float
    step_size: float
    backtrack_count: int
    func_evals: int


@dataclass
class Trajectory:
    """Ordered iterate records plus the reason the run stopped.

    ``aux`` carries optional per-run diagnostics (recorded direction pairs,
    Armijo-violation indices, effective momentum coefficients, ...).
    """

    records: list[IterateRecord]
    termination: Termination
    aux: dict = field(default_factory=dict)

    @property
    def final(self) -> IterateRecord:
        return self.records[-1]

    def points(self) -> list[Vector]:
        return [r.point for r in self.records]

    def values(self) -> list[float]:
        return [r.value for r in self.records]

    def step_sizes(self) -> list[float]:
        return [r.step_size for r in self.records]


def fd_gradient(f: ScalarField, x: Vector, h: float) -> Vector:
    """Central-difference gradient: component i is (f(x+h e_i) - f(x-h e_i)) / 2h."""
    if not h > 0.0:
        raise ValueError(f"h must be positive, got {h}")
    x = np.asarray(x, dtype=np.float64)
    g = np.empty(x.size, dtype=np.float64)
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (f.eval(xp) - f.eval(xm)) / (2.0 * h)
    if not np.all(np.isfinite(g)):
        raise NonFiniteEvaluation("finite-difference gradient is non-finite")
    return g


def fd_hessian(f: ScalarField, x: Vector, h: float) -> Vector:
    """Second central differences, symmetrized as (H + H^T) / 2."""
    if not h > 0.0:
        raise ValueError(f"h must be positive, got {h}")
    x = np.asarray(x, dtype=np.float64)
    m = x.size
    hess = np.empty((m, m), dtype=np.float64)
    f0 = f.eval(x)
    for i in range(m):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        hess[i, i] = (f.eval(xp) - 2.0 * f0 + f.eval(xm)) / (h * h)
        for j in range(i + 1, m):
            xpp = x.copy()
            xpm = x.copy()
            xmp = x.copy()
            xmm = x.copy()
            xpp[i] += h
            xpp[j] += h
            xpm[i] += h
            xpm[j] -= h
            xmp[i] -= h
            xmp[j] += h
            xmm[i] -= h
            xmm[j] -= h
            hess[i, j] = (f.eval(xpp) - f.eval(xpm) - f.eval(xmp) + f.eval(xmm)) / (4.0 * h * h)
            hess[j, i] = hess[i, j]
    if not np.all(np.isfinite(hess)):
        raise NonFiniteEvaluation("finite-difference Hessian is non-finite")
    return 0.5 * (hess + hess.T)


def armijo_displacement_holds(
    f: ScalarField, x: Vector, fx: float, g: Vector, w: Vector, alpha: float
) -> tuple[bool, Vector, float]:
    """Sufficient-decrease test for a committed displacement w.

    Checks f(x - w) - f(x) <= -alpha * <g, w> and returns the candidate point
    and its value so callers can commit an accepted trial without re-evaluating.
    Optimizer step searches all funnel through this one displacement form,
    which keeps momentum searches bit-identical to plain backtracking when
    the momentum coefficient is exactly zero.
    """
    y = x - w
    fy = f.eval(y)
    ok = (fy - fx) <= -alpha * float(g @ w)
    return ok, y, fy


def armijo_holds(f: ScalarField, x: Vector, v: Vector, sigma: float, alpha: float) -> bool:
    """Whether f(x - sigma v) - f(x) <= -alpha sigma <grad f(x), v>."""
    if not sigma > 0.0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    x = np.asarray(x, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if v.shape != x.shape:
        raise ValueError("direction and point dimensions differ")
    ok, _, _ = armijo_displacement_holds(f, x, f.eval(x), f.grad(x), sigma * v, alpha)
    return ok
