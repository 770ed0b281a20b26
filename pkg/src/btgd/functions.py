"""Adversarial and baseline test objectives with analytic gradients where
tractable.

The corpus collects the small functions on which fixed-rate gradient descent
misbehaves while Armijo backtracking does not: an oscillation trap built from
|x|, a Hoelder-gradient power of |x|, the cubic whose step-size map is
discontinuous, a flat-brimmed "Mexican hat" with a ring of critical behaviour
at the unit circle, plus quadratic forms and the Rosenbrock valley as
standard references.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import ScalarField, Vector, as_point
from .diagnostics import CriticalPointKind, jacobi_eigenvalues

__all__ = [
    "NamedObjective",
    "mexican_hat",
    "holder",
    "smoothed_abs",
    "cubic",
    "quadratic_form",
    "rosenbrock",
    "l2_regularize",
    "linear_perturb",
    "make_objective",
    "CORPUS",
]


@dataclass(frozen=True)
class NamedObjective:
    """An objective plus its known critical points, for corpus-wide checks."""

    name: str
    field: ScalarField
    known_critical_points: Optional[tuple[tuple[Vector, CriticalPointKind], ...]] = None
    citation: str = ""


def mexican_hat() -> NamedObjective:
    """Flat-brimmed sombrero on the plane, zero outside the unit disk.

    Inside the disk, in polar coordinates,
    f = [1 - 4 r^4 / (4 r^4 + (1-r^2)^4) * sin(theta - 1/(1-r^2))] * exp(-1/(1-r^2));
    the continuous gradient-descent flow started on the spiral
    theta (1 - r^2) = 1 circles the rim forever, while discrete descent
    escapes the spiral and converges. Evaluation expands
    sin(theta - phi) through atan2 components, so the value is single-valued
    across the branch cut; the gradient is finite-difference.
    """

    def value(p: Vector) -> float:
        x, y = float(p[0]), float(p[1])
        r2 = x * x + y * y
        if r2 >= 1.0:
            return 0.0
        s = 1.0 - r2
        inv = 1.0 / s
        envelope = math.exp(-inv)
        q = 4.0 * r2 * r2
        if r2 == 0.0:
            return envelope
        r = math.sqrt(r2)
        # A(r) sin(theta - phi) with sin/cos of theta read off from (x, y)
        wave = (q / (q + s ** 4)) * ((y * math.cos(inv) - x * math.sin(inv)) / r)
        return (1.0 - wave) * envelope

    field = ScalarField(dimension=2, value=value, gradient=None)
    origin = as_point([0.0, 0.0])
    return NamedObjective(
        name="mexican_hat",
        field=field,
        known_critical_points=((origin, CriticalPointKind.GENERALIZED_SADDLE),),
        citation="Absil, Mahony & Andrews (2005), non-converging gradient flow example",
    )


def holder(gamma: float = 0.5) -> NamedObjective:
    """f(x) = |x|^(1+gamma): C^1 with a gamma-Hoelder (not Lipschitz) derivative.

    The unique critical point 0 is the global minimum; fixed-rate descent
    orbits it at a positive amplitude while backtracking converges with step
    sizes shrinking to zero.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must be in (0,1), got {gamma}")
    p = 1.0 + gamma

    def value(x: Vector) -> float:
        return abs(float(x[0])) ** p

    def gradient(x: Vector) -> Vector:
        t = float(x[0])
        if t == 0.0:
            return np.zeros(1)
        return np.array([p * math.copysign(abs(t) ** gamma, t)])

    field = ScalarField(dimension=1, value=value, gradient=gradient)
    return NamedObjective(
        name=f"holder({gamma})",
        field=field,
        known_critical_points=((as_point([0.0]), CriticalPointKind.MINIMUM),),
        citation="classical Hoelder-gradient counterexample to fixed-step convergence",
    )


def smoothed_abs(eps0: float) -> NamedObjective:
    """|x| outside [-eps0, eps0], joined by the C^1 quadratic cap
    x^2/(2 eps0) + eps0/2 inside; single critical point 0 (global minimum).

    With step delta0 > 2 eps0 and eps0 < z0 < delta0 - eps0, fixed-rate
    descent cycles between z0 and z0 - delta0 forever.
    """
    if not eps0 > 0.0:
        raise ValueError(f"eps0 must be positive, got {eps0}")

    def value(x: Vector) -> float:
        t = float(x[0])
        if abs(t) >= eps0:
            return abs(t)
        return t * t / (2.0 * eps0) + eps0 / 2.0

    def gradient(x: Vector) -> Vector:
        t = float(x[0])
        if abs(t) >= eps0:
            return np.array([math.copysign(1.0, t)])
        return np.array([t / eps0])

    field = ScalarField(dimension=1, value=value, gradient=gradient)
    return NamedObjective(
        name=f"smoothed_abs({eps0})",
        field=field,
        known_critical_points=((as_point([0.0]), CriticalPointKind.MINIMUM),),
        citation="oscillation trap: |x| with a smoothed vertex",
    )


def cubic() -> NamedObjective:
    """f(x) = x^3: degenerate critical point at 0, unbounded below.

    The Armijo step-size map of this function is discontinuous near x = 1
    when delta0 is the larger root of 6 t^2 - 6 t + 1.
    """

    def value(x: Vector) -> float:
        t = float(x[0])
        return t * t * t

    def gradient(x: Vector) -> Vector:
        t = float(x[0])
        return np.array([3.0 * t * t])

    field = ScalarField(dimension=1, value=value, gradient=gradient)
    return NamedObjective(
        name="cubic",
        field=field,
        known_critical_points=((as_point([0.0]), CriticalPointKind.DEGENERATE),),
        citation="step-size discontinuity witness",
    )


def quadratic_form(q: Sequence[Sequence[float]] | Vector) -> NamedObjective:
    """f(z) = 1/2 z^T Q z for symmetric Q; gradient Q z, Hessian Q."""
    qm = np.array(q, dtype=np.float64)
    if qm.ndim != 2 or qm.shape[0] != qm.shape[1]:
        raise ValueError(f"Q must be square, got shape {qm.shape}")
    if not np.allclose(qm, qm.T, rtol=0.0, atol=1e-12 * max(1.0, float(np.abs(qm).max(initial=0.0)))):
        raise ValueError("Q must be symmetric")
    qm = 0.5 * (qm + qm.T)
    qm.flags.writeable = False
    m = qm.shape[0]

    def value(z: Vector) -> float:
        return 0.5 * float(z @ (qm @ z))

    def gradient(z: Vector) -> Vector:
        return qm @ z

    eigs = jacobi_eigenvalues(qm)
    tol = 1e-12 * max(1.0, float(np.max(np.abs(eigs))))
    if np.any(eigs < -tol):
        kind = CriticalPointKind.GENERALIZED_SADDLE
    elif np.all(eigs > tol):
        kind = CriticalPointKind.MINIMUM
    else:
        kind = CriticalPointKind.DEGENERATE
    field = ScalarField(dimension=m, value=value, gradient=gradient)
    return NamedObjective(
        name=f"quadratic_form({m}d)",
        field=field,
        known_critical_points=((as_point(np.zeros(m)), kind),),
        citation="canonical quadratic normal form",
    )


def rosenbrock() -> NamedObjective:
    """f(x, y) = (1-x)^2 + 100 (y - x^2)^2; global minimum at (1, 1)."""

    def value(p: Vector) -> float:
        x, y = float(p[0]), float(p[1])
        return (1.0 - x) ** 2 + 100.0 * (y - x * x) ** 2

    def gradient(p: Vector) -> Vector:
        x, y = float(p[0]), float(p[1])
        return np.array([
            -2.0 * (1.0 - x) - 400.0 * x * (y - x * x),
            200.0 * (y - x * x),
        ])

    field = ScalarField(dimension=2, value=value, gradient=gradient)
    return NamedObjective(
        name="rosenbrock",
        field=field,
        known_critical_points=((as_point([1.0, 1.0]), CriticalPointKind.MINIMUM),),
        citation="Rosenbrock (1960) banana valley",
    )


def l2_regularize(base: NamedObjective, lam: float) -> NamedObjective:
    """g(x) = f(x) + lam ||x||^2, the ridge-compensated objective."""
    if not lam > 0.0:
        raise ValueError(f"lambda must be positive, got {lam}")
    inner = base.field

    def value(x: Vector) -> float:
        return inner.value(x) + lam * float(x @ x)

    gradient = None
    if inner.gradient is not None:
        analytic = inner.gradient

        def gradient(x: Vector) -> Vector:  # noqa: F811
            return np.asarray(analytic(x), dtype=np.float64) + (2.0 * lam) * x

    field = ScalarField(dimension=inner.dimension, value=value, gradient=gradient)
    return NamedObjective(
        name=f"l2[{base.name}, {lam}]",
        field=field,
        citation=base.citation,
    )


def linear_perturb(base: NamedObjective, a: Sequence[float] | Vector) -> NamedObjective:
    """f(x) = g(x) + <a, x>; generic a makes the critical points nondegenerate."""
    av = as_point(a, base.field.dimension)
    inner = base.field

    def value(x: Vector) -> float:
        return inner.value(x) + float(av @ x)

    gradient = None
    if inner.gradient is not None:
        analytic = inner.gradient

        def gradient(x: Vector) -> Vector:  # noqa: F811
            return np.asarray(analytic(x), dtype=np.float64) + av

    field = ScalarField(dimension=inner.dimension, value=value, gradient=gradient)
    return NamedObjective(
        name=f"{base.name}+linear",
        field=field,
        citation=base.citation,
    )


# -- corpus registry for the CLI ----------------------------------------------

CORPUS: dict[str, str] = {
    "mexican_hat": "flat-brimmed sombrero, dimension 2 (finite-difference gradient)",
    "holder": "|x|^(1+gamma); param gamma in (0,1), default 0.5",
    "smoothed_abs": "|x| with a quadratic cap; param eps0 > 0, default 0.1",
    "cubic": "x^3",
    "quadratic_saddle": "1/2 (x^2 - y^2)",
    "quadratic_bowl": "1/2 (x^2 + k y^2); param k > 0, default 3",
    "rosenbrock": "(1-x)^2 + 100 (y-x^2)^2",
    "perturbed_cubic": "x^3 + a x; param a, default -3",
}


def make_objective(name: str, **params) -> NamedObjective:
    """Build a corpus objective by registry name; see ``CORPUS`` for options."""
    if name == "mexican_hat":
        return mexican_hat()
    if name == "holder":
        return holder(gamma=float(params.pop("gamma", 0.5)))
    if name == "smoothed_abs":
        return smoothed_abs(eps0=float(params.pop("eps0", 0.1)))
    if name == "cubic":
        return cubic()
    if name == "quadratic_saddle":
        return quadratic_form(np.diag([1.0, -1.0]))
    if name == "quadratic_bowl":
        k = float(params.pop("k", 3.0))
        return quadratic_form(np.diag([1.0, k]))
    if name == "quadratic_form":
        return quadratic_form(params.pop("q"))
    if name == "rosenbrock":
        return rosenbrock()
    if name == "perturbed_cubic":
        a = float(params.pop("a", -3.0))
        return linear_perturb(cubic(), [a])
    raise KeyError(f"unknown objective {name!r}; known: {sorted(CORPUS)}")
