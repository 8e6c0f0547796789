"""Extended-real objectives over boxes, and weak-convexity moduli."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvariantViolation
from .quadratics import GeneralizedQuadratic, LinearMap

INF = float("inf")


@dataclass(frozen=True)
class Box:
    """Axis-aligned box; infinite bounds allowed (whole-space axes)."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        lo = np.asarray(self.lower, dtype=float).reshape(-1)
        hi = np.asarray(self.upper, dtype=float).reshape(-1)
        if lo.shape != hi.shape:
            raise InvariantViolation("box bound shapes differ")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise InvariantViolation("box bounds must not be NaN")
        if np.any(lo > hi):
            raise InvariantViolation("box has lower > upper on some axis")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        lo.setflags(write=False)
        hi.setflags(write=False)

    @classmethod
    def cube(cls, dim: int, lo: float = -10.0, hi: float = 10.0) -> "Box":
        return cls(np.full(dim, lo), np.full(dim, hi))

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper)))

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def contains_batch(self, X: np.ndarray, tol: float = 0.0) -> np.ndarray:
        return np.all(X >= self.lower - tol, axis=1) & np.all(X <= self.upper + tol, axis=1)

    def clip(self, x) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=float), self.lower, self.upper)

    def shrink_around(self, center, factor: float) -> "Box":
        """Box of `factor` times the current width centered near `center`,
        clipped so it never leaves the original box. Finite boxes only."""
        if not self.is_finite:
            raise InvariantViolation("cannot shrink an infinite box")
        center = self.clip(center)
        half = 0.5 * factor * (self.upper - self.lower)
        lo = np.maximum(self.lower, center - half)
        hi = np.minimum(self.upper, center + half)
        return Box(lo, hi)

    def mesh(self, points_per_axis: int) -> np.ndarray:
        """All grid points, shape (points_per_axis**dim, dim), C order."""
        if not self.is_finite:
            raise InvariantViolation("cannot mesh an infinite box")
        axes = [
            np.linspace(self.lower[i], self.upper[i], points_per_axis)
            for i in range(self.dim)
        ]
        grids = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if not self.is_finite:
            raise InvariantViolation("cannot sample an infinite box")
        return rng.uniform(self.lower, self.upper, size=(n, self.dim))


@dataclass(frozen=True)
class Objective:
    """Extended-real function on R^dim: quadratic or opaque callable, plus an
    optional domain box (+inf outside). Never takes the value -inf."""

    dim: int
    quad: GeneralizedQuadratic | None = None
    fn: Callable[[np.ndarray], float] | None = None
    domain_box: Box | None = None
    name: str = ""

    def __post_init__(self) -> None:
        if (self.quad is None) == (self.fn is None):
            raise InvariantViolation("objective needs exactly one of quad | fn")
        if self.quad is not None and self.quad.dim != self.dim:
            raise InvariantViolation("quadratic dimension mismatch")
        if self.domain_box is not None and self.domain_box.dim != self.dim:
            raise InvariantViolation("domain box dimension mismatch")

    # -- constructors --------------------------------------------------

    @classmethod
    def quadratic(
        cls,
        q: GeneralizedQuadratic,
        domain_box: Box | None = None,
        name: str = "",
    ) -> "Objective":
        return cls(q.dim, quad=q, domain_box=domain_box, name=name)

    @classmethod
    def from_callable(
        cls,
        dim: int,
        fn: Callable[[np.ndarray], float],
        domain_box: Box | None = None,
        name: str = "",
    ) -> "Objective":
        return cls(dim, fn=fn, domain_box=domain_box, name=name)

    # -- evaluation ------------------------------------------------------

    @property
    def is_quadratic(self) -> bool:
        return self.quad is not None

    def value(self, x) -> float:
        """Extended-real value at one point."""
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape != (self.dim,):
            raise InvariantViolation(f"point shape {x.shape} != ({self.dim},)")
        if self.domain_box is not None and not self.domain_box.contains(x):
            return INF
        v = float(self.quad(x)) if self.quad is not None else float(self.fn(x))
        if np.isnan(v) or v == -INF:
            raise InvariantViolation(f"objective produced {v} at {x}")
        return v

    def values(self, X: np.ndarray) -> np.ndarray:
        """Extended-real values on a batch (N, dim)."""
        X = np.asarray(X, dtype=float)
        if self.quad is not None:
            out = np.asarray(self.quad(X), dtype=float)
        else:
            out = np.fromiter((float(self.fn(row)) for row in X), float, count=len(X))
        if np.any(np.isnan(out)) or np.any(out == -INF):
            raise InvariantViolation("objective produced NaN or -inf on batch")
        if self.domain_box is not None:
            out = np.where(self.domain_box.contains_batch(X), out, INF)
        return out


@dataclass(frozen=True)
class WeakConvexityReport:
    """Smallest sigma >= 0 (found or certified) making f + sigma*||.||^2 convex."""

    modulus: float
    certified: bool
    method: str
    detail: str = ""


def weak_convexity_modulus(
    f: Objective, *, samples: int = 4000, seed: int = 0
) -> WeakConvexityReport:
    """Weak-convexity modulus of an objective.

    Quadratic: exact, ``max(0, -lambda_min(A))`` (certified).  Opaque
    callables: midpoint-violation estimate on random segments inside the
    domain box (not certified; a lower bound on the true modulus).
    """
    if f.is_quadratic:
        lam = f.quad.min_eigenvalue()
        return WeakConvexityReport(
            modulus=max(0.0, -lam),
            certified=True,
            method="eigenvalue",
            detail=f"lambda_min={lam:.12g}",
        )
    box = f.domain_box if f.domain_box is not None else Box.cube(f.dim)
    if not box.is_finite:
        box = Box.cube(f.dim)
    rng = np.random.default_rng(seed)
    X = box.sample(samples, rng)
    Y = box.sample(samples, rng)
    M = 0.5 * (X + Y)
    fx, fy, fm = f.values(X), f.values(Y), f.values(M)
    ok = np.isfinite(fx) & np.isfinite(fy) & np.isfinite(fm)
    # f is sigma-weakly convex iff f(m) <= (f(x)+f(y))/2 + sigma*||x-y||^2/4
    gap = fm[ok] - 0.5 * (fx[ok] + fy[ok])
    dist2 = np.sum((X[ok] - Y[ok]) ** 2, axis=1)
    pos = dist2 > 1e-16
    sigma = max(0.0, float(np.max(4.0 * gap[pos] / dist2[pos], initial=0.0)))
    return WeakConvexityReport(
        modulus=sigma,
        certified=False,
        method="midpoint-sampling",
        detail=f"samples={int(np.sum(ok))}",
    )


def shifted_modulus(f: Objective, b: float, L: LinearMap) -> float:
    """Modulus of ``f + (b*||.||^2 term) o L`` from the modulus ``a`` of f:
    ``a + b * ||L||^2`` (valid for b >= 0; certified inputs only)."""
    if b < 0:
        raise InvariantViolation("curvature shift b must be nonnegative")
    rep = weak_convexity_modulus(f)
    if not rep.certified:
        raise InvariantViolation("shifted modulus needs a certified base modulus")
    return rep.modulus + b * L.operator_norm**2
