"""Generalized quadratic functions, curvature classes, and linear maps.

The elementary carrier is ``q(x) = x.A x + u.x + c`` with ``A`` symmetric and
*unhalved* (no 1/2 in front of the quadratic form).  Function classes used for
conjugation are sets of such quadratics with the matrix part constrained to a
scalar multiple of the identity, ``A = alpha*I``, with the admissible range of
``alpha`` described by a :class:`CurvatureSpec`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .config import global_tol
from .errors import InvariantViolation

SYMMETRY_RTOL = 1e-12


def _as_matrix(A, dim: int) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.shape != (dim, dim):
        raise InvariantViolation(f"matrix shape {A.shape} != ({dim}, {dim})")
    if not np.all(np.isfinite(A)):
        raise InvariantViolation("matrix entries must be finite")
    dev = float(np.max(np.abs(A - A.T), initial=0.0))
    scale = max(1.0, float(np.max(np.abs(A), initial=0.0)))
    if dev > SYMMETRY_RTOL * scale:
        raise InvariantViolation(f"matrix is not symmetric (deviation {dev:.3e})")
    return 0.5 * (A + A.T)


def _as_vector(u, dim: int) -> np.ndarray:
    u = np.asarray(u, dtype=float).reshape(-1)
    if u.shape != (dim,):
        raise InvariantViolation(f"vector shape {u.shape} != ({dim},)")
    if not np.all(np.isfinite(u)):
        raise InvariantViolation("vector entries must be finite")
    return u


@dataclass(frozen=True)
class GeneralizedQuadratic:
    """``q(x) = x.A x + u.x + c`` on R^dim, A symmetric (unhalved form)."""

    dim: int
    A: np.ndarray
    u: np.ndarray
    c: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "A", _as_matrix(self.A, self.dim))
        object.__setattr__(self, "u", _as_vector(self.u, self.dim))
        object.__setattr__(self, "c", float(self.c))
        if not np.isfinite(self.c):
            raise InvariantViolation("constant term must be finite")
        self.A.setflags(write=False)
        self.u.setflags(write=False)

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, dim: int) -> "GeneralizedQuadratic":
        return cls(dim, np.zeros((dim, dim)), np.zeros(dim), 0.0)

    @classmethod
    def affine(cls, u, c: float = 0.0) -> "GeneralizedQuadratic":
        u = np.asarray(u, dtype=float).reshape(-1)
        return cls(u.size, np.zeros((u.size, u.size)), u, c)

    @classmethod
    def iso(cls, dim: int, alpha: float, u=None, c: float = 0.0) -> "GeneralizedQuadratic":
        """Isotropic member ``alpha*||x||^2 + u.x + c``."""
        if u is None:
            u = np.zeros(dim)
        return cls(dim, float(alpha) * np.eye(dim), u, c)

    # -- evaluation --------------------------------------------------------

    def __call__(self, x) -> float | np.ndarray:
        """Evaluate at one point ``(dim,)`` or a batch ``(N, dim)``."""
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return float(x @ self.A @ x + self.u @ x + self.c)
        quad = np.einsum("ni,ij,nj->n", x, self.A, x)
        return quad + x @ self.u + self.c

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return 2.0 * (self.A @ x) + self.u

    # -- algebra -----------------------------------------------------------

    def __add__(self, other: "GeneralizedQuadratic") -> "GeneralizedQuadratic":
        return combine(1.0, self, 1.0, other)

    def __sub__(self, other: "GeneralizedQuadratic") -> "GeneralizedQuadratic":
        return combine(1.0, self, -1.0, other)

    def __neg__(self) -> "GeneralizedQuadratic":
        return GeneralizedQuadratic(self.dim, -self.A, -self.u, -self.c)

    def __rmul__(self, s: float) -> "GeneralizedQuadratic":
        s = float(s)
        return GeneralizedQuadratic(self.dim, s * self.A, s * self.u, s * self.c)

    def shifted(self, y) -> "GeneralizedQuadratic":
        """The quadratic ``x -> q(x + y)``."""
        y = _as_vector(y, self.dim)
        return GeneralizedQuadratic(
            self.dim,
            self.A,
            2.0 * (self.A @ y) + self.u,
            float(y @ self.A @ y + self.u @ y + self.c),
        )

    def is_zero(self, tol: float | None = None) -> bool:
        tol = global_tol() if tol is None else tol
        return (
            float(np.max(np.abs(self.A), initial=0.0)) <= tol
            and float(np.max(np.abs(self.u), initial=0.0)) <= tol
            and abs(self.c) <= tol
        )

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.A)[0])


def combine(
    s1: float,
    q1: GeneralizedQuadratic,
    s2: float,
    q2: GeneralizedQuadratic,
) -> GeneralizedQuadratic:
    """The quadratic ``s1*q1 + s2*q2`` (dims must match)."""
    if q1.dim != q2.dim:
        raise InvariantViolation(f"dimension mismatch: {q1.dim} vs {q2.dim}")
    return GeneralizedQuadratic(
        q1.dim,
        s1 * q1.A + s2 * q2.A,
        s1 * q1.u + s2 * q2.u,
        s1 * q1.c + s2 * q2.c,
    )


# ---------------------------------------------------------------------------
# Curvature classes


@dataclass(frozen=True)
class CurvatureSpec:
    """Admissible range of the isotropic curvature ``alpha`` of a class member.

    Kinds: ``zero`` (affine members only), ``nonneg`` / ``nonpos`` (half
    lines), ``fixed`` (exactly one value), ``any`` (unconstrained).
    """

    kind: str
    value: float | None = None

    _KINDS = ("zero", "nonneg", "nonpos", "fixed", "any")

    def __post_init__(self) -> None:
        if self.kind not in self._KINDS:
            raise InvariantViolation(f"unknown curvature kind {self.kind!r}")
        if self.kind == "fixed":
            if self.value is None or not np.isfinite(self.value):
                raise InvariantViolation("fixed curvature needs a finite value")
            object.__setattr__(self, "value", float(self.value))
        elif self.value is not None:
            raise InvariantViolation(f"kind {self.kind!r} takes no value")

    # -- constructors --

    @classmethod
    def zero(cls) -> "CurvatureSpec":
        return cls("zero")

    @classmethod
    def nonneg(cls) -> "CurvatureSpec":
        return cls("nonneg")

    @classmethod
    def nonpos(cls) -> "CurvatureSpec":
        return cls("nonpos")

    @classmethod
    def fixed(cls, value: float) -> "CurvatureSpec":
        return cls("fixed", float(value))

    @classmethod
    def any(cls) -> "CurvatureSpec":
        return cls("any")

    # -- text form used by instance files and the CLI --

    def label(self) -> str:
        if self.kind == "fixed":
            return f"fixed:{self.value:g}"
        return self.kind

    @classmethod
    def parse(cls, label: str) -> "CurvatureSpec":
        label = label.strip()
        if label.startswith("fixed:"):
            return cls.fixed(float(label.split(":", 1)[1]))
        if label in ("zero", "nonneg", "nonpos", "any"):
            return cls(label)
        raise InvariantViolation(f"unknown curvature label {label!r}")

    # -- admissibility --

    def nearest_admissible(self, alpha: float) -> float:
        if self.kind == "any":
            return alpha
        if self.kind == "zero":
            return 0.0
        if self.kind == "fixed":
            return float(self.value)
        if self.kind == "nonneg":
            return max(0.0, alpha)
        return min(0.0, alpha)  # nonpos

    def admits(self, alpha: float, tol: float | None = None) -> bool:
        tol = global_tol() if tol is None else tol
        return abs(alpha - self.nearest_admissible(alpha)) <= tol

    def largest_at_most(self, bound: float, tol: float | None = None) -> float | None:
        """Largest admissible curvature <= bound, or None if none exists."""
        tol = global_tol() if tol is None else tol
        if self.kind == "any":
            return bound
        if self.kind == "nonpos":
            return min(0.0, bound)
        if self.kind == "zero":
            return 0.0 if bound >= -tol else None
        if self.kind == "nonneg":
            return max(0.0, bound) if bound >= -tol else None
        return self.value if self.value <= bound + tol else None  # fixed

    def grid(self, lo: float = -10.0, hi: float = 10.0, points: int = 21) -> np.ndarray:
        """Admissible curvature values inside [lo, hi], for parameter sweeps."""
        if self.kind == "fixed":
            return np.array([self.value])
        if self.kind == "zero":
            return np.array([0.0])
        if self.kind == "nonneg":
            lo = max(lo, 0.0)
        elif self.kind == "nonpos":
            hi = min(hi, 0.0)
        if hi < lo:
            raise InvariantViolation("empty curvature grid")
        mesh = np.linspace(lo, hi, points)
        # keep 0 exactly on the mesh when it is admissible and inside range
        if lo <= 0.0 <= hi:
            mesh[np.argmin(np.abs(mesh))] = 0.0
        return np.unique(mesh)


@dataclass(frozen=True)
class Family:
    """A conjugation class: isotropic quadratics with constrained curvature."""

    dim: int
    curvature: CurvatureSpec
    includes_constants: bool = True

    def member(self, alpha: float, u=None, c: float = 0.0) -> GeneralizedQuadratic:
        if not self.curvature.admits(alpha):
            raise InvariantViolation(
                f"curvature {alpha} not admissible for {self.curvature.label()}"
            )
        if c != 0.0 and not self.includes_constants:
            raise InvariantViolation("class has no constant terms")
        return GeneralizedQuadratic.iso(self.dim, alpha, u, c)

    def contains(self, q: GeneralizedQuadratic, tol: float | None = None) -> bool:
        """Membership test on the matrix part (slopes are unconstrained).

        The exact zero function belongs to every class (it is the baseline
        element every class is assumed to carry), including fixed-curvature
        classes whose value is nonzero.
        """
        tol = global_tol() if tol is None else tol
        if q.dim != self.dim:
            return False
        if not self.includes_constants and abs(q.c) > tol:
            return False
        if q.is_zero(tol):
            return True
        diag = np.diagonal(q.A)
        alpha = self.curvature.nearest_admissible(
            0.5 * (float(np.max(diag)) + float(np.min(diag)))
        )
        off = q.A - alpha * np.eye(self.dim)
        return float(np.max(np.abs(off), initial=0.0)) <= tol


def family_contains(
    family: Family, q: GeneralizedQuadratic, tol: float | None = None
) -> bool:
    return family.contains(q, tol)


# ---------------------------------------------------------------------------
# Linear maps


@dataclass(frozen=True)
class LinearMap:
    """Dense linear map R^in_dim -> R^out_dim."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        M = np.asarray(self.matrix, dtype=float)
        if M.ndim != 2:
            raise InvariantViolation("linear map needs a 2-d matrix")
        if not np.all(np.isfinite(M)):
            raise InvariantViolation("linear map entries must be finite")
        object.__setattr__(self, "matrix", M)
        M.setflags(write=False)

    @classmethod
    def identity(cls, dim: int) -> "LinearMap":
        return cls(np.eye(dim))

    @property
    def in_dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def out_dim(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def operator_norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))

    def apply(self, x) -> np.ndarray:
        """Apply to one point ``(in_dim,)`` or a batch ``(N, in_dim)``."""
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return self.matrix @ x
        return x @ self.matrix.T

    def adjoint(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if y.ndim == 1:
            return self.matrix.T @ y
        return y @ self.matrix


def pullback(q: GeneralizedQuadratic, L: LinearMap) -> GeneralizedQuadratic:
    """The quadratic ``x -> q(Lx)``."""
    if q.dim != L.out_dim:
        raise InvariantViolation(f"dimension mismatch: {q.dim} vs {L.out_dim}")
    M = L.matrix
    return GeneralizedQuadratic(L.in_dim, M.T @ q.A @ M, M.T @ q.u, q.c)


def pullback_shifted(
    q: GeneralizedQuadratic, L: LinearMap, y
) -> GeneralizedQuadratic:
    """The quadratic ``x -> q(Lx + y)``."""
    return pullback(q.shifted(y), L)
