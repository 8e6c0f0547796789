"""Composite problems ``inf f(x) + g(Lx)`` and their conjugate-type duals.

The dual pairs a class member ``psi`` with the perturbation ``y -> g(Lx+y)``;
its objective is ``inf_x [f(x) + psi(Lx)] - g*(psi)`` and the dual value is
the supremum over a finite search grid of class members.  Weak duality holds
structurally because the primal/dual sweeps share their evaluation grids.
"""

from __future__ import annotations

import dataclasses
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import global_tol, max_threads
from .conjugates import (
    FamilySearchGrid,
    GridSpec,
    conjugate_closed_form,
    conjugate_value,
    eps_subdiff_contains,
    family_conjugate_table,
    minimize_quadratic,
)
from .errors import InvariantViolation
from .objectives import INF, Objective
from .quadratics import (
    Family,
    GeneralizedQuadratic,
    LinearMap,
    combine,
    pullback,
    pullback_shifted,
)


def _ext_add(a: float, b: float) -> float:
    """Extended-real sum; +inf dominates -inf (sup-side convention)."""
    if a == INF or b == INF:
        return INF
    if a == -INF or b == -INF:
        return -INF
    return a + b


def _parallel_rows(fn, count: int) -> list:
    """Evaluate fn(i) for i in range(count), optionally on worker threads.

    Results are collected in index order, so the output is identical to the
    sequential loop regardless of thread count."""
    workers = max_threads()
    if workers <= 1 or count <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=min(workers, count)) as pool:
        return list(pool.map(fn, range(count)))


# ---------------------------------------------------------------------------
# Problem instances


@dataclass(frozen=True)
class ProblemInstance:
    """Composite problem ``inf_x f(x) + g(Lx)`` with conjugation classes
    ``phi`` (on inputs) and ``psi`` (on outputs), plus search grids."""

    f: Objective
    g: Objective
    L: LinearMap
    phi: Family
    psi: Family
    psi_search: FamilySearchGrid
    x_search: GridSpec
    y_search: GridSpec
    name: str = ""

    def __post_init__(self) -> None:
        n, m = self.L.in_dim, self.L.out_dim
        if self.f.dim != n:
            raise InvariantViolation("f dimension != L input dimension")
        if self.g.dim != m:
            raise InvariantViolation("g dimension != L output dimension")
        if self.phi.dim != n or self.psi.dim != m:
            raise InvariantViolation("class dimensions do not match the map")
        if self.psi_search.family.dim != m:
            raise InvariantViolation("psi search grid dimension mismatch")
        if self.x_search.box.dim != n or self.y_search.box.dim != m:
            raise InvariantViolation("search box dimension mismatch")
        if not self._is_exact():
            X = self.x_search.box.mesh(min(self.x_search.points_per_axis, 21))
            with np.errstate(invalid="ignore"):
                total = self.f.values(X) + self.g.values(self.L.apply(X))
            if not np.any(np.isfinite(total)):
                warnings.warn(
                    "no feasible point found on the sampling grid: dom g may "
                    "never meet L(dom f)",
                    stacklevel=2,
                )

    @classmethod
    def build(
        cls,
        f: Objective,
        g: Objective,
        L: LinearMap,
        phi: Family,
        psi: Family,
        psi_search: FamilySearchGrid | None = None,
        x_search: GridSpec | None = None,
        y_search: GridSpec | None = None,
        name: str = "",
    ) -> "ProblemInstance":
        if psi_search is None:
            psi_search = FamilySearchGrid.default(psi)
        if x_search is None:
            points = {1: 201, 2: 61, 3: 21}.get(L.in_dim, 9)
            x_search = GridSpec.cube(L.in_dim, points_per_axis=points)
        if y_search is None:
            points = {1: 201, 2: 61, 3: 21}.get(L.out_dim, 9)
            y_search = GridSpec.cube(L.out_dim, points_per_axis=points)
        return cls(f, g, L, phi, psi, psi_search, x_search, y_search, name)

    def _is_exact(self) -> bool:
        """Closed-form engines apply: both parts quadratic, no boxes."""
        return (
            self.f.is_quadratic
            and self.g.is_quadratic
            and self.f.domain_box is None
            and self.g.domain_box is None
        )

    def composite_quad(self) -> GeneralizedQuadratic:
        if not self._is_exact():
            raise InvariantViolation("composite quadratic needs exact parts")
        return self.f.quad + pullback(self.g.quad, self.L)

    def composite_objective(self) -> Objective:
        """``x -> f(x) + g(Lx)`` as a single objective."""
        if self._is_exact():
            return Objective.quadratic(self.composite_quad(), name="composite")
        f, g, L = self.f, self.g, self.L
        return Objective.from_callable(
            L.in_dim,
            lambda x: _ext_add(f.value(x), g.value(L.apply(x))),
            domain_box=f.domain_box,
            name="composite",
        )


def coupling_value(
    phi: GeneralizedQuadratic,
    psi: GeneralizedQuadratic,
    L: LinearMap,
    x,
    y,
) -> float:
    """``phi(x) + psi(Lx + y) - psi(Lx)`` — the coupling between points and
    (member, perturbation) pairs; equals phi(x) at y = 0."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    Lx = L.apply(x)
    return float(phi(x)) + float(psi(Lx + y)) - float(psi(Lx))


# ---------------------------------------------------------------------------
# Primal


@dataclass(frozen=True)
class PrimalResult:
    value: float
    minimizer: np.ndarray | None
    engine: str
    flags: tuple[str, ...] = ()


def _composite_min(instance: ProblemInstance, y=None) -> PrimalResult:
    """Minimum of ``f(x) + g(Lx + y)`` (y defaults to 0).

    Exact when both parts are unconstrained quadratics; otherwise a fixed-mesh
    minimum over the x search box (an upper bound of the true infimum). The
    mesh is deliberately not refined so that every sweep sharing it stays
    comparable (see the dual sweeps)."""
    if instance._is_exact():
        if y is None:
            q = instance.composite_quad()
        else:
            q = instance.f.quad + pullback_shifted(instance.g.quad, instance.L, y)
        value, argmin = minimize_quadratic(q)
        flags = ("unbounded",) if value == -INF else ()
        return PrimalResult(value, argmin, "closed", flags)
    X = instance.x_search.box.mesh(instance.x_search.points_per_axis)
    LX = instance.L.apply(X)
    if y is not None:
        LX = LX + np.asarray(y, dtype=float)
    total = instance.f.values(X) + instance.g.values(LX)
    idx = int(np.argmin(total))
    if total[idx] == INF:
        return PrimalResult(INF, None, "grid", ("infeasible_window",))
    return PrimalResult(float(total[idx]), X[idx], "grid", ("grid_truncated",))


def primal_value(instance: ProblemInstance) -> PrimalResult:
    """Value of ``inf_x f(x) + g(Lx)``."""
    return _composite_min(instance)


# ---------------------------------------------------------------------------
# Dual sweep


def composite_inf_table(
    instance: ProblemInstance,
    search: FamilySearchGrid | None = None,
    tol: float | None = None,
) -> np.ndarray:
    """``inf_x f(x) + psi(Lx)`` for every member of the search grid.

    Shape (len(curvatures), n_slopes); -inf marks unbounded members.  Exact
    (one eigendecomposition per curvature) for unconstrained quadratic f;
    otherwise a shared fixed-mesh minimum."""
    search = instance.psi_search if search is None else search
    tol = global_tol() if tol is None else tol
    slopes = search.slopes()
    n = len(slopes)
    M = instance.L.matrix
    f = instance.f

    if f.is_quadratic and f.domain_box is None:
        MtM = M.T @ M
        eye_scale = np.eye(instance.L.in_dim)

        def row(i: int) -> np.ndarray:
            beta = search.curvatures[i]
            # q_v(x) = f(x) + beta*||Lx||^2 + (M^T v).x ; inf = -sup(-q_v)
            D = -(f.quad.A + beta * MtM)
            w, V = np.linalg.eigh(D)
            scale = tol * max(1.0, float(np.max(np.abs(w), initial=0.0)))
            if np.any(w > scale):
                return np.full(n, -INF)
            vs = -(slopes @ M + f.quad.u)  # (n_slopes, in_dim)
            coeffs = vs @ V
            ker = np.abs(w) <= scale
            neg = w < -scale
            ktol = tol * np.maximum(1.0, np.max(np.abs(vs), axis=1, initial=0.0))
            sup = np.full(n, -f.quad.c)
            if np.any(neg):
                sup = sup - 0.25 * (coeffs[:, neg] ** 2 / w[neg]).sum(axis=1)
            if np.any(ker):
                bad = np.max(np.abs(coeffs[:, ker]), axis=1) > ktol
                sup[bad] = INF
            return -sup

        rows = _parallel_rows(row, len(search.curvatures))
        return np.stack(rows, axis=0)

    X = instance.x_search.box.mesh(instance.x_search.points_per_axis)
    fvals = f.values(X)
    ok = np.isfinite(fvals)
    if not np.any(ok):
        raise InvariantViolation("f is +inf on the whole x search grid")
    X, fvals = X[ok], fvals[ok]
    LX = instance.L.apply(X)
    sq = np.sum(LX * LX, axis=1)
    lin = LX @ slopes.T

    def grid_row(i: int) -> np.ndarray:
        beta = search.curvatures[i]
        vals = fvals[:, None] + beta * sq[:, None] + lin
        return vals.min(axis=0)

    rows = _parallel_rows(grid_row, len(search.curvatures))
    return np.stack(rows, axis=0)


def g_conjugate_table(
    instance: ProblemInstance,
    search: FamilySearchGrid | None = None,
) -> np.ndarray:
    """``g*(psi)`` over the search grid; +inf entries mark infeasible members.

    When g needs the grid engine, the candidate maximizers include the image
    of the x search mesh under L, so the table is consistent with the primal
    sweep (keeps the dual below the primal by construction)."""
    search = instance.psi_search if search is None else search
    base = family_conjugate_table(instance.g, search, grid=instance.y_search)
    if instance.g.is_quadratic and instance.g.domain_box is None:
        return base
    X = instance.x_search.box.mesh(instance.x_search.points_per_axis)
    Y = instance.L.apply(X)
    gvals = instance.g.values(Y)
    ok = np.isfinite(gvals)
    if not np.any(ok):
        return base
    Y, gvals = Y[ok], gvals[ok]
    sq = np.sum(Y * Y, axis=1)
    lin = Y @ search.slopes().T
    for i, beta in enumerate(search.curvatures):
        extra = np.max(beta * sq[:, None] + lin - gvals[:, None], axis=0)
        base[i] = np.maximum(base[i], extra)
    return base


@dataclass(frozen=True)
class DualResult:
    value: float
    attaining: GeneralizedQuadratic | None
    engine: str
    flags: tuple[str, ...] = ()
    excluded_infeasible: int = 0
    excluded_unbounded: int = 0


def dcp_value(
    instance: ProblemInstance,
    inf_table: np.ndarray | None = None,
    gstar_table: np.ndarray | None = None,
) -> DualResult:
    """Dual value ``sup over psi of inf_x [f + psi o L] - g*(psi)``.

    Members with ``g*(psi) = +inf`` (dual-infeasible) or an unbounded inner
    infimum contribute -inf and are excluded from attainment. Ties keep the
    first grid index (curvature-major, slope C order)."""
    search = instance.psi_search
    if inf_table is None:
        inf_table = composite_inf_table(instance)
    if gstar_table is None:
        gstar_table = g_conjugate_table(instance)
    with np.errstate(invalid="ignore"):
        obj = inf_table - gstar_table
    infeasible = gstar_table == INF
    unbounded = inf_table == -INF
    obj[infeasible | unbounded] = -INF
    flat = int(np.argmax(obj))
    value = float(obj.flat[flat])
    engine = "closed" if instance._is_exact() else "grid"
    if value == -INF:
        return DualResult(
            -INF, None, engine, ("all_members_excluded",),
            int(np.sum(infeasible)), int(np.sum(unbounded)),
        )
    i, j = np.unravel_index(flat, obj.shape)
    attaining = search.member(search.curvatures[i], search.slopes()[j])
    return DualResult(
        value, attaining, engine, (),
        int(np.sum(infeasible)), int(np.sum(unbounded)),
    )


def perturbation_conjugate_zero(
    instance: ProblemInstance, psi: GeneralizedQuadratic
) -> float:
    """Conjugate of the perturbed value function at (0, psi):
    ``sup_x [-psi(Lx) - f(x)] + g*(psi)``; the dual objective is its negative."""
    if not instance.psi.contains(psi):
        raise InvariantViolation("psi is not a member of the output class")
    pb = pullback(psi, instance.L)
    sup_part = conjugate_value(
        instance.f, -pb, grid=instance.x_search
    ).value
    gstar = conjugate_value(instance.g, psi, grid=instance.y_search).value
    return _ext_add(sup_part, gstar)


def _with_f_shifted_by(
    instance: ProblemInstance, phi: GeneralizedQuadratic
) -> ProblemInstance:
    """Instance whose f is replaced by ``f - phi`` (same everything else)."""
    if instance.f.is_quadratic and instance.f.domain_box is None:
        new_f = Objective.quadratic(instance.f.quad - phi)
    else:
        base = instance.f
        new_f = Objective.from_callable(
            base.dim, lambda x, q=phi: _ext_add(base.value(x), -float(q(np.asarray(x, dtype=float))))
        )
    return dataclasses.replace(instance, f=new_f)


def weak_duality_check(
    instance: ProblemInstance,
    phi: GeneralizedQuadratic | None = None,
    tol: float = 1e-6,
) -> bool:
    """``(f + g o L)*(phi) <= min over psi of [(f + psi o L)*(phi) + g*(psi)]``
    at one member phi (0 by default) — the conjugate form of weak duality."""
    if phi is None:
        phi = GeneralizedQuadratic.zero(instance.L.in_dim)
    composite = instance.composite_objective()
    lhs = conjugate_value(composite, phi, grid=instance.x_search).value
    if lhs == -INF:
        return True
    # (f + psi o L)*(phi) = -inf_x [(f - phi) + psi o L], swept over the grid
    shifted = _with_f_shifted_by(instance, phi)
    fpsi_star = -composite_inf_table(shifted)
    gstar = g_conjugate_table(instance)
    best = INF
    for a, b in zip(fpsi_star.ravel(), gstar.ravel()):
        best = min(best, _ext_add(float(a), float(b)))
    return lhs <= best + tol


@dataclass(frozen=True)
class DualityReport:
    primal: float
    dual_conjugate: float
    gap: float
    attaining_psi: GeneralizedQuadratic | None
    flags: tuple[str, ...]


def duality_report(instance: ProblemInstance, tol: float = 1e-6) -> DualityReport:
    p = primal_value(instance)
    d = dcp_value(instance)
    gap = _ext_add(p.value, -d.value) if abs(d.value) != INF else INF
    flags = p.flags + d.flags
    if gap < -tol:
        flags = flags + ("weak_duality_violated",)
    return DualityReport(p.value, d.value, gap, d.attaining, flags)


def composite_condition_check(
    instance: ProblemInstance,
    phi: GeneralizedQuadratic,
    psi: GeneralizedQuadratic,
    variant: str = "difference",
    tol: float | None = None,
) -> bool:
    """Whether ``phi + psi o L`` (variant "sum") or ``phi - psi o L``
    (variant "difference") belongs to the input class."""
    pb = pullback(psi, instance.L)
    if variant == "sum":
        candidate = combine(1.0, phi, 1.0, pb)
    elif variant == "difference":
        candidate = combine(1.0, phi, -1.0, pb)
    else:
        raise InvariantViolation(f"unknown variant {variant!r}")
    return instance.phi.contains(candidate, tol)


# ---------------------------------------------------------------------------
# Zero-gap certificates


@dataclass(frozen=True)
class GapCertificate:
    """Witness of a (near-)zero duality gap at accuracy eps.

    kind "thm42": psi alone must be an eps-subgradient of g at Lx whose dual
    objective reaches within eps of the primal bound.  kind "thm43": a pair
    (phi, psi) of eps-subgradients whose sum phi + psi o L is globally >= -eps
    and <= eps at x."""

    kind: str
    eps: float
    x: np.ndarray
    psi: GeneralizedQuadratic
    phi: GeneralizedQuadratic | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("thm42", "thm43"):
            raise InvariantViolation(f"unknown certificate kind {self.kind!r}")
        if self.eps < 0:
            raise InvariantViolation("certificate eps must be nonnegative")
        if self.kind == "thm43" and self.phi is None:
            raise InvariantViolation("kind thm43 needs phi")
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float).reshape(-1))


@dataclass(frozen=True)
class CertificateCheck:
    holds: bool
    kind: str
    conditions: dict[str, bool]
    details: dict[str, float]


def verify_gap_certificate(
    instance: ProblemInstance,
    cert: GapCertificate,
    require_zero_sum: bool = False,
    tol: float | None = None,
) -> CertificateCheck:
    """Check every condition of a gap certificate numerically.

    With ``require_zero_sum`` the thm43 pair must satisfy the exact
    cancellation ``phi + psi o L = 0`` (a strengthening that certifies the
    gap in one shot), not just the two-sided eps bounds."""
    tol = global_tol() if tol is None else tol
    x = cert.x
    Lx = instance.L.apply(x)
    eps = cert.eps
    conditions: dict[str, bool] = {}
    details: dict[str, float] = {}

    conditions["psi_in_family"] = instance.psi.contains(cert.psi)
    fx = instance.f.value(x)
    if fx == INF:
        raise InvariantViolation("certificate point is outside dom f")
    conditions["psi_subgradient"] = eps_subdiff_contains(
        instance.g, cert.psi, Lx, eps, grid=instance.y_search
    )

    if cert.kind == "thm42":
        pb = pullback(cert.psi, instance.L)
        shifted = _with_f_shifted_by(instance, -pb)  # f + psi o L
        sup0 = conjugate_value(
            shifted.f, GeneralizedQuadratic.zero(instance.L.in_dim),
            grid=instance.x_search,
        ).value
        bound = -fx - float(cert.psi(Lx)) + eps
        conditions["conjugate_bound"] = sup0 <= bound + tol
        details["conjugate_at_zero"] = sup0
        details["bound"] = bound
    else:
        conditions["phi_in_family"] = instance.phi.contains(cert.phi)
        conditions["phi_subgradient"] = eps_subdiff_contains(
            instance.f, cert.phi, x, eps, grid=instance.x_search
        )
        combo = combine(1.0, cert.phi, 1.0, pullback(cert.psi, instance.L))
        low, _ = minimize_quadratic(combo)
        at_x = float(combo(x))
        conditions["sum_lower_bound"] = low >= -eps - tol
        conditions["sum_small_at_x"] = at_x <= eps + tol
        details["sum_min"] = low
        details["sum_at_x"] = at_x
        if require_zero_sum:
            conditions["sum_identically_zero"] = combo.is_zero(tol)

    holds = all(conditions.values())
    return CertificateCheck(holds, cert.kind, conditions, details)


def build_tangent_certificate(
    instance: ProblemInstance,
    x,
    eps: float,
    kind: str = "thm43",
) -> GapCertificate | None:
    """Construct a certificate from exact tangency when the data allows it.

    psi is the class member tangent to g at Lx (curvature at most the least
    eigenvalue of g's matrix, slope matching the gradient); for kind thm43
    the partner is phi = -(psi o L), which must itself belong to the input
    class. Returns None when no admissible tangent curvature exists or the
    partner falls outside the class."""
    if not (instance.g.is_quadratic and instance.g.domain_box is None):
        return None
    x = np.asarray(x, dtype=float).reshape(-1)
    Lx = instance.L.apply(x)
    gq = instance.g.quad
    beta = instance.psi.curvature.largest_at_most(gq.min_eigenvalue())
    if beta is None:
        return None
    v = gq.gradient(Lx) - 2.0 * beta * Lx
    psi = GeneralizedQuadratic.iso(instance.L.out_dim, beta, v)
    if kind == "thm42":
        return GapCertificate("thm42", eps, x, psi)
    phi = -pullback(psi, instance.L)
    if not instance.phi.contains(phi):
        return None
    return GapCertificate("thm43", eps, x, psi, phi)


@dataclass(frozen=True)
class OptimalityCheck:
    holds: bool
    value_at_x: float
    primal: float
    ladder: tuple[tuple[float, bool], ...]
    details: str = ""


def verify_optimality_at(
    instance: ProblemInstance,
    x,
    eps_ladder: tuple[float, ...] = (1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6),
    certs: tuple[GapCertificate, ...] | None = None,
    tol: float = 1e-6,
) -> OptimalityCheck:
    """Zero-gap optimality of a fixed point via a ladder of certificates.

    For each eps in the ladder a certificate at the *same* x must verify
    (given ones are used as-is; otherwise tangent construction is tried),
    and f(x) + g(Lx) must match the primal value within tol."""
    x = np.asarray(x, dtype=float).reshape(-1)
    value = _ext_add(instance.f.value(x), instance.g.value(instance.L.apply(x)))
    primal = primal_value(instance).value
    ladder: list[tuple[float, bool]] = []
    if certs is not None:
        for cert in certs:
            if np.max(np.abs(cert.x - x)) > tol:
                raise InvariantViolation("ladder certificates must share the point x")
            ladder.append((cert.eps, verify_gap_certificate(instance, cert).holds))
    else:
        for eps in eps_ladder:
            cert = build_tangent_certificate(instance, x, eps)
            if cert is None:
                cert = build_tangent_certificate(instance, x, eps, kind="thm42")
            ok = cert is not None and verify_gap_certificate(instance, cert).holds
            ladder.append((eps, ok))
    value_matches = np.isfinite(value) and np.isfinite(primal) and abs(value - primal) <= tol
    holds = bool(value_matches and all(ok for _, ok in ladder))
    return OptimalityCheck(holds, value, primal, tuple(ladder))


# ---------------------------------------------------------------------------
# Epigraphs of conjugates and their decomposition


@dataclass(frozen=True)
class EpiPoint:
    """A pair (member, level) tested against the epigraph of a conjugate."""

    phi: GeneralizedQuadratic
    r: float


def _target_objective(instance: ProblemInstance, target: str) -> tuple[Objective, Family]:
    if target == "f":
        return instance.f, instance.phi
    if target == "g":
        return instance.g, instance.psi
    if target == "g_of_L":
        g, L = instance.g, instance.L
        if g.is_quadratic and g.domain_box is None:
            return Objective.quadratic(pullback(g.quad, L)), instance.phi
        return (
            Objective.from_callable(L.in_dim, lambda x: g.value(L.apply(x))),
            instance.phi,
        )
    if target == "composite":
        return instance.composite_objective(), instance.phi
    raise InvariantViolation(f"unknown epigraph target {target!r}")


def epi_contains(
    instance: ProblemInstance,
    target: str,
    point: EpiPoint,
    tol: float | None = None,
) -> bool:
    """Whether ``point.r >= (target function)*(point.phi)``.

    target is one of "f", "g", "g_of_L", "composite"; the member must belong
    to the matching class."""
    tol = global_tol() if tol is None else tol
    obj, family = _target_objective(instance, target)
    if not family.contains(point.phi):
        raise InvariantViolation("epigraph point member is outside the class")
    grid = instance.y_search if target == "g" else instance.x_search
    value = conjugate_value(obj, point.phi, grid=grid).value
    return value <= point.r + tol


@dataclass(frozen=True)
class Decomposition:
    """(phi, r) = (phi1 + psi o L, c_phi + c_psi) with both pairs in their
    conjugate epigraphs."""

    phi1: GeneralizedQuadratic
    c_phi: float
    psi: GeneralizedQuadratic
    c_psi: float


def epi_decompose(
    instance: ProblemInstance,
    point: EpiPoint,
    tol: float | None = None,
) -> Decomposition | None:
    """Split a composite-epigraph pair into input-class and output-class pairs.

    Sweeps the psi search grid in increasing parameter norm (so the zero
    member is tried first), keeps candidates whose difference phi - psi o L
    stays in the input class, gives psi its minimal level g*(psi), and accepts
    when f*(phi - psi o L) fits under the remaining level."""
    tol = global_tol() if tol is None else tol
    if not epi_contains(instance, "composite", point, tol=max(tol, 1e-6)):
        raise InvariantViolation("point is not in the composite conjugate epigraph")
    search = instance.psi_search
    slopes = search.slopes()
    params: list[tuple[float, int, int]] = []
    for i, beta in enumerate(search.curvatures):
        norms = np.sqrt(beta * beta + np.sum(slopes * slopes, axis=1))
        for j in range(len(slopes)):
            params.append((float(norms[j]), i, j))
    params.sort(key=lambda t: (t[0], t[1], t[2]))
    gstar = g_conjugate_table(instance)
    for _, i, j in params:
        c_psi = float(gstar[i, j])
        if c_psi == INF:
            continue
        psi = search.member(search.curvatures[i], slopes[j])
        phi1 = combine(1.0, point.phi, -1.0, pullback(psi, instance.L))
        if not instance.phi.contains(phi1):
            continue
        c_phi = point.r - c_psi
        fstar = conjugate_value(instance.f, phi1, grid=instance.x_search).value
        if fstar <= c_phi + tol:
            return Decomposition(phi1, c_phi, psi, c_psi)
    return None


@dataclass(frozen=True)
class ConditionCheck:
    holds: bool
    which: str
    conditions: dict[str, bool]
    details: dict[str, float | str]


def _nonneg_quadratic_minorant(
    family: Family, h: GeneralizedQuadratic, tol: float
) -> GeneralizedQuadratic | None:
    """A class member phi1 <= h (exact construction), or None.

    Uses curvature alpha <= lambda_min(A_h), the same slope as h, and h's
    constant (dropped when the class carries no constants, which then
    requires c_h >= 0)."""
    alpha = family.curvature.largest_at_most(h.min_eigenvalue())
    if alpha is None:
        return None
    c = h.c
    if not family.includes_constants:
        if h.c < -tol:
            return None
        c = 0.0
    return GeneralizedQuadratic.iso(h.dim, alpha, h.u, min(c, h.c))


def decomposition_condition_check(
    instance: ProblemInstance,
    which: str,
    phi: GeneralizedQuadratic | None = None,
    r: float | None = None,
    psi: GeneralizedQuadratic | None = None,
    eps1: float = 1e-3,
    eps2: float = 1e-3,
    x=None,
    phi_eps: GeneralizedQuadratic | None = None,
    tol: float | None = None,
) -> ConditionCheck:
    """Sufficient conditions under which composite epigraph pairs decompose.

    which = "a": every pair (phi, r) in the epigraph of (g o L)* admits a psi
    with phi <= psi o L and g*(psi) <= r — checked for the given pair by
    searching the psi grid.
    which = "b": some psi has g*(psi) <= 0 and g o L <= psi o L — checked for
    the given psi or by grid search.
    which = "c": for the given pair and psi, both phi - psi o L and psi o L
    admit class minorants — checked by exact construction.
    which = "d": the input class is closed under differences, and the given
    witness (psi, x, phi_eps, eps1, eps2) satisfies the eps-subgradient and
    strict-gap inequalities."""
    tol = global_tol() if tol is None else tol
    conditions: dict[str, bool] = {}
    details: dict[str, float | str] = {}
    search = instance.psi_search
    slopes = search.slopes()

    if which == "a":
        if phi is None or r is None:
            raise InvariantViolation("condition (a) needs the pair (phi, r)")
        if not epi_contains(instance, "g_of_L", EpiPoint(phi, r), tol=max(tol, 1e-6)):
            raise InvariantViolation("(phi, r) is not in the epigraph of (g o L)*")
        gstar = g_conjugate_table(instance)
        found = False
        best_miss = INF
        for i, beta in enumerate(search.curvatures):
            for j in range(len(slopes)):
                if gstar[i, j] > r + tol:
                    continue
                member = search.member(beta, slopes[j])
                diff = combine(1.0, pullback(member, instance.L), -1.0, phi)
                low, _ = minimize_quadratic(diff)
                if low >= -tol:
                    found = True
                    details["psi_curvature"] = float(beta)
                    details["psi_slope_norm"] = float(np.linalg.norm(slopes[j]))
                    break
                best_miss = min(best_miss, -low)
            if found:
                break
        conditions["majorizing_psi_found"] = found
        if not found:
            details["smallest_violation"] = best_miss
        return ConditionCheck(found, which, conditions, details)

    if which == "b":
        def admissible(member: GeneralizedQuadratic) -> tuple[bool, float, float]:
            gs = conjugate_value(instance.g, member, grid=instance.y_search).value
            if gs > tol:
                return False, gs, -INF
            diff = _g_of_l_gap(instance, member)
            return diff >= -tol, gs, diff

        if psi is not None:
            ok, gs, diff = admissible(psi)
            conditions["gstar_nonpositive"] = gs <= tol
            conditions["majorizes_g_of_L"] = diff >= -tol
            details["gstar"] = gs
            details["min_psi_oL_minus_g_oL"] = diff
            return ConditionCheck(ok, which, conditions, details)
        for i, beta in enumerate(search.curvatures):
            for j in range(len(slopes)):
                member = search.member(beta, slopes[j])
                ok, gs, diff = admissible(member)
                if ok:
                    conditions["majorizing_psi_found"] = True
                    details["psi_curvature"] = float(beta)
                    details["psi_slope_norm"] = float(np.linalg.norm(slopes[j]))
                    return ConditionCheck(True, which, conditions, details)
        conditions["majorizing_psi_found"] = False
        return ConditionCheck(False, which, conditions, details)

    if which == "c":
        if phi is None or psi is None:
            raise InvariantViolation("condition (c) needs phi and psi")
        if r is not None and not epi_contains(
            instance, "composite", EpiPoint(phi, r), tol=max(tol, 1e-6)
        ):
            raise InvariantViolation("(phi, r) is not in the composite epigraph")
        pb = pullback(psi, instance.L)
        h1 = combine(1.0, phi, -1.0, pb)
        m1 = _nonneg_quadratic_minorant(instance.phi, h1, tol)
        m2 = _nonneg_quadratic_minorant(instance.phi, pb, tol)
        conditions["difference_has_minorant"] = m1 is not None
        conditions["pullback_has_minorant"] = m2 is not None
        if m1 is not None:
            low, _ = minimize_quadratic(combine(1.0, h1, -1.0, m1))
            details["difference_minorant_slack"] = low
        if m2 is not None:
            low, _ = minimize_quadratic(combine(1.0, pb, -1.0, m2))
            details["pullback_minorant_slack"] = low
        holds = m1 is not None and m2 is not None
        return ConditionCheck(holds, which, conditions, details)

    if which == "d":
        closed = instance.phi.curvature.kind in ("zero", "any") or (
            instance.phi.curvature.kind == "fixed"
            and instance.phi.curvature.value == 0.0
        )
        conditions["class_closed_under_differences"] = closed
        if psi is None or x is None:
            details["witness"] = "not-provided"
            return ConditionCheck(closed, which, conditions, details)
        x = np.asarray(x, dtype=float).reshape(-1)
        gl, family = _target_objective(instance, "g_of_L")
        if phi_eps is None and gl.is_quadratic and gl.domain_box is None:
            # exact tangent member of the input class to g o L at x
            alpha = family.curvature.largest_at_most(gl.quad.min_eigenvalue())
            if alpha is not None:
                slope = gl.quad.gradient(x) - 2.0 * alpha * x
                phi_eps = GeneralizedQuadratic.iso(gl.dim, alpha, slope)
        if phi_eps is None:
            conditions["witness_constructed"] = False
            return ConditionCheck(False, which, conditions, details)
        conditions["phi_eps_in_class"] = family.contains(phi_eps)
        conditions["phi_eps_subgradient"] = eps_subdiff_contains(
            gl, phi_eps, x, eps2, grid=instance.x_search
        )
        pb = pullback(psi, instance.L)
        sup_gap = conjugate_closed_form(phi_eps, pb).value
        lhs = float(pb(x)) - float(phi_eps(x)) + eps1
        conditions["strict_gap"] = lhs > sup_gap
        details["lhs"] = lhs
        details["sup_gap"] = sup_gap
        return ConditionCheck(all(conditions.values()), which, conditions, details)

    raise InvariantViolation(f"unknown condition {which!r}")


def _g_of_l_gap(instance: ProblemInstance, member: GeneralizedQuadratic) -> float:
    """``inf_x [psi(Lx) - g(Lx)]`` — nonnegative iff psi o L majorizes g o L."""
    pb = pullback(member, instance.L)
    if instance.g.is_quadratic and instance.g.domain_box is None:
        diff = combine(1.0, pb, -1.0, pullback(instance.g.quad, instance.L))
        low, _ = minimize_quadratic(diff)
        return low
    X = instance.x_search.box.mesh(instance.x_search.points_per_axis)
    gv = instance.g.values(instance.L.apply(X))
    ok = np.isfinite(gv)
    if not np.any(ok):
        return INF
    return float(np.min(np.asarray(pb(X[ok])) - gv[ok]))
