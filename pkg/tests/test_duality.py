"""Composite problems, dual sweeps, certificates, epigraph decomposition.

Hand-derived anchors used below (all double-checked against the oracles):

* ``f=(x+1)^2, g=4y^2, L=id`` (inst47): primal 0.8 at x=-0.2; the dual sweep
  attains 0.8 at the affine member with slope -1.6.
* ``f=3x^2+2y^2, g=-(z-1)^2, L=[1,-1]`` (inst48): composite has
  ``A=[[2,1],[1,1]], u=(2,-2), c=-1``; minimum -6 at (-2, 3).
"""

import warnings

import numpy as np
import pytest

import oracles
from abconv import (
    Box,
    CurvatureSpec,
    EpiPoint,
    Family,
    GapCertificate,
    GeneralizedQuadratic,
    GridSpec,
    INF,
    InvariantViolation,
    LinearMap,
    Objective,
    ProblemInstance,
    build_tangent_certificate,
    composite_condition_check,
    composite_inf_table,
    coupling_value,
    dcp_value,
    decomposition_condition_check,
    duality_report,
    epi_contains,
    epi_decompose,
    g_conjugate_table,
    minimize_quadratic,
    perturbation_conjugate_zero,
    primal_value,
    pullback,
    verify_gap_certificate,
    verify_optimality_at,
    weak_duality_check,
)

ID1 = LinearMap.identity(1)


def quad_obj(dim, a, u=None, c=0.0, box=None):
    return Objective.quadratic(GeneralizedQuadratic.iso(dim, a, u, c), domain_box=box)


def build(f, g, L=None, phi_spec=None, psi_spec=None, **kw):
    L = ID1 if L is None else L
    phi = Family(L.in_dim, phi_spec or CurvatureSpec.nonpos())
    psi = Family(L.out_dim, psi_spec or CurvatureSpec.zero())
    return ProblemInstance.build(f=f, g=g, L=L, phi=phi, psi=psi, **kw)


class TestProblemInstance:
    def test_dimension_validation(self):
        with pytest.raises(InvariantViolation):
            build(quad_obj(2, 1.0), quad_obj(1, 1.0))  # f dim != L input dim
        with pytest.raises(InvariantViolation):
            build(quad_obj(1, 1.0), quad_obj(2, 1.0))  # g dim != L output dim

    def test_warns_when_nothing_is_feasible_on_the_grid(self):
        g = quad_obj(1, 1.0, box=Box([50.0], [60.0]))
        with pytest.warns(UserWarning, match="no feasible point"):
            build(quad_obj(1, 1.0), g)

    def test_composite_quad_frozen(self, inst48):
        comp = inst48.composite_quad()
        np.testing.assert_allclose(comp.A, [[2.0, 1.0], [1.0, 1.0]])
        np.testing.assert_allclose(comp.u, [2.0, -2.0])
        assert comp.c == -1.0

    def test_composite_objective_callable_path(self):
        f = quad_obj(1, 1.0)
        g = quad_obj(1, 2.0, box=Box([-5.0], [5.0]))
        inst = build(f, g)
        comp = inst.composite_objective()
        assert not comp.is_quadratic
        assert comp.value([1.0]) == pytest.approx(3.0)
        assert comp.value([6.0]) == INF  # outside g's box through L = id

    def test_composite_quad_requires_exact_parts(self):
        inst = build(quad_obj(1, 1.0), quad_obj(1, 1.0, box=Box([-1.0], [1.0])))
        with pytest.raises(InvariantViolation):
            inst.composite_quad()


def test_coupling_value_reduces_to_phi_at_zero_perturbation(inst47, rng):
    phi = GeneralizedQuadratic.iso(1, -1.0, [2.0])
    psi = GeneralizedQuadratic.affine([3.0])
    x = rng.normal(size=1)
    assert coupling_value(phi, psi, inst47.L, x, [0.0]) == pytest.approx(
        float(phi(x)), rel=1e-12
    )
    y = rng.normal(size=1)
    expected = float(phi(x)) + float(psi(inst47.L.apply(x) + y)) - float(
        psi(inst47.L.apply(x))
    )
    assert coupling_value(phi, psi, inst47.L, x, y) == pytest.approx(expected, rel=1e-12)


class TestPrimal:
    def test_closed_engine_frozen_value(self, inst47):
        res = primal_value(inst47)
        assert res.engine == "closed" and res.flags == ()
        assert res.value == pytest.approx(0.8, abs=1e-12)
        np.testing.assert_allclose(res.minimizer, [-0.2], atol=1e-12)

    def test_grid_engine_flags(self):
        inst = build(quad_obj(1, 1.0, [2.0], 1.0, box=Box([-10.0], [10.0])), quad_obj(1, 4.0))
        res = primal_value(inst)
        assert res.engine == "grid" and "grid_truncated" in res.flags
        assert res.value == pytest.approx(0.8, abs=1e-9)  # -0.2 lies on the mesh

    def test_infeasible_window(self):
        f = quad_obj(1, 1.0, box=Box([50.0], [60.0]))
        with pytest.warns(UserWarning):
            inst = build(f, quad_obj(1, 1.0))
        res = primal_value(inst)
        assert res.value == INF and "infeasible_window" in res.flags

    def test_unbounded_composite(self):
        inst = build(quad_obj(1, -1.0), quad_obj(1, 0.0), psi_spec=CurvatureSpec.nonpos())
        res = primal_value(inst)
        assert res.value == -INF and "unbounded" in res.flags


class TestDualSweep:
    def test_inf_table_matches_per_member_minimization(self, inst47):
        table = composite_inf_table(inst47)
        search = inst47.psi_search
        slopes = search.slopes()
        assert table.shape == (1, 201)
        # closed formula: inf (x+1)^2 + v x = 1 - (2+v)^2 / 4
        np.testing.assert_allclose(
            table[0], 1.0 - (2.0 + slopes[:, 0]) ** 2 / 4.0, atol=1e-10
        )
        for j in (0, 57, 200):
            member = search.member(search.curvatures[0], slopes[j])
            low, _ = minimize_quadratic(inst47.f.quad + pullback(member, inst47.L))
            assert table[0, j] == pytest.approx(low, abs=1e-10)

    def test_inf_table_grid_path_matches_mesh_minimum(self):
        f = quad_obj(1, 1.0, [2.0], 1.0, box=Box([-10.0], [10.0]))
        inst = build(f, quad_obj(1, 4.0))
        table = composite_inf_table(inst)
        X = inst.x_search.box.mesh(inst.x_search.points_per_axis)
        slopes = inst.psi_search.slopes()
        for j in (0, 100, 200):
            vals = f.values(X) + slopes[j, 0] * X[:, 0]
            assert table[0, j] == pytest.approx(float(vals.min()), abs=1e-10)

    def test_gstar_table_matches_closed_conjugates(self, inst47):
        table = g_conjugate_table(inst47)
        slopes = inst47.psi_search.slopes()[:, 0]
        np.testing.assert_allclose(table[0], slopes**2 / 16.0, atol=1e-10)

    def test_blackbox_gstar_table_dominates_image_samples(self):
        quad = GeneralizedQuadratic.iso(1, 4.0)
        g = Objective.from_callable(
            1, lambda y: float(quad(np.asarray(y, dtype=float))),
            domain_box=Box([-10.0], [10.0]),
        )
        inst = build(quad_obj(1, 1.0, [2.0], 1.0), g)
        table = g_conjugate_table(inst)
        X = inst.x_search.box.mesh(inst.x_search.points_per_axis)
        Y = inst.L.apply(X)
        gv = g.values(Y)
        slopes = inst.psi_search.slopes()
        lin = Y @ slopes.T
        for j in (0, 50, 150, 200):
            sampled = float(np.max(lin[:, j] - gv))
            assert table[0, j] >= sampled - 1e-12

    def test_dcp_frozen_value_and_attaining_member(self, inst47):
        res = dcp_value(inst47)
        assert res.engine == "closed"
        assert res.value == pytest.approx(0.8, abs=1e-12)
        assert res.excluded_infeasible == 0 and res.excluded_unbounded == 0
        np.testing.assert_allclose(res.attaining.A, [[0.0]])
        np.testing.assert_allclose(res.attaining.u, [-1.6])

    def test_dcp_matches_independent_sweep_oracle(self, inst47):
        slopes = [float(s) for s in inst47.psi_search.slopes()[:, 0]]
        brute = oracles.dual_sweep_brute(
            [[1.0]], [2.0], 1.0, [[4.0]], [0.0], 0.0, [[1.0]],
            list(inst47.psi_search.curvatures), slopes, -10.0, 10.0,
        )
        assert dcp_value(inst47).value == pytest.approx(brute, abs=1e-9)

    def test_all_members_excluded(self):
        inst = build(Objective.quadratic(GeneralizedQuadratic.affine([1.0])), quad_obj(1, 0.0))
        res = dcp_value(inst)
        assert res.value == -INF and res.attaining is None
        assert res.flags == ("all_members_excluded",)
        assert res.excluded_infeasible == 200  # every slope except 0
        assert res.excluded_unbounded == 200  # every slope except -1

    def test_weak_duality_on_frozen_instances(self, inst47, inst48):
        for inst in (inst47, inst48):
            rep = duality_report(inst)
            assert rep.gap >= -1e-9
            assert "weak_duality_violated" not in rep.flags

    def test_report_gap_is_inf_when_dual_diverges(self):
        inst = build(Objective.quadratic(GeneralizedQuadratic.affine([1.0])), quad_obj(1, 0.0))
        rep = duality_report(inst)
        assert rep.dual_conjugate == -INF and rep.gap == INF
        assert "weak_duality_violated" not in rep.flags


class TestPerturbationConjugate:
    def test_zero_member_of_inst47(self, inst47):
        assert perturbation_conjugate_zero(
            inst47, GeneralizedQuadratic.zero(1)
        ) == pytest.approx(0.0, abs=1e-12)

    def test_negates_dual_objective(self, inst47):
        psi = GeneralizedQuadratic.affine([-1.6])
        # dual objective at psi: inf(f + psi o L) - g*(psi)
        low, _ = minimize_quadratic(inst47.f.quad + pullback(psi, inst47.L))
        gstar = (psi.u[0]) ** 2 / 16.0
        assert perturbation_conjugate_zero(inst47, psi) == pytest.approx(
            -(low - gstar), abs=1e-10
        )

    def test_rejects_non_members(self, inst47):
        with pytest.raises(InvariantViolation):
            perturbation_conjugate_zero(inst47, GeneralizedQuadratic.iso(1, -1.0))


class TestWeakDualityCheck:
    def test_holds_at_default_and_explicit_members(self, inst47):
        assert weak_duality_check(inst47)
        assert weak_duality_check(inst47, GeneralizedQuadratic.iso(1, -1.0, [2.0]))

    def test_holds_on_grid_instance(self):
        inst = build(quad_obj(1, 1.0, [2.0], 1.0, box=Box([-10.0], [10.0])), quad_obj(1, 4.0))
        assert weak_duality_check(inst)


class TestCompositeConditionCheck:
    def test_difference_and_sum_inside_class(self, inst47):
        psi = GeneralizedQuadratic.affine([-1.6])
        assert composite_condition_check(inst47, GeneralizedQuadratic.zero(1), psi)
        assert composite_condition_check(
            inst47, GeneralizedQuadratic.zero(1), psi, variant="sum"
        )

    def test_curved_difference_leaves_zero_class(self, inst47r):
        psi = GeneralizedQuadratic.iso(1, -0.5, [-1.8])
        assert not composite_condition_check(inst47r, GeneralizedQuadratic.zero(1), psi)
        assert not composite_condition_check(
            inst47r, GeneralizedQuadratic.zero(1), psi, variant="sum"
        )

    def test_unknown_variant(self, inst47):
        with pytest.raises(InvariantViolation):
            composite_condition_check(
                inst47, GeneralizedQuadratic.zero(1), GeneralizedQuadratic.zero(1),
                variant="product",
            )


class TestGapCertificates:
    def test_certificate_validation(self):
        with pytest.raises(InvariantViolation):
            GapCertificate("thm99", 0.1, [0.0], GeneralizedQuadratic.zero(1))
        with pytest.raises(InvariantViolation):
            GapCertificate("thm42", -0.1, [0.0], GeneralizedQuadratic.zero(1))
        with pytest.raises(InvariantViolation):
            GapCertificate("thm43", 0.1, [0.0], GeneralizedQuadratic.zero(1))

    def test_thm42_frozen_certificate_holds(self, inst48):
        cert = GapCertificate(
            "thm42", 1e-3, [-2.0, 3.0], GeneralizedQuadratic.iso(1, -1.0, [2.0])
        )
        check = verify_gap_certificate(inst48, cert)
        assert check.holds and all(check.conditions.values())
        assert check.details["conjugate_at_zero"] == pytest.approx(5.0, abs=1e-9)
        assert check.details["bound"] == pytest.approx(5.0 + 1e-3, abs=1e-12)

    def test_thm42_fails_away_from_the_minimizer(self, inst48):
        cert = GapCertificate(
            "thm42", 1e-3, [0.0, 0.0], GeneralizedQuadratic.iso(1, -1.0, [2.0])
        )
        check = verify_gap_certificate(inst48, cert)
        assert not check.holds
        assert not check.conditions["conjugate_bound"]
        assert check.conditions["psi_subgradient"]  # tangency is global here

    def test_psi_outside_family_fails(self, inst48):
        cert = GapCertificate(
            "thm42", 1e-3, [-2.0, 3.0], GeneralizedQuadratic.iso(1, 1.0, [2.0])
        )
        check = verify_gap_certificate(inst48, cert)
        assert not check.holds and not check.conditions["psi_in_family"]

    def test_point_outside_dom_f_raises(self):
        f = quad_obj(1, 1.0, box=Box([-1.0], [1.0]))
        inst = build(f, quad_obj(1, 4.0))
        cert = GapCertificate("thm42", 0.1, [5.0], GeneralizedQuadratic.zero(1))
        with pytest.raises(InvariantViolation):
            verify_gap_certificate(inst, cert)

    def test_thm43_tangent_pair_is_exact(self, inst47):
        cert = build_tangent_certificate(inst47, [-0.2], eps=0.0)
        assert cert is not None and cert.kind == "thm43"
        np.testing.assert_allclose(cert.psi.u, [-1.6])
        np.testing.assert_allclose(cert.phi.u, [1.6])
        check = verify_gap_certificate(inst47, cert, require_zero_sum=True)
        assert check.holds and check.conditions["sum_identically_zero"]
        assert check.details["sum_min"] == pytest.approx(0.0, abs=1e-12)

    def test_tangent_construction_fails_without_admissible_curvature(self):
        inst = build(quad_obj(1, 1.0), quad_obj(1, -1.0))  # g concave, zero class
        assert build_tangent_certificate(inst, [0.0], 0.1) is None

    def test_tangent_thm43_needs_partner_in_input_class(self):
        inst = build(
            quad_obj(1, 1.0), quad_obj(1, 4.0),
            phi_spec=CurvatureSpec.zero(), psi_spec=CurvatureSpec.fixed(-1.0),
        )
        assert build_tangent_certificate(inst, [0.0], 0.1) is None
        cert42 = build_tangent_certificate(inst, [0.0], 0.1, kind="thm42")
        assert cert42 is not None and cert42.kind == "thm42"


class TestVerifyOptimalityAt:
    def test_ladder_at_the_minimizer(self, inst47):
        check = verify_optimality_at(inst47, [-0.2])
        assert check.holds
        assert check.value_at_x == pytest.approx(0.8, abs=1e-12)
        assert check.primal == pytest.approx(0.8, abs=1e-12)
        assert len(check.ladder) == 7 and all(ok for _, ok in check.ladder)

    def test_fails_off_the_minimizer(self, inst47):
        assert not verify_optimality_at(inst47, [0.0]).holds

    def test_explicit_certificates(self, inst47):
        cert = build_tangent_certificate(inst47, [-0.2], 1e-4)
        check = verify_optimality_at(inst47, [-0.2], certs=(cert,))
        assert check.holds and check.ladder == ((1e-4, True),)

    def test_certificates_must_share_the_point(self, inst47):
        cert = build_tangent_certificate(inst47, [0.5], 1e-4)
        with pytest.raises(InvariantViolation):
            verify_optimality_at(inst47, [-0.2], certs=(cert,))


class TestEpiContains:
    def test_frozen_composite_and_part_levels(self, inst56):
        phi = GeneralizedQuadratic.affine([1.0, 1.0])
        assert epi_contains(inst56, "composite", EpiPoint(phi, 0.1))
        assert not epi_contains(inst56, "composite", EpiPoint(phi, 0.09))
        assert epi_contains(inst56, "f", EpiPoint(phi, 0.5))
        assert not epi_contains(inst56, "f", EpiPoint(phi, 0.49))
        psi = GeneralizedQuadratic.affine([1.0])
        assert epi_contains(inst56, "g", EpiPoint(psi, 0.125))
        assert epi_contains(inst56, "g_of_L", EpiPoint(phi, 0.125))
        assert not epi_contains(inst56, "g_of_L", EpiPoint(phi, 0.12))

    def test_unknown_target_and_foreign_member(self, inst56):
        phi = GeneralizedQuadratic.affine([1.0, 1.0])
        with pytest.raises(InvariantViolation):
            epi_contains(inst56, "h", EpiPoint(phi, 1.0))
        curved_up = GeneralizedQuadratic.iso(2, 1.0)
        with pytest.raises(InvariantViolation):
            epi_contains(inst56, "composite", EpiPoint(curved_up, 100.0))


class TestEpiDecompose:
    def test_frozen_split_takes_the_zero_member(self, inst56):
        point = EpiPoint(GeneralizedQuadratic.affine([1.0, 1.0]), 1.0)
        split = epi_decompose(inst56, point)
        assert split is not None
        assert split.psi.is_zero(1e-12)
        assert split.c_psi == pytest.approx(0.0, abs=1e-12)
        assert split.c_phi == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(split.phi1.u, [1.0, 1.0])
        assert epi_contains(inst56, "f", EpiPoint(split.phi1, split.c_phi))
        assert epi_contains(inst56, "g", EpiPoint(split.psi, split.c_psi))

    def test_point_outside_epigraph_raises(self, inst56):
        point = EpiPoint(GeneralizedQuadratic.affine([1.0, 1.0]), -5.0)
        with pytest.raises(InvariantViolation):
            epi_decompose(inst56, point)

    def test_returns_none_when_every_member_is_infeasible(self):
        inst = build(
            quad_obj(1, 1.0), quad_obj(1, -1.0), phi_spec=CurvatureSpec.zero()
        )
        split = epi_decompose(inst, EpiPoint(GeneralizedQuadratic.zero(1), 0.5))
        assert split is None


class TestDecompositionConditions:
    def test_condition_a_holds_on_inst47(self, inst47):
        check = decomposition_condition_check(
            inst47, "a", phi=GeneralizedQuadratic.zero(1), r=0.0
        )
        assert check.holds and check.conditions["majorizing_psi_found"]
        assert check.details["psi_curvature"] == 0.0
        assert check.details["psi_slope_norm"] == 0.0

    def test_condition_a_fails_with_frozen_violation(self):
        # g = (y-2)^2; members with g* <= r have slopes in [-7.16, -0.84],
        # none of which majorizes phi = -x^2; nearest miss is at slope -0.9.
        inst = build(quad_obj(1, 1.0), quad_obj(1, 1.0, [-4.0], 4.0))
        phi = GeneralizedQuadratic.iso(1, -1.0)
        check = decomposition_condition_check(inst, "a", phi=phi, r=-1.5)
        assert not check.holds
        assert check.details["smallest_violation"] == pytest.approx(0.2025, abs=1e-9)

    def test_condition_a_guards(self, inst47):
        with pytest.raises(InvariantViolation):
            decomposition_condition_check(inst47, "a", phi=GeneralizedQuadratic.zero(1))
        with pytest.raises(InvariantViolation):
            decomposition_condition_check(
                inst47, "a", phi=GeneralizedQuadratic.zero(1), r=-1.0
            )

    def test_condition_b_explicit_self_member(self, inst610):
        check = decomposition_condition_check(inst610, "b", psi=inst610.g.quad)
        assert check.holds
        assert check.conditions["gstar_nonpositive"]
        assert check.conditions["majorizes_g_of_L"]
        assert check.details["gstar"] == pytest.approx(0.0, abs=1e-9)

    def test_condition_b_grid_search_finds_square(self):
        inst = build(
            quad_obj(1, 1.0), quad_obj(1, 1.0), psi_spec=CurvatureSpec.nonneg()
        )
        check = decomposition_condition_check(inst, "b")
        assert check.holds
        assert check.details["psi_curvature"] == pytest.approx(1.0)
        assert check.details["psi_slope_norm"] == pytest.approx(0.0)

    def test_condition_b_grid_search_fails_without_constants(self, inst610):
        check = decomposition_condition_check(inst610, "b")
        assert not check.holds and not check.conditions["majorizing_psi_found"]

    def test_condition_c_exact_minorants(self, inst610):
        phi = GeneralizedQuadratic.iso(1, -1.0, [1.0])
        psi = GeneralizedQuadratic.affine([1.0])
        check = decomposition_condition_check(inst610, "c", phi=phi, psi=psi)
        assert check.holds
        assert check.details["difference_minorant_slack"] == pytest.approx(0.0, abs=1e-12)
        assert check.details["pullback_minorant_slack"] == pytest.approx(0.0, abs=1e-12)

    def test_condition_c_fails_for_negative_constant_without_constants(self, inst47):
        phi = GeneralizedQuadratic.iso(1, -1.0)
        psi = GeneralizedQuadratic.affine([1.0], -1.0)
        check = decomposition_condition_check(inst47, "c", phi=phi, psi=psi)
        assert not check.holds
        assert check.conditions["difference_has_minorant"]
        assert not check.conditions["pullback_has_minorant"]

    def test_condition_c_guards(self, inst47):
        with pytest.raises(InvariantViolation):
            decomposition_condition_check(inst47, "c", phi=GeneralizedQuadratic.zero(1))
        with pytest.raises(InvariantViolation):
            decomposition_condition_check(
                inst47, "c",
                phi=GeneralizedQuadratic.zero(1),
                psi=GeneralizedQuadratic.zero(1),
                r=-1.0,  # not in the composite epigraph (min value is 0.8)
            )

    def test_condition_d_closedness_only(self, inst47, inst611):
        assert not decomposition_condition_check(inst47, "d").holds
        check = decomposition_condition_check(inst611, "d")
        assert check.holds and check.conditions["class_closed_under_differences"]
        assert check.details["witness"] == "not-provided"

    def test_condition_d_with_witness(self, inst611):
        psi = GeneralizedQuadratic.affine([2.0], 1.0)
        check = decomposition_condition_check(inst611, "d", psi=psi, x=[0.5])
        assert check.holds
        assert check.conditions["phi_eps_in_class"]
        assert check.conditions["phi_eps_subgradient"]
        assert check.conditions["strict_gap"]
        assert check.details["lhs"] == pytest.approx(1.001, abs=1e-12)
        assert check.details["sup_gap"] == pytest.approx(1.0, abs=1e-12)

    def test_condition_d_strict_gap_fails_for_mismatched_slope(self, inst611):
        psi = GeneralizedQuadratic.affine([1.0])
        check = decomposition_condition_check(inst611, "d", psi=psi, x=[0.5])
        assert not check.holds and not check.conditions["strict_gap"]

    def test_condition_d_witness_construction_can_fail(self):
        inst = build(
            quad_obj(1, 1.0), quad_obj(1, -2.0),
            phi_spec=CurvatureSpec.fixed(-1.0), psi_spec=CurvatureSpec.nonpos(),
        )
        check = decomposition_condition_check(
            inst, "d", psi=GeneralizedQuadratic.zero(1), x=[0.0]
        )
        assert not check.holds and not check.conditions["witness_constructed"]

    def test_unknown_condition(self, inst47):
        with pytest.raises(InvariantViolation):
            decomposition_condition_check(inst47, "e")
