import math

import numpy as np
import pytest

from thinshell import fields as F
from thinshell import geometry as G
from thinshell import shell as SH
from thinshell.shell import BoundaryProfile as BP

from conftest import interior_points, plane

TF = F.TangentField.from_strings
U0 = (1.1, 0.7)


def flipped_sphere():
    return G.reorder_chart(G.sphere(), [1, 0])


def rel(a, b):
    return np.max(np.abs(a - b)) / (1 + np.max(np.abs(b)))


class TestProfiles:
    def test_coefficients(self):
        assert BP.slip().coefficients == (0.0, 0.0)
        assert BP.hodge().coefficients == (2.0, 6.0)
        assert BP.interpolating(0.25).coefficients == (0.5, 0.5 * 1.5)

    def test_alpha_endpoints_match_named_profiles(self):
        assert BP.interpolating(0.0).coefficients == BP.slip().coefficients
        assert BP.interpolating(1.0).coefficients == BP.hodge().coefficients

    def test_parse(self):
        assert BP.parse("slip") == BP.slip()
        assert BP.parse(" Hodge ") == BP.hodge()
        assert BP.parse("alpha:0.5") == BP.interpolating(0.5)
        assert str(BP.parse("alpha:0.5")) == "alpha:0.5"
        for bad in ("noslip", "alpha:x", "alpha:nan"):
            with pytest.raises(ValueError):
                BP.parse(bad)

    def test_extension_has_profile_derivatives(self):
        chart = G.ellipsoid()
        V = F.random_field(2, 1)
        sf = SH.shell_field(V, "alpha:0.3")
        geo = SH.shell_geometry(chart, U0)
        U = SH._extension_jets(geo, sf)
        ex = G.extrinsic_at(chart, U0)
        v = V.values(U0)
        assert np.allclose(U.value[1:], v)
        assert U.value[0] == 0.0
        assert np.allclose(U.derivative(0).value[1:], 0.6 * ex.S @ v, atol=1e-14)
        assert np.allclose(U.derivative(0).derivative(0).value[1:], 2 * 0.3 * 1.6 * ex.S2 @ v, atol=1e-14)


class TestShellMetric:
    def test_block_structure(self, surface):
        _, chart = surface
        for u in interior_points(chart, 3, 31):
            focal = G.extrinsic_at(chart, u).focal_radius
            for r in (0.0, 0.2 * min(focal, 1), -0.2 * min(focal, 1)):
                gb = SH.shell_metric(chart, u, r)
                assert gb[0, 0] == pytest.approx(1.0, abs=1e-14)
                assert np.max(np.abs(gb[0, 1:])) < 1e-14
            assert np.max(np.abs(SH.shell_metric(chart, u)[1:, 1:] - G.intrinsic_at(chart, u).g)) < 1e-12

    def test_focal_degeneracy(self):
        with pytest.raises(SH.FocalDegeneracy):
            SH.build_shell(G.sphere(), U0, -1.0)
        with pytest.raises(SH.FocalDegeneracy):
            SH.metric_expansion_check(G.sphere(), U0, [1.5])


class TestMetricExpansion:
    def test_plane_exact(self):
        rep = SH.metric_expansion_check(plane(), (0.1, 0.2), [0.1, 0.5, 2.0])
        assert rep.exact and max(rep.residuals) == 0.0

    def test_unit_sphere_offset_metric(self):
        g0 = G.intrinsic_at(G.sphere(), U0).g
        for r in (0.05, 0.3):
            # outward normal: parallel spheres of radius 1 + r
            assert np.allclose(SH.shell_metric(G.sphere(), U0, r)[1:, 1:], (1 + r) ** 2 * g0, atol=1e-14)
        rep = SH.metric_expansion_check(G.sphere(), U0, [0.1, 0.2])
        assert rep.min_order >= 3

    def test_remainder_on_catalog_surfaces(self, surface):
        _, chart = surface
        for u in interior_points(chart, 3, 32):
            rep = SH.metric_expansion_check(chart, u)
            assert rep.exact or rep.min_order >= 2.8
            assert max(rep.residuals) < 1e-12


class TestChristoffel:
    def test_plane(self):
        t = SH.ambient_christoffel(plane(), (0.2, 0.1))
        assert np.max(np.abs(t.full)) < 1e-15

    def test_unit_sphere_radial_block(self):
        t = SH.ambient_christoffel(flipped_sphere(), U0[::-1])
        assert np.allclose(t.i_rj, -np.eye(2), atol=1e-13)
        t = SH.ambient_christoffel(G.sphere(), U0)
        assert np.allclose(t.i_rj, np.eye(2), atol=1e-13)

    def test_table_matches_surface_data(self, surface):
        _, chart = surface
        for u in interior_points(chart, 5, 33):
            assert SH.christoffel_residual(chart, u) < 1e-9


class TestTraces:
    def test_slip_radial_trace_vanishes(self):
        V = F.random_field(2, 2)
        for chart in (G.ellipsoid(), G.torus()):
            assert np.all(SH.radial_trace(SH.shell_field(V, "slip"), chart, U0) == 0)

    def test_hodge_radial_trace(self):
        V = F.random_field(2, 2)
        chart = G.ellipsoid()
        out = SH.radial_trace(SH.shell_field(V, "hodge"), chart, U0)
        assert np.allclose(out, 2 * G.extrinsic_at(chart, U0).S2 @ V.values(U0), atol=1e-12)

    @pytest.mark.parametrize("alpha", [0.1, 0.5, 0.8])
    def test_alpha_radial_trace(self, alpha):
        V = F.random_field(2, 3)
        chart = G.torus()
        out = SH.radial_trace(SH.shell_field(V, BP.interpolating(alpha)), chart, U0)
        expected = 2 * alpha * (2 * alpha - 1) * G.extrinsic_at(chart, U0).S2 @ V.values(U0)
        assert np.allclose(out, expected, atol=1e-12)

    def test_plane_tangential_trace_is_bochner(self):
        V = TF(["u1^2*u2", "sin(u2)"])
        u = (0.3, 0.6)
        for p in ("slip", "hodge", "alpha:0.4"):
            assert np.allclose(SH.tangential_trace(SH.shell_field(V, p), plane(), u), F.bochner(V, plane(), u))

    def test_unit_sphere_slip_tangential_trace_is_deformation(self):
        V = F.random_field(2, 4)
        out = SH.tangential_trace(SH.shell_field(V, "slip"), G.sphere(), U0)
        assert np.allclose(out, F.deformation(V, G.sphere(), U0), atol=1e-11)

    def test_closed_forms_agree_with_shell_metric(self, surface):
        _, chart = surface
        V = F.random_field(chart.dim, 5)
        for u in interior_points(chart, 3, 34):
            for p in ("slip", "hodge", "alpha:0.3"):
                sf = SH.shell_field(V, p)
                assert rel(SH.radial_trace(sf, chart, u, tol=math.inf), SH.radial_trace_direct(sf, chart, u)) < 1e-6
                assert rel(SH.tangential_trace(sf, chart, u, tol=math.inf), SH.tangential_trace_direct(sf, chart, u)) < 1e-6

    def test_consistency_failure_is_raised(self):
        sf = SH.shell_field(F.random_field(2, 6), "hodge")
        with pytest.raises(SH.ConsistencyFailure):
            SH.radial_trace(sf, G.ellipsoid(), U0, tol=-1.0)


class TestFRad:
    def test_slip_is_zero(self, surface):
        _, chart = surface
        V = F.random_field(chart.dim, 7)
        for u in interior_points(chart, 3, 35):
            assert np.all(SH.f_rad("slip", chart, u, V) == 0)

    def test_hodge_on_unit_sphere(self):
        V = F.random_field(2, 8)
        assert np.allclose(SH.f_rad("hodge", G.sphere(), U0, V), -2 * V.values(U0), atol=1e-12)

    def test_hodge_is_minus_twice_ricci(self, surface):
        _, chart = surface
        V = F.random_field(chart.dim, 9)
        for u in interior_points(chart, 5, 36):
            expected = -2 * F.ricci_action(chart, u, V.values(u))
            assert np.max(np.abs(SH.f_rad("hodge", chart, u, V) - expected)) < 1e-9

    def test_half_slip(self):
        V = F.random_field(2, 10)
        assert np.allclose(SH.f_rad("alpha:0.5", G.sphere(), U0, V), -2 * V.values(U0), atol=1e-12)
        u = (1.0, 0.6)
        gap = SH.f_rad("alpha:0.5", G.ellipsoid(), u, V) - SH.f_rad("hodge", G.ellipsoid(), u, V)
        assert np.linalg.norm(gap) > 1e-3


class TestTheorems:
    SURFACES = {"sphere": G.sphere, "ellipsoid": G.ellipsoid, "torus": G.torus}

    @pytest.mark.parametrize("name", sorted(SURFACES))
    def test_slip_gives_deformation(self, name):
        chart = self.SURFACES[name]()
        V = F.random_field(2, 11)
        for u in interior_points(chart, 4, 37):
            total = SH.ambient_bochner_tangential(SH.shell_field(V, "slip"), chart, u)
            assert rel(total, F.deformation(V, chart, u)) < 1e-7

    @pytest.mark.parametrize("name", sorted(SURFACES))
    def test_hodge_gives_hodge_laplacian(self, name):
        chart = self.SURFACES[name]()
        V = F.random_field(2, 12)
        for u in interior_points(chart, 4, 38):
            total = SH.ambient_bochner_tangential(SH.shell_field(V, "hodge"), chart, u)
            assert rel(total, F.hodge(V, chart, u)) < 1e-7

    @pytest.mark.parametrize("name", sorted(SURFACES))
    @pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75])
    def test_alpha_family(self, name, alpha):
        chart = self.SURFACES[name]()
        V = F.random_field(2, 13)
        for u in interior_points(chart, 3, 39):
            total = SH.ambient_bochner_tangential(SH.shell_field(V, BP.interpolating(alpha)), chart, u)
            assert rel(total, F.alpha_operator(V, chart, u, alpha)) < 1e-7

    def test_decomposition_everywhere(self, surface):
        _, chart = surface
        V = F.random_field(chart.dim, 14)
        for u in interior_points(chart, 3, 40):
            for p in ("slip", "hodge", "alpha:0.6"):
                d = SH.decomposition(SH.shell_field(V, p), chart, u)
                assert rel(d["total"], d["deformation"] + d["f_rad"]) < 1e-7

    @pytest.mark.parametrize("p", ["slip", "hodge", "alpha:0.5"])
    def test_orientation_independence(self, p):
        chart = G.ellipsoid()
        flipped = G.reorder_chart(chart, [1, 0])
        V = F.random_field(2, 15)
        W = TF([s for s in reversed(V.strings())])
        Wf = TF([s.replace("u1", "#").replace("u2", "u1").replace("#", "u2") for s in W.strings()])
        u = (1.0, 2.0)
        a = SH.ambient_bochner_tangential(SH.shell_field(V, p), chart, u)
        b = SH.ambient_bochner_tangential(SH.shell_field(Wf, p), flipped, u[::-1])
        assert np.allclose(a[::-1], b, atol=1e-10)
        alpha = BP.parse(p).equivalent_alpha
        assert rel(b, F.alpha_operator(Wf, flipped, u[::-1], alpha)) < 1e-7

    def test_three_dimensional_hypersurface(self):
        chart = G.seeded_custom_surface(3, dim=3)
        V = F.random_field(3, 16)
        for u in interior_points(chart, 2, 41):
            for alpha in (0.0, 0.4, 1.0):
                total = SH.ambient_bochner_tangential(SH.shell_field(V, BP.interpolating(alpha)), chart, u)
                assert rel(total, F.alpha_operator(V, chart, u, alpha)) < 1e-7


class TestStress:
    def test_slip_on_ellipsoid(self):
        V = F.random_field(2, 17)
        for u in interior_points(G.ellipsoid(), 5, 42):
            assert np.max(np.abs(SH.deformation_normal_tangential(SH.shell_field(V, "slip"), G.ellipsoid(), u))) < 1e-10

    def test_hodge_on_sphere_is_nonzero(self):
        V = F.random_field(2, 18)
        assert np.linalg.norm(SH.deformation_normal_tangential(SH.shell_field(V, "hodge"), G.sphere(), U0)) > 1e-6

    def test_plane_any_profile(self):
        V = TF(["u2", "u1^2"])
        for p in ("slip", "hodge", "alpha:0.2"):
            assert np.all(np.abs(SH.deformation_normal_tangential(SH.shell_field(V, p), plane(), (0.3, 0.3))) < 1e-15)


class TestRadialConstancy:
    def test_hodge_on_torus(self):
        V = F.random_field(2, 19)
        for u in interior_points(G.torus(), 5, 43):
            assert np.max(np.abs(SH.covariant_radial_constancy(SH.shell_field(V, "hodge"), G.torus(), u))) < 1e-10

    def test_slip_on_unit_sphere(self):
        V = F.random_field(2, 20)
        chart, u = flipped_sphere(), U0[::-1]
        low = G.intrinsic_at(chart, u).g @ V.values(u)
        assert np.allclose(SH.covariant_radial_constancy(SH.shell_field(V, "slip"), chart, u), -2 * low, atol=1e-12)
        # the catalog chart has the outward normal, where the sign flips
        low0 = G.intrinsic_at(G.sphere(), U0).g @ V.values(U0)
        assert np.allclose(SH.covariant_radial_constancy(SH.shell_field(V, "slip"), G.sphere(), U0), 2 * low0, atol=1e-12)

    @pytest.mark.parametrize("alpha", [0.2, 0.5, 0.9])
    def test_alpha_on_unit_sphere(self, alpha):
        V = F.random_field(2, 21)
        chart, u = flipped_sphere(), U0[::-1]
        low = G.intrinsic_at(chart, u).g @ V.values(u)
        out = SH.covariant_radial_constancy(SH.shell_field(V, BP.interpolating(alpha)), chart, u)
        assert np.allclose(out, (2 * alpha - 2) * low, atol=1e-12)
