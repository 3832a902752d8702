import numpy as np
import pytest

from thinshell import fields as F
from thinshell import geometry as G
from thinshell import oracle as O
from thinshell import shell as SH

from conftest import hemisphere, interior_points, plane


def reconstruct(chart, cp):
    return chart.point(cp.u) + cp.r * G.extrinsic_at(chart, cp.u).N


class TestClosestPoint:
    def test_point_on_surface(self):
        chart = G.ellipsoid()
        u = np.array([1.2, 2.3])
        cp = O.closest_point(chart, chart.point(u), u + 0.05)
        assert abs(cp.r) < 1e-12
        assert np.allclose(cp.u, u, atol=1e-10)

    def test_above_north_pole(self):
        cp = O.closest_point(hemisphere(), [0.0, 0.0, 1.1], [0.2, -0.1])
        assert cp.r == pytest.approx(0.1, abs=1e-12)
        assert np.allclose(cp.u, 0.0, atol=1e-12)

    def test_outward_distance_on_catalog_sphere(self):
        u = np.array([1.0, 0.5])
        p = 1.1 * G.sphere().point(u)
        cp = O.closest_point(G.sphere(), p, u + 0.1)
        assert cp.r == pytest.approx(0.1, abs=1e-12)

    def test_reconstruction_near_ellipsoid(self):
        chart = G.ellipsoid()
        rng = np.random.default_rng(51)
        for u in interior_points(chart, 10, 52, margin=0.15):
            ex = G.extrinsic_at(chart, u)
            r = rng.uniform(-0.4, 0.4) * ex.focal_radius
            p = chart.point(u) + r * ex.N
            cp = O.closest_point(chart, p, np.asarray(u) + rng.normal(0, 0.02, 2))
            assert np.linalg.norm(reconstruct(chart, cp) - p) < 1e-10 * (1 + np.linalg.norm(p))
            assert abs(cp.r) < G.extrinsic_at(chart, cp.u).focal_radius
            assert cp.r == pytest.approx(r, abs=1e-10)

    def test_outside_tube(self):
        with pytest.raises(O.OutsideTube):
            O.closest_point(hemisphere(), [0.0, 0.0, 2.5], [0.0, 0.0])

    def test_no_convergence(self):
        # the centre of the sphere is equidistant from every surface point
        with pytest.raises(O.NoConvergence):
            O.closest_point(G.sphere(), [0.0, 0.0, 0.0], [1.0, 1.0])


class TestCartesianLaplacian:
    def test_plane_polynomial_field_is_exact(self):
        V = F.TangentField.from_strings(["u1^2 + u1*u2", "3*u2^2 - u1"])
        u = (0.2, -0.3)
        for p in ("slip", "hodge"):
            out = O.cartesian_laplacian(SH.shell_field(V, p), plane(), u, h=0.1)
            assert np.allclose(out, F.bochner(V, plane(), u), atol=1e-10)

    def test_unit_sphere_slip(self):
        V = F.random_field(2, 1)
        sf = SH.shell_field(V, "slip")
        u = (1.1, 0.7)
        out = O.cartesian_laplacian(sf, G.sphere(), u, h=1e-3)
        ref = SH.ambient_bochner_tangential(sf, G.sphere(), u)
        assert np.max(np.abs(out - ref)) / (1 + np.max(np.abs(ref))) < 1e-5

    def test_ellipsoid_half_slip(self):
        V = F.random_field(2, 2)
        sf = SH.shell_field(V, "alpha:0.5")
        for u in interior_points(G.ellipsoid(), 3, 53):
            out = O.cartesian_laplacian(sf, G.ellipsoid(), u)
            ref = SH.ambient_bochner_tangential(sf, G.ellipsoid(), u)
            assert np.max(np.abs(out - ref)) / (1 + np.max(np.abs(ref))) < 1e-4

    @pytest.mark.parametrize("p", ["slip", "hodge", "alpha:0.5"])
    def test_second_order_in_step(self, p):
        V = F.random_field(2, 3)
        for chart in (G.ellipsoid(), G.torus()):
            for u in interior_points(chart, 2, 54):
                rep = O.oracle_convergence(SH.shell_field(V, p), chart, u)
                assert 1.8 <= rep["order"] <= 2.2
                assert rep["richardson_error"] < 1e-4
