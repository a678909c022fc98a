import math

import numpy as np
import pytest

from thurston_willmore import (
    CylindricalPoint,
    DomainError,
    GeometryParams,
    ambient_metric_cylindrical,
    orbit_volume_factor,
    quotient_metric,
    ricci_normal,
    sectional_curvature,
)


class TestGeometryParams:
    def test_domain_radius_negative_k(self):
        g = GeometryParams(-1.0, -0.5)
        assert g.domain_radius == 2.0
        assert GeometryParams(-4.0, 0.0).domain_radius == 1.0

    def test_domain_radius_infinite_for_nonnegative_k(self):
        assert math.isinf(GeometryParams(0.0, 0.5).domain_radius)
        assert math.isinf(GeometryParams(1.0, 0.0).domain_radius)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            GeometryParams(float("nan"), 0.0)
        with pytest.raises(ValueError):
            GeometryParams(0.0, float("inf"))

    def test_dict_round_trip(self):
        g = GeometryParams(0.25, -0.5)
        assert GeometryParams.from_dict(g.to_dict()) == g


class TestSectionalCurvature:
    def test_flat_space(self):
        assert sectional_curvature(GeometryParams(0.0, 0.0), 0.7) == 0.0

    def test_space_form_degeneracy(self):
        # k = 4 tau^2 cancels the nu dependence exactly
        g = GeometryParams(1.0, 0.5)
        for nu in np.linspace(-1.0, 1.0, 17):
            assert sectional_curvature(g, nu) == pytest.approx(0.25, abs=0.0)

    def test_vertical_plane_value(self):
        assert sectional_curvature(GeometryParams(0.0, 0.5), 1.0) == pytest.approx(-0.75)

    def test_rejects_large_nu(self):
        with pytest.raises(ValueError):
            sectional_curvature(GeometryParams(0.0, 0.5), 1.1)

    def test_accepts_roundoff_overshoot(self):
        assert sectional_curvature(GeometryParams(0.0, 0.5), 1.0 + 1e-10) < 0.0


class TestRicciNormal:
    def test_flat_space(self):
        assert ricci_normal(GeometryParams(0.0, 0.0), 0.3) == 0.0

    def test_product_direct_value(self):
        assert ricci_normal(GeometryParams(1.0, 0.0), 0.0) == pytest.approx(1.0)

    def test_hand_value(self):
        # -1 - 2(0.25) - (-1 - 1)(0.09) = -1.32
        assert ricci_normal(GeometryParams(-1.0, -0.5), 0.3) == pytest.approx(-1.32)

    def test_frame_sum_oracle(self):
        # Ric(n,n) equals the sum of sectional curvatures of two orthogonal
        # planes containing n; the vertical components of the two plane
        # normals split 1 - nu^2 at an arbitrary angle.
        rng = np.random.default_rng(1234)
        for g in (GeometryParams(-1.0, -0.5), GeometryParams(0.0, 0.5),
                  GeometryParams(1.0, 0.3), GeometryParams(0.25, -0.4)):
            for nu in np.linspace(-1.0, 1.0, 21):
                psi = rng.uniform(0.0, 2.0 * math.pi)
                rest = math.sqrt(max(0.0, 1.0 - nu * nu))
                nu1 = rest * math.cos(psi)
                nu2 = rest * math.sin(psi)
                total = sectional_curvature(g, nu1) + sectional_curvature(g, nu2)
                assert total == pytest.approx(ricci_normal(g, nu), abs=1e-12)


class TestAmbientMetric:
    def test_flat_cylindrical(self):
        g = GeometryParams(0.0, 0.0)
        m = ambient_metric_cylindrical(g, CylindricalPoint(2.0, 0.3, -1.0))
        np.testing.assert_allclose(m, np.diag([1.0, 4.0, 1.0]))

    def test_bundle_coupling(self):
        g = GeometryParams(0.0, 0.5)
        m = ambient_metric_cylindrical(g, CylindricalPoint(1.0, 0.0, 0.0))
        expected = np.array([[1.0, 0.0, 0.0], [0.0, 1.25, -0.5], [0.0, -0.5, 1.0]])
        np.testing.assert_allclose(m, expected)

    def test_positive_definite_on_random_grid(self):
        rng = np.random.default_rng(99)
        for _ in range(200):
            k = rng.uniform(-1.5, 1.5)
            tau = rng.uniform(-1.0, 1.0)
            g = GeometryParams(k, tau)
            hi = 0.95 * g.domain_radius if k < 0 else 5.0
            p = CylindricalPoint(rng.uniform(0.0, hi), rng.uniform(0, 7), rng.uniform(-3, 3))
            m = ambient_metric_cylindrical(g, p)
            np.testing.assert_allclose(m, m.T)
            assert m[0, 0] > 0.0
            if p.rho > 0.0:
                assert np.linalg.det(m) > 0.0

    def test_rejects_rho_at_domain_radius(self):
        g = GeometryParams(-1.0, 0.0)
        with pytest.raises(DomainError):
            ambient_metric_cylindrical(g, CylindricalPoint(2.0, 0.0, 0.0))

    def test_rejects_negative_rho(self):
        with pytest.raises(ValueError):
            CylindricalPoint(-0.1, 0.0, 0.0)


class TestQuotientMetric:
    def test_euclidean(self):
        assert quotient_metric(GeometryParams(0.0, 0.0), 3.0) == (1.0, 1.0)

    def test_direct_values(self):
        g_uu, g_vv = quotient_metric(GeometryParams(-1.0, -0.5), 1.0)
        assert g_uu == pytest.approx(1.0 / 0.75**2)
        assert g_vv == pytest.approx(0.8)
        assert quotient_metric(GeometryParams(1.0, 0.0), 2.0) == pytest.approx((0.25, 1.0))

    def test_rejects_outside_domain(self):
        with pytest.raises(DomainError):
            quotient_metric(GeometryParams(-1.0, 0.0), 2.5)
        with pytest.raises(DomainError):
            quotient_metric(GeometryParams(0.0, 0.0), -0.5)


class TestOrbitVolumeFactor:
    def test_axis(self):
        assert orbit_volume_factor(GeometryParams(-1.0, 0.3), 0.0) == 0.0

    def test_euclidean_circumference(self):
        for r in (0.1, 1.0, 7.5):
            assert orbit_volume_factor(GeometryParams(0.0, 0.0), r) == pytest.approx(r)

    def test_direct_value(self):
        assert orbit_volume_factor(GeometryParams(0.0, 0.5), 2.0) == pytest.approx(
            2.0 * math.sqrt(2.0)
        )

    def test_strictly_increasing_near_zero_and_linear_limit(self):
        for g in (GeometryParams(-1.0, 0.5), GeometryParams(0.0, 0.3), GeometryParams(-0.25, 0.0)):
            u = np.linspace(0.0, 0.5, 200)
            mu = orbit_volume_factor(g, u)
            assert np.all(np.diff(mu) > 0.0)
            small = np.array([1e-6, 1e-7, 1e-8])
            np.testing.assert_allclose(orbit_volume_factor(g, small) / small, 1.0, atol=1e-10)
