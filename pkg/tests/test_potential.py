import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from wedgebound.potential import (HARTREE_EV, UnitsContext, WedgeGeometry, f_integrand, f_profile,
                                  image_oracle, image_potential_energy, k_coefficient, k_integrand,
                                  kernel_cache, potential_grid)

alphas = st.floats(0.3, 2 * math.pi)


def _brute(func, *args):
    """Plain scipy quadrature of a raw integrand in u = sqrt(eta)."""
    val, _ = integrate.quad(lambda u: 2 * u * func(u * u, *args), 0.0, 1.0 - 1e-9,
                            limit=400, epsabs=1e-13, epsrel=1e-12)
    return val


class TestK:
    def test_planar_vanishes(self):
        assert abs(k_coefficient(math.pi)) <= 1e-8

    def test_quarter_plane(self):
        assert k_coefficient(math.pi / 2) == pytest.approx(1.0, abs=1e-7)

    def test_half_plane_edge(self):
        assert k_coefficient(2 * math.pi) == pytest.approx(-1 / math.pi, abs=1e-7)

    @pytest.mark.parametrize("alpha", [math.pi / 2, 2 * math.pi])
    def test_brute_force_integrand(self, alpha):
        # prefactor 2/(alpha*pi) times the raw integral
        assert 2 / (alpha * math.pi) * _brute(k_integrand, alpha) == pytest.approx(
            k_coefficient(alpha), abs=1e-7)

    @given(alphas)
    def test_integrand_limit_at_one(self, alpha):
        expected = (math.pi ** 2 - alpha ** 2) / (6 * alpha)
        assert k_integrand(1.0 - 1e-9, alpha) == pytest.approx(expected, rel=1e-5, abs=1e-7)

    def test_cache_identical(self):
        kernel_cache.clear()
        a = k_coefficient(2.3)
        b = k_coefficient(2.3)
        c = k_coefficient(2.3, cached=False)
        assert a == b == pytest.approx(c, rel=1e-12)

    @pytest.mark.parametrize("alpha", [0.0, -1.0, 7.0, float("nan")])
    def test_rejects_bad_alpha(self, alpha):
        with pytest.raises(ValueError):
            k_coefficient(alpha)


class TestF:
    @pytest.mark.parametrize("theta", [0.0, 0.3, 0.8, 1.2, 1.45])
    def test_planar_secant(self, theta):
        assert f_profile(theta, math.pi) == pytest.approx(1 / math.cos(theta), rel=1e-8)

    def test_planar_pi_over_three(self):
        assert f_profile(math.pi / 3, math.pi) == pytest.approx(2.0, rel=1e-8)

    def test_quarter_plane_centre(self):
        assert f_profile(0.0, math.pi / 2) == pytest.approx(2 * math.sqrt(2), abs=1e-7)
        assert 4 / math.pi * _brute(f_integrand, 0.0, math.pi / 2) == pytest.approx(
            2 * math.sqrt(2), abs=1e-7)

    @given(alphas, st.floats(-0.49, 0.49))
    def test_parity(self, alpha, frac):
        th = frac * alpha
        assert abs(f_profile(th, alpha) - f_profile(-th, alpha)) <= 1e-10 * max(
            1.0, abs(f_profile(th, alpha)))

    @given(alphas, st.floats(0.0, 0.45))
    def test_integrand_limit_at_one(self, alpha, frac):
        th = frac * alpha
        expected = (math.pi / alpha) / (2 * math.cos(math.pi * th / alpha) ** 2)
        assert f_integrand(1.0 - 1e-9, th, alpha) == pytest.approx(expected, rel=1e-5)

    @pytest.mark.parametrize("alpha", [1.0, math.pi, 5.0])
    def test_wall_asymptote(self, alpha):
        th = 0.5 * alpha * (1 - 1e-6)
        assert f_profile(th, alpha) * math.cos(math.pi * th / alpha) == pytest.approx(
            math.pi / alpha, rel=1e-4)

    @pytest.mark.parametrize("frac", [0.5, 0.6, -0.5])
    def test_domain_error(self, frac):
        with pytest.raises(ValueError):
            f_profile(frac * 2.0, 2.0)


class TestImagePotential:
    def test_planar_single_image(self):
        for d in (0.5, 1.0, 7.0):
            assert image_potential_energy(d, 0.0, WedgeGeometry(math.pi)) == pytest.approx(
                -1 / (4 * d), rel=1e-10)

    def test_oracle_single_image(self):
        assert image_oracle(3.0, 0.0, 1) == pytest.approx(-1 / 12, rel=1e-14)

    def test_oracle_right_angle_centre(self):
        r = 2.0
        assert image_oracle(r, 0.0, 2) == pytest.approx(0.25 * (1 / r - 2 * math.sqrt(2) / r),
                                                        rel=1e-12)

    @given(st.floats(0.1, 20.0), st.floats(-0.7, 0.7))
    def test_oracle_right_angle_generic(self, r, theta):
        expected = 0.25 * (1 / r - 1 / (r * math.sin(math.pi / 4 - theta))
                           - 1 / (r * math.sin(math.pi / 4 + theta)))
        assert image_oracle(r, theta, 2) == pytest.approx(expected, rel=1e-10)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_matches_images(self, n):
        rng = np.random.default_rng(n)
        alpha = math.pi / n
        geo = WedgeGeometry(alpha)
        for _ in range(20):
            r = rng.uniform(0.2, 10.0)
            th = rng.uniform(-0.48, 0.48) * alpha
            assert image_potential_energy(r, th, geo) == pytest.approx(image_oracle(r, th, n),
                                                                       rel=1e-6)

    def test_interpolation_agrees(self):
        geo = WedgeGeometry(4.0)
        for th in (0.0, 0.7, 1.5, 1.95):
            assert image_potential_energy(2.0, th, geo, interpolate=True) == pytest.approx(
                image_potential_energy(2.0, th, geo), rel=1e-8)

    def test_outside_rejected(self):
        with pytest.raises(ValueError):
            image_potential_energy(1.0, 1.2, WedgeGeometry(2.0))

    def test_geometry_frozen_contrast(self):
        with pytest.raises(ValueError):
            WedgeGeometry(2.0, material_contrast=0.5)
        assert WedgeGeometry(2.0).inside(1.0, 0.9) and not WedgeGeometry(2.0).inside(1.0, 1.0)


class TestGrid:
    def test_symmetric_two_by_two(self):
        g = potential_grid(WedgeGeometry(math.pi), 2.0, 2, 2)
        assert g.values[:, 0] == pytest.approx(g.values[:, 1], rel=1e-12)

    def test_mask_and_sentinel(self):
        g = potential_grid(WedgeGeometry(2.0), 5.0, 6, 12, theta_span=2 * math.pi)
        outside = np.abs(g.theta) >= 1.0
        assert np.all(~g.inside[:, outside]) and np.all(np.isnan(g.values[:, outside]))
        assert np.all(np.isfinite(g.values[g.inside]))

    def test_nodes_match_scalar(self):
        geo = WedgeGeometry(4.5)
        g = potential_grid(geo, 8.0, 4, 6, interpolate=False)
        for i, r in enumerate(g.r):
            for j, th in enumerate(g.theta):
                assert g.values[i, j] == pytest.approx(image_potential_energy(r, th, geo),
                                                       rel=1e-12)

    def test_rows_cartesian(self):
        g = potential_grid(WedgeGeometry(2.0), 3.0, 2, 3)
        for r, th, x, y, _, _ in g.rows():
            assert math.hypot(x, y) == pytest.approx(r) and math.atan2(y, x) == pytest.approx(th)

    @pytest.mark.parametrize("args", [(0.0, 4, 4), (1.0, 1, 4), (1.0, 4, 1)])
    def test_bad_request(self, args):
        with pytest.raises(ValueError):
            potential_grid(WedgeGeometry(2.0), *args)


def test_units():
    assert UnitsContext("electronvolt").energy(-1 / 32) == pytest.approx(-HARTREE_EV / 32)
    assert UnitsContext().energy(0.5) == 0.5
    with pytest.raises(ValueError):
        UnitsContext("rydberg")
