import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arakelov.errors import ChartTooLarge, CoincidentPoints, InvalidInputs, TooCloseToSingularity
from arakelov.green import (
    TorusChartAtlas,
    build_torus_atlas,
    coverage_radius_on_grid,
    estimate_c0,
    green,
    laplacian_check,
    np_abs_log_gap,
    torus_log_theta_mean,
)
from arakelov.integrals import estimate_hx, mc_integral
from arakelov.surface import EllipticSurface, SeededSampler, uniform_surface_points


def eta_normalization(tau: complex) -> float:
    """``log((Im tau)^{1/4} |eta(tau)|)`` from the product formula."""
    q = mpmath.exp(2j * mpmath.pi * tau)
    eta = mpmath.exp(1j * mpmath.pi * tau / 12) * mpmath.qp(q)
    return float(0.25 * mpmath.log(tau.imag) + mpmath.log(abs(eta)))


def green_oracle(x: complex, y: complex, tau: complex) -> float:
    d = x - y
    q = mpmath.exp(1j * mpmath.pi * tau)
    t1 = mpmath.jtheta(1, mpmath.pi * d, q)
    eta = mpmath.exp(1j * mpmath.pi * tau / 12) * mpmath.qp(q**2)
    return float(mpmath.log(abs(t1)) - mpmath.pi * d.imag**2 / tau.imag - mpmath.log(abs(eta)))


class TestNormalization:
    @pytest.mark.parametrize(
        "tau, value", [(1j, -0.263672070248918), (2j, -0.350315467818911)]
    )
    def test_pinned_values(self, tau, value):
        assert torus_log_theta_mean(tau) == pytest.approx(value, abs=1e-13)

    @pytest.mark.parametrize("tau", [1j, 2j, 0.5 + 1.5j, 0.4 + 1.3j, -0.2 + 0.7j])
    def test_matches_eta(self, tau):
        assert torus_log_theta_mean(tau) == pytest.approx(eta_normalization(tau), abs=1e-13)

    @pytest.mark.parametrize("tau", [1j, 2j])
    def test_agrees_with_monte_carlo(self, tau):
        hx = estimate_hx(tau, 100_000, SeededSampler(21))
        assert abs(torus_log_theta_mean(tau) - hx.mean) <= 3 * hx.stderr


class TestGreen:
    def test_hand_symmetry(self, square):
        a = green(0.3 + 0.2j, 0.7 + 0.5j, square)
        b = green(0.7 + 0.5j, 0.3 + 0.2j, square)
        assert a == b

    @settings(max_examples=200, deadline=None)
    @given(st.complex_numbers(max_magnitude=5), st.complex_numbers(max_magnitude=5))
    def test_exact_symmetry(self, x, y):
        gf = EllipticSurface(0.4 + 1.3j).green_function
        assert np.array_equal(gf.values(x, y), gf.values(y, x))

    @pytest.mark.parametrize("tau", [1j, 0.5 + 1.5j, 0.4 + 1.3j])
    def test_against_jacobi_theta(self, tau, rng):
        s = EllipticSurface(tau)
        for _ in range(10):
            x, y = complex(*rng.random(2)), complex(*rng.random(2)) * (1 + 0.5j)
            assert green(x, y, s) == pytest.approx(green_oracle(x, y, tau), abs=1e-12)

    def test_translation_homogeneity(self, skew, rng):
        gf = skew.green_function
        for lam in (0.37 - 0.11j, 2 + 3 * skew.tau, 0.05j):
            x, y = complex(*rng.random(2)), complex(*rng.random(2))
            assert gf(x + lam, y + lam) == pytest.approx(gf(x, y), abs=1e-12)

    def test_mean_zero(self, square):
        gf = square.green_function
        bases = uniform_surface_points(square, SeededSampler(31), 5)
        for k, y in enumerate(bases):
            est = mc_integral(lambda p: gf.values(p, complex(y)), square, 100_000, SeededSampler(32, k))
            assert abs(est.mean) <= 3 * est.stderr

    def test_near_diagonal(self, square):
        x = 0.3 + 0.6j
        vals = [green(x, x + h, square) - math.log(h) for h in (1e-4, 1e-5)]
        assert abs(vals[0] - vals[1]) < 1e-3

    def test_coincident(self, square):
        with pytest.raises(CoincidentPoints):
            green(0.2 + 0.3j, 1.2 + 1.3j, square)
        assert square.green_function.values(0.1, 0.1) == -np.inf


class TestLaplacian:
    @pytest.mark.parametrize("tau, expected", [(1j, 2 * math.pi), (2j, math.pi), (0.5 + 1.5j, 2 * math.pi / 1.5)])
    def test_magnitude_and_sign(self, tau, expected):
        s = EllipticSurface(tau)
        lap = laplacian_check(0.2 + 0.7j, 0.6 + 0.3j, s)
        assert lap < 0  # superharmonic away from the pole
        assert abs(lap) == pytest.approx(expected, rel=0.01)

    def test_constant_in_x(self, square):
        a = laplacian_check(0.2 + 0.7j, 0.6 + 0.3j, square)
        b = laplacian_check(0.9 + 0.1j, 0.6 + 0.3j, square)
        assert a == pytest.approx(b, rel=1e-3)

    def test_too_close(self, square):
        with pytest.raises(TooCloseToSingularity):
            laplacian_check(0.5, 0.5 + 5e-3, square)


@pytest.fixture(scope="module")
def atlas():
    return build_torus_atlas(EllipticSurface(1j), 0.3, 0.45)


class TestAtlas:
    def test_chart_count_and_forms(self, atlas):
        assert 4 <= atlas.m <= 9
        assert atlas.C1 == 0.5 and atlas.C2 == 0.5
        assert atlas.M == 1.0

    def test_covers(self, atlas):
        assert coverage_radius_on_grid(EllipticSurface(1j), atlas.centers, 200) < atlas.r1

    def test_c0_anchor(self, atlas):
        # regression anchor for the grid sup estimate
        assert atlas.C0 == pytest.approx(1.3760595721807487, abs=1e-9)
        assert atlas.C0 == pytest.approx(1.05 * atlas.c0_raw)
        assert atlas.C2 <= math.exp(4 * atlas.C0) / (2 * math.pi)

    def test_c0_refinement(self, atlas, square):
        c64 = estimate_c0(atlas, square, 64)
        c128 = estimate_c0(atlas, square, 128)
        assert abs(c128 - c64) / c64 < 0.01

    def test_c0_dominates_random_pairs(self, atlas, square):
        r = SeededSampler(5).uniform((10_000, 4))
        p = atlas.r2 * np.sqrt(r[:, 0]) * np.exp(2j * math.pi * r[:, 1])
        q = atlas.r2 * np.sqrt(r[:, 2]) * np.exp(2j * math.pi * r[:, 3])
        gaps = np_abs_log_gap(p - q, square)
        assert np.max(gaps) <= atlas.C0

    def test_density_floor(self, atlas, square):
        with pytest.raises(InvalidInputs):
            estimate_c0(atlas, square, 20)

    def test_gap_too_large(self, square):
        with pytest.raises(InvalidInputs):
            build_torus_atlas(square, 0.1, 1.3)

    def test_chart_does_not_embed(self, square):
        with pytest.raises(ChartTooLarge):
            build_torus_atlas(square, 0.3, 0.6)

    @pytest.mark.parametrize("tau", [0.4 + 1.3j, 2j, 0.5 + 1.5j])
    def test_other_lattices(self, tau):
        s = EllipticSurface(tau)
        a = build_torus_atlas(s, 0.3, 0.45)
        assert coverage_radius_on_grid(s, a.centers) < 0.3
        assert a.C1 == pytest.approx(0.5 / tau.imag)

    def test_text_round_trip(self, atlas, tmp_path):
        path = tmp_path / "atlas.txt"
        atlas.save(path)
        back = TorusChartAtlas.load(path)
        assert back.C0 == atlas.C0 and back.m == atlas.m
        np.testing.assert_array_equal(back.centers, atlas.centers)
        assert back.to_text() == atlas.to_text()
