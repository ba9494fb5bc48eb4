import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arakelov.errors import TruncationRadiusExceeded
from arakelov.integrals import McEstimate
from arakelov.suite import naive_theta, random_period_matrix
from arakelov.surface import validate_period_matrix
from arakelov.theta import (
    c_g_rho,
    c_g_rho_values,
    check_theta_upper_bound,
    gaussian_tail_bound,
    log_theta_norm,
    theta_norm,
    theta_norm_pic0,
    theta_series,
    truncation_radius,
)


def jacobi_theta3(z: complex, tau: complex) -> complex:
    q = mpmath.exp(1j * mpmath.pi * tau)
    return complex(mpmath.jtheta(3, mpmath.pi * z, q))


class TestSeries:
    def test_origin_square(self):
        v = theta_series(0, 1j)
        assert v.value == pytest.approx(1.0864348112133, abs=1e-12)
        assert v.value.imag == 0
        assert 0 <= v.tail_bound <= 1e-12

    def test_hand_series(self):
        # 1 + 2 e^{-pi} + 2 e^{-4 pi} + 2 e^{-9 pi} + ...
        ref = 1 + 2 * sum(math.exp(-math.pi * k * k) for k in range(1, 10))
        assert theta_series(0, 1j).value.real == pytest.approx(ref, abs=1e-15)

    def test_odd_characteristic_zero(self):
        assert abs(theta_series((1 + 1j) / 2, 1j).value) < 1e-12

    def test_diagonal_factorisation(self):
        v = theta_series(np.zeros(2), 1j * np.eye(2)).value
        assert v == pytest.approx(theta_series(0, 1j).value ** 2, abs=1e-12)
        assert v.real == pytest.approx(1.18034, abs=1e-5)

    def test_block_diagonal(self, rng):
        o1, o2 = random_period_matrix(rng, 1), random_period_matrix(rng, 2)
        om = np.zeros((3, 3), dtype=complex)
        om[:1, :1], om[1:, 1:] = o1, o2
        v = theta_series(np.zeros(3), om).value
        assert v == pytest.approx(theta_series(0, o1).value * theta_series(np.zeros(2), o2).value, abs=1e-10)

    @pytest.mark.parametrize("tau", [1j, 0.5 + 1.5j, -0.3 + 0.8j, 2j])
    def test_against_mpmath(self, tau, rng):
        for _ in range(20):
            z = complex(rng.uniform(-2, 2), rng.uniform(-1.5, 1.5))
            ref = jacobi_theta3(z, tau)
            val = theta_series(z, tau).value
            assert abs(val - ref) <= 1e-12 * max(1.0, abs(ref))

    def test_against_naive_box(self, rng):
        for g in (1, 2):
            for _ in range(25):
                om = random_period_matrix(rng, g)
                z = rng.random(g) + om @ rng.random(g)
                ref = naive_theta(z, om)
                assert abs(theta_series(z, om).value - ref) <= 1e-12 * max(1.0, abs(ref))

    def test_tail_bound_is_certified(self):
        # the bound must dominate the true omitted mass for a 1-d Gaussian
        lam = 0.7
        for radius in range(0, 6):
            for u in (0.0, 0.25, 0.5):
                tail = sum(math.exp(-math.pi * lam * (k - u) ** 2) for k in range(-60, 61) if abs(k) > radius)
                assert tail <= gaussian_tail_bound(radius, lam, 1) * (1 + 1e-12)

    def test_radius_cap(self):
        with pytest.raises(TruncationRadiusExceeded):
            truncation_radius(1e-12, 1e-7, 1)

    def test_bad_tolerance(self):
        with pytest.raises(ValueError):
            theta_series(0, 1j, tol=0)


class TestNorm:
    def test_origin(self):
        assert theta_norm(0, 1j) == pytest.approx(1.0864348112133, abs=1e-12)

    def test_periodic_hand_case(self):
        z = 0.3 + 0.4j
        assert theta_norm(z + 5 + 2j, 1j) == pytest.approx(theta_norm(z, 1j), abs=1e-10)

    @settings(max_examples=100, deadline=None)
    @given(
        st.floats(-3, 3), st.floats(-3, 3),
        st.integers(-3, 3), st.integers(-3, 3),
        st.floats(-0.5, 0.5), st.floats(0.5, 2.5),
    )
    def test_periodic_and_even(self, x, y, m, n, tr, ti):
        tau = complex(tr, ti)
        z = complex(x, y)
        base = theta_norm(z, tau)
        assert theta_norm(z + m + n * tau, tau) == pytest.approx(base, abs=1e-10)
        assert theta_norm(-z, tau) == pytest.approx(base, abs=1e-10)

    def test_far_points_do_not_overflow(self):
        # |theta| itself would overflow here; the norm stays bounded
        v = float(log_theta_norm(0.2 + 40j, 1j))
        assert math.isfinite(v)
        assert v == pytest.approx(float(log_theta_norm(0.2 + 0j, 1j)), abs=1e-10)

    def test_genus_three_periodicity(self, rng):
        om = random_period_matrix(rng, 3)
        pm = validate_period_matrix(om)
        z = rng.normal(size=3) + 1j * rng.normal(size=3)
        m, n = rng.integers(-3, 4, 3), rng.integers(-3, 4, 3)
        assert theta_norm(z + m + om @ n, pm) == pytest.approx(theta_norm(z, pm), abs=1e-10)

    def test_zero_gives_minus_inf(self):
        with np.errstate(divide="ignore"):
            v = float(log_theta_norm(0.5 + 0.5j, 1j))
        assert v < -30


class TestPic0:
    def test_vanishes_at_origin(self, square):
        assert theta_norm_pic0(0, square) < 1e-10

    def test_positive_off_lattice(self, square):
        assert theta_norm_pic0(0.5, square) > 0
        assert theta_norm_pic0(0.5, square) == pytest.approx(theta_norm(0.5 + (1 + 1j) / 2, 1j))

    def test_even(self, skew, rng):
        for _ in range(10):
            w = complex(rng.random(), rng.random())
            assert theta_norm_pic0(w, skew) == pytest.approx(theta_norm_pic0(-w, skew), abs=1e-12)


class TestConstant:
    def test_genus_one(self):
        c = c_g_rho(1, 1)
        assert c.value == pytest.approx(math.log(1.5), abs=1e-15)
        assert c.epsilon_g == 0

    def test_genus_four(self):
        ref = math.log(3) + 2 * math.log(6 / (math.pi * math.sqrt(3))) + 1.25 * math.log(2.5)
        assert c_g_rho(4, 0.25).value == pytest.approx(ref, abs=1e-14)
        assert c_g_rho(4, 0.25).value == pytest.approx(2.43942, abs=1e-5)
        assert c_g_rho(4, 0.25).epsilon_g == 1

    def test_genus_three_has_no_middle_term(self):
        c = c_g_rho(3, 1 / 3)
        assert c.epsilon_g == 0
        assert c.value == pytest.approx(math.log(2.5) + 0.75 * (4 / 3) * math.log(2), abs=1e-14)

    def test_vectorised_matches_scalar(self):
        gs = np.arange(1, 50)
        np.testing.assert_allclose(c_g_rho_values(gs, 1 / gs), [c_g_rho(g, 1 / g).value for g in gs], rtol=1e-14)

    def test_genus_bound_sweep(self):
        g = np.arange(1, 10**6 + 1, dtype=float)
        assert np.all(c_g_rho_values(g, 1 / g) <= 1.5 * g * np.log(g) + 4)


class TestUpperBound:
    def test_zero_margin_is_minus_inf(self):
        hx = McEstimate(-0.26, 0.001, 10**5, 0)
        with np.errstate(divide="ignore"):
            chk = check_theta_upper_bound(np.array([[0.5 + 0.5j]]), 1j, hx, 1.0)
        assert chk.margins[0] < -30 and chk.violations == 0

    def test_square_torus(self, square, rng):
        z = rng.uniform(-2, 2, (1000, 1)) + 1j * rng.uniform(-2, 2, (1000, 1))
        chk = check_theta_upper_bound(z, 1j, square.hx, 1.0)
        assert chk.violations == 0
        assert chk.threshold == pytest.approx(3 * square.hx.stderr)

    def test_violation_counting(self):
        # a fake H estimate far too large forces violations
        chk = check_theta_upper_bound(np.zeros((3, 1)), 1j, McEstimate(5.0, 0.01, 10**5, 0), 1.0)
        assert chk.violations == 3
