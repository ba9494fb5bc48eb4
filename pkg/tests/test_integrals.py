import math

import numpy as np
import pytest

from arakelov.errors import DegenerateEstimate, InputError
from arakelov.integrals import McEstimate, estimate_an, estimate_hx, mc_integral, run_streams, split_counts
from arakelov.surface import SeededSampler, uniform_jacobian_samples
from arakelov.theta import log_theta_norm

# regression anchor: tau = i, 10^5 samples, seed 0, single stream
PINNED_HX = -0.264850847847636


class TestHx:
    def test_regression_anchor(self):
        est = estimate_hx(1j, 100_000, SeededSampler(0))
        assert est.mean == PINNED_HX
        assert est.stderr < 0.01
        assert est.dropped == 0

    def test_minimum_samples(self):
        with pytest.raises(InputError):
            estimate_hx(1j, 1, SeededSampler(0))

    def test_deterministic(self):
        a = estimate_hx(0.2 + 1.1j, 5000, SeededSampler(9), streams=4)
        b = estimate_hx(0.2 + 1.1j, 5000, SeededSampler(9), streams=4)
        assert (a.mean, a.stderr, a.samples) == (b.mean, b.stderr, b.samples)

    def test_threads_do_not_change_result(self):
        a = estimate_hx(1j, 8000, SeededSampler(4), streams=8, threads=1)
        b = estimate_hx(1j, 8000, SeededSampler(4), streams=8, threads=4)
        assert a.mean == b.mean and a.stderr == b.stderr

    def test_streams_equal_concatenated_single_stream(self):
        s = SeededSampler(5)
        est = estimate_hx(1j, 3000, s, streams=3)
        parts = [log_theta_norm(uniform_jacobian_samples(1j, s.substream(i), 1000), 1j) for i in range(3)]
        ref = McEstimate.from_values(np.concatenate(parts), 5)
        assert est.mean == ref.mean and est.stderr == ref.stderr

    def test_translation_invariance(self):
        a = estimate_hx(1j, 50_000, SeededSampler(11))
        b = estimate_hx(1j, 50_000, SeededSampler(12), shift=0.37 + 0.21j)
        assert abs(a.mean - b.mean) <= 3 * math.hypot(a.stderr, b.stderr)

    def test_stderr_scaling(self):
        small = estimate_hx(1j, 10_000, SeededSampler(13))
        large = estimate_hx(1j, 40_000, SeededSampler(14))
        assert small.stderr / large.stderr == pytest.approx(2.0, rel=0.2)

    def test_genus_two(self):
        est = estimate_hx(1j * np.eye(2), 20_000, SeededSampler(2))
        one = estimate_hx(1j, 20_000, SeededSampler(3))
        # a product torus has H(X1 x X2) = H(X1) + H(X2)
        assert abs(est.mean - 2 * one.mean) <= 3 * math.hypot(est.stderr, 2 * one.stderr)

    def test_dropped_samples_are_counted(self, monkeypatch):
        import arakelov.integrals as mod

        def fake(z, pm, tol):
            v = np.zeros(z.shape[0])
            v[:1] = -np.inf
            return v

        monkeypatch.setattr(mod, "log_theta_norm", fake)
        est = estimate_hx(1j, 1000, SeededSampler(0))
        assert est.dropped == 1 and est.samples == 999

    def test_degenerate_estimate(self, monkeypatch):
        import arakelov.integrals as mod

        def fake(z, pm, tol):
            v = np.zeros(z.shape[0])
            v[:5] = -np.inf
            return v

        monkeypatch.setattr(mod, "log_theta_norm", fake)
        with pytest.raises(DegenerateEstimate):
            estimate_hx(1j, 1000, SeededSampler(0))


class TestMcIntegral:
    def test_constant(self, square):
        est = mc_integral(lambda p: np.ones(p.shape), square, 1000, SeededSampler(0))
        assert est.mean == 1.0 and est.stderr == 0.0

    def test_green_mean_zero(self, square):
        x0 = 0.25 + 0.25j
        est = mc_integral(lambda p: square.green_function.values(p, x0), square, 100_000, SeededSampler(6))
        assert abs(est.mean) <= 3 * est.stderr

    def test_disc_indicator(self, tall):
        r = 0.3
        c = 0.5 + 1.0j

        def ind(p):
            return (tall.torus_distance(p, c) < r).astype(float)

        est = mc_integral(ind, tall, 200_000, SeededSampler(8))
        assert abs(est.mean - math.pi * r * r / tall.tau.imag) <= 3 * est.stderr


class TestAn:
    def test_n_one_is_zero_mean(self, square):
        est = estimate_an(0.1 + 0.2j, 1, square, 20_000, SeededSampler(1))
        assert abs(est.mean) <= 3 * est.stderr

    def test_monotone_in_n(self, square):
        vals = [estimate_an(0.3j, n, square, 2000, SeededSampler(2)).mean for n in (1, 2, 4, 8, 16)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_bad_n(self, square):
        with pytest.raises(InputError):
            estimate_an(0, 0, square, 100, SeededSampler(0))


def test_split_counts():
    assert split_counts(10, 3) == [4, 3, 3]
    assert sum(split_counts(12345, 16)) == 12345


def test_run_streams_order():
    s = SeededSampler(1)
    out = run_streams(s, 6, lambda sub, c: np.full(c, sub.stream_index), streams=3, threads=3)
    assert out.tolist() == [0, 0, 1, 1, 2, 2]
