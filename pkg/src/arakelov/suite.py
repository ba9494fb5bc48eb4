"""The acceptance suite: thirteen checks, each returning one pass/fail record.

``quick=True`` shrinks sample counts and grids for smoke runs; the default
sizes are the ones the criteria are stated at.
"""

from __future__ import annotations

import io
import math
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import elkies, fay, green, integrals, theta
from .surface import EllipticSurface, SeededSampler, format_complex, uniform_surface_points, validate_period_matrix

NAIVE_RADIUS = 30
LEMMA_SLACK_TOL = 1e-9


@dataclass(frozen=True)
class CriterionResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


# -- independent oracles ----------------------------------------------------------


def naive_theta(z: np.ndarray, omega: np.ndarray, radius: int = NAIVE_RADIUS) -> complex:
    """Direct box summation of the theta series around the origin, no recentring."""
    g = omega.shape[0]
    r = np.arange(-radius, radius + 1)
    n = np.stack([m.ravel() for m in np.meshgrid(*([r] * g), indexing="ij")], axis=-1).astype(float)
    expo = 1j * math.pi * np.einsum("ki,ij,kj->k", n, omega, n) + 2j * math.pi * (n @ z)
    return complex(np.sum(np.exp(expo)))


def random_period_matrix(rng: np.random.Generator, g: int, min_eig: float = 0.5) -> np.ndarray:
    """Random ``Omega`` with ``|Re| <= 1/2`` entries and ``Y`` eigenvalues in ``[min_eig, min_eig + 1.5]``."""
    x = rng.uniform(-0.5, 0.5, (g, g))
    x = (x + x.T) / 2
    q, _ = np.linalg.qr(rng.standard_normal((g, g)))
    y = q @ np.diag(rng.uniform(min_eig, min_eig + 1.5, g)) @ q.T
    y = (y + y.T) / 2
    return x + 1j * y


def _random_reduced_z(rng, omega: np.ndarray) -> np.ndarray:
    g = omega.shape[0]
    a, b = rng.random(g), rng.random(g)
    return a + omega @ b


# -- criteria ---------------------------------------------------------------------


def criterion_theta_oracle(seed: int, quick: bool) -> CriterionResult:
    rng = np.random.default_rng([seed, 1])
    count = 100 if quick else 1000
    worst = 0.0
    for k in range(count):
        g = 1 + k % 2
        om = random_period_matrix(rng, g)
        z = _random_reduced_z(rng, om)
        ref = naive_theta(z, om)
        val = theta.theta_series(z, validate_period_matrix(om), 1e-14).value
        worst = max(worst, abs(val - ref) / max(1.0, abs(ref)))
    t0 = theta.theta_series(0.0, 1j).value
    direct = naive_theta(np.zeros(1), np.array([[1j]]))
    anchor = abs(t0 - 1.0864348113) <= 1e-9 and abs(t0 - direct) <= 1e-12
    ok = worst <= 1e-12 and anchor
    return CriterionResult(
        "1 theta oracle", ok,
        f"max scaled error {worst:.2e} over {count} (z, Omega); theta(0;i) = {t0.real:.13f}",
    )


def criterion_theta_symmetry(seed: int, quick: bool) -> CriterionResult:
    rng = np.random.default_rng([seed, 2])
    count = 100 if quick else 1000
    worst_per, worst_even = 0.0, 0.0
    for g in (1, 2, 3):
        om = random_period_matrix(rng, g)
        pm = validate_period_matrix(om)
        z = rng.uniform(-1, 1, (count, g)) + 1j * rng.uniform(-1, 1, (count, g))
        m = rng.integers(-3, 4, (count, g))
        n = rng.integers(-3, 4, (count, g))
        shifted = z + m + n @ om.T
        base = theta.theta_norm_values(z, pm)
        worst_per = max(worst_per, float(np.max(np.abs(theta.theta_norm_values(shifted, pm) - base))))
        worst_even = max(worst_even, float(np.max(np.abs(theta.theta_norm_values(-z, pm) - base))))
    ok = worst_per <= 1e-10 and worst_even <= 1e-10
    return CriterionResult(
        "2 theta norm symmetry", ok, f"periodicity {worst_per:.2e}, evenness {worst_even:.2e} (g = 1, 2, 3)"
    )


def criterion_cg_rho(seed: int, quick: bool) -> CriterionResult:
    import mpmath

    t = time.perf_counter()
    top = 10**5 if quick else 10**6
    g = np.arange(1, top + 1, dtype=float)
    margin = 1.5 * g * np.log(g) + 4 - theta.c_g_rho_values(g, 1.0 / g)
    # confirm the tightest cases in high precision
    worst = np.argsort(margin)[:5] + 1
    with mpmath.workdps(40):
        exact = []
        for gg in worst:
            gg = int(gg)
            rho = mpmath.mpf(1) / gg
            eps = 0 if gg <= 3 else 1
            c = (
                mpmath.log(mpmath.mpf(gg + 2) / 2)
                + mpmath.mpf(gg * eps) / 2 * mpmath.log((gg + 2) / (mpmath.pi * mpmath.sqrt(3)))
                + mpmath.mpf(gg) * (1 + rho) / 4 * mpmath.log((1 + rho) / (2 * rho))
            )
            exact.append(float(mpmath.mpf(3) / 2 * gg * mpmath.log(gg) + 4 - c))
    violations = int(np.sum(margin < 0)) + sum(e < 0 for e in exact)
    elapsed = time.perf_counter() - t
    ok = violations == 0 and elapsed < 5
    return CriterionResult(
        "3 c_{g,1/g} bound", ok,
        f"{violations} violations for g <= {top}; min margin {min(exact):.6f} at g = {int(worst[0])}; "
        f"{'under' if elapsed < 5 else 'over'} 5s",
    )


def criterion_theta_upper(seed: int, quick: bool) -> CriterionResult:
    samples = 10**4 if quick else 10**5
    cases = [("tau=i, rho=1", 1j, 1.0), ("tau=0.5+1.5i, rho=1", 0.5 + 1.5j, 1.0), ("Omega=iI2, rho=1/2", 1j * np.eye(2), 0.5)]
    parts, total = [], 0
    for k, (label, om, rho) in enumerate(cases):
        pm = validate_period_matrix(np.atleast_2d(np.asarray(om, dtype=complex)))
        hx = integrals.estimate_hx(pm, samples, SeededSampler(seed, 40 + k), streams=8)
        rng = np.random.default_rng([seed, 4, k])
        z = rng.uniform(-2, 2, (1000, pm.genus)) + 1j * rng.uniform(-2, 2, (1000, pm.genus))
        chk = theta.check_theta_upper_bound(z, pm, hx, rho)
        total += chk.violations
        parts.append(f"{label}: {chk.violations} viol, max margin {chk.max_margin:.3f}")
    return CriterionResult("4 theta upper bound", total == 0, "; ".join(parts))


def criterion_green(seed: int, quick: bool) -> CriterionResult:
    samples = 10**4 if quick else 10**5
    rng = np.random.default_rng([seed, 5])
    S = EllipticSurface(1j)
    gf = S.green_function
    x = uniform_surface_points(S, SeededSampler(seed, 50), 1000)
    y = uniform_surface_points(S, SeededSampler(seed, 51), 1000)
    symmetric = bool(np.array_equal(gf.values(x, y), gf.values(y, x)))
    z_scores = []
    for k in range(5):
        base = complex(uniform_surface_points(S, SeededSampler(seed, 52 + k), 1)[0])
        est = integrals.mc_integral(lambda p: gf.values(p, base), S, samples, SeededSampler(seed, 60 + k))
        z_scores.append(abs(est.mean) / est.stderr)
    lap_err = 0.0
    for tau in (1j, 2j, 0.5 + 1.5j):
        s = EllipticSurface(tau)
        p = s.point(rng.random(), rng.random())
        q = p + 0.25 + 0.2j
        lap = green.laplacian_check(p, q, s)
        lap_err = max(lap_err, abs(abs(lap) / (2 * math.pi / tau.imag) - 1))
    base = complex(x[0])
    smooth = [gf(base + e * np.exp(0.7j), base) - math.log(e) for e in (1e-4, 1e-5, 1e-6)]
    drift = max(smooth) - min(smooth)
    ok = symmetric and max(z_scores) <= 3 and lap_err <= 0.01 and drift <= 1e-3
    return CriterionResult(
        "5 green function", ok,
        f"symmetric={symmetric}; max |mean|/stderr {max(z_scores):.2f}; "
        f"Laplacian rel err {lap_err:.2e}; near-diagonal drift {drift:.1e}",
    )


def criterion_normalization(seed: int, quick: bool) -> CriterionResult:
    samples = 10**4 if quick else 10**5
    parts, ok = [], True
    for k, tau in enumerate((1j, 2j)):
        c = green.torus_log_theta_mean(tau)
        hx = integrals.estimate_hx(tau, samples, SeededSampler(seed, 70 + k), streams=8)
        z = abs(c - hx.mean) / hx.stderr
        ok &= z <= 3
        parts.append(f"tau={format_complex(tau)}: c = {c:.6f}, H = {hx.mean:.6f} +- {hx.stderr:.1e} ({z:.2f} sigma)")
    return CriterionResult("6 normalization cross-check", ok, "; ".join(parts))


def criterion_fay(seed: int, quick: bool) -> CriterionResult:
    trials = 10 if quick else 100
    worst_res, worst_sep = 0.0, 0.0
    for k, tau in enumerate((1j, 2j, 0.4 + 1.3j)):
        s = EllipticSurface(tau)
        rng = np.random.default_rng([seed, 7, k])
        for n in (2, 3, 4):
            for _ in range(trials):
                sys_, xs = fay.random_instance(s, n, rng)
                r = fay.verify_fay_identity(sys_, xs)
                worst_res = max(worst_res, r.residual)
                worst_sep = max(worst_sep, r.separability_residual)
    ok = worst_res <= 1e-6 and worst_sep <= 1e-8
    return CriterionResult(
        "7 Fay identity", ok, f"max log residual {worst_res:.2e}, max separability residual {worst_sep:.2e}"
    )


def criterion_lemma(seed: int, quick: bool) -> CriterionResult:
    count = 60 if quick else 500
    taus = (1j, 2j, 0.4 + 1.3j)
    rng = np.random.default_rng([seed, 8])
    slacks = []
    for k in range(count):
        s = EllipticSurface(taus[k % 3])
        n = 1 + k % 6
        sys_, xs = fay.random_instance(s, n, rng)
        slacks.append(fay.lemma41_inequality(sys_, xs))
    viol = sum(v < -LEMMA_SLACK_TOL for v in slacks)
    return CriterionResult(
        "8 determinant inequality", viol == 0, f"{viol} violations over {count} instances, min slack {min(slacks):.2e}"
    )


def criterion_an_machinery(seed: int, quick: bool) -> CriterionResult:
    rng = np.random.default_rng([seed, 9])
    exact = all(elkies.a_n(n, Fraction(1)) == -elkies.harmonic_number(n, exact=True) for n in range(1, 21))
    fd_err, h = 0.0, 1e-5
    for _ in range(100):
        n = int(rng.integers(1, 51))
        x = float(rng.uniform(2 * h, 1 - 2 * h))
        fd = (elkies.a_n(n, x + h) - elkies.a_n(n, x - h)) / (2 * h)
        fd_err = max(fd_err, abs(fd - elkies.a_n_derivative(n, x)))
    top = 200 if quick else 1000
    grid = np.linspace(0, 1, 1000)
    m = np.arange(1, top + 1)[:, None]
    with np.errstate(divide="ignore"):
        terms = -(-np.expm1(m * np.log1p(-grid[None, :]))) / m  # -(1 - (1-x)^m)/m
    values = np.cumsum(terms, axis=0)  # row n-1 is a_n on the grid
    monotone = bool(np.all(np.diff(values, axis=1) <= 1e-13))
    floor_ok = bool(np.all(values >= values[:, -1:] - 1e-12))
    rad_err = 0.0
    for n in range(1, 31):
        for c in (0.1, 0.5, 1.0):
            rad_err = max(rad_err, abs(elkies.radial_integral(n, c, 1.0) - elkies.radial_series(n, c)))
    ok = exact and fd_err <= 1e-6 and monotone and floor_ok and rad_err <= 1e-9
    return CriterionResult(
        "9 a_n machinery", ok,
        f"exact harmonic={exact}; derivative FD err {fd_err:.1e}; decreasing={monotone and floor_ok}; "
        f"radial vs series {rad_err:.1e}",
    )


def criterion_an_cert(seed: int, quick: bool, tau: complex = 1j) -> CriterionResult:
    samples = 10**3 if quick else 10**4
    S = EllipticSurface(tau)
    atlas = green.build_torus_atlas(S, 0.3, 0.45)
    hx = S.hx
    xs = uniform_surface_points(S, SeededSampler(seed, 100), 5)
    viol, worst = 0, -math.inf
    for n in (1, 2, 4, 8, 16, 32, 64):
        bound = elkies.an_analytic_bound(n, elkies.BoundInputs.from_atlas(atlas, hx, n))
        for k, x in enumerate(xs):
            est = integrals.estimate_an(x, n, S, samples, SeededSampler(seed, 101, (k,)))
            gap = est.mean - 3 * est.stderr - bound
            worst = max(worst, est.mean - bound)
            viol += gap > 0
    return CriterionResult(
        "10 A_n certification", viol == 0, f"{viol} violations; max estimate - bound {worst:.2f} (tau={format_complex(tau)})"
    )


def criterion_theorem(seed: int, quick: bool, threads: int = 1) -> CriterionResult:
    trials = 40 if quick else 200
    parts, viol = [], 0
    for k, tau in enumerate((1j, 2j)):
        S = EllipticSurface(tau)
        atlas = green.build_torus_atlas(S, 0.3, 0.45)
        rel = math.inf
        for n in (2, 4, 8, 16, 32):
            res = elkies.verify_theorem1(S, atlas, n, trials, SeededSampler(seed, 110 + k, (n,)), threads=threads)
            viol += res.violations
            rel = min(rel, min(m.min_slack for m in res.summaries) / res.bound.total)
        parts.append(f"tau={format_complex(tau)}: min slack/bound {rel:.3f}")
    return CriterionResult(
        "11 energy bound end to end", viol == 0,
        f"{viol} violations over {trials} random + {trials} clustered per n; " + "; ".join(parts),
    )


def criterion_merkl(seed: int, quick: bool) -> CriterionResult:
    c0 = elkies.merkl_c0(2, 0.75, 2, 1)
    literal = abs(c0 - 7346.69) <= 0.01
    worst = 0.0
    for n in (1, 2, 10, 100):
        for m, r1, M, C1 in ((1, 0.6, 1, 0.5), (2, 0.75, 2, 1), (3, 0.9, 1.5, 2)):
            H = -0.26
            C2 = 0.5 * C1
            cor = elkies.corollary_bound(n, 1, H, m, r1, M, C1, C2)
            ref = elkies.theorem1_bound(
                elkies.BoundInputs(elkies.merkl_c0(m, r1, M, C1), C1, C2, r1, 1.0, H, n=n)
            )
            worst = max(worst, abs(cor.log_total - ref.log_total) / abs(ref.log_total))
    ok = literal and worst <= 1e-10
    return CriterionResult(
        "12 Merkl formula", ok,
        f"merkl_c0(2, 0.75, 2, 1) = {c0:.5f} (target 7346.69 +- 0.01: {'ok' if literal else 'off'}); "
        f"corollary vs main path rel diff {worst:.1e}",
    )


def criterion_reproducibility(seed: int, quick: bool, tau: complex = 1j) -> CriterionResult:
    from .cli import parse_run_config, run

    t = f"{tau.real!r}+{tau.imag!r}i"
    commands = [
        ["theta", "--tau", t, "--z", "0.1+0.2i"],
        ["theta", "--omega", None, "--z", "0.1+0.2i,0.3-0.1i"],
        ["hx", "--tau", t, "--samples", "4000"],
        ["an", "--tau", t, "--x", "0.2+0.1i", "--n", "8", "--samples", "2000"],
        ["green", "--tau", t, "--x", "0.1", "--y", "0.3+0.2i"],
        ["atlas", "--tau", t],
        ["fay", "--tau", t, "--n", "3", "--trials", "5"],
        ["bound", "--tau", t, "--n", "10", "--hx-samples", "4000"],
        ["verify", "--tau", t, "--n", "8", "--trials", "20", "--hx-samples", "4000"],
        ["merkl-c0", "--m", "2", "--r1", "0.75", "--M", "2", "--C1", "1"],
    ]
    import tempfile
    from pathlib import Path

    with tempfile.TemporaryDirectory() as tmp:
        om = Path(tmp) / "omega.txt"
        om.write_text("2\n1i 0.2\n0.2 1.5i\n")
        bad = []
        for cmd in commands:
            cmd = [str(om) if c is None else c for c in cmd]
            outs = []
            for threads in ("1", "1", "4"):
                buf = io.StringIO()
                run(parse_run_config(cmd + ["--seed", str(seed), "--threads", threads]), buf)
                outs.append(buf.getvalue().encode("utf-8"))
            if len(set(outs)) != 1:
                bad.append(cmd[0])
    return CriterionResult(
        "13 reproducibility", not bad,
        f"{len(commands)} commands x (rerun, 4 threads): " + ("identical" if not bad else "differ: " + ", ".join(bad)),
    )


def run_suite(tau: complex = 1j, seed: int = 7, quick: bool = False, threads: int = 1, only=None) -> list[CriterionResult]:
    """Run every criterion (or those whose leading number is in ``only``)."""
    checks = [
        (1, lambda: criterion_theta_oracle(seed, quick)),
        (2, lambda: criterion_theta_symmetry(seed, quick)),
        (3, lambda: criterion_cg_rho(seed, quick)),
        (4, lambda: criterion_theta_upper(seed, quick)),
        (5, lambda: criterion_green(seed, quick)),
        (6, lambda: criterion_normalization(seed, quick)),
        (7, lambda: criterion_fay(seed, quick)),
        (8, lambda: criterion_lemma(seed, quick)),
        (9, lambda: criterion_an_machinery(seed, quick)),
        (10, lambda: criterion_an_cert(seed, quick, complex(tau))),
        (11, lambda: criterion_theorem(seed, quick, threads)),
        (12, lambda: criterion_merkl(seed, quick)),
        (13, lambda: criterion_reproducibility(seed, quick, complex(tau))),
    ]
    out = []
    for num, fn in checks:
        if only is not None and num not in only:
            continue
        t = time.perf_counter()
        r = fn()
        out.append(CriterionResult(r.name, r.passed, r.detail, time.perf_counter() - t))
    return out
