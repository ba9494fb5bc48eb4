"""Explicit energy bounds: a_n, the radial integral, A_n and the final constant.

The main bound, for pairwise different ``x_1..x_n`` on a genus-``g``
surface with chart constants ``(r1, r2, C0, C1, C2)``, reads

    sum_{j<k} g(x_j, x_k) <= n * ( (C1 e^{4 C0} / (2 C2) + 1)(log n + 1)
                                   + 3/2 g log g + 3 - (g+1)/g H(X)
                                   + C0 - log(r2 - r1) ).
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np
from scipy import integrate

from .errors import (
    CoincidentPoints,
    InputError,
    InvalidInputs,
    InvalidMerklRange,
    QuadratureNonConvergence,
)
from .surface import EllipticSurface, PointConfiguration, SeededSampler, uniform_surface_points
from .theta import c_g_rho

SERIES_MAX_N = 1000
COMPENSATED_FROM = 50
RADIAL_ABS_TOL = 1e-10
SERIES_CONDITION_LOG = math.log(1e4)


# -- a_n and friends ---------------------------------------------------------


def a_n(n: int, x, method: str = "auto"):
    """``a_n(x) = sum_{j=1}^n binom(n, j) (-x)^j / j`` on ``0 <= x <= 1``.

    ``method``:

    ``"exact"``
        rational arithmetic; also selected automatically when ``x`` is a
        :class:`~fractions.Fraction` or an ``int``.
    ``"series"``
        the alternating sum in floating point (compensated for ``n > 50``);
        raises :class:`OverflowError` for ``n > 1000``.
    ``"integral"``
        ``-sum_{m=1}^n (1 - (1-x)^m)/m``, the termwise integral of
        ``a_n'(t) = ((1-t)^n - 1)/t``; no cancellation.
    ``"auto"``
        the series while it is well conditioned (``(1+x)^n <= 1e4``, which
        bounds the sum of absolute terms), the integral form otherwise.
    """
    if n < 1:
        raise InputError("n must be >= 1")
    if isinstance(x, (Fraction, int)) and method in ("auto", "exact"):
        method = "exact"
    if not 0 <= x <= 1:
        raise InputError(f"a_n is used on [0, 1], got x = {x}")
    if method == "exact":
        xq = Fraction(x)
        return sum(Fraction(math.comb(n, j)) * (-xq) ** j / j for j in range(1, n + 1))
    if method == "auto":
        well_conditioned = n <= SERIES_MAX_N and n * math.log1p(float(x)) <= SERIES_CONDITION_LOG
        method = "series" if well_conditioned else "integral"
    x = float(x)
    if method == "series":
        if n > SERIES_MAX_N:
            raise OverflowError(f"binomial series overflows for n = {n}; use method='integral'")
        terms = [math.comb(n, j) * (-x) ** j / j for j in range(1, n + 1)]
        return math.fsum(terms) if n > COMPENSATED_FROM else sum(terms)
    if method == "integral":
        m = np.arange(1, n + 1, dtype=float)
        return -math.fsum(-np.expm1(m * math.log1p(-x)) / m) if x < 1 else -math.fsum(1.0 / m)
    raise InputError(f"unknown method {method!r}")


def a_n_derivative(n: int, x: float) -> float:
    """``a_n'(x) = ((1 - x)^n - 1) / x`` for ``0 < x <= 1``; never positive."""
    if not 0 < x <= 1:
        raise InputError(f"need 0 < x <= 1, got {x}")
    if x == 1:
        return -1.0
    return math.expm1(n * math.log1p(-x)) / x


def harmonic_number(n: int, exact: bool = False):
    if exact:
        return sum(Fraction(1, k) for k in range(1, n + 1))
    return math.fsum(1.0 / k for k in range(1, n + 1))


def harmonic_bound(n: int) -> tuple[float, float]:
    """``(H_n, 1 + log n)``; the first never exceeds the second."""
    if n < 1:
        raise InputError("n must be >= 1")
    return harmonic_number(n), 1.0 + math.log(n)


def radial_integral(n: int, c: float, r: float) -> float:
    """``4 pi int_0^r t (1 - c t^2)^{n-1} log t dt`` by adaptive quadrature."""
    if not (n >= 1 and 0 < c <= 1 and 0 < r <= 1):
        raise InputError("need n >= 1, 0 < c <= 1 and 0 < r <= 1")

    def f(t):
        return t * (1.0 - c * t * t) ** (n - 1) * math.log(t) if t > 0 else 0.0

    # the integrand concentrates on t ~ 1/sqrt(c n)
    knee = min(r, 1.0 / math.sqrt(c * n))
    points = [p for p in (knee / 4, knee, 2 * knee) if 0 < p < r] or None
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(f, 0.0, r, points=points, epsabs=1e-13, epsrel=1e-12, limit=400)
        except integrate.IntegrationWarning as exc:
            raise QuadratureNonConvergence(str(exc)) from None
    if err > RADIAL_ABS_TOL / (4 * math.pi):
        raise QuadratureNonConvergence(f"quadrature error estimate {err:.3g}")
    return 4.0 * math.pi * val


def radial_series(n: int, c) -> float:
    """``-pi sum_{j<n} binom(n-1, j) (-c)^j / (j+1)^2``, the ``r = 1`` value, in exact arithmetic."""
    cq = Fraction(c)
    s = sum(Fraction(math.comb(n - 1, j)) * (-cq) ** j / (j + 1) ** 2 for j in range(n))
    return -math.pi * float(s)


def _exp(x: float) -> float:
    return math.exp(x) if x < 709.0 else math.inf


def _log_kernel(C0: float, C1: float, C2: float) -> float:
    return math.log(C1) + 4 * C0 - math.log(2 * C2)


# -- constants ---------------------------------------------------------------


@dataclass(frozen=True)
class BoundInputs:
    """Chart constants and ``H(X)`` feeding the energy bound."""

    C0: float
    C1: float
    C2: float
    r1: float
    r2: float
    H: float
    H_stderr: float = 0.0
    g: int = 1
    n: int = 1

    def __post_init__(self):
        problems = []
        if not self.r2 > self.r1 > 0:
            problems.append("need r2 > r1 > 0")
        if self.r2 - self.r1 > 1:
            problems.append("need r2 - r1 <= 1")
        if not self.C1 >= self.C2 > 0:
            problems.append("need C1 >= C2 > 0")
        if self.C2 > 0 and math.log(2 * math.pi * self.C2) > 4 * self.C0:
            problems.append("need C2 <= exp(4 C0)/(2 pi)")
        if self.g < 1 or self.n < 1:
            problems.append("need g >= 1 and n >= 1")
        if problems:
            raise InvalidInputs("; ".join(problems))

    @classmethod
    def from_atlas(cls, atlas, hx, n: int = 1) -> "BoundInputs":
        return cls(atlas.C0, atlas.C1, atlas.C2, atlas.r1, atlas.r2, hx.mean, hx.stderr, 1, n)

    @property
    def log_kernel_ratio(self) -> float:
        return _log_kernel(self.C0, self.C1, self.C2)

    @property
    def kernel_ratio(self) -> float:
        """``C1 e^{4 C0} / (2 C2)``; ``inf`` once it leaves double range."""
        return _exp(self.log_kernel_ratio)

    @property
    def radial_c(self) -> float:
        """``2 pi C2 e^{-4 C0}``, in ``(0, 1]`` by the side condition."""
        return 2 * math.pi * self.C2 * math.exp(-4 * self.C0)


def an_analytic_bound(n: int, inputs: BoundInputs) -> float:
    """``A_n(x) <= C0 - log(r2 - r1) + C1 e^{4 C0}/(2 C2) (1 + log n)``."""
    if n < 1:
        raise InvalidInputs("n must be >= 1")
    return inputs.C0 - math.log(inputs.r2 - inputs.r1) + inputs.kernel_ratio * (1 + math.log(n))


def an_integral_bound(n: int, inputs: BoundInputs) -> float:
    """The intermediate bound ``C0 - log(r2-r1) - n C1 * radial integral`` (before the series step)."""
    rad = radial_integral(n, inputs.radial_c, inputs.r2 - inputs.r1)
    return inputs.C0 - math.log(inputs.r2 - inputs.r1) - n * inputs.C1 * rad


def merkl_c0(m: int, r1: float, M: float, C1: float) -> float:
    """Merkl-Bruin bound ``-330 m (1-r1)^{-3/2} log(1-r1) + 13.2 m C1 + (m-1) log M``."""
    if not 0.5 < r1 < 1:
        raise InvalidMerklRange(f"need 1/2 < r1 < 1, got {r1}")
    if M < 1:
        raise InvalidMerklRange(f"need M >= 1, got {M}")
    if C1 <= 0 or m < 1:
        raise InvalidInputs("need C1 > 0 and m >= 1")
    return -330 * m / (1 - r1) ** 1.5 * math.log(1 - r1) + 13.2 * m * C1 + (m - 1) * math.log(M)


# -- the bound ---------------------------------------------------------------


@dataclass(frozen=True)
class BoundReport:
    n: int
    terms: dict
    per_point: float
    total: float
    total_h_low: float
    total_h_high: float
    sharp_total: float
    log_total: float
    energy: float | None = None

    @property
    def slack(self) -> float | None:
        return None if self.energy is None else self.total - self.energy

    @property
    def generous_total(self) -> float:
        """The largest bound inside the ``H +- 3 sigma`` bracket."""
        return max(self.total_h_low, self.total_h_high)

    def with_energy(self, energy: float) -> "BoundReport":
        return replace(self, energy=float(energy))


def _per_point(n, g, H, C0, kernel, log_gap) -> float:
    return (kernel + 1) * (math.log(n) + 1) + 1.5 * g * math.log(g) + 3 - (g + 1) / g * H + C0 - log_gap


def _log_total(n, g, H, C0, log_kernel, log_gap) -> float:
    """``log`` of the bound, finite even when the kernel ratio overflows; ``nan`` if the bound is not positive."""
    harmonic = math.log(n) + 1
    rest = harmonic + 1.5 * g * math.log(g) + 3 - (g + 1) / g * H + C0 - log_gap
    if log_kernel < 700:
        total = _exp(log_kernel) * harmonic + rest
        return math.log(n) + math.log(total) if total > 0 else math.nan
    return math.log(n) + log_kernel + math.log(harmonic) + math.log1p(rest * math.exp(-log_kernel) / harmonic)


def _report(n, g, H, H_stderr, C0, log_kernel, log_gap) -> BoundReport:
    kernel = _exp(log_kernel)
    terms = {
        "harmonic": (kernel + 1) * (math.log(n) + 1),
        "genus": 1.5 * g * math.log(g),
        "constant": 3.0,
        "theta": -(g + 1) / g * H,
        "C0": C0,
        "chart_gap": -log_gap,
    }
    per_point = math.fsum(terms.values())
    lo = n * _per_point(n, g, H + 3 * H_stderr, C0, kernel, log_gap)
    hi = n * _per_point(n, g, H - 3 * H_stderr, C0, kernel, log_gap)
    rho = 1.0 / g
    sharp = n * (
        (kernel + 1) * (math.log(n) + 1) - 1 + c_g_rho(g, rho).value - (1 + rho) * H + C0 - log_gap
    )
    log_total = _log_total(n, g, H, C0, log_kernel, log_gap)
    return BoundReport(n, terms, per_point, n * per_point, lo, hi, sharp, log_total)


def theorem1_bound(inputs: BoundInputs, n: int | None = None) -> BoundReport:
    """Evaluate the right-hand side of the energy bound with a per-term breakdown.

    Also reports the total at ``H -+ 3 sigma``, the sharper form with
    ``c_{g, 1/g}`` in place of its bound ``3/2 g log g + 4``, and the log of
    the total (finite when the total itself overflows).
    """
    n = inputs.n if n is None else n
    if n < 1:
        raise InvalidInputs("n must be >= 1")
    return _report(
        n, inputs.g, inputs.H, inputs.H_stderr, inputs.C0, inputs.log_kernel_ratio, math.log(inputs.r2 - inputs.r1)
    )


def corollary_bound(
    n: int, g: int, H: float, m: int, r1: float, M: float, C1: float, C2: float, H_stderr: float = 0.0
) -> BoundReport:
    """The bound for an extended Merkl atlas: ``C0`` from :func:`merkl_c0`, chart gap ``1 - r1``."""
    if n < 1 or g < 1:
        raise InvalidInputs("need n >= 1 and g >= 1")
    C0 = merkl_c0(m, r1, M, C1)
    if not C1 >= C2 > 0 or math.log(2 * math.pi * C2) > 4 * C0:
        raise InvalidInputs("need C1 >= C2 > 0 and C2 <= exp(4 C0)/(2 pi)")
    return _report(n, g, H, H_stderr, C0, _log_kernel(C0, C1, C2), math.log1p(-r1))


# -- energies ----------------------------------------------------------------


def pair_energies(points: np.ndarray, surface: EllipticSurface) -> np.ndarray:
    """``sum_{j<k} g(x_j, x_k)`` for each row of a ``(trials, n)`` point array."""
    pts = np.atleast_2d(points)
    n = pts.shape[1]
    if n < 2:
        return np.zeros(pts.shape[0])
    j, k = np.triu_indices(n, 1)
    vals = surface.green_function.values(pts[:, j], pts[:, k])
    return vals.sum(axis=1)


def energy(config, surface: EllipticSurface) -> float:
    """``sum_{j<k} g(x_j, x_k)``; raises :class:`CoincidentPoints` on repeated points."""
    pts = config.points if isinstance(config, PointConfiguration) else np.asarray(config, dtype=complex)
    e = float(pair_energies(pts[None, :], surface)[0])
    if e == -math.inf:
        raise CoincidentPoints("configuration contains coincident points")
    return e


def geodesic_configuration(surface: EllipticSurface, n: int, offset: complex = 0.0) -> PointConfiguration:
    """``n`` equally spaced points on the horizontal closed geodesic through ``offset``."""
    return PointConfiguration.build(offset + np.arange(n) / n, surface)


def clustered_points(surface: EllipticSurface, n: int, trials: int, radius: float, sampler: SeededSampler):
    centers = uniform_surface_points(surface, sampler, (trials, 1))
    u = sampler.uniform((trials, n, 2))
    disc = radius * np.sqrt(u[..., 0]) * np.exp(2j * math.pi * u[..., 1])
    return surface.reduce(centers + disc)


@dataclass(frozen=True)
class SlackSummary:
    kind: str
    trials: int
    violations: int
    min_slack: float
    median_slack: float
    max_energy: float


@dataclass(frozen=True)
class VerificationResult:
    n: int
    bound: BoundReport
    summaries: tuple

    @property
    def violations(self) -> int:
        return sum(s.violations for s in self.summaries)

    def summary(self, kind: str) -> SlackSummary:
        return next(s for s in self.summaries if s.kind == kind)


def _energies(points: np.ndarray, surface: EllipticSurface, threads: int | None) -> np.ndarray:
    if not threads or threads <= 1 or points.shape[0] < 2:
        return pair_energies(points, surface)
    chunks = np.array_split(points, min(threads, points.shape[0]))
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(pair_energies, chunks, [surface] * len(chunks)))
    return np.concatenate(parts)


def _summarize(kind: str, energies: np.ndarray, report: BoundReport) -> SlackSummary:
    slack = report.total - energies
    viol = int(np.sum(energies > report.generous_total))
    return SlackSummary(kind, int(energies.size), viol, float(slack.min()), float(np.median(slack)), float(energies.max()))


def verify_theorem1(
    surface: EllipticSurface,
    atlas,
    n: int,
    trials: int,
    sampler: SeededSampler,
    hx=None,
    *,
    clustered_trials: int | None = None,
    cluster_radius: float = 1e-3,
    threads: int | None = None,
) -> VerificationResult:
    """Check the energy bound on random, clustered and equally spaced configurations.

    A violation is an energy above the bound evaluated at ``H - 3 sigma``
    (the most generous value inside the ``H`` bracket); violations are
    counted, never raised. All points are drawn before any energy is
    evaluated, so ``threads`` does not change the result.
    """
    if n < 1 or trials < 1:
        raise InputError("need n >= 1 and trials >= 1")
    hx = surface.hx if hx is None else hx
    report = theorem1_bound(BoundInputs.from_atlas(atlas, hx, n))
    rand = uniform_surface_points(surface, sampler.substream(0), (trials, n))
    summaries = [_summarize("random", _energies(rand, surface, threads), report)]
    ct = trials if clustered_trials is None else clustered_trials
    if ct > 0:
        clus = clustered_points(surface, n, ct, cluster_radius, sampler.substream(1))
        summaries.append(_summarize("clustered", _energies(clus, surface, threads), report))
    geo = geodesic_configuration(surface, n).points
    summaries.append(_summarize("geodesic", pair_energies(geo[None, :], surface), report))
    return VerificationResult(n, report, tuple(summaries))


@dataclass(frozen=True)
class ChainCheck:
    """Both ends of the averaged inequality ``nH + E <= -rho n H + n c + n log n + sum_k A_n(x_k)``."""

    lhs: float
    rhs: float
    rhs_stderr: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs + 3 * self.rhs_stderr


def estimation_chain(config, surface: EllipticSurface, samples: int, sampler: SeededSampler, hx=None, rho: float = 1.0) -> ChainCheck:
    """Evaluate the averaged inequality with Monte Carlo ``A_n(x_k)`` at the configuration points."""
    pts = config.points if isinstance(config, PointConfiguration) else np.asarray(config, dtype=complex)
    n = pts.shape[0]
    hx = surface.hx if hx is None else hx
    ys = uniform_surface_points(surface, sampler, (n, samples))
    gf = surface.green_function
    a_vals = np.stack([-np.min(gf.values(ys, x), axis=0) for x in pts])  # (n, samples)
    per_sample = a_vals.sum(axis=0)
    a_sum = float(per_sample.mean())
    a_err = float(per_sample.std(ddof=1) / math.sqrt(samples))
    e = energy(pts, surface)
    lhs = n * hx.mean + e
    rhs = -rho * n * hx.mean + n * c_g_rho(1, rho).value + n * math.log(n) + a_sum
    err = math.hypot(a_err, (1 + rho) * n * hx.stderr)
    return ChainCheck(lhs, rhs, err)
