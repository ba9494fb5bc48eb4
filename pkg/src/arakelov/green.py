"""The Arakelov-Green function of an elliptic curve and flat chart atlases.

On ``X = C / (Z + tau Z)`` the admissible-metric argument gives

    g(x, y) = log ||theta||(x - y + kappa) - c(tau),

with ``c(tau)`` fixed by requiring ``int_X g(x, y) mu(x) = 0``; so ``c(tau)``
equals the mean of ``log ||theta||`` over the torus, i.e. ``H(X)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    ChartTooLarge,
    CoincidentPoints,
    CoverageFailure,
    InputError,
    InvalidInputs,
    TooCloseToSingularity,
)
from .surface import (
    EQUALITY_TOL,
    EllipticSurface,
    format_complex,
    parse_complex,
    reduced_lattice_basis,
)
from .theta import DEFAULT_TOL, log_theta_norm_pic0

C0_MARGIN = 1.05
DIAGONAL_OFFSET = 1e-6
COVERAGE_GRID = 200


def torus_log_theta_mean(tau: complex, nodes: int = 8, points: int = 2048) -> float:
    """Quadrature for ``int_X log ||theta||(w + kappa) mu(w)``.

    In characteristic coordinates ``w = a + tau b`` the integrand is
    periodic and real-analytic in ``a`` for ``0 < b < 1``, so the periodic
    trapezoid rule in ``a`` converges geometrically. The ``a``-average is a
    quadratic polynomial in ``b`` on ``(0, 1)`` (Gaussian weight plus
    Jensen's formula), which Gauss-Legendre in ``b`` integrates exactly.
    """
    tau = complex(tau)
    xb, wb = np.polynomial.legendre.leggauss(nodes)
    b = 0.5 * (xb + 1.0)
    a = np.arange(points) / points
    w = a[None, :] + tau * b[:, None]
    rows = log_theta_norm_pic0(w, tau).mean(axis=1)
    return float(0.5 * np.dot(wb, rows))


@dataclass(frozen=True)
class GreenFunction:
    """``g(x, y)`` for a fixed elliptic surface, normalised to mu-mean zero."""

    surface: EllipticSurface
    normalization: float = field(default=float("nan"))

    def __post_init__(self):
        if math.isnan(self.normalization):
            object.__setattr__(self, "normalization", torus_log_theta_mean(self.surface.tau))

    def values(self, x, y, tol: float = DEFAULT_TOL) -> np.ndarray:
        """Broadcasting evaluation; coincident points give ``-inf``.

        The difference ``x - y`` is taken in characteristic coordinates and
        replaced by the sign-canonical one of ``+-(x - y)``, so that swapping
        the arguments gives a bit-identical result.
        """
        s = self.surface
        ax, bx = s.characteristics(x)
        ay, by = s.characteristics(y)
        da = ax - ay
        db = bx - by
        flip = (da < 0) | ((da == 0) & (db < 0))
        da = np.where(flip, -da, da)
        db = np.where(flip, -db, db)
        da = da - np.floor(da)
        db = db - np.floor(db)
        hit = (np.minimum(da, 1.0 - da) <= EQUALITY_TOL) & (np.minimum(db, 1.0 - db) <= EQUALITY_TOL)
        w = s.point(da, db)
        out = log_theta_norm_pic0(w, s.tau, tol) - self.normalization
        return np.where(hit, -np.inf, out)

    def __call__(self, x, y) -> float:
        v = float(self.values(complex(x), complex(y)))
        if v == -math.inf:
            raise CoincidentPoints(f"g(x, y) is -inf at x = y = {complex(x)}")
        return v


def green(x, y, surface: EllipticSurface) -> float:
    """Arakelov-Green function ``g(x, y) = log G(x, y)`` on ``surface``."""
    return surface.green_function(x, y)


def laplacian_check(x, y, surface: EllipticSurface, step: float = 1e-3) -> float:
    """Five-point Laplacian in ``(Re x, Im x)`` of ``g(., y)`` at ``x``.

    Away from ``y`` the result is ``-2 pi / Im(tau)``: ``g`` is
    superharmonic with flat curvature ``mu``.
    """
    if surface.torus_distance(x, y) <= 10 * step:
        raise TooCloseToSingularity("x must be farther than 10*step from y")
    gf = surface.green_function
    x = complex(x)
    pts = np.array([x + step, x - step, x + 1j * step, x - 1j * step, x])
    v = gf.values(pts, complex(y))
    return float((v[0] + v[1] + v[2] + v[3] - 4.0 * v[4]) / step**2)


# -- atlases -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TorusChartAtlas:
    """Translation charts ``z_j(w) = w - c_j`` onto discs of radius ``r2``.

    ``C0`` is a numerical sup estimate (grid maximum times ``margin``), not
    a certified bound. Translation charts have transition derivative 1, so
    ``M = 1``.
    """

    tau: complex
    centers: np.ndarray
    r1: float
    r2: float
    C0: float
    C1: float
    C2: float
    margin: float = C0_MARGIN
    c0_raw: float = float("nan")
    grid: int = 0
    M: float = 1.0

    @property
    def m(self) -> int:
        return int(self.centers.shape[0])

    def to_text(self) -> str:
        lines = [
            "# flat torus chart atlas",
            f"tau = {format_complex(self.tau)}",
            f"m = {self.m}",
            f"r1 = {self.r1!r}",
            f"r2 = {self.r2!r}",
            f"C0 = {self.C0!r}",
            f"C0_raw = {self.c0_raw!r}",
            f"margin = {self.margin!r}",
            f"grid = {self.grid}",
            f"C1 = {self.C1!r}",
            f"C2 = {self.C2!r}",
            f"M = {self.M!r}",
        ]
        lines += [f"center = {format_complex(c)}" for c in self.centers]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, source: str = "<atlas>") -> "TorusChartAtlas":
        scalars: dict[str, str] = {}
        centers = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InputError(f"{source}:{lineno}: expected 'key = value'")
            key, value = (p.strip() for p in line.split("=", 1))
            if key == "center":
                centers.append(parse_complex(value))
            else:
                scalars[key] = value
        required = ("tau", "r1", "r2", "C0", "C1", "C2")
        missing = [k for k in required if k not in scalars]
        if missing or not centers:
            raise InputError(f"{source}: atlas file lacks {', '.join(missing) or 'centers'}")
        try:
            atlas = cls(
                tau=parse_complex(scalars["tau"]),
                centers=np.array(centers, dtype=complex),
                r1=float(scalars["r1"]),
                r2=float(scalars["r2"]),
                C0=float(scalars["C0"]),
                C1=float(scalars["C1"]),
                C2=float(scalars["C2"]),
                margin=float(scalars.get("margin", C0_MARGIN)),
                c0_raw=float(scalars.get("C0_raw", "nan")),
                grid=int(scalars.get("grid", 0)),
                M=float(scalars.get("M", 1.0)),
            )
        except ValueError as exc:
            raise InputError(f"{source}: {exc}") from None
        if "m" in scalars and int(scalars["m"]) != atlas.m:
            raise InputError(f"{source}: m = {scalars['m']} but {atlas.m} centers listed")
        return atlas

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path) -> "TorusChartAtlas":
        return cls.from_text(Path(path).read_text(), str(path))


def covering_radius(u: complex, w: complex) -> float:
    """Covering radius of the planar lattice ``Z u + Z w``."""
    u, w = reduced_lattice_basis(u, w)
    if (u * w.conjugate()).real < 0:
        w = -w
    area = abs((u.conjugate() * w).imag)
    return abs(u) * abs(w) * abs(u - w) / (2.0 * area)


def _center_lattices(tau: complex, max_charts: int):
    rectangular = abs(tau.real - round(tau.real)) < 1e-15
    for kx in range(1, max_charts + 1):
        for ky in range(1, max_charts // kx + 1):
            shears = (0,) if rectangular else range(kx)
            for s in shears:
                v1 = 1.0 / kx
                v2 = (tau + s / kx) / ky
                yield kx * ky, covering_radius(v1, v2), kx, ky, s, v1, v2


def coverage_radius_on_grid(surface: EllipticSurface, centers: np.ndarray, grid: int = COVERAGE_GRID) -> float:
    """Largest distance from a ``grid x grid`` sample of the torus to the nearest center."""
    t = np.arange(grid) / grid
    pts = surface.point(t[:, None], t[None, :]).ravel()
    d = surface.torus_distance(pts[:, None], centers[None, :])
    return float(d.min(axis=1).max())


def build_torus_atlas(
    surface: EllipticSurface,
    r1: float,
    r2: float,
    m_hint: int | None = None,
    grid: int = 64,
) -> TorusChartAtlas:
    """Cover the torus by translation charts with the fewest discs of radius ``r1``.

    Centers form a finite subgroup of the torus: a rectangular grid when
    ``Re(tau)`` is an integer, the best sheared grid otherwise. ``m_hint``
    caps the number of charts searched (default 400).

    Raises
    ------
    InvalidInputs
        Radii outside ``0 < r1 < r2``, ``r2 - r1 <= 1``, or the side
        condition ``C2 <= exp(4 C0)/(2 pi)`` fails.
    ChartTooLarge
        ``2 r2`` is not below the systole, so the chart disc does not embed.
    CoverageFailure
        No grid with at most ``m_hint`` centers covers the torus.
    """
    if not 0 < r1 < r2:
        raise InvalidInputs(f"need 0 < r1 < r2, got r1 = {r1}, r2 = {r2}")
    if r2 - r1 > 1:
        raise InvalidInputs(f"need r2 - r1 <= 1, got {r2 - r1}")
    if not 2 * r2 < surface.systole:
        raise ChartTooLarge(f"chart radius {r2} does not embed (systole {surface.systole:.6g})")
    cap = 400 if m_hint is None else int(m_hint)
    tau = surface.tau
    best = None
    for cand in _center_lattices(tau, cap):
        m, cov = cand[0], cand[1]
        if cov < r1 and (best is None or (m, cov) < (best[0], best[1])):
            best = cand
    if best is None:
        raise CoverageFailure(f"no grid of at most {cap} centers covers with r1 = {r1}")
    _, _, kx, ky, _, v1, v2 = best
    p, q = np.meshgrid(np.arange(kx), np.arange(ky), indexing="ij")
    centers = surface.reduce((p * v1 + q * v2).ravel().astype(complex))
    worst = coverage_radius_on_grid(surface, centers)
    if not worst < r1:
        raise CoverageFailure(f"grid check failed: point at distance {worst:.6g} >= r1 = {r1}")
    density = 0.5 / tau.imag
    draft = TorusChartAtlas(tau, centers, float(r1), float(r2), float("nan"), density, density, grid=grid)
    c0, raw = estimate_c0(draft, surface, grid, return_raw=True)
    if not density <= math.exp(4 * c0) / (2 * math.pi):
        raise InvalidInputs("side condition C2 <= exp(4 C0)/(2 pi) fails")
    centers.setflags(write=False)
    return TorusChartAtlas(tau, centers, float(r1), float(r2), c0, density, density, C0_MARGIN, raw, grid)


def chart_difference_grid(r2: float, density: int) -> np.ndarray:
    """Chart differences ``z(P) - z(Q)`` realised by a ``density``-per-diameter pair grid.

    Pairs of points of the chart disc ``D_{r2}`` have differences filling
    ``D_{2 r2}``; the grid is closed with a ring of boundary points.
    """
    h = 2.0 * r2 / density
    k = np.arange(-density, density + 1)
    d = (h * k[:, None] + 1j * h * k[None, :]).ravel()
    d = d[np.abs(d) <= 2 * r2]
    ring = 2 * r2 * np.exp(2j * math.pi * np.arange(8 * density) / (8 * density))
    return np.concatenate([d, ring])


def estimate_c0(atlas: TorusChartAtlas, surface: EllipticSurface, density: int = 64, *, return_raw: bool = False):
    """Grid estimate of ``sup |log|z(P) - z(Q)| - g(P, Q)|`` over one chart, times 1.05.

    All charts are translates, and ``g(P, Q)`` depends on ``P - Q`` only, so
    the supremum runs over the difference disc. The maximised function is
    continuous at ``P = Q``; the diagonal is sampled at offset ``1e-6``.
    """
    if density < 50:
        raise InvalidInputs("grid density must be at least 50 points per chart diameter")
    d = chart_difference_grid(atlas.r2, density)
    d = np.where(d == 0, DIAGONAL_OFFSET, d)
    vals = np_abs_log_gap(d, surface)
    raw = float(np.max(vals))
    c0 = C0_MARGIN * raw
    return (c0, raw) if return_raw else c0


def np_abs_log_gap(d, surface: EllipticSurface) -> np.ndarray:
    """``|log|d| - g(d, 0)|`` for chart differences ``d``."""
    d = np.asarray(d, dtype=complex)
    return np.abs(np.log(np.abs(d)) - surface.green_function.values(d, 0j))
