"""Riemann theta series and the Faltings norm ``||theta||``.

The series is ``theta(z, Omega) = sum_n exp(pi i n.Omega.n + 2 pi i n.z)``.
Evaluation works with the Gaussian-normalised sum

    S(z) = exp(-pi y.Y^-1.y) theta(z, Omega)   (y = Im z),

whose terms have modulus ``exp(-pi (n - c).Y.(n - c))`` with
``c = -Y^-1 y``. The box ``|n - round(c)|_inf <= R`` is summed with ``R``
chosen from a certified Gaussian tail bound, so ``||theta||`` never
overflows no matter how far ``z`` is from the fundamental domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import TruncationRadiusExceeded, UnsupportedGenus
from .surface import EllipticSurface, JacobianPoint, as_period_matrix

DEFAULT_TOL = 1e-12
CLI_TOL = 1e-10
MAX_RADIUS = 200
_CHUNK_ELEMENTS = 1 << 21


@dataclass(frozen=True)
class ThetaValue:
    value: complex
    norm: float
    tail_bound: float


@dataclass(frozen=True)
class CgRho:
    g: int
    rho: float
    value: float
    epsilon_g: int


# -- truncation ----------------------------------------------------------------


def _full_line_bound(lam: float) -> float:
    # sum_k exp(-pi lam (k - u)^2) for |u| <= 1/2, using (k - 1/2)^2 >= k - 3/4
    q = math.exp(-math.pi * lam)
    return 1.0 + 2.0 * math.exp(-math.pi * lam / 4.0) / (1.0 - q)


def _line_tail_bound(radius: int, lam: float) -> float:
    # sum_{|k|>R} exp(-pi lam (k - u)^2), |u| <= 1/2
    s = radius + 0.5
    return 2.0 * math.exp(-math.pi * lam * s * s) / (1.0 - math.exp(-2.0 * math.pi * lam * s))


def gaussian_tail_bound(radius: int, lam: float, genus: int) -> float:
    """Bound on ``sum exp(-pi (n-c).Y.(n-c))`` over ``n`` outside the recentred box.

    Uses ``(n-c).Y.(n-c) >= lam |n-c|^2`` and a union bound over the
    coordinate that leaves the box.
    """
    return genus * _line_tail_bound(radius, lam) * _full_line_bound(lam) ** (genus - 1)


def truncation_radius(tol: float, lam: float, genus: int) -> int:
    """Smallest box radius whose normalised tail bound is at most ``tol``."""
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    for radius in range(MAX_RADIUS + 1):
        if gaussian_tail_bound(radius, lam, genus) <= tol:
            return radius
    raise TruncationRadiusExceeded(
        f"truncation radius would exceed {MAX_RADIUS} (min eig(Y) = {lam:g}, tol = {tol:g}); "
        "rescale the inputs"
    )


@lru_cache(maxsize=64)
def _box(radius: int, genus: int) -> np.ndarray:
    r = np.arange(-radius, radius + 1, dtype=float)
    grids = np.meshgrid(*([r] * genus), indexing="ij")
    box = np.stack([gr.ravel() for gr in grids], axis=-1)
    box.setflags(write=False)
    return box


# -- core evaluation -----------------------------------------------------------


def _prepare(z, pm):
    z = np.asarray(z, dtype=complex)
    if z.ndim == 0 or z.shape[-1] != pm.genus:
        if pm.genus == 1:
            z = z[..., None]
        else:
            raise UnsupportedGenus(f"points have {z.shape[-1]} coordinates, genus is {pm.genus}")
    return z


def _normalized_sum(z: np.ndarray, pm, radius: int) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(S(z), c.Y.c)`` for ``z`` of shape ``(N, g)``."""
    y_mat = pm.imaginary_part
    x_mat = pm.real_part
    c = -(z.imag @ pm.y_inverse)
    n0 = np.rint(c)
    frac = c - n0
    box = _box(radius, pm.genus)
    out = np.empty(z.shape[0], dtype=complex)
    step = max(1, _CHUNK_ELEMENTS // (box.shape[0] * pm.genus))
    for lo in range(0, z.shape[0], step):
        hi = lo + step
        u = box[None, :, :] - frac[lo:hi, None, :]
        quad = np.einsum("nki,ij,nkj->nk", u, y_mat, u)
        n = box[None, :, :] + n0[lo:hi, None, :]
        phase = math.pi * np.einsum("nki,ij,nkj->nk", n, x_mat, n)
        phase += 2.0 * math.pi * np.einsum("nki,ni->nk", n, z[lo:hi].real)
        out[lo:hi] = np.sum(np.exp(-math.pi * quad + 1j * phase), axis=1)
    cyc = np.einsum("ni,ij,nj->n", c, y_mat, c)
    return out, cyc


def theta_values(z, omega, tol: float = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Raw series values and certified truncation errors for points of shape ``(..., g)``."""
    pm = as_period_matrix(omega)
    z = _prepare(z, pm)
    shape = z.shape[:-1]
    flat = z.reshape(-1, pm.genus)
    c = -(flat.imag @ pm.y_inverse)
    cyc = np.einsum("ni,ij,nj->n", c, pm.imaginary_part, c)
    worst = float(cyc.max()) if cyc.size else 0.0
    with np.errstate(under="ignore"):
        scaled_tol = tol * math.exp(-math.pi * worst) if math.pi * worst < 700 else 0.0
    if scaled_tol == 0.0:
        raise TruncationRadiusExceeded("point too far from the fundamental domain for a raw theta value")
    radius = truncation_radius(scaled_tol, pm.min_eigenvalue, pm.genus)
    s, cyc = _normalized_sum(flat, pm, radius)
    tail = np.exp(math.pi * cyc) * gaussian_tail_bound(radius, pm.min_eigenvalue, pm.genus)
    return (s * np.exp(math.pi * cyc)).reshape(shape), tail.reshape(shape)


def log_theta_norm(z, omega, tol: float = DEFAULT_TOL) -> np.ndarray:
    """``log ||theta||(z)`` for points of shape ``(..., g)``; ``-inf`` on exact zeros."""
    pm = as_period_matrix(omega)
    z = _prepare(z, pm)
    shape = z.shape[:-1]
    flat = z.reshape(-1, pm.genus)
    scale = 0.25 * pm.log_det_y
    radius = truncation_radius(tol * math.exp(-scale), pm.min_eigenvalue, pm.genus)
    s, _ = _normalized_sum(flat, pm, radius)
    with np.errstate(divide="ignore"):
        return (scale + np.log(np.abs(s))).reshape(shape)


def theta_norm_values(z, omega, tol: float = DEFAULT_TOL) -> np.ndarray:
    pm = as_period_matrix(omega)
    z = _prepare(z, pm)
    shape = z.shape[:-1]
    radius = truncation_radius(tol * math.exp(-0.25 * pm.log_det_y), pm.min_eigenvalue, pm.genus)
    s, _ = _normalized_sum(z.reshape(-1, pm.genus), pm, radius)
    return (math.exp(0.25 * pm.log_det_y) * np.abs(s)).reshape(shape)


# -- scalar API ---------------------------------------------------------------


def _coords(z) -> np.ndarray:
    return JacobianPoint.of(z).coordinates


def theta_series(z, omega, tol: float = DEFAULT_TOL) -> ThetaValue:
    """Value of the theta series at one point, with its norm and tail bound."""
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    pm = as_period_matrix(omega)
    coords = _coords(z)[None, :]
    value, tail = theta_values(coords, pm, tol)
    norm = theta_norm_values(coords, pm, tol)
    return ThetaValue(complex(value[0]), float(norm[0]), float(tail[0]))


def theta_norm(z, omega, tol: float = DEFAULT_TOL) -> float:
    """``||theta||(z) = det(Y)^{1/4} exp(-pi y.Y^-1.y) |theta(z)|``."""
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    return float(theta_norm_values(_coords(z)[None, :], omega, tol)[0])


def _tau_of(surface) -> complex:
    if isinstance(surface, EllipticSurface):
        return surface.tau
    pm = as_period_matrix(surface)
    if pm.genus != 1:
        raise UnsupportedGenus("the Pic^0 theta norm is implemented for genus one only")
    return complex(pm.entries[0, 0])


def log_theta_norm_pic0(w, surface, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Vectorised ``log ||theta||(w + kappa)`` with ``kappa = (1 + tau)/2``."""
    tau = _tau_of(surface)
    w = np.asarray(w, dtype=complex)
    return log_theta_norm(w[..., None] + (1.0 + tau) / 2.0, tau, tol)


def theta_norm_pic0(w, surface, tol: float = DEFAULT_TOL) -> float:
    """Genus-one theta norm on degree-zero classes; vanishes exactly on the lattice."""
    tau = _tau_of(surface)
    w = complex(np.asarray(JacobianPoint.of(w).coordinates)[0])
    return theta_norm(w + (1.0 + tau) / 2.0, tau, tol)


# -- the constant c_{g, rho} -------------------------------------------------


def c_g_rho_values(g, rho) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    rho = np.asarray(rho, dtype=float)
    eps = (g >= 4).astype(float)
    return (
        np.log((g + 2.0) / 2.0)
        + 0.5 * g * eps * np.log((g + 2.0) / (math.pi * math.sqrt(3.0)))
        + 0.25 * g * (1.0 + rho) * np.log((1.0 + rho) / (2.0 * rho))
    )


def c_g_rho(g: int, rho: float) -> CgRho:
    if g < 1 or rho <= 0:
        raise ValueError("need g >= 1 and rho > 0")
    eps = 0 if g <= 3 else 1
    value = (
        math.log((g + 2) / 2)
        + g * eps / 2 * math.log((g + 2) / (math.pi * math.sqrt(3)))
        + g * (1 + rho) / 4 * math.log((1 + rho) / (2 * rho))
    )
    return CgRho(int(g), float(rho), value, eps)


@dataclass(frozen=True)
class ThetaBoundCheck:
    """Margins ``log||theta||(z) - (c_{g,rho} - rho H)``; violations beyond ``3 sigma_H``."""

    margins: np.ndarray
    bound: float
    threshold: float
    violations: int

    @property
    def max_margin(self) -> float:
        return float(np.max(self.margins))


def check_theta_upper_bound(z, omega, hx, rho: float, tol: float = DEFAULT_TOL) -> ThetaBoundCheck:
    """Test ``log ||theta||(z) <= -rho H(X) + c_{g,rho}`` at the points ``z``.

    ``hx`` is an H(X) estimate exposing ``mean`` and ``stderr``. A point
    counts as a violation only when its margin exceeds three standard
    errors of the estimate. Zeros of ``theta`` give margin ``-inf``.
    """
    pm = as_period_matrix(omega)
    logs = np.atleast_1d(log_theta_norm(z, pm, tol))
    bound = c_g_rho(pm.genus, rho).value - rho * hx.mean
    margins = logs - bound
    threshold = 3.0 * hx.stderr
    return ThetaBoundCheck(margins, bound, threshold, int(np.sum(margins > threshold)))
