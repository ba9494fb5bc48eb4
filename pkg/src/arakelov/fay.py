"""Section norms, the norm determinant and the Fay-type identity in genus one.

For a degree-zero class ``L`` off the theta divisor and distinct points
``y_1..y_n`` the sections ``t_j`` of ``M = L + sum y`` have norms

    ||t_j||(x) = ||theta||(L + y_j - x) * prod_{k != j} G(y_k, x).

Holomorphically ``t_j`` is represented by the product of odd theta
functions ``theta_11(x - zeta)`` over its zero multiset
``{L + y_j} u {y_l : l != j}``. All rows share the zero sum
``L + sum y``, so ``||t_j||(x_k) = R_j C_k |P_jk|``; the factors are fitted
from the data and the fit residual is reported rather than assumed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputs, PoleCollision, SeparabilityFailure
from .surface import EllipticSurface
from .theta import log_theta_norm_pic0

TRANSVERSALITY = 1e-6
SEPARATION = 1e-6
SEPARABILITY_LIMIT = 1e-6
FAY_TOL = 1e-6


def odd_theta(z, tau: complex, rel_tol: float = 1e-17) -> np.ndarray:
    """Jacobi ``theta_11(z) = sum_n exp(pi i tau (n+1/2)^2 + 2 pi i (n+1/2)(z+1/2))``."""
    z = np.asarray(z, dtype=complex)
    tau = complex(tau)
    lam = tau.imag
    radius = 1
    while 2 * math.exp(-math.pi * lam * (radius + 0.5) ** 2) > rel_tol:
        radius += 1
    center = np.rint(-z.imag / lam - 0.5)
    k = np.arange(-radius, radius + 1)
    nu = center[..., None] + k + 0.5
    expo = 1j * math.pi * tau * nu**2 + 2j * math.pi * nu * (z[..., None] + 0.5)
    return np.exp(expo).sum(axis=-1)


@dataclass(frozen=True, eq=False)
class SectionSystem:
    """``L`` (a point of J) and ``n`` distinct points ``y_j`` on ``surface``."""

    L: complex
    ys: np.ndarray
    surface: EllipticSurface

    @classmethod
    def build(cls, L, ys, surface: EllipticSurface) -> "SectionSystem":
        L = complex(surface.reduce(complex(L)))
        ys = surface.reduce(np.atleast_1d(np.asarray(ys, dtype=complex)))
        if math.exp(float(log_theta_norm_pic0(L, surface.tau))) <= TRANSVERSALITY:
            raise InvalidInputs("L lies (numerically) on the theta divisor")
        n = ys.shape[0]
        if n >= 2:
            j, k = np.triu_indices(n, 1)
            if np.min(surface.torus_distance(ys[j], ys[k])) <= SEPARATION:
                raise InvalidInputs("the points y_j must be pairwise distinct")
        ys.setflags(write=False)
        return cls(L, ys, surface)

    @property
    def n(self) -> int:
        return int(self.ys.shape[0])

    def zero_sets(self) -> np.ndarray:
        """Row ``j`` is the zero multiset of ``t_j``; row sums all equal ``L + sum y``."""
        z = np.tile(self.ys, (self.n, 1))
        np.fill_diagonal(z, self.ys + self.L)
        return z


@dataclass(frozen=True, eq=False)
class NormMatrix:
    """``W_jk = ||t_j||(x_k)`` with holomorphic values ``P`` and fitted weights."""

    W: np.ndarray
    log_W: np.ndarray
    P: np.ndarray
    row_log: np.ndarray
    col_log: np.ndarray
    mask: np.ndarray
    separability_residual: float

    @property
    def A(self) -> np.ndarray:
        """A base-change matrix with ``|A_jk| = W_jk`` (phases fixed by ``P``)."""
        return np.exp(self.row_log)[:, None] * self.P * np.exp(self.col_log)[None, :]


def _as_points(xs, sys: SectionSystem) -> np.ndarray:
    xs = sys.surface.reduce(np.atleast_1d(np.asarray(xs, dtype=complex)))
    if xs.shape[0] != sys.n:
        raise InvalidInputs(f"need {sys.n} points x_k, got {xs.shape[0]}")
    return xs


def _log_section_norms(sys: SectionSystem, x: np.ndarray) -> np.ndarray:
    """``log ||t_j||(x_k)`` as an ``(n, len(x))`` array; ``-inf`` at prescribed zeros."""
    s = sys.surface
    gf = s.green_function
    green = gf.values(sys.ys[:, None], x[None, :])  # g(y_l, x_k)
    total = green.sum(axis=0, where=np.isfinite(green))
    hits = ~np.isfinite(green)
    out = np.empty((sys.n, x.shape[0]))
    for j in range(sys.n):
        head = log_theta_norm_pic0(sys.L + sys.ys[j] - x, s.tau)
        others = total - np.where(hits[j], 0.0, green[j])
        collide = np.any(np.delete(hits, j, axis=0), axis=0)
        out[j] = np.where(collide, -np.inf, head + others)
    return out


def section_norm(sys: SectionSystem, j: int, x) -> float:
    """``||t_j||(x)`` for a 1-based index ``j``.

    At ``x = y_k`` with ``k != j`` the norm is 0 and a :class:`PoleCollision`
    warning is issued.
    """
    if not 1 <= j <= sys.n:
        raise InvalidInputs(f"section index must be in 1..{sys.n}")
    x = sys.surface.reduce(np.atleast_1d(complex(x)))
    others = np.delete(sys.ys, j - 1)
    if others.size and np.any(sys.surface.coincide(others, x[0])):
        warnings.warn(PoleCollision(f"x = {complex(x[0])} is a zero of t_{j}"), stacklevel=2)
        return 0.0
    return float(np.exp(_log_section_norms(sys, x)[j - 1, 0]))


def _fit_row_col(d: np.ndarray, mask: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    n = d.shape[0]
    jj, kk = np.nonzero(mask)
    design = np.zeros((jj.size, 2 * n))
    design[np.arange(jj.size), jj] = 1.0
    design[np.arange(jj.size), n + kk] = 1.0
    sol, *_ = np.linalg.lstsq(design, d[jj, kk], rcond=None)
    r, c = sol[:n], sol[n:]
    resid = float(np.max(np.abs(d[jj, kk] - r[jj] - c[kk]))) if jj.size else 0.0
    return r, c, resid


def norm_matrix(sys: SectionSystem, xs) -> NormMatrix:
    """Section norms at ``xs`` together with the holomorphic factorisation."""
    xs = _as_points(xs, sys)
    log_w = _log_section_norms(sys, xs)
    zeros = sys.zero_sets()
    P = np.prod(odd_theta(xs[None, None, :] - zeros[:, :, None], sys.surface.tau), axis=1)
    mask = np.isfinite(log_w) & (P != 0)
    P = np.where(np.isfinite(log_w), P, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        d = np.where(mask, log_w - np.log(np.abs(P)), 0.0)
    r, c, resid = _fit_row_col(d, mask)
    return NormMatrix(np.exp(log_w), log_w, P, r, c, mask, resid)


def log_norm_determinant(sys: SectionSystem, xs, *, matrix: NormMatrix | None = None) -> float:
    nm = matrix if matrix is not None else norm_matrix(sys, xs)
    if nm.separability_residual > SEPARABILITY_LIMIT:
        raise SeparabilityFailure(f"row/column weight residual {nm.separability_residual:.3g}")
    sign, logdet = np.linalg.slogdet(nm.P)
    if sign == 0:
        return -math.inf
    return float(nm.row_log.sum() + nm.col_log.sum() + logdet)


def norm_determinant(sys: SectionSystem, xs) -> float:
    """``||det(t_j(x_k))|| = prod R_j prod C_k |det P|``."""
    return math.exp(log_norm_determinant(sys, xs))


@dataclass(frozen=True)
class FayResidual:
    log_lhs: float
    log_rhs: float
    residual: float
    separability_residual: float
    condition_number: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.tol


def fay_lhs_log(sys: SectionSystem, xs) -> float:
    """``log`` of ``||theta||(L + sum(y - x)) ||theta||(L)^{n-1} prod_{j<k} G(x_j,x_k) G(y_j,y_k)``."""
    xs = _as_points(xs, sys)
    s = sys.surface
    gf = s.green_function
    n = sys.n
    total = float(log_theta_norm_pic0(sys.L + np.sum(sys.ys - xs), s.tau))
    total += (n - 1) * float(log_theta_norm_pic0(sys.L, s.tau))
    if n >= 2:
        j, k = np.triu_indices(n, 1)
        total += float(np.sum(gf.values(xs[j], xs[k])) + np.sum(gf.values(sys.ys[j], sys.ys[k])))
    return total


def verify_fay_identity(sys: SectionSystem, xs, tol: float = FAY_TOL) -> FayResidual:
    """Compare both sides of the norm identity in the log domain."""
    nm = norm_matrix(sys, xs)
    rhs = log_norm_determinant(sys, xs, matrix=nm)
    lhs = fay_lhs_log(sys, xs)
    resid = abs(lhs - rhs)
    cond = float(np.linalg.cond(nm.A))
    return FayResidual(lhs, rhs, resid, nm.separability_residual, cond, tol)


def hadamard_check(A) -> float:
    """Slack ``prod_k sum_j |a_jk| - |det A|`` of the weak Hadamard bound (>= 0)."""
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidInputs("hadamard_check needs a square matrix")
    return float(np.prod(np.abs(A).sum(axis=0)) - abs(np.linalg.det(A)))


def lemma41_inequality(sys: SectionSystem, xs) -> float:
    """Log slack of ``||det(t_j(x_k))|| <= prod_k sum_j ||t_j||(x_k)``."""
    nm = norm_matrix(sys, xs)
    logdet = log_norm_determinant(sys, xs, matrix=nm)
    col_max = np.max(nm.log_W, axis=0)
    with np.errstate(divide="ignore"):
        log_cols = col_max + np.log(np.sum(np.exp(nm.log_W - col_max[None, :]), axis=0))
    return float(np.sum(log_cols) - logdet)


def random_instance(surface: EllipticSurface, n: int, rng: np.random.Generator, max_tries: int = 100):
    """A random ``(SectionSystem, xs)`` pair in general position."""
    for _ in range(max_tries):
        u = rng.random((2 * n + 1, 2))
        pts = surface.point(u[:, 0], u[:, 1])
        L, ys, xs = pts[0], pts[1 : n + 1], pts[n + 1 :]
        allp = np.concatenate([ys, xs])
        j, k = np.triu_indices(2 * n, 1)
        if np.min(surface.torus_distance(allp[j], allp[k])) <= 1e-3:
            continue
        try:
            return SectionSystem.build(L, ys, surface), xs
        except InvalidInputs:
            continue
    raise RuntimeError("could not draw a random instance in general position")
