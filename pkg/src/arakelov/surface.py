"""Period matrices, Jacobian points, elliptic surfaces and seeded sampling.

Points of the Jacobian ``C^g / (Z^g + Omega Z^g)`` are stored as complex
g-vectors. The canonical representative of a point has characteristic
coordinates ``a, b`` in ``[0, 1)^g`` where ``z = a + Omega b``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    CoincidentPoints,
    InputError,
    NotPositiveDefinite,
    NotSymmetric,
    UnsupportedGenus,
)

MAX_GENUS = 6
EQUALITY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class PeriodMatrix:
    """A validated element of the Siegel upper half space.

    Build instances through :func:`validate_period_matrix` or
    :meth:`from_tau`; the cached fields are not re-checked here.
    """

    entries: np.ndarray
    imaginary_part: np.ndarray
    y_inverse: np.ndarray
    min_eigenvalue: float

    @classmethod
    def from_tau(cls, tau: complex) -> "PeriodMatrix":
        return validate_period_matrix(np.array([[complex(tau)]]))

    @property
    def genus(self) -> int:
        return self.entries.shape[0]

    @property
    def real_part(self) -> np.ndarray:
        return self.entries.real

    @cached_property
    def log_det_y(self) -> float:
        sign, logdet = np.linalg.slogdet(self.imaginary_part)
        return float(logdet)

    def __repr__(self) -> str:
        return f"PeriodMatrix(genus={self.genus}, entries={self.entries.tolist()!r})"


def validate_period_matrix(omega) -> PeriodMatrix:
    """Check the Siegel conditions and cache ``Y``, ``Y^-1`` and ``min eig(Y)``.

    Raises
    ------
    UnsupportedGenus
        Matrix is empty, not square, or larger than 6x6.
    NotSymmetric
        ``Omega != Omega^T`` entrywise (exact comparison).
    NotPositiveDefinite
        ``Im Omega`` has a non-positive eigenvalue.
    """
    om = np.atleast_2d(np.asarray(omega, dtype=complex))
    if om.ndim != 2 or om.shape[0] != om.shape[1]:
        raise UnsupportedGenus(f"period matrix must be square, got shape {om.shape}")
    g = om.shape[0]
    if g < 1 or g > MAX_GENUS:
        raise UnsupportedGenus(f"genus must be in 1..{MAX_GENUS}, got {g}")
    if not np.array_equal(om, om.T):
        raise NotSymmetric("period matrix is not symmetric")
    y = np.ascontiguousarray(om.imag)
    eig = np.linalg.eigvalsh(y)
    lam = float(eig[0])
    if not lam > 0.0:
        raise NotPositiveDefinite(f"Im(Omega) has eigenvalue {lam:g} <= 0")
    om = om.copy()
    y_inv = np.linalg.inv(y)
    y_inv = 0.5 * (y_inv + y_inv.T)
    for arr in (om, y, y_inv):
        arr.setflags(write=False)
    return PeriodMatrix(entries=om, imaginary_part=y, y_inverse=y_inv, min_eigenvalue=lam)


def as_period_matrix(omega) -> PeriodMatrix:
    """Accept a :class:`PeriodMatrix`, an :class:`EllipticSurface`, a scalar tau or a raw matrix."""
    if isinstance(omega, PeriodMatrix):
        return omega
    if isinstance(omega, EllipticSurface):
        return omega.period_matrix
    if np.ndim(omega) == 0:
        return PeriodMatrix.from_tau(complex(omega))
    return validate_period_matrix(omega)


# -- characteristic coordinates ---------------------------------------------


def characteristics(z, omega: PeriodMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Return real ``(a, b)`` with ``z = a + Omega b``; ``z`` has shape ``(..., g)``."""
    z = np.asarray(z, dtype=complex)
    b = z.imag @ omega.y_inverse  # Y^-1 is symmetric
    a = z.real - b @ omega.real_part.T
    return a, b


def from_characteristics(a, b, omega: PeriodMatrix) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return a + b @ omega.entries.T


def _frac(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    k = np.floor(x)
    r = x - k
    # x slightly below an integer can round to exactly 1.0
    wrap = r >= 1.0
    r = np.where(wrap, 0.0, r)
    k = np.where(wrap, k + 1.0, k)
    return r, k


def lattice_decompose(z, omega: PeriodMatrix):
    """Split ``z = z_red + Omega m + n`` with ``z_red`` in characteristic ``[0,1)^{2g}``.

    Returns ``(z_red, m, n, a, b)`` where ``m, n`` are integer arrays and
    ``a, b`` are the characteristic coordinates of ``z_red``.
    """
    a, b = characteristics(z, omega)
    a_r, n = _frac(a)
    b_r, m = _frac(b)
    z_red = from_characteristics(a_r, b_r, omega)
    return z_red, m.astype(np.int64), n.astype(np.int64), a_r, b_r


def reduce_points(z, omega) -> np.ndarray:
    """Vectorised reduction of ``(..., g)`` complex arrays into the fundamental domain."""
    pm = as_period_matrix(omega)
    return lattice_decompose(z, pm)[0]


def distance_to_lattice(z, omega) -> np.ndarray:
    """Sup-norm distance of the characteristic coordinates of ``z`` to ``Z^{2g}``."""
    pm = as_period_matrix(omega)
    a, b = characteristics(z, pm)
    da = np.abs(a - np.rint(a))
    db = np.abs(b - np.rint(b))
    return np.maximum(da.max(axis=-1), db.max(axis=-1))


@dataclass(frozen=True, eq=False)
class JacobianPoint:
    """A lift ``z`` of a point of the Jacobian.

    ``reduced`` marks lifts produced by :func:`reduce`, whose characteristic
    coordinates lie in ``[0, 1)^g``.
    """

    coordinates: np.ndarray
    reduced: bool = False
    _characteristics: tuple | None = field(default=None, repr=False)

    @classmethod
    def of(cls, z) -> "JacobianPoint":
        if isinstance(z, JacobianPoint):
            return z
        arr = np.atleast_1d(np.asarray(z, dtype=complex)).copy()
        if arr.ndim != 1:
            raise InputError(f"a Jacobian point is a complex vector, got shape {arr.shape}")
        arr.setflags(write=False)
        return cls(arr)

    @property
    def genus(self) -> int:
        return self.coordinates.shape[0]

    @property
    def imag(self) -> np.ndarray:
        return self.coordinates.imag

    def equivalent(self, other, omega, tol: float = EQUALITY_TOL) -> bool:
        """True iff ``self - other`` lies in ``Z^g + Omega Z^g`` up to ``tol``."""
        other = JacobianPoint.of(other)
        d = self.coordinates - other.coordinates
        return bool(distance_to_lattice(d, omega) <= tol)

    def __neg__(self) -> "JacobianPoint":
        return JacobianPoint.of(-self.coordinates)

    def __add__(self, other) -> "JacobianPoint":
        other = JacobianPoint.of(other)
        return JacobianPoint.of(self.coordinates + other.coordinates)

    def __sub__(self, other) -> "JacobianPoint":
        other = JacobianPoint.of(other)
        return JacobianPoint.of(self.coordinates - other.coordinates)


def reduce(z, omega) -> JacobianPoint:
    """Return the representative of ``z`` with characteristics in ``[0, 1)^g``.

    Already-reduced points are returned unchanged, which makes the operation
    exactly idempotent.
    """
    pt = JacobianPoint.of(z)
    if pt.reduced:
        return pt
    pm = as_period_matrix(omega)
    if pt.genus != pm.genus:
        raise InputError(f"point has {pt.genus} coordinates but genus is {pm.genus}")
    z_red, m, n, a, b = lattice_decompose(pt.coordinates, pm)
    z_red = np.array(z_red, dtype=complex)
    z_red.setflags(write=False)
    return JacobianPoint(z_red, reduced=True, _characteristics=(a, b, m, n))


def lattice_coefficients(z: JacobianPoint, omega) -> tuple[np.ndarray, np.ndarray]:
    """Integer ``(m, n)`` with ``z = reduce(z) + Omega m + n``."""
    pm = as_period_matrix(omega)
    _, m, n, _, _ = lattice_decompose(JacobianPoint.of(z).coordinates, pm)
    return m, n


# -- genus one ---------------------------------------------------------------


@dataclass(frozen=True)
class EllipticSurface:
    """The flat torus ``C / (Z + tau Z)`` with its canonical (1,1)-form.

    ``mu`` has constant density ``1 / Im(tau)`` with respect to ``dx dy``.
    The H(X) Monte Carlo estimate and the Green normalisation constant are
    computed lazily and cached.
    """

    tau: complex

    def __post_init__(self):
        t = complex(self.tau)
        if not t.imag > 0:
            raise NotPositiveDefinite(f"Im(tau) must be positive, got {t.imag:g}")
        object.__setattr__(self, "tau", t)

    @property
    def kappa(self) -> complex:
        return (1.0 + self.tau) / 2.0

    @property
    def mu_density(self) -> float:
        return 1.0 / self.tau.imag

    @property
    def area(self) -> float:
        return self.tau.imag

    @cached_property
    def period_matrix(self) -> PeriodMatrix:
        return PeriodMatrix.from_tau(self.tau)

    @cached_property
    def systole(self) -> float:
        u, w = reduced_lattice_basis(1.0 + 0j, self.tau)
        return abs(u)

    @cached_property
    def hx(self):
        """Default H(X) estimate (10^5 samples, seed 0)."""
        from .integrals import estimate_hx

        return estimate_hx(self.period_matrix, 10**5, SeededSampler(0))

    @cached_property
    def green_function(self):
        from .green import GreenFunction

        return GreenFunction(self)

    def characteristics(self, z) -> tuple[np.ndarray, np.ndarray]:
        z = np.asarray(z, dtype=complex)
        b = z.imag / self.tau.imag
        a = z.real - b * self.tau.real
        return a, b

    def point(self, a, b) -> np.ndarray:
        return np.asarray(a, dtype=float) + self.tau * np.asarray(b, dtype=float)

    def reduce(self, z) -> np.ndarray:
        a, b = self.characteristics(z)
        a, _ = _frac(a)
        b, _ = _frac(b)
        return self.point(a, b)

    def torus_distance(self, x, y) -> np.ndarray:
        """Flat distance between ``x`` and ``y`` modulo the lattice."""
        a, b = self.characteristics(np.asarray(x) - np.asarray(y))
        a = a - np.rint(a)
        b = b - np.rint(b)
        best = None
        for i in (-1, 0, 1):
            for j in (-1, 0, 1):
                d = np.abs(self.point(a + i, b + j))
                best = d if best is None else np.minimum(best, d)
        return best

    def coincide(self, x, y, tol: float = EQUALITY_TOL) -> np.ndarray:
        a, b = self.characteristics(np.asarray(x) - np.asarray(y))
        return np.maximum(np.abs(a - np.rint(a)), np.abs(b - np.rint(b))) <= tol


def reduced_lattice_basis(u: complex, w: complex) -> tuple[complex, complex]:
    """Lagrange-Gauss reduction of the planar lattice ``Z u + Z w``."""
    u, w = complex(u), complex(w)
    if abs(u) > abs(w):
        u, w = w, u
    while True:
        k = round((w * u.conjugate()).real / abs(u) ** 2)
        w = w - k * u
        if abs(w) >= abs(u):
            return u, w
        u, w = w, u


@dataclass(frozen=True, eq=False)
class PointConfiguration:
    """An ordered tuple of pairwise distinct points on an elliptic surface."""

    points: np.ndarray

    @classmethod
    def build(cls, points: Sequence[complex], surface: EllipticSurface) -> "PointConfiguration":
        pts = surface.reduce(np.asarray(points, dtype=complex).ravel())
        n = pts.shape[0]
        if n >= 2:
            j, k = np.triu_indices(n, 1)
            if np.any(surface.coincide(pts[j], pts[k])):
                raise CoincidentPoints("configuration contains coincident points")
        pts.setflags(write=False)
        return cls(pts)

    @property
    def n(self) -> int:
        return int(self.points.shape[0])


# -- randomness ----------------------------------------------------------------


@dataclass
class SeededSampler:
    """Philox counter-based stream keyed by ``(seed, parents..., stream_index)``.

    Identical keys give bit-identical draws. :meth:`substream` derives
    independent child streams, which is how the estimators fan out.
    """

    seed: int
    stream_index: int = 0
    parents: tuple[int, ...] = ()

    def __post_init__(self):
        if self.seed < 0 or self.seed >= 2**64:
            raise InputError("seed must be a 64-bit unsigned integer")
        key = self.parents + (self.stream_index,)
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=key)
        self._generator = np.random.Generator(np.random.Philox(seq))

    @property
    def generator(self) -> np.random.Generator:
        return self._generator

    def uniform(self, size) -> np.ndarray:
        return self._generator.random(size)

    def substream(self, index: int) -> "SeededSampler":
        return SeededSampler(self.seed, index, self.parents + (self.stream_index,))


def uniform_characteristics(sampler: SeededSampler, count: int, genus: int) -> tuple[np.ndarray, np.ndarray]:
    u = sampler.uniform((count, 2 * genus))
    return u[:, :genus], u[:, genus:]


def uniform_jacobian_samples(omega, sampler: SeededSampler, count: int) -> np.ndarray:
    """``count`` Haar-uniform reduced points, shape ``(count, g)``."""
    pm = as_period_matrix(omega)
    a, b = uniform_characteristics(sampler, count, pm.genus)
    return from_characteristics(a, b, pm)


def uniform_jacobian_sample(omega, sampler: SeededSampler) -> JacobianPoint:
    pm = as_period_matrix(omega)
    a, b = uniform_characteristics(sampler, 1, pm.genus)
    z = from_characteristics(a, b, pm)[0]
    z.setflags(write=False)
    return JacobianPoint(z, reduced=True, _characteristics=(a[0], b[0], None, None))


def uniform_surface_points(surface: EllipticSurface, sampler: SeededSampler, shape) -> np.ndarray:
    """mu-uniform points on the torus; the last random axis holds ``(a, b)``."""
    shape = (shape,) if isinstance(shape, int) else tuple(shape)
    u = sampler.uniform(shape + (2,))
    return surface.point(u[..., 0], u[..., 1])


# -- parsing -----------------------------------------------------------------

def parse_complex(text: str) -> complex:
    """Parse ``a+bi`` style literals (``i`` or ``j`` as imaginary unit)."""
    s = text.strip().replace(" ", "").lower()
    if not s:
        raise InputError("empty complex literal")
    s = s.replace("j", "i")
    s = re.sub(r"(^|[+-])i", r"\g<1>1i", s)
    s = s.replace("i", "j")
    try:
        return complex(s)
    except ValueError:
        raise InputError(f"cannot parse complex number {text!r}") from None


def format_complex(z: complex) -> str:
    z = complex(z)
    sign = "-" if math.copysign(1.0, z.imag) < 0 else "+"
    return f"{z.real!r}{sign}{abs(z.imag)!r}i"


def read_period_matrix(path) -> PeriodMatrix:
    """Read the plain-text format: ``g`` on line 1, then ``g`` rows of ``g`` complex entries."""
    lines = Path(path).read_text().splitlines()
    rows = [(i + 1, ln.split("#", 1)[0].strip()) for i, ln in enumerate(lines)]
    rows = [(i, ln) for i, ln in rows if ln]
    if not rows:
        raise InputError(f"{path}: empty period matrix file")
    lineno, head = rows[0]
    try:
        g = int(head)
    except ValueError:
        raise InputError(f"{path}:{lineno}: expected the genus, got {head!r}") from None
    if g < 1 or g > MAX_GENUS:
        raise InputError(f"{path}:{lineno}: genus must be in 1..{MAX_GENUS}, got {g}")
    body = rows[1:]
    if len(body) != g:
        where = body[g][0] if len(body) > g else (body[-1][0] if body else lineno)
        raise InputError(f"{path}:{where}: expected {g} matrix rows, found {len(body)}")
    entries = []
    for lineno, ln in body:
        fields = [f for f in re.split(r"[,\s]+", ln) if f]
        if len(fields) != g:
            raise InputError(f"{path}:{lineno}: expected {g} entries, found {len(fields)}")
        try:
            entries.append([parse_complex(f) for f in fields])
        except InputError as exc:
            raise InputError(f"{path}:{lineno}: {exc}") from None
    return validate_period_matrix(np.array(entries))
