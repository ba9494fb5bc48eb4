"""Plain Monte Carlo over the Jacobian and over genus-one surfaces.

Every estimator splits its sample budget across ``streams`` Philox
substreams. Stream ``i`` always draws the same numbers, and partial
results are concatenated in stream order before any reduction, so the
estimate does not depend on the number of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateEstimate, InputError
from .surface import (
    EllipticSurface,
    PeriodMatrix,
    SeededSampler,
    as_period_matrix,
    uniform_jacobian_samples,
    uniform_surface_points,
)
from .theta import DEFAULT_TOL, log_theta_norm

MIN_HX_SAMPLES = 1000
MAX_DROPPED_FRACTION = 1e-3


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    samples: int
    seed: int
    dropped: int = 0

    @classmethod
    def from_values(cls, values: np.ndarray, seed: int, dropped: int = 0) -> "McEstimate":
        values = np.asarray(values, dtype=float)
        if values.size < 2:
            raise InputError("a Monte Carlo estimate needs at least two samples")
        mean = float(np.mean(values))
        stderr = float(np.std(values, ddof=1) / math.sqrt(values.size))
        return cls(mean, stderr, int(values.size), seed, dropped)

    def interval(self, k: float = 3.0) -> tuple[float, float]:
        return self.mean - k * self.stderr, self.mean + k * self.stderr


@dataclass(frozen=True)
class HxEstimate(McEstimate):
    omega: PeriodMatrix | None = None


def split_counts(total: int, streams: int) -> list[int]:
    base, extra = divmod(total, streams)
    return [base + (1 if i < extra else 0) for i in range(streams)]


def run_streams(
    sampler: SeededSampler,
    total: int,
    block: Callable[[SeededSampler, int], np.ndarray],
    streams: int = 1,
    threads: int | None = None,
) -> np.ndarray:
    """Evaluate ``block(substream_i, count_i)`` for each stream and concatenate in order.

    With ``streams == 1`` the sampler itself is consumed, otherwise
    substreams ``0..streams-1`` of it.
    """
    if streams < 1:
        raise InputError("streams must be >= 1")
    counts = split_counts(total, streams)
    if streams == 1:
        return np.asarray(block(sampler, total))
    subs = [sampler.substream(i) for i in range(streams)]
    if threads is None or threads <= 1:
        parts = [block(s, c) for s, c in zip(subs, counts)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(block, subs, counts))
    return np.concatenate([np.asarray(p) for p in parts])


def estimate_hx(
    omega,
    samples: int,
    sampler: SeededSampler,
    *,
    streams: int = 1,
    threads: int | None = None,
    shift=None,
    tol: float = DEFAULT_TOL,
) -> HxEstimate:
    """Monte Carlo estimate of ``H(X) = int_J log||theta|| nu^g/g!``.

    Haar samples are uniform characteristics in ``[0,1)^{2g}``. An optional
    ``shift`` evaluates ``log||theta||(z + shift)`` instead, which by
    translation invariance estimates the same number. Samples where
    ``||theta||`` underflows to zero are dropped and counted.

    Raises
    ------
    InputError
        ``samples < 1000``.
    DegenerateEstimate
        More than 0.1% of the samples underflowed.
    """
    pm = as_period_matrix(omega)
    if samples < MIN_HX_SAMPLES:
        raise InputError(f"estimate_hx needs at least {MIN_HX_SAMPLES} samples, got {samples}")
    offset = None if shift is None else np.atleast_1d(np.asarray(shift, dtype=complex))

    def block(sub: SeededSampler, count: int) -> np.ndarray:
        z = uniform_jacobian_samples(pm, sub, count)
        if offset is not None:
            z = z + offset
        return log_theta_norm(z, pm, tol)

    values = run_streams(sampler, samples, block, streams, threads)
    finite = np.isfinite(values)
    dropped = int(values.size - finite.sum())
    if dropped > MAX_DROPPED_FRACTION * values.size:
        raise DegenerateEstimate(f"{dropped} of {values.size} samples hit the theta divisor")
    est = McEstimate.from_values(values[finite], sampler.seed, dropped)
    return HxEstimate(est.mean, est.stderr, est.samples, est.seed, est.dropped, pm)


def mc_integral(
    f: Callable[[np.ndarray], np.ndarray],
    surface: EllipticSurface,
    samples: int,
    sampler: SeededSampler,
    *,
    streams: int = 1,
    threads: int | None = None,
) -> McEstimate:
    """Mean and standard error of ``f`` over mu-uniform points of the torus.

    ``f`` receives a complex array of points and returns real values.
    """

    def block(sub: SeededSampler, count: int) -> np.ndarray:
        pts = uniform_surface_points(surface, sub, count)
        return np.broadcast_to(np.asarray(f(pts), dtype=float), pts.shape)

    values = run_streams(sampler, samples, block, streams, threads)
    return McEstimate.from_values(values, sampler.seed)


def estimate_an(
    x: complex,
    n: int,
    surface: EllipticSurface,
    samples: int,
    sampler: SeededSampler,
    *,
    streams: int = 1,
    threads: int | None = None,
) -> McEstimate:
    """Estimate ``A_n(x) = -E[min_j g(y_j, x)]`` for ``n`` independent mu-uniform ``y_j``.

    Each stream draws an ``(n, count)`` block of points, one row per
    index ``j``. Row ``j`` does not depend on ``n``, so for matched samplers
    the estimate is nondecreasing in ``n``.
    """
    if n < 1:
        raise InputError("n must be >= 1")
    green = surface.green_function
    x = complex(x)

    def block(sub: SeededSampler, count: int) -> np.ndarray:
        ys = uniform_surface_points(surface, sub, (n, count))
        vals = green.values(ys, x)
        return -np.min(vals, axis=0)

    values = run_streams(sampler, samples, block, streams, threads)
    return McEstimate.from_values(values, sampler.seed)
