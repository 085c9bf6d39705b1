"""Symmetric p-stable random vectors and the version property.

If X_1, ..., X_n are i.i.d. with characteristic function exp(-|t|^p), then
sum a_i X_i has the law of ||a||_p * X_1.  This module samples such vectors
and tests that identity with a two-sample Kolmogorov-Smirnov test.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import ArgumentError
from .numerics.ks import ks_two_sample
from .numerics.rng import rng_stream

# rows per RNG substream; the partition (not the worker count) fixes the output
CHUNK_ROWS = 65_536
# the vector sample and the reference sample of version_ks_test use disjoint substreams
_REFERENCE_STREAM_BASE = 1 << 40


@dataclass(frozen=True)
class StableSpec:
    """i.i.d. standard symmetric p-stable components in R^n."""

    p: float
    n: int

    def __post_init__(self):
        if not 0 < self.p <= 2:
            raise ArgumentError(f"stable index p must lie in (0, 2], got {self.p}")
        if int(self.n) != self.n or self.n < 1:
            raise ArgumentError(f"dimension must be a positive integer, got {self.n}")

    def standard(self, a) -> float:
        """gamma(a) = ||a||_p, the scale of sum a_i X_i."""
        a = np.asarray(a, dtype=float)
        if a.shape != (self.n,):
            raise ArgumentError(f"expected a vector of length {self.n}")
        return float(np.sum(np.abs(a) ** self.p) ** (1.0 / self.p))


def _stable_variates(rng, p, size):
    """Chambers-Mallows-Stuck transform of a uniform angle and an exponential variate."""
    if p == 2.0:
        return math.sqrt(2.0) * rng.standard_normal(size)
    if p == 1.0:
        return np.tan(rng.uniform(-0.5 * math.pi, 0.5 * math.pi, size))
    v = rng.uniform(-0.5 * math.pi, 0.5 * math.pi, size)
    w = rng.standard_exponential(size)
    return (np.sin(p * v) / np.cos(v) ** (1.0 / p)) * (np.cos((1.0 - p) * v) / w) ** ((1.0 - p) / p)


def _sample(p, n, count, seed, stream_base, workers):
    out = np.empty((count, n))
    starts = range(0, count, CHUNK_ROWS)

    def fill(start):
        rows = min(CHUNK_ROWS, count - start)
        rng = rng_stream(seed, stream_base + start // CHUNK_ROWS)
        out[start:start + rows] = _stable_variates(rng, p, (rows, n))

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(fill, starts))
    else:
        for start in starts:
            fill(start)
    return out


def sample_stable_vector(p: float, n: int, count: int, seed: int = 0, workers: int = 1) -> np.ndarray:
    """count x n matrix of i.i.d. standard symmetric p-stable entries.

    The result depends only on (p, n, count, seed): rows are produced in
    fixed chunks, each from its own counter-based substream.
    """
    StableSpec(float(p), n)
    if int(count) != count or count < 1:
        raise ArgumentError("count must be a positive integer")
    return _sample(float(p), int(n), int(count), seed, 0, workers)


@dataclass(frozen=True)
class VersionTestReport:
    p: float
    a: tuple
    gamma: float
    m: int
    statistic: float
    p_value: float
    seed: int

    def to_dict(self):
        d = asdict(self)
        d["a"] = list(self.a)
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def version_ks_test(p: float, a, m: int = 100_000, seed: int = 0, workers: int = 1) -> VersionTestReport:
    """KS test of sum a_i X_i against ||a||_p * Y from independent draws."""
    a = np.asarray(a, dtype=float).ravel()
    spec = StableSpec(float(p), a.size)
    if not np.any(a):
        raise ArgumentError("a must be non-zero")
    if m < 1000:
        raise ArgumentError("version_ks_test needs m >= 1000")
    gamma = spec.standard(a)
    combined = _sample(spec.p, spec.n, m, seed, 0, workers) @ a
    reference = gamma * _sample(spec.p, 1, m, seed, _REFERENCE_STREAM_BASE, workers)[:, 0]
    stat, pval = ks_two_sample(combined, reference)
    return VersionTestReport(spec.p, tuple(a.tolist()), gamma, int(m), stat, pval, int(seed))


class CharFunctionalEstimate(NamedTuple):
    values: np.ndarray
    standard_error: float


def empirical_char_functional(samples, xs) -> CharFunctionalEstimate:
    """Mean of exp(i (x, X_k)) for each x; real and imaginary parts each have standard error <= 1/sqrt(m)."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    if samples.shape[0] == 0:
        raise ArgumentError("samples must be non-empty")
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    if xs.shape[1] != samples.shape[1]:
        raise ArgumentError("points and samples have different dimensions")
    phase = samples @ xs.T
    values = np.cos(phase).mean(axis=0) + 1j * np.sin(phase).mean(axis=0)
    return CharFunctionalEstimate(values, 1.0 / math.sqrt(samples.shape[0]))


def write_samples_csv(samples, path) -> None:
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"x{i + 1}" for i in range(samples.shape[1])])
        writer.writerows([repr(v) for v in row] for row in samples.tolist())
