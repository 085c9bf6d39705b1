"""Planar representing measures: ln||x|| = int ln|(x, xi)| dmu(xi) + C.

On the circle this is a convolution of mu with k(t) = ln|cos t|, whose
Fourier series is

    ln|cos t| = -ln 2 + sum_{j>=1} (-1)^(j+1) cos(2 j t) / j,

so the density of mu is obtained by dividing Fourier coefficients.  The
total mass is forced to 1 by homogeneity, and C comes from the zeroth
coefficient.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ArgumentError, NumericalError
from ..numerics.rng import rng_stream
from ..starbody import StarBody, bandlimited_log_cos_kernel

log = logging.getLogger(__name__)


def log_cos_coefficients(N: int) -> np.ndarray:
    """Complex Fourier coefficients k_m, m = 0..N/2 - 1, of ln|cos t| (k_m = (1/2pi) int k e^{-imt})."""
    m = np.arange(N // 2)
    out = np.zeros(N // 2)
    out[0] = -math.log(2.0)
    even = (m > 0) & (m % 2 == 0)
    j = m[even] // 2
    out[even] = (-1.0) ** (j + 1) / (2.0 * j)
    return out


@dataclass(frozen=True)
class RepresentingMeasure2D:
    """Weights w_j >= 0 on the grid 2 pi j / N and the constant C."""

    weights: np.ndarray
    C: float

    @property
    def N(self):
        return len(self.weights)

    @property
    def angles(self):
        return 2.0 * math.pi * np.arange(self.N) / self.N

    @property
    def total_mass(self):
        return float(np.sum(self.weights))

    def is_nonnegative(self, tol=1e-8):
        return bool(np.min(self.weights) >= -tol)

    def to_dict(self):
        return {"N": self.N, "C": self.C, "angles": self.angles.tolist(),
                "weights": np.asarray(self.weights).tolist(), "total_mass": self.total_mass,
                "min_weight": float(np.min(self.weights))}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self):
        rows = ["angle,weight"]
        rows += [f"{a!r},{w!r}" for a, w in zip(self.angles.tolist(), np.asarray(self.weights).tolist())]
        rows.append(f"# C={self.C!r}")
        return "\n".join(rows) + "\n"

    def write_csv(self, path):
        Path(path).write_text(self.to_csv())


def _density_coefficients(body, N):
    """Complex density coefficients mhat_0..mhat_{N/2} from N samples of ln||.||."""
    t = 2.0 * math.pi * np.arange(N) / N
    h = np.log(body.gauge(np.column_stack([np.cos(t), np.sin(t)])))
    hhat = np.fft.rfft(h) / N
    scale = 1.0 + float(np.max(np.abs(h)))
    odd = np.abs(hhat[1::2]).max(initial=0.0)
    if odd > 1e-9 * scale:
        raise ArgumentError(f"{body.spec}: odd Fourier coefficients of ln||.|| are {odd:.2e}; the body is not symmetric")
    kern = log_cos_coefficients(N)
    band = np.arange(2, N // 2, 2)
    if band.size and np.min(np.abs(kern[band])) < 1e-300:
        raise ArgumentError("kernel coefficients underflow at this N; use a smaller N")
    # density m(s) = sum_m mhat_m e^{ims}; h_m = 2 pi k_m mhat_m for m != 0
    mhat = np.zeros(N // 2 + 1, dtype=complex)
    mhat[0] = 1.0 / (2.0 * math.pi)
    mhat[band] = hhat[band] / (2.0 * math.pi * kern[band])
    return mhat, float(hhat[0].real)


def recover_measure_2d(body: StarBody, N: int = 256, tail_tol: float = 1e-6) -> RepresentingMeasure2D:
    """Deconvolve h(t) = ln||(cos t, sin t)||_K against ln|cos|.

    Frequencies up to N/2 - 1 are kept; the Nyquist frequency is dropped.
    The discarded tail is measured by repeating the deconvolution on 2N
    samples: if density coefficients beyond the band exceed ``tail_tol``
    (relative to the uniform density) a NumericalError is raised.  That is
    what happens when mu has atoms, e.g. for polygons.
    """
    if body.n != 2:
        raise ArgumentError(f"measure recovery is planar only; body has n={body.n}")
    if N < 8 or N % 2:
        raise ArgumentError("N must be even and at least 8")
    mhat, h0 = _density_coefficients(body, N)
    fine, _ = _density_coefficients(body, 2 * N)
    tail = 2.0 * math.pi * float(np.max(np.abs(fine[N // 2:N])))
    if tail > tail_tol:
        raise NumericalError(
            f"{body.spec}: density coefficients beyond the band are {tail:.2e} > {tail_tol:g}; "
            "the measure may have atoms, or N is too small"
        )
    density = np.fft.irfft(mhat * N, n=N)
    weights = density * 2.0 * math.pi / N
    return RepresentingMeasure2D(weights, h0 + math.log(2.0))


def symmetric_weights(N: int, seed: int = 0, harmonics: int = 6, amplitude: float = 0.5) -> np.ndarray:
    """Positive grid weights summing to 1 that ln|cos| can resolve.

    Only even frequencies below N/2 appear: odd ones (a non-symmetric
    measure) and the Nyquist frequency are invisible to the kernel.
    """
    if N < 8 or N % 2:
        raise ArgumentError("N must be even and at least 8")
    rng = rng_stream(seed, 1)
    s = 2.0 * math.pi * np.arange(N) / N
    density = np.ones(N)
    freqs = [m for m in range(2, N // 2, 2)][:harmonics]
    for m in freqs:
        a, phase = rng.uniform(0.0, amplitude / max(len(freqs), 1)), rng.uniform(0.0, 2.0 * math.pi)
        density += a * np.cos(m * s + phase)
    return density / density.sum()


def _sample_points(count, seed, radius_range=(1e-3, 1e3)):
    rng = rng_stream(seed, 0)
    t = rng.uniform(0.0, 2.0 * math.pi, count)
    lo, hi = (math.log(v) for v in radius_range)
    r = np.exp(rng.uniform(lo, hi, count))
    return t, r


def representation_residuals(body: StarBody, measure: RepresentingMeasure2D, samples: int = 1000, seed: int = 0,
                             kernel: str = "bandlimited", radius_range=(1e-3, 1e3)):
    """Pointwise |ln||x|| - sum_j w_j k(x, xi_j) - C| at random x and the number of perturbed samples.

    ``kernel="bandlimited"`` pairs the grid weights with the partial Fourier
    sum of ln|cos| matching the grid (the kernel seen by the trigonometric
    interpolant of the density); ``kernel="atomic"`` uses ln|cos| itself and
    moves samples that hit a singular direction by 1e-9 radians.
    """
    if body.n != 2:
        raise ArgumentError("verify_representation is planar only")
    if samples < 1:
        raise ArgumentError("samples must be positive")
    t, r = _sample_points(samples, seed, radius_range)
    s = measure.angles
    flagged = 0
    if kernel == "bandlimited":
        k = bandlimited_log_cos_kernel(t[:, None] - s[None, :], measure.N)
    elif kernel == "atomic":
        c = np.abs(np.cos(t[:, None] - s[None, :]))
        hit = np.any(c < 1e-12, axis=1)
        flagged = int(hit.sum())
        if flagged:
            log.warning("perturbed %d sample(s) lying on singular directions by 1e-9 rad", flagged)
            t = np.where(hit, t + 1e-9, t)
            c = np.abs(np.cos(t[:, None] - s[None, :]))
        k = np.log(c)
    else:
        raise ArgumentError(f"unknown kernel {kernel!r}; use 'bandlimited' or 'atomic'")
    x = r[:, None] * np.column_stack([np.cos(t), np.sin(t)])
    lhs = np.log(body.gauge(x))
    w = np.asarray(measure.weights)
    rhs = k @ w + np.log(r) * w.sum() + measure.C
    return np.abs(lhs - rhs), flagged


def verify_representation(body: StarBody, measure: RepresentingMeasure2D, samples: int = 1000, seed: int = 0,
                          kernel: str = "bandlimited") -> float:
    """Maximum residual of the representation over random x != 0 (radii log-uniform in [1e-3, 1e3])."""
    residuals, _ = representation_residuals(body, measure, samples, seed, kernel)
    return float(residuals.max())
