"""Fourier transforms of annular test functions.

For a term rho(|x|) G_j(a . x/|x|) the transform is
(-1)^(j/2) G_j(a . xi/|xi|) F_j(|xi|) with the Hankel-type radial part

    F_j(s) = (2 pi)^(n/2) s^(-lam) int rho(r) J_(j+lam)(r s) r^(n/2) dr,

lam = (n - 2) / 2, for the convention fhat(xi) = int f(x) exp(-i x.xi) dx.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ..errors import ArgumentError, NumericalError
from ..numerics.bessel import bessel_j_ladder
from ..numerics.quadrature import _WG, _WGK, _XGK, gauss_legendre_panels, integrate_1d
from ..numerics.sphere import sphere_area
from .testfunctions import TestFunction, bump_radial, zonal_basis

DECAY_ORDERS = tuple(range(9))
_CHUNK_ENTRIES = 4_000_000


def _radial_rule(r0, r1, s_hi):
    """Composite Gauss-Legendre nodes fine enough for J(r s) with s <= s_hi."""
    panels = max(64, int(math.ceil(1.5 * (r1 - r0) * s_hi / (2.0 * math.pi))))
    r, w = gauss_legendre_panels(r0, r1, panels)
    return r, w * bump_radial(r0, r1, r)


def radial_values(n, r0, r1, max_degree, s, s_hi=None):
    """F_j(s) for j = 0..max_degree, shape (max_degree + 1, len(s))."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(s < 0):
        raise ArgumentError("radii must be non-negative")
    lam = 0.5 * (n - 2)
    half = n % 2 == 1
    offset = int(lam) if not half else 0
    r, w = _radial_rule(r0, r1, float(s.max(initial=0.0)) if s_hi is None else s_hi)
    wr = w * r ** (0.5 * n)
    out = np.zeros((max_degree + 1, s.size))
    zero = s == 0
    if zero.any():
        out[0, zero] = (2.0 * math.pi) ** (0.5 * n) * float(np.dot(wr, (0.5 * r) ** lam)) / math.gamma(lam + 1.0)
    idx = np.flatnonzero(~zero)
    step = max(1, _CHUNK_ENTRIES // (r.size * (max_degree + offset + 1)))
    for start in range(0, idx.size, step):
        part = idx[start:start + step]
        ladder = bessel_j_ladder(max_degree + offset, np.outer(s[part], r), half_integer=half)
        vals = ladder[offset:] @ wr
        out[:, part] = (2.0 * math.pi) ** (0.5 * n) * vals * s[part] ** (-lam)
    return out


def _kronrod_panels(edges):
    lo, hi = edges[:-1], edges[1:]
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    nodes = (mid[:, None] + half[:, None] * _XGK[None, :]).ravel()
    wk = (half[:, None] * _WGK[None, :]).ravel()
    wg = (half[:, None] * _WG[None, :]).ravel()
    return nodes, wk, wg


@dataclass(frozen=True)
class Moments:
    """int s^(n-1) F_j ds (``M``), int s^(n-1) ln(s) F_0 ds (``L0``) and their errors."""

    M: np.ndarray
    M_error: np.ndarray
    L0: float
    L0_error: float


@dataclass
class RadialTransform:
    """Sampled F_j on a Gauss-Kronrod radial grid reaching the decay cutoff s_max."""

    n: int
    r0: float
    r1: float
    max_degree: int
    s: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    gauss_weights: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    s_max: float = 0.0
    tail: float = 0.0
    decay_constants: dict = field(default_factory=dict)

    def __call__(self, j, s):
        """F_j at arbitrary radii by direct quadrature (no interpolation)."""
        if j > self.max_degree:
            raise ArgumentError(f"degree {j} exceeds the transform's maximum {self.max_degree}")
        return radial_values(self.n, self.r0, self.r1, j, s)[j]

    def moments(self) -> Moments:
        sw = self.s ** (self.n - 1)
        M = self.values @ (self.weights * sw)
        M_gauss = self.values @ (self.gauss_weights * sw)
        logw = sw * np.log(self.s)
        L0 = float(self.values[0] @ (self.weights * logw))
        L0_gauss = float(self.values[0] @ (self.gauss_weights * logw))
        return Moments(M, np.abs(M - M_gauss) + self.tail, L0, abs(L0 - L0_gauss) + self.tail)


@lru_cache(maxsize=64)
def radial_transform(n: int, r0: float, r1: float, max_degree: int, rtol: float = 1e-11,
                     s_cap: float = 3000.0) -> RadialTransform:
    """Sample F_0..F_max_degree until they have decayed below ``rtol``.

    Panels of width pi / r1 are added in blocks; the walk stops when a whole
    block contributes at most ``rtol`` of the accumulated weighted L1 mass.
    Beyond ``s_cap`` a NumericalError asks for a narrower annulus or a larger
    cap.
    """
    width = math.pi / r1
    head = width * np.concatenate([[0.0], 2.0 ** np.arange(-20.0, 1.0)])
    nodes, wk, wg = [], [], []
    values = []
    mass = 0.0
    lo = 0.0
    edges = head
    tail = math.inf
    while True:
        s, k, g = _kronrod_panels(edges)
        F = radial_values(n, r0, r1, max_degree, s, s_hi=edges[-1])
        envelope = s ** (n - 1) * (1.0 + np.abs(np.log(s))) * np.abs(F).sum(axis=0)
        block = float(envelope @ k)
        nodes.append(s)
        wk.append(k)
        wg.append(g)
        values.append(F)
        mass += block
        lo = edges[-1]
        if lo > width and block <= rtol * mass:
            tail = block
            break
        if lo >= s_cap:
            raise NumericalError(
                f"transform of the annulus [{r0}, {r1}] has not decayed by s={lo:.0f} "
                f"(block mass {block:.2e} vs total {mass:.2e}); refine with a larger s_cap or a narrower annulus"
            )
        edges = lo + width * np.arange(33)
    s = np.concatenate(nodes)
    F = np.concatenate(values, axis=1)
    decay = {m: float(np.max(np.abs(F).max(axis=0) * (1.0 + s) ** m)) for m in DECAY_ORDERS}
    return RadialTransform(n, r0, r1, max_degree, s, np.concatenate(wk), np.concatenate(wg), F, lo, tail, decay)


# ---------------------------------------------------------------------------
# Closed-form radial moments


@lru_cache(maxsize=256)
def inverse_moment(r0: float, r1: float) -> float:
    """int rho(r) / r dr for the bump on [r0, r1]."""
    return integrate_1d(lambda r: bump_radial(r0, r1, r) / r, r0, r1, tol=1e-13 * (r1 - r0) / r1).value


def hankel_moments(n: int, r0: float, r1: float, max_degree: int) -> Moments:
    """Exact Abel-summed moments of F_j.

    int_0^inf s^(n/2) J_nu(r s) ds = 2^(n/2) r^(-n/2-1) Gamma((nu+n/2+1)/2) / Gamma((nu-n/2+1)/2)
    gives M_j = (2 pi)^(n/2) 2^(n/2) Gamma((j+n)/2) / Gamma(j/2) int rho/r, so
    M_0 = 0; differentiating in the power of s gives
    L0 = -2^(n-1) pi^(n/2) Gamma(n/2) int rho/r.
    """
    inv = inverse_moment(r0, r1)
    M = np.zeros(max_degree + 1)
    for j in range(2, max_degree + 1, 2):
        M[j] = (2.0 * math.pi) ** (0.5 * n) * 2.0 ** (0.5 * n) * math.gamma(0.5 * (j + n)) / math.gamma(0.5 * j) * inv
    L0 = -(2.0 ** (n - 1)) * math.pi ** (0.5 * n) * math.gamma(0.5 * n) * inv
    rel = 1e-12
    return Moments(M, rel * np.abs(M), L0, rel * abs(L0))


# ---------------------------------------------------------------------------
# Full transforms


@dataclass
class SpectralTransform:
    """phi-hat for a test function: one radial transform per distinct annulus."""

    phi: TestFunction
    radial: dict

    @property
    def decay_constants(self):
        """K_m with |F_j(s)| <= K_m (1 + s)^(-m) on every sampled grid."""
        out = {}
        for m in DECAY_ORDERS:
            out[m] = max(t.decay_constants[m] for t in self.radial.values())
        return out

    def __call__(self, xi):
        """Real values of phi-hat at points ``xi`` of shape (..., n)."""
        xi = np.asarray(xi, dtype=float)
        if xi.shape[-1] != self.phi.n:
            raise ArgumentError(f"expected points in R^{self.phi.n}")
        flat = xi.reshape(-1, self.phi.n)
        s = np.sqrt(np.sum(flat * flat, axis=1))
        theta = np.where(s[:, None] > 0, flat / np.where(s > 0, s, 1.0)[:, None], 0.0)
        out = np.zeros(s.size)
        for term in self.phi.terms:
            J = len(term.coefficients) - 1
            F = radial_values(self.phi.n, term.r0, term.r1, J, s)
            t = theta @ np.asarray(term.axis)
            for j, c in enumerate(term.coefficients):
                if c:
                    out += term.weight * c * (-1.0) ** (j // 2) * zonal_basis(self.phi.n, j, t) * F[j]
        return out.reshape(xi.shape[:-1])

    def at_origin(self) -> float:
        return float(self(np.zeros(self.phi.n)))

    def total_integral(self):
        """int phi-hat over R^n and int |phi-hat| (the latter bounded term by term)."""
        area = sphere_area(self.phi.n)
        total, l1 = 0.0, 0.0
        for term in self.phi.terms:
            tr = self.radial[(term.r0, term.r1)]
            mom = tr.moments()
            total += term.weight * term.coefficients[0] * area * mom.M[0]
            sw = tr.s ** (self.phi.n - 1)
            l1 += term.weight * area * sum(abs(c) for c in term.coefficients) * float(np.abs(tr.values).max(axis=0) @ (tr.weights * sw))
        return total, l1


def fourier_of_test_function(phi: TestFunction, rtol: float = 1e-11, s_cap: float = 3000.0) -> SpectralTransform:
    """Sampled radial transforms for every annulus of ``phi``; see :func:`radial_transform`."""
    radial = {}
    for term in phi.terms:
        key = (term.r0, term.r1)
        if key not in radial:
            radial[key] = radial_transform(phi.n, term.r0, term.r1, phi.max_degree, rtol, s_cap)
    return SpectralTransform(phi, radial)
