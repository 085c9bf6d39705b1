"""Annular test functions phi(x) = rho(|x|) psi(x / |x|) and the standard family.

The angular factor of every term is zonal: a polynomial in t = a . theta for
a unit axis a, stored through its coefficients c_j in the basis G_j of zonal
harmonics (Chebyshev T_j on the circle, Gegenbauer C_j^lam with
lam = (n - 2) / 2 on higher spheres).  Only even j occur since every factor is
even.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import Chebyshev, Polynomial
from scipy.special import eval_gegenbauer, roots_jacobi

from ..errors import ArgumentError
from ..numerics.quadrature import integrate_1d
from ..numerics.sphere import sphere_area
from ..starbody import _fmt


def bump_radial(r0: float, r1: float, r):
    """exp(-1/((r - r0)(r1 - r))) on (r0, r1), zero elsewhere, peak value 1."""
    if not 0 < r0 < r1:
        raise ArgumentError(f"need 0 < r0 < r1, got r0={r0}, r1={r1}")
    scalar = np.ndim(r) == 0
    r = np.atleast_1d(np.asarray(r, dtype=float))
    out = np.zeros_like(r)
    inside = (r > r0) & (r < r1)
    ri = r[inside]
    peak = 4.0 / (r1 - r0) ** 2
    out[inside] = np.exp(peak - 1.0 / ((ri - r0) * (r1 - ri)))
    return float(out[0]) if scalar else out


def zonal_basis(n: int, j: int, t):
    """G_j(t): T_j for n = 2, C_j^{(n-2)/2} for n >= 3."""
    t = np.clip(np.asarray(t, dtype=float), -1.0, 1.0)
    if n == 2:
        return np.cos(j * np.arccos(t))
    return eval_gegenbauer(j, 0.5 * (n - 2), t)


def zonal_ladder(n: int, max_degree: int, t):
    """G_0(t), ..., G_max_degree(t) stacked along a new first axis (three-term recurrence)."""
    t = np.clip(np.asarray(t, dtype=float), -1.0, 1.0)
    lam = 0.5 * (n - 2)
    out = np.empty((max_degree + 1,) + t.shape)
    out[0] = 1.0
    if max_degree >= 1:
        out[1] = t if n == 2 else 2.0 * lam * t
    for k in range(1, max_degree):
        if n == 2:
            out[k + 1] = 2.0 * t * out[k] - out[k - 1]
        else:
            out[k + 1] = (2.0 * (k + lam) * t * out[k] - (k + 2.0 * lam - 1.0) * out[k - 1]) / (k + 1.0)
    return out


@lru_cache(maxsize=8)
def _zonal_rule(n, nodes=32):
    """Gauss rule for the weight (1 - t^2)^((n-3)/2), the zonal measure on S^{n-1}."""
    a = 0.5 * (n - 3)
    t, w = roots_jacobi(nodes, a, a)
    return t, w


def zonal_coefficients(n: int, psi) -> tuple:
    """Coefficients of a polynomial ``psi`` (degree < 32) in the basis G_0, G_1, ..."""
    poly = Polynomial(psi) if not isinstance(psi, Polynomial) else psi
    degree = poly.degree()
    if degree >= 32:
        raise ArgumentError("angular factors are limited to degree < 32")
    t, w = _zonal_rule(n)
    values = poly(t)
    coeffs = []
    for j in range(degree + 1):
        g = zonal_basis(n, j, t)
        coeffs.append(float(np.dot(w, values * g) / np.dot(w, g * g)))
    coeffs = np.array(coeffs)
    if not np.any(poly.coef[1::2]):
        coeffs[1::2] = 0.0
    coeffs[np.abs(coeffs) < 1e-15 * max(1.0, np.abs(coeffs).max())] = 0.0
    return tuple(coeffs)


@dataclass(frozen=True)
class Term:
    """weight * bump(r0, r1)(|x|) * sum_j c_j G_j(axis . x/|x|)."""

    r0: float
    r1: float
    axis: tuple
    coefficients: tuple
    weight: float = 1.0

    def angular(self, theta):
        t = np.asarray(theta) @ np.asarray(self.axis)
        out = np.zeros(t.shape)
        for j, c in enumerate(self.coefficients):
            if c:
                out += c * zonal_basis(len(self.axis), j, t)
        return out


@dataclass(frozen=True)
class TestFunction:
    """An even, non-negative test function supported on a union of annuli.

    It is a non-negative combination of :class:`Term` objects, so sums and
    positive multiples stay in the class.
    """

    __test__ = False  # not a pytest class

    n: int
    terms: tuple
    label: str = ""
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        if self.n < 2:
            raise ArgumentError("test functions need n >= 2")
        if not self.terms:
            raise ArgumentError("a test function needs at least one term")
        for term in self.terms:
            if len(term.axis) != self.n:
                raise ArgumentError("term axis has the wrong dimension")
            if term.weight < 0:
                raise ArgumentError("term weights must be non-negative")
            if any(c for j, c in enumerate(term.coefficients) if j % 2):
                raise ArgumentError("angular factors must be even")

    @property
    def support(self):
        return min(t.r0 for t in self.terms), max(t.r1 for t in self.terms)

    @property
    def max_degree(self):
        return max(len(t.coefficients) - 1 for t in self.terms)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise ArgumentError(f"expected points in R^{self.n}")
        r = np.sqrt(np.sum(x * x, axis=-1))
        theta = x / np.where(r > 0, r, 1.0)[..., None]
        out = np.zeros(r.shape)
        for term in self.terms:
            out += term.weight * bump_radial(term.r0, term.r1, r.ravel()).reshape(r.shape) * term.angular(theta)
        return out

    def __add__(self, other):
        if not isinstance(other, TestFunction) or other.n != self.n:
            return NotImplemented
        return TestFunction(self.n, self.terms + other.terms, f"({self.label})+({other.label})")

    def scaled(self, a: float) -> "TestFunction":
        if a < 0:
            raise ArgumentError("test functions may only be scaled by a >= 0")
        terms = tuple(Term(t.r0, t.r1, t.axis, t.coefficients, a * t.weight) for t in self.terms)
        return TestFunction(self.n, terms, f"{_fmt(a)}*({self.label})")

    def integral(self) -> float:
        """Integral of phi over R^n by one-dimensional quadrature per term."""
        total = 0.0
        for term in self.terms:
            radial = integrate_1d(lambda r: bump_radial(term.r0, term.r1, r) * r ** (self.n - 1),
                                  term.r0, term.r1, tol=1e-14).value
            total += term.weight * term.coefficients[0] * sphere_area(self.n) * radial
        return total


def _unit(axis):
    a = np.asarray(axis, dtype=float)
    norm = float(np.linalg.norm(a))
    if norm == 0:
        raise ArgumentError("axis must be non-zero")
    return tuple(a / norm)


def radial_test_function(n, r0, r1):
    return TestFunction(n, (Term(r0, r1, tuple(np.eye(n)[0]), (1.0,)),), f"radial[{_fmt(r0)},{_fmt(r1)}]")


def zonal_square(n, r0, r1, axis, poly, label=""):
    """rho(|x|) * P(a . theta)^2 for a polynomial P."""
    p = Polynomial(poly) if not isinstance(poly, Polynomial) else poly
    return TestFunction(n, (Term(r0, r1, _unit(axis), zonal_coefficients(n, p * p)),), label)


def cosine_factor(r0, r1, m, alpha, label=""):
    """Planar rho(|x|) * (1 + cos(2 m (theta - alpha)))."""
    coeffs = [0.0] * (2 * m + 1)
    coeffs[0] = 1.0
    coeffs[2 * m] = 1.0
    return TestFunction(2, (Term(r0, r1, (math.cos(alpha), math.sin(alpha)), tuple(coeffs)),), label)


def gegenbauer_polynomial(n, degree):
    """G_degree as a power-series Polynomial, built by the three-term recurrence."""
    if n == 2:
        return Chebyshev.basis(degree).convert(kind=Polynomial)
    lam = 0.5 * (n - 2)
    t = Polynomial([0.0, 1.0])
    prev, cur = Polynomial([1.0]), 2.0 * lam * t
    if degree == 0:
        return prev
    for k in range(1, degree):
        prev, cur = cur, (2.0 * (k + lam) * t * cur - (k + 2.0 * lam - 1.0) * prev) / (k + 1.0)
    return cur


# ---------------------------------------------------------------------------
# Standard family


def family_axes(n: int) -> np.ndarray:
    """Coordinate axes and sign diagonals up to sign; face diagonals added when n = 3."""
    axes = [np.eye(n)[i] for i in range(n)]
    signs = np.array(np.meshgrid(*[[1.0, -1.0]] * (n - 1), indexing="ij")).reshape(n - 1, -1).T
    axes += [np.concatenate([[1.0], s]) / math.sqrt(n) for s in signs]
    if n == 3:
        for i in range(3):
            for j in range(i + 1, 3):
                for sg in (1.0, -1.0):
                    v = np.zeros(3)
                    v[i], v[j] = 1.0, sg
                    axes.append(v / math.sqrt(2.0))
    return np.array(axes)


@dataclass(frozen=True)
class FamilySpec:
    """Coverage parameters of the standard family.

    ``annuli`` are exponents k of [2^k, 2^(k+1)].  ``degree`` bounds the
    zonal harmonic that is squared (n >= 3) or the frequency m of
    1 + cos 2m(theta - alpha) (n = 2).  ``monomial_degree`` bounds d in the
    squared monomials (a . theta)^(2d), which concentrate mass near the axis;
    0 switches them off.
    """

    annuli: tuple = (-2, -1, 0, 1, 2)
    degree: int = 4
    monomial_degree: int = 8
    planar_angles: int = 8

    def to_dict(self):
        return {"annuli": list(self.annuli), "degree": self.degree,
                "monomial_degree": self.monomial_degree, "planar_angles": self.planar_angles}


def standard_family(n: int, spec: FamilySpec = FamilySpec()) -> list:
    """Radial bumps plus zonal angular factors on each annulus."""
    if spec.degree < 1 or spec.monomial_degree < 0:
        raise ArgumentError("family degrees must be positive")
    family = []
    for k in spec.annuli:
        r0, r1 = 2.0 ** k, 2.0 ** (k + 1)
        family.append(radial_test_function(n, r0, r1))
        if n == 2:
            for i in range(spec.planar_angles):
                alpha = math.pi * i / spec.planar_angles
                for m in range(1, spec.degree + 1):
                    family.append(cosine_factor(r0, r1, m, alpha, f"k={k}/cos(m={m})@{i}pi/{spec.planar_angles}"))
            continue
        for index, axis in enumerate(family_axes(n)):
            for d in range(1, spec.degree + 1):
                family.append(zonal_square(n, r0, r1, axis, gegenbauer_polynomial(n, d),
                                           f"k={k}/zonal(l={d})@axis{index}"))
            # d = 1 would repeat the first zonal harmonic
            for d in range(2, spec.monomial_degree + 1):
                family.append(zonal_square(n, r0, r1, axis, Polynomial.basis(d),
                                           f"k={k}/monomial(d={d})@axis{index}"))
    return family
