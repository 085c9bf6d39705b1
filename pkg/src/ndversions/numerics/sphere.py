"""Product quadrature on the unit spheres S^1, S^2 and S^3.

Rules are normalised so the weights sum to one: integrating gives the mean
over the sphere.
"""

import math
from functools import lru_cache

import numpy as np

from ..errors import ArgumentError
from .quadrature import QuadratureResult


def sphere_area(n):
    """Surface area of S^{n-1}."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def _circle(count):
    phi = 2.0 * math.pi * np.arange(count) / count
    return np.column_stack([np.cos(phi), np.sin(phi)]), np.full(count, 1.0 / count)


def _s2(nz, nphi):
    z, wz = np.polynomial.legendre.leggauss(nz)
    phi = 2.0 * math.pi * np.arange(nphi) / nphi
    zz, pp = np.meshgrid(z, phi, indexing="ij")
    s = np.sqrt(1.0 - zz * zz)
    nodes = np.stack([zz, s * np.cos(pp), s * np.sin(pp)], axis=-1)
    weights = np.repeat(0.5 * wz / nphi, nphi)
    return nodes.reshape(-1, 3), weights


def _s3(nw, nz, nphi):
    angle = np.arange(1, nw + 1) * math.pi / (nw + 1)
    w = np.cos(angle)
    ww = 2.0 * np.sin(angle) ** 2 / (nw + 1)
    inner, winner = _s2(nz, nphi)
    s = np.sqrt(1.0 - w * w)
    first = np.repeat(w, inner.shape[0])[:, None]
    rest = (s[:, None, None] * inner[None, :, :]).reshape(-1, 3)
    weights = (ww[:, None] * winner[None, :]).ravel()
    return np.hstack([first, rest]), weights


@lru_cache(maxsize=32)
def sphere_rule(n, level):
    """Nodes of shape (N, n) and weights summing to one.

    ``n = 2`` uses the trapezoid rule on ``16 * level`` equally spaced angles;
    ``n = 3`` Gauss-Legendre in the polar coordinate times the trapezoid rule
    in azimuth; ``n = 4`` adds a Gauss-Chebyshev (second kind) layer.
    """
    if level < 1:
        raise ArgumentError("level must be >= 1")
    if n == 2:
        nodes, weights = _circle(16 * level)
    elif n == 3:
        nodes, weights = _s2(8 * level, 16 * level)
    elif n == 4:
        nodes, weights = _s3(8 * level, 8 * level, 16 * level)
    else:
        raise ArgumentError(f"sphere quadrature is available for n in {{2, 3, 4}}, got {n}")
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def integrate_sphere(n, g, level=4):
    """Mean of ``g`` over S^{n-1}.

    ``g`` receives an array of unit vectors with shape (N, n).  The error
    estimate is the change against the next finer level.
    """
    nodes, weights = sphere_rule(n, level)
    value = float(np.dot(weights, g(nodes)))
    fine_nodes, fine_weights = sphere_rule(n, level + 1)
    fine = float(np.dot(fine_weights, g(fine_nodes)))
    return QuadratureResult(value, abs(fine - value), len(weights) + len(fine_weights))
