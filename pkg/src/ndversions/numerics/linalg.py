"""Symmetric eigenvalue problems by cyclic Jacobi rotations."""

import math

import numpy as np

from ..errors import ArgumentError, NumericalError


def jacobi_eigh(matrix, tol=1e-12, max_sweeps=100):
    """All eigenpairs of a real symmetric matrix.

    Rotations are applied until the off-diagonal Frobenius norm is at most
    ``tol * max(1, ||A||_F)``.  Returns ``(eigenvalues, eigenvectors)`` in
    ascending order, eigenvectors as columns.
    """
    a = np.array(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ArgumentError("matrix must be square")
    if not np.all(np.isfinite(a)):
        raise ArgumentError("matrix has non-finite entries")
    scale = max(1.0, float(np.linalg.norm(a)))
    if np.max(np.abs(a - a.T), initial=0.0) > 1e-12 * scale:
        raise ArgumentError("matrix is not symmetric")
    a = 0.5 * (a + a.T)
    m = a.shape[0]
    v = np.eye(m)
    threshold = tol * scale
    for _ in range(max_sweeps):
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off <= threshold:
            order = np.argsort(np.diag(a))
            return np.diag(a)[order].copy(), v[:, order]
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = a[p, q]
                if abs(apq) <= 1e-18 * scale:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0)) if theta else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap, aq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap, aq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    raise NumericalError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")


def sym_eigen_min(matrix, tol=1e-12):
    """Smallest eigenvalue of a symmetric matrix and a unit eigenvector."""
    values, vectors = jacobi_eigh(matrix, tol=tol)
    return float(values[0]), vectors[:, 0]
