"""The pairing <(ln ||.||_K)^, phi> = int ln||x||_K phi-hat(x) dx and the L0 scan.

With ln||x|| = ln|x|_2 + ln||x/|x|_2||_K and phi-hat written in zonal
harmonics, the pairing of one term is

    c_0 |S| L0 + sum_j (-1)^(j/2) c_j M_j A_j,   A_j = int_S G_j(a.theta) ln||theta|| dtheta,

where M_j and L0 are radial moments of the transform.  The Euclidean ball
has A_j = 0, so |c_0 |S| L0| is the natural scale: normalised pairings of
l_2^n equal -1.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import ArgumentError, NumericalError
from ..numerics.sphere import sphere_area, sphere_rule
from ..starbody import StarBody
from .testfunctions import FamilySpec, TestFunction, standard_family, zonal_ladder
from .transform import hankel_moments, radial_transform

DEFAULT_LEVELS = {2: 16, 3: 12, 4: 8}
METHODS = ("moments", "transform")


class AngularIntegrals:
    """Caches A_j(axis) for one body, at two sphere resolutions for an error estimate."""

    def __init__(self, body: StarBody, level: int | None = None):
        if body.n not in DEFAULT_LEVELS:
            raise ArgumentError(f"pairings are implemented for n in {{2, 3, 4}}, got n={body.n}")
        self.body = body
        self.level = level or DEFAULT_LEVELS[body.n]
        self.area = sphere_area(body.n)
        self._rules = []
        for lev in (self.level, self.level + 2):
            nodes, weights = sphere_rule(body.n, lev)
            log_gauge = np.log(body.gauge(nodes))
            if not np.all(np.isfinite(log_gauge)):
                raise NumericalError(f"{body.spec}: gauge is not positive on the sphere")
            self._rules.append((nodes, weights * log_gauge))
        self._cache = {}

    def __call__(self, axis, max_degree):
        """(A_j, error_j) for j = 0..max_degree."""
        key = (tuple(np.round(axis, 15)), max_degree)
        if key not in self._cache:
            results = []
            for nodes, wlog in self._rules:
                ladder = zonal_ladder(self.body.n, max_degree, nodes @ np.asarray(axis))
                results.append(self.area * (ladder @ wlog))
            coarse, fine = results
            self._cache[key] = (fine, np.abs(fine - coarse))
        return self._cache[key]


@dataclass(frozen=True)
class PairingResult:
    value: float
    error_estimate: float
    scale: float

    @property
    def normalized(self):
        return self.value / self.scale


def _moments(n, r0, r1, max_degree, method):
    if method == "moments":
        return hankel_moments(n, r0, r1, max_degree)
    if method == "transform":
        return radial_transform(n, r0, r1, max_degree).moments()
    raise ArgumentError(f"unknown pairing method {method!r}; choose from {METHODS}")


def log_pairing(body: StarBody, phi: TestFunction, method: str = "moments", rtol: float = 1e-2,
                angular: AngularIntegrals | None = None) -> PairingResult:
    """int ln||x||_K phi-hat(x) dx with an error estimate and the Euclidean scale.

    ``method="moments"`` uses the exact Hankel moments of the radial
    transforms; ``method="transform"`` integrates the sampled transforms.
    Raises NumericalError when the error estimate exceeds ``rtol * scale``.
    """
    if body.n != phi.n:
        raise ArgumentError(f"body has n={body.n} but the test function has n={phi.n}")
    angular = angular if angular is not None else AngularIntegrals(body)
    if angular.body is not body:
        raise ArgumentError("angular cache belongs to a different body")
    n = phi.n
    area = sphere_area(n)
    value = error = scale = 0.0
    for term in phi.terms:
        J = len(term.coefficients) - 1
        mom = _moments(n, term.r0, term.r1, J, method)
        A, A_err = angular(term.axis, J)
        c = np.asarray(term.coefficients)
        sign = np.array([(-1.0) ** (j // 2) for j in range(J + 1)])
        part = c[0] * area * mom.L0 + float(np.sum(sign * c * mom.M[:J + 1] * A))
        err = abs(c[0]) * area * mom.L0_error + float(np.sum(np.abs(c) * (mom.M_error[:J + 1] * np.abs(A)
                                                                          + np.abs(mom.M[:J + 1]) * A_err)))
        value += term.weight * part
        error += term.weight * err
        scale += term.weight * abs(c[0] * area * mom.L0)
    if not scale > 0:
        raise NumericalError(f"{phi.label}: zero normalisation scale")
    if error > rtol * scale:
        raise NumericalError(f"{phi.label}: pairing error estimate {error:.2e} exceeds {rtol:g} of the scale {scale:.3e}; "
                             "raise the sphere level")
    return PairingResult(value, error, scale)


@dataclass
class L0Report:
    """Pairings of one body against a test-function family, and the verdict."""

    body: str
    entries: list
    tol: float
    method: str
    family: dict
    level: int
    failures: list = field(default_factory=list)

    @property
    def max_normalized(self):
        return max(e["normalized"] for e in self.entries)

    @property
    def witness(self):
        best = max(self.entries, key=lambda e: e["normalized"])
        return best["id"] if best["normalized"] > self.tol else None

    @property
    def verdict(self):
        return "refuted" if self.max_normalized > self.tol else "consistent"

    def to_dict(self):
        return {
            "body": self.body,
            "verdict": self.verdict,
            "max_normalized_pairing": self.max_normalized,
            "witness": self.witness,
            "tolerance": self.tol,
            "method": self.method,
            "sphere_level": self.level,
            "family": self.family,
            "test_functions": len(self.entries),
            "entries": self.entries,
            "failures": self.failures,
            "note": "consistent means no family member gave a positive pairing; it does not prove an embedding",
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["id", "pairing", "scale", "normalized", "error"])
        for e in self.entries:
            writer.writerow([e["id"], repr(e["pairing"]), repr(e["scale"]), repr(e["normalized"]), repr(e["error"])])
        return buf.getvalue()


def l0_scan(body: StarBody, family: FamilySpec = FamilySpec(), tol: float = 1e-4, method: str = "moments",
            level: int | None = None, rtol: float = 1e-2, workers: int = 1) -> L0Report:
    """Pair ln||.||_K with every member of the standard family.

    The verdict is "refuted" when some normalised pairing exceeds ``tol``.
    Test functions whose pairing fails numerically are listed under
    ``failures`` and excluded from the verdict.
    """
    members = standard_family(body.n, family)
    if len(members) < 20:
        raise ArgumentError(f"the family has {len(members)} members; at least 20 are required")
    angular = AngularIntegrals(body, level)

    def evaluate(phi):
        try:
            res = log_pairing(body, phi, method, rtol, angular)
        except NumericalError as exc:
            return {"id": phi.label, "error_message": str(exc)}
        return {"id": phi.label, "pairing": res.value, "scale": res.scale,
                "normalized": res.normalized, "error": res.error_estimate}

    # warm the angular cache serially so worker threads only read it
    for phi in members:
        for term in phi.terms:
            angular(term.axis, len(term.coefficients) - 1)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(evaluate, members))
    else:
        results = [evaluate(phi) for phi in members]
    entries = [r for r in results if "error_message" not in r]
    failures = [r for r in results if "error_message" in r]
    if not entries:
        raise NumericalError("every pairing in the family failed: " + failures[0]["error_message"])
    return L0Report(body.spec, entries, tol, method, family.to_dict(), angular.level, failures)
