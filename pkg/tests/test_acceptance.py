"""Desk-scale acceptance checks.

Each check prints one ``PASS``/``FAIL`` line with the measured quantities and
then asserts, so ``pytest -v`` shows both.  Run ``python tests/test_acceptance.py``
to get just the summary lines.
"""
import json
import math
import sys
import time

import numpy as np
import pytest
from scipy import integrate

from ndversions.cli import run, verify_witness
from ndversions.l0embed import l0_scan, recover_measure_2d, symmetric_weights, verify_representation
from ndversions.posdef import (GramWitness, constant_function, exp_pow, omega, omega_sphere_oracle,
                               sample_gram_minima)
from ndversions.proofcheck import (EPS_GRID, epsilon_scan, gaussian_law, gaussian_tail_check, psi, stable_law,
                                   standard_phi)
from ndversions.stable import version_ks_test
from ndversions.starbody import LqBody, Synthetic2DBody

_capture = None


@pytest.fixture(autouse=True)
def _summary_lines(capsys):
    global _capture
    _capture = capsys
    yield
    _capture = None


def verdict(number, ok, detail, started):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}  [{time.perf_counter() - started:.1f}s]"
    if _capture is not None:
        with _capture.disabled():
            print("\n" + line)
    else:
        print(line)
    assert ok, line


def test_criterion_1_gram_consistency_in_the_plane():
    t0 = time.perf_counter()
    body = LqBody(2, 4.0)
    worst = {p: float(sample_gram_minima(exp_pow(p), body, m=12, trials=1000, seed=0).min()) for p in (0.5, 1.0)}
    ok = all(v >= -1e-8 for v in worst.values())
    verdict(1, ok, "min eigenvalue over 1000 Gram matrices: "
            + ", ".join(f"p={p}: {v:.3e}" for p, v in worst.items()), t0)


def test_criterion_2_refutation_in_three_dimensions(tmp_path):
    t0 = time.perf_counter()
    found = None
    for seed in range(1, 6):
        out = tmp_path / f"seed{seed}"
        code = run(["pd-refute", "--body", "lq:n=3,q=inf", "--f", "exp_pow:p=2", "--budget", "100000",
                    "--seed", str(seed), "--out", str(out)])
        path = out / "witness.json"
        if code == 0 and path.exists() and verify_witness(path, tol=1e-6) == 0:
            found = (seed, GramWitness.from_json(path.read_text()))
            break
    ok = found is not None and found[1].recompute() < -1e-6
    detail = (f"seed {found[0]} witness form {found[1].recompute():.3e}, m={len(found[1].points)}"
              if found else "no verifiable witness for seeds 1..5")
    verdict(2, ok, detail, t0)


def test_criterion_3_l0_verdicts():
    t0 = time.perf_counter()
    expected = {(3, 4.0): "consistent", (4, 1.0): "consistent", (4, 4.0): "refuted", (4, math.inf): "refuted"}
    parts, ok = [], True
    for (n, q), want in expected.items():
        rep = l0_scan(LqBody(n, q))
        good = rep.verdict == want and not rep.failures
        if want == "refuted":
            good = good and rep.max_normalized > 1e-4
        ok = ok and good
        parts.append(f"l{q:g}^{n}: {rep.verdict} (max {rep.max_normalized:.3g})")
    verdict(3, ok, "; ".join(parts), t0)


def test_criterion_4_measure_recovery():
    t0 = time.perf_counter()
    mean_log_cos = integrate.quad(lambda t: math.log(abs(math.cos(t))), 0, math.pi / 2, limit=200)[0] / (math.pi / 2)
    c_oracle = -mean_log_cos
    body = LqBody(2, 2.0)
    mu = recover_measure_2d(body)
    c_err = abs(mu.C - c_oracle)
    w_err = float(np.max(np.abs(mu.weights - 1.0 / mu.N)))
    res_l2 = verify_representation(body, mu)
    w = symmetric_weights(128, seed=11)
    synth = Synthetic2DBody(tuple(w), 0.37)
    mu_s = recover_measure_2d(synth, 128)
    rt_err = float(np.max(np.abs(mu_s.weights - w)))
    res_s = verify_representation(synth, mu_s)
    ok = c_err <= 1e-6 and w_err <= 1e-6 and rt_err <= 1e-6 and max(res_l2, res_s) <= 1e-5
    verdict(4, ok, f"|C-ln2|={c_err:.2e} uniform err={w_err:.2e} round-trip err={rt_err:.2e} "
            f"residuals={res_l2:.2e},{res_s:.2e}", t0)


def test_criterion_5_proof_machinery():
    t0 = time.perf_counter()
    scan = epsilon_scan(exp_pow(2), LqBody(2, 2.0), standard_phi(2))
    eps = scan.eps
    assert eps.max() == 2.0 ** -1 and eps.min() == 2.0 ** -12
    g, u, v, w = (scan.column(k) for k in "guvw")
    identity = float(np.max(np.abs(g - (u + v + w))))
    g_min = float(g.min())
    w_ratio = abs(w[np.argmin(eps)]) / abs(w[np.argmin(np.abs(eps - 2.0 ** -4))])
    u_lim, u_err = scan.limit("u")
    gap = abs(u_lim + scan.pairing)
    ok = identity <= 1e-8 and g_min >= -1e-8 and w_ratio <= 0.1 and gap <= u_err + scan.pairing_error
    verdict(5, ok, f"identity={identity:.1e} min g={g_min:.3e} w ratio={w_ratio:.3f} "
            f"u limit={u_lim:.6f} vs -pairing={-scan.pairing:.6f} (gap {gap:.1e}, "
            f"err {u_err + scan.pairing_error:.1e})", t0)


def test_criterion_6_psi_sanity():
    t0 = time.perf_counter()
    grid = np.asarray(EPS_GRID)
    const_err = max(abs(psi(constant_function(), e) - e ** e) for e in grid)
    psi_exp = psi(exp_pow(1), 0.1)
    ok = const_err <= 1e-9 and psi_exp <= 1e-4
    verdict(6, ok, f"max |psi-eps^eps| for f=1: {const_err:.1e}; psi(exp_pow(1), 0.1)={psi_exp:.3e}", t0)


def test_criterion_7_gaussian_tail_inequality():
    t0 = time.perf_counter()
    t_grid = (0.25, 0.5, 1.0, 2.0, 4.0)
    gauss = gaussian_tail_check(gaussian_law(2), t_grid=t_grid)
    cauchy = gaussian_tail_check(stable_law(1.0, 2), t_grid=t_grid)
    at_one = next(r for r in gauss if r.t == 1.0)
    lhs_err = abs(at_one.lhs - math.exp(-0.5))
    rhs_err = abs(at_one.rhs - 1.5)
    holds = all(r.holds for r in gauss + cauchy)
    ok = lhs_err <= 1e-3 and rhs_err <= 1e-3 and holds
    verdict(7, ok, f"t=1 lhs={at_one.lhs:.6f} rhs={at_one.rhs:.6f}; holds on grid "
            f"(gaussian {sum(r.holds for r in gauss)}/5, cauchy {sum(r.holds for r in cauchy)}/5)", t0)


def test_criterion_8_version_property():
    t0 = time.perf_counter()
    cases = {(1.0, (1, 2, 3)): 6.0, (2.0, (3, 4)): 5.0}
    parts, ok = [], True
    for (p, a), gamma in cases.items():
        reports = [version_ks_test(p, a, m=100_000, seed=s) for s in range(10)]
        passing = sum(r.p_value >= 0.01 for r in reports)
        good = passing >= 9 and all(abs(r.gamma - gamma) < 1e-12 for r in reports)
        ok = ok and good
        parts.append(f"p={p:g} a={a}: {passing}/10 seeds, min p-value {min(r.p_value for r in reports):.3f}")
    verdict(8, ok, "; ".join(parts), t0)


def test_criterion_9_omega_cross_validation():
    t0 = time.perf_counter()
    rs = np.linspace(0.0, 20.0, 50)
    worst = {}
    for n in (2, 3, 4):
        values = omega(n, rs)
        worst[n] = max(abs(float(v) - omega_sphere_oracle(n, float(r))) for v, r in zip(values, rs))
    at_zero = [float(omega(n, 0.0)) for n in (2, 3, 4)]
    ok = max(worst.values()) <= 1e-6 and all(v == 1.0 for v in at_zero)
    verdict(9, ok, "max |omega - oracle|: " + ", ".join(f"n={n}: {e:.1e}" for n, e in worst.items())
            + f"; omega(0)={at_zero}", t0)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
