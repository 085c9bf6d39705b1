"""Command-line interface.

Every subcommand writes ``report.json`` (plus ``data/*.csv`` and, for
refutations, ``witness.json``) into ``--out`` and prints a one-line verdict.
Exit codes: 0 completed (the verdict is in the report), 1 a witness failed
verification, 2 usage or configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ArgumentError, NumericalError, UnsupportedOperationError
from .l0embed import FamilySpec, l0_scan, recover_measure_2d, representation_residuals
from .posdef import (GramWitness, SearchLog, default_psd_tolerance, gram_matrix, omega, omega_sphere_oracle,
                     parse_norm_function, quadratic_form, random_configuration, refute_positive_definiteness,
                     sample_gram_minima)
from .numerics.linalg import sym_eigen_min
from .proofcheck import EPS_GRID, epsilon_scan, gaussian_tail_check, stable_law
from .stable import version_ks_test
from .starbody import LqBody, parse_body

EXIT_OK, EXIT_REJECTED, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3

log = logging.getLogger("ndversions")

# RunConfig fields that are not subcommand parameters
_CORE = ("subcommand", "body", "f", "tol", "seed", "out", "workers")
# argparse bookkeeping that never enters a config
_SKIP = {"command", "config", "handler", "verbose"}


@dataclass
class RunConfig:
    """Everything that determines a run; serialises to sorted key=value lines."""

    subcommand: str
    body: str | None = None
    f: str | None = None
    tol: float | None = None
    seed: int | None = None
    out: str | None = None
    workers: int = 1
    params: dict = field(default_factory=dict)

    def to_dict(self):
        d = {k: getattr(self, k) for k in _CORE}
        d["params"] = dict(sorted(self.params.items()))
        return d

    def serialize(self) -> str:
        items = {k: getattr(self, k) for k in _CORE if getattr(self, k) is not None}
        items.update(self.params)
        return "".join(f"{k}={_canonical_value(v)}\n" for k, v in sorted(items.items()))

    @classmethod
    def parse(cls, text: str) -> "RunConfig":
        kv = parse_config_text(text)
        if "subcommand" not in kv:
            raise ArgumentError("config lacks a subcommand= line")
        cfg = cls(kv.pop("subcommand"))
        if "body" in kv:
            cfg.body = parse_body(kv.pop("body")).spec
        if "f" in kv:
            cfg.f = parse_norm_function(kv.pop("f")).tag
        if "tol" in kv:
            cfg.tol = _number(kv.pop("tol"), "tol", float)
        if "seed" in kv:
            cfg.seed = _number(kv.pop("seed"), "seed", int)
        if "out" in kv:
            cfg.out = kv.pop("out")
        if "workers" in kv:
            cfg.workers = _number(kv.pop("workers"), "workers", int)
        cfg.params = {k: v for k, v in sorted(kv.items())}
        return cfg


def _canonical_value(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ",".join(_canonical_value(x) for x in v)
    return str(v)


def _number(text, key, kind):
    try:
        return kind(text)
    except ValueError:
        raise ArgumentError(f"config key {key}: expected {kind.__name__}, got {text!r}") from None


def parse_config_text(text: str) -> dict:
    """key=value lines; blank lines and ``#`` comments are ignored, later keys win."""
    out = {}
    for number, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ArgumentError(f"config line {number}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


# ---------------------------------------------------------------------------
# Output


def _write_report(out: Path, config: RunConfig, payload: dict, csvs: dict | None = None,
                  witness: GramWitness | None = None):
    out.mkdir(parents=True, exist_ok=True)
    files = []
    if csvs:
        (out / "data").mkdir(exist_ok=True)
        for name, text in sorted(csvs.items()):
            (out / "data" / f"{name}.csv").write_text(text)
            files.append(f"data/{name}.csv")
    if witness is not None:
        (out / "witness.json").write_text(witness.to_json() + "\n")
        files.append("witness.json")
    report = {
        "tool": "ndversions",
        "version": __version__,
        "config": config.to_dict(),
        "files": files,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    report.update(payload)
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _csv(header, rows):
    lines = [",".join(header)]
    lines += [",".join(repr(v) if isinstance(v, float) else str(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Subcommands; each returns (payload, csvs, witness, verdict line)


def _cmd_pd_check(a, cfg):
    f, body = parse_norm_function(a.f), parse_body(a.body)
    tol = a.tol if a.tol is not None else default_psd_tolerance(a.m)
    minima = sample_gram_minima(f, body, a.m, a.trials, a.seed)
    worst = int(np.argmin(minima))
    verdict = "refuted" if minima[worst] < -tol else "consistent"
    witness = None
    if verdict == "refuted":
        points = random_configuration(a.seed, worst, a.m, body.n)
        lam, vec = sym_eigen_min(gram_matrix(f, body, points))
        vec = vec / np.linalg.norm(vec)
        witness = GramWitness(points, vec, quadratic_form(f, body, points, vec), lam, f.tag, body.spec, a.seed, worst)
    payload = {"verdict": verdict, "min_eigenvalue": float(minima[worst]), "worst_trial": worst,
               "trials": a.trials, "m": a.m, "tolerance": tol,
               "note": "sampling can support but never prove positive definiteness"}
    rows = [(t, float(v)) for t, v in enumerate(minima)]
    line = f"pd-check {f.tag} on {body.spec}: {verdict} (min eigenvalue {minima[worst]:.3e} over {a.trials} trials)"
    return payload, {"minima": _csv(["trial", "min_eigenvalue"], rows)}, witness, line


def _cmd_pd_refute(a, cfg):
    f, body = parse_norm_function(a.f), parse_body(a.body)
    search = SearchLog()
    witness = refute_positive_definiteness(f, body, a.m, a.budget, a.seed, a.tol, a.workers, search)
    verdict = "refuted" if witness is not None else "inconclusive"
    payload = {"verdict": verdict, "m": a.m, "budget": a.budget,
               "tolerance": a.tol if a.tol is not None else default_psd_tolerance(a.m),
               "search": {"random_trials": search.random_trials, "refinement_evaluations": search.refinement_evaluations,
                          "best_random": search.best_random, "best_refined": search.best_refined,
                          "best_trial": search.best_trial}}
    if witness is not None:
        payload["quadratic_form"] = witness.quadratic_form_value
        payload["min_eigenvalue"] = witness.min_eigenvalue
        line = f"pd-refute {f.tag} on {body.spec}: refuted (quadratic form {witness.quadratic_form_value:.3e})"
    else:
        line = f"pd-refute {f.tag} on {body.spec}: inconclusive (no negative Gram matrix found)"
    return payload, None, witness, line


def _int_tuple(text):
    try:
        return tuple(int(v) for v in str(text).split(",") if v.strip())
    except ValueError:
        raise ArgumentError(f"expected comma-separated integers, got {text!r}") from None


def _float_tuple(text):
    try:
        return tuple(float(v) for v in str(text).split(",") if v.strip())
    except ValueError:
        raise ArgumentError(f"expected comma-separated numbers, got {text!r}") from None


def _cmd_l0_scan(a, cfg):
    body = parse_body(a.body)
    family = FamilySpec(_int_tuple(a.annuli), a.degree, a.monomial_degree, a.planar_angles)
    tol = a.tol if a.tol is not None else 1e-4
    report = l0_scan(body, family, tol, a.method, a.level, a.rtol, a.workers)
    payload = report.to_dict()
    line = (f"l0-scan {body.spec}: {report.verdict} (max normalised pairing {report.max_normalized:+.4e}"
            f" over {len(report.entries)} test functions)")
    return payload, {"pairings": report.to_csv()}, None, line


def _cmd_recover_measure(a, cfg):
    body = parse_body(a.body)
    measure = recover_measure_2d(body, a.N, a.tail_tol)
    residuals, flagged = representation_residuals(body, measure, a.samples, a.seed, a.kernel)
    nonneg = measure.is_nonnegative()
    verdict = "representable" if nonneg else "not representable (negative weights)"
    payload = {"verdict": verdict, "C": measure.C, "N": measure.N, "total_mass": measure.total_mass,
               "min_weight": float(np.min(measure.weights)), "nonnegative": nonneg,
               "max_residual": float(residuals.max()), "samples": a.samples, "kernel": a.kernel,
               "perturbed_samples": flagged}
    line = f"recover-measure {body.spec}: {verdict} (C={measure.C:.10g}, residual {residuals.max():.2e})"
    return payload, {"measure": measure.to_csv()}, None, line


def _cmd_proof_scan(a, cfg):
    f, body = parse_norm_function(a.f), parse_body(a.body)
    grid = tuple(2.0 ** -k for k in range(1, a.eps_levels + 1)) if a.eps_levels else EPS_GRID
    scan = epsilon_scan(f, body, eps_grid=grid, level=a.level, tol=a.quad_tol, workers=a.workers)
    summary = scan.summary()
    scale = abs(scan.pairing) if scan.pairing else 1.0
    nonneg = summary["min_g"] >= -1e-8 * max(1.0, scale)
    summary["g_nonnegative"] = nonneg
    summary["verdict"] = "consistent" if nonneg else "negative g"
    csvs = {"epsilon": scan.to_csv()}
    # the law with mu-hat = f(||.||) is explicit for exp_pow(p) on l_p
    if (f.tag.startswith("exp_pow:") and isinstance(body, LqBody)
            and abs(float(f.tag.split("=")[1]) - body.q) < 1e-12):
        rows = gaussian_tail_check(stable_law(body.q, body.n), mc_samples=a.mc_samples, seed=a.seed)
        summary["tail_check"] = [vars(r) for r in rows]
        csvs["tail_check"] = _csv(["t", "lhs", "rhs", "holds"], [(r.t, r.lhs, r.rhs, r.holds) for r in rows])
    line = (f"proof-scan {f.tag} on {body.spec}: min g = {summary['min_g']:.4e}, "
            f"identity residual {summary['identity_residual']:.1e}, u -> {summary['limits']['u']['value']:.8g}")
    return summary, csvs, None, line


def _cmd_version_test(a, cfg):
    vec = _float_tuple(a.a)
    seeds = range(a.seed, a.seed + a.seeds)
    reports = [version_ks_test(a.p, vec, a.m, s, a.workers) for s in seeds]
    passed = sum(r.p_value >= a.alpha for r in reports)
    payload = {"verdict": "consistent" if passed >= 0.9 * len(reports) else "rejected",
               "p": a.p, "a": list(vec), "gamma": reports[0].gamma, "m": a.m, "alpha": a.alpha,
               "passed": passed, "runs": [r.to_dict() for r in reports]}
    rows = [(r.seed, r.statistic, r.p_value) for r in reports]
    line = f"version-test p={a.p:g} a={list(vec)}: {passed}/{len(reports)} seeds with p-value >= {a.alpha:g}"
    return payload, {"ks": _csv(["seed", "statistic", "p_value"], rows)}, None, line


def _cmd_omega_table(a, cfg):
    rs = np.linspace(0.0, a.r_max, a.points)
    vals = omega(a.n, rs)
    oracle = np.array([omega_sphere_oracle(a.n, r, a.level) for r in rs])
    diff = float(np.max(np.abs(vals - oracle)))
    tol = a.tol if a.tol is not None else 1e-6
    payload = {"verdict": "consistent" if diff <= tol else "mismatch", "n": a.n, "max_difference": diff,
               "tolerance": tol, "omega_at_zero": float(omega(a.n, 0.0))}
    rows = [(float(r), float(v), float(o), float(abs(v - o))) for r, v, o in zip(rs, vals, oracle)]
    line = f"omega-table n={a.n}: max |omega - sphere oracle| = {diff:.2e}"
    return payload, {"omega": _csv(["r", "omega", "oracle", "difference"], rows)}, None, line


def verify_witness(path, tol: float = 0.0) -> int:
    """Exit code 0 iff the stored quadratic form recomputes below -tol."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        print(f"error: cannot read {path}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        witness = GramWitness.from_json(text)
        value = witness.recompute()
    except ArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    ok = value < -tol
    print(f"verify-witness {path}: quadratic form {value:.6e} -> {'valid' if ok else 'not a refutation'}")
    return EXIT_OK if ok else EXIT_REJECTED


# ---------------------------------------------------------------------------
# Parser


def _common(p, needs_body=True, needs_f=False):
    if needs_body:
        p.add_argument("--body", required=False, help="body spec, e.g. lq:n=3,q=4")
    if needs_f:
        p.add_argument("--f", required=False, help="norm function tag, e.g. exp_pow:p=2")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--config", help="key=value file; command-line flags take precedence")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ndversions", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    # looked up by _apply_config to install config-file defaults
    parser.subcommands = sub.choices

    p = sub.add_parser("pd-check", help="sample Gram matrices of f(||.||)")
    _common(p, needs_f=True)
    p.add_argument("--m", type=int, default=12)
    p.add_argument("--trials", type=int, default=1000)
    p.set_defaults(handler=_cmd_pd_check, required=("body", "f"))

    p = sub.add_parser("pd-refute", help="search for a negative Gram matrix")
    _common(p, needs_f=True)
    p.add_argument("--m", type=int, default=16)
    p.add_argument("--budget", type=int, default=100_000)
    p.set_defaults(handler=_cmd_pd_refute, required=("body", "f"))

    p = sub.add_parser("l0-scan", help="pair ln||.|| with the standard test-function family")
    _common(p)
    p.add_argument("--annuli", default="-2,-1,0,1,2")
    p.add_argument("--degree", type=int, default=4)
    p.add_argument("--monomial-degree", type=int, default=8)
    p.add_argument("--planar-angles", type=int, default=8)
    p.add_argument("--method", choices=("moments", "transform"), default="moments")
    p.add_argument("--level", type=int, default=None, help="sphere quadrature level")
    p.add_argument("--rtol", type=float, default=1e-2)
    p.set_defaults(handler=_cmd_l0_scan, required=("body",))

    p = sub.add_parser("recover-measure", help="planar representing measure of ln||.||")
    _common(p)
    p.add_argument("--N", type=int, default=256)
    p.add_argument("--tail-tol", type=float, default=1e-6)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--kernel", choices=("bandlimited", "atomic"), default="bandlimited")
    p.set_defaults(handler=_cmd_recover_measure, required=("body",))

    p = sub.add_parser("proof-scan", help="g, u, v, w along eps = 2^-k")
    _common(p, needs_f=True)
    p.add_argument("--eps-levels", type=int, default=12)
    p.add_argument("--level", type=int, default=None)
    p.add_argument("--quad-tol", type=float, default=1e-6)
    p.add_argument("--mc-samples", type=int, default=100_000)
    p.set_defaults(handler=_cmd_proof_scan, required=("body", "f"))

    p = sub.add_parser("version-test", help="KS test of the p-stable version property")
    _common(p, needs_body=False)
    p.add_argument("--p", type=float, required=False, default=1.0)
    p.add_argument("--a", default="1,2,3")
    p.add_argument("--m", type=int, default=100_000)
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--alpha", type=float, default=0.01)
    p.set_defaults(handler=_cmd_version_test, required=())

    p = sub.add_parser("omega-table", help="Omega_n against sphere quadrature")
    _common(p, needs_body=False)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--r-max", type=float, default=20.0)
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--level", type=int, default=6)
    p.set_defaults(handler=_cmd_omega_table, required=())

    p = sub.add_parser("verify-witness", help="recompute a witness quadratic form")
    p.add_argument("path")
    p.add_argument("--tol", type=float, default=0.0)
    return parser


def _apply_config(parser, argv):
    """Parse twice: values from --config become defaults, so explicit flags win."""
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ArgumentError(f"cannot read config {args.config}: {exc}") from None
        kv = parse_config_text(text)
        sub = kv.pop("subcommand", args.command)
        if sub != args.command:
            raise ArgumentError(f"config is for {sub!r}, not {args.command!r}")
        subparser = parser.subcommands[args.command]
        known = {a.dest for a in subparser._actions}
        unknown = sorted(set(kv) - known)
        if unknown:
            raise ArgumentError(f"unknown config key(s): {', '.join(unknown)}")
        subparser.set_defaults(**kv)
        args = parser.parse_args(argv)
    return args


def _config_from_args(args) -> RunConfig:
    values = {k: v for k, v in vars(args).items() if k not in _SKIP and k != "required"}
    cfg = RunConfig(args.command)
    for key in _CORE[1:]:
        if key in values:
            setattr(cfg, key, values.pop(key))
    cfg.params = {k: v for k, v in sorted(values.items()) if v is not None}
    if cfg.body is not None:
        cfg.body = parse_body(cfg.body).spec
    if cfg.f is not None:
        cfg.f = parse_norm_function(cfg.f).tag
    return cfg


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    except ArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "verify-witness":
        return verify_witness(args.path, args.tol)
    try:
        missing = [k for k in args.required if getattr(args, k) is None]
        if missing:
            raise ArgumentError(f"{args.command}: missing --{', --'.join(missing)}")
        if not args.out:
            raise ArgumentError(f"{args.command}: --out is required")
        cfg = _config_from_args(args)
        payload, csvs, witness, line = args.handler(args, cfg)
        _write_report(Path(args.out), cfg, payload, csvs, witness)
    except (ArgumentError, UnsupportedOperationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(line)
    return EXIT_OK


def main() -> None:
    sys.exit(run())
