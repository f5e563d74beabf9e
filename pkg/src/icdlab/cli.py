"""
Command-line front end.

    icdlab analyze  --p 0.7,0.1,0.1,0.1 --theta 0.5235988 [--verify]
    icdlab sweep    --grid 4 --theta-list 0.3,0.7853982 [--format csv]
    icdlab verify   --p 0.7,0.1,0.1,0.1 --theta 0.5235988 --budget 100000
    icdlab selftest [--samples 100]

Exit codes: 0 success, 2 malformed input, 3 precondition violated,
4 verification failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from dataclasses import dataclass
from itertools import product
from typing import Callable

import numpy as np

from . import concurrence as conc
from . import icd, lsd, oracle, qmat, qstate
from .errors import IcdLabError, InvalidParams, ThetaOutOfRange

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_PRECONDITION = 3
EXIT_VERIFY = 4

CSV_HEADER = ("p1", "p2", "p3", "p4", "theta", "region", "concurrence", "eof", "pt_min_eig", "lambda")
GAP_TOL = 1e-9


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


@dataclass
class RunConfig:
    command: str
    params: icd.ICDParams | None = None
    grid: int | None = None
    thetas: tuple = ()
    seed: int = 0
    budget: int = 10_000
    format: str = "json"          # selftest also accepts "text"
    output_path: str | None = None
    verify: bool = False
    samples: int = 200
    decomposition: str | None = None


# ---------------------------------------------------------------- parsing

def _floats(text: str, what: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise CliError(f"{what}: expected comma-separated numbers, got {text!r}", EXIT_INPUT) from None
    if not vals or not all(math.isfinite(v) for v in vals):
        raise CliError(f"{what}: expected finite numbers, got {text!r}", EXIT_INPUT)
    return vals


def _params(p_text: str, theta: float) -> icd.ICDParams:
    p = _floats(p_text, "--p")
    if len(p) != 4:
        raise CliError(f"--p needs four probabilities, got {len(p)}", EXIT_INPUT)
    try:
        return icd.ICDParams(tuple(p), theta)
    except ThetaOutOfRange as exc:
        raise CliError(str(exc), EXIT_PRECONDITION) from None
    except InvalidParams as exc:
        raise CliError(str(exc), EXIT_INPUT) from None


def _theta(args) -> float | None:
    if args.theta is not None and args.theta_degrees is not None:
        raise CliError("give either --theta or --theta-degrees", EXIT_INPUT)
    if args.theta_degrees is not None:
        return math.radians(args.theta_degrees)
    return args.theta


def _default_seed() -> int:
    env = os.environ.get("ICDLAB_SEED")
    if env is None or not env.strip():
        return 0
    try:
        return int(env)
    except ValueError:
        raise CliError(f"ICDLAB_SEED must be an integer, got {env!r}", EXIT_INPUT) from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--p", help="four probabilities, comma separated")
    common.add_argument("--theta", type=float, help="basis angle in radians")
    common.add_argument("--theta-degrees", type=float, help="basis angle in degrees")
    common.add_argument("--seed", type=int, help="random seed (default: $ICDLAB_SEED or 0)")
    common.add_argument("--budget", type=int, default=10_000, help="oracle candidate budget")
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("--out", help="write the report here instead of stdout")

    parser = argparse.ArgumentParser(prog="icdlab", description="Entanglement and separable approximations of ICD states.")
    sub = parser.add_subparsers(dest="command", required=True)
    a = sub.add_parser("analyze", parents=[common], help="one parameter point")
    a.add_argument("--verify", action="store_true", help="attach the optimality verdict")
    s = sub.add_parser("sweep", parents=[common], help="barycentric grid over the simplex")
    s.add_argument("--grid", type=int, required=True, help="grid resolution per axis")
    s.add_argument("--theta-list", help="comma-separated angles in radians")
    v = sub.add_parser("verify", parents=[common], help="closed form vs verifier vs numeric oracle")
    v.add_argument("--decomposition", help="JSON decomposition to check instead of the closed form")
    t = sub.add_parser("selftest", parents=[common], help="run the invariant battery")
    t.add_argument("--samples", type=int, default=200, help="random points per suite")
    return parser


def parse_config(argv) -> RunConfig:
    args = build_parser().parse_args(argv)
    theta = _theta(args)
    cfg = RunConfig(command=args.command,
                    seed=args.seed if args.seed is not None else _default_seed(),
                    budget=args.budget,
                    format=args.format or {"sweep": "csv", "selftest": "text"}.get(args.command, "json"),
                    output_path=args.out)
    if cfg.budget < 1:
        raise CliError("--budget must be at least 1", EXIT_INPUT)
    if args.command in ("analyze", "verify"):
        if getattr(args, "decomposition", None):
            cfg.decomposition = args.decomposition
        elif args.p is None or theta is None:
            raise CliError(f"{args.command} needs --p and --theta", EXIT_INPUT)
        if args.p is not None and theta is not None:
            cfg.params = _params(args.p, theta)
        cfg.verify = bool(getattr(args, "verify", False))
    elif args.command == "sweep":
        if args.grid < 1:
            raise CliError("--grid must be a positive integer", EXIT_INPUT)
        cfg.grid = args.grid
        if args.theta_list is not None:
            thetas = _floats(args.theta_list, "--theta-list")
        elif theta is not None:
            thetas = [theta]
        else:
            raise CliError("sweep needs --theta-list or --theta", EXIT_INPUT)
        for th in thetas:
            if not 0.0 < th < math.pi / 2:
                raise CliError(f"theta = {th!r} must lie strictly between 0 and pi/2", EXIT_PRECONDITION)
        cfg.thetas = tuple(thetas)
    elif args.command == "selftest":
        if args.samples < 1:
            raise CliError("--samples must be positive", EXIT_INPUT)
        cfg.samples = args.samples
    return cfg


# ---------------------------------------------------------------- reports

def point_summary(params: icd.ICDParams) -> dict:
    """The numbers shared by ``analyze`` and ``sweep`` rows."""
    region = icd.classify_region(params)
    c = icd.concurrence_icd(params)
    d = lsd.ls_decompose(params)
    return {"p": list(params.p), "theta": params.theta, "region": region.kind,
            "concurrence": c, "eof": conc.eof_from_concurrence(c),
            "pt_min_eig": qstate.ppt_min_eigenvalue(icd.icd_density(params)), "lambda": d.lam}


def analyze(cfg: RunConfig) -> dict:
    params = cfg.params
    summary = point_summary(params)
    d = lsd.ls_decompose(params)
    doc = {"params": params.to_json(), **{k: summary[k] for k in CSV_HEADER[5:]},
           "region_slack": icd.classify_region(params).slack,
           "lambdas": list(icd.lambda_spectrum_icd(params).descending),
           "p_prime": None if d.sep_params is None or d.region == icd.SEPARABLE else list(d.sep_params.p),
           "pure_part": None if d.pure_part is None else qstate.state_to_json(d.pure_part),
           "bsa": None if d.bsa is None else d.bsa.to_json()}
    if cfg.verify and d.region != icd.SEPARABLE:
        doc["verdict"] = lsd.verify_optimality(d).to_json()
    return doc


def grid_points(n: int):
    """Barycentric points ``(i, j, k, l) / n``, lexicographic in ``(i, j, k, l)``."""
    for i, j, k in product(range(n + 1), repeat=3):
        if i + j + k <= n:
            yield (i / n, j / n, k / n, (n - i - j - k) / n)


def sweep_rows(cfg: RunConfig) -> list[dict]:
    rows = []
    for theta in cfg.thetas:
        for p in grid_points(cfg.grid):
            s = point_summary(icd.ICDParams(p, theta))
            rows.append({"p1": s["p"][0], "p2": s["p"][1], "p3": s["p"][2], "p4": s["p"][3],
                         **{k: s[k] for k in CSV_HEADER[4:]}})
    return rows


def _fmt(x) -> str:
    return x if isinstance(x, str) else format(float(x), ".9g")


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([_fmt(r[k]) for k in CSV_HEADER])
    return buf.getvalue()


def _load_decomposition(path: str) -> lsd.LSDecomposition:
    try:
        with open(path, encoding="utf-8") as fh:
            return lsd.LSDecomposition.from_json(json.load(fh))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise CliError(f"cannot read decomposition {path!r}: {exc}", EXIT_INPUT) from None


def verify(cfg: RunConfig) -> tuple[dict, int]:
    if cfg.decomposition:
        d = _load_decomposition(cfg.decomposition)
    else:
        if icd.classify_region(cfg.params).kind == icd.SEPARABLE:
            raise CliError("separable point: there is no entangled part to verify", EXIT_PRECONDITION)
        d = lsd.ls_decompose(cfg.params)
    if d.region == icd.SEPARABLE:
        raise CliError("separable point: there is no entangled part to verify", EXIT_PRECONDITION)
    verdict = lsd.verify_optimality(d)
    report = oracle.bsa_numeric(icd.icd_density(d.params), cfg.budget, cfg.seed)
    gap = d.lam - report.numeric_lambda
    passed = verdict.overall and gap >= -GAP_TOL
    doc = {"params": d.params.to_json(), "region": d.region,
           "lambda_closed": d.lam, "lambda_numeric": report.numeric_lambda, "gap": gap,
           "verdict": verdict.to_json(), "max_residual": verdict.max_residual,
           "oracle": report.to_json(), "passed": passed}
    return doc, EXIT_OK if passed else EXIT_VERIFY


# ---------------------------------------------------------------- selftest

@dataclass
class SuiteResult:
    name: str
    passed: bool
    checks: int
    worst: float
    note: str = ""

    def to_json(self) -> dict:
        return {"suite": self.name, "passed": self.passed, "checks": self.checks,
                "worst": self.worst, "note": self.note}


def _suite(name: str, items, check: Callable, tol: float) -> SuiteResult:
    worst, n = 0.0, 0
    for item in items:
        worst = max(worst, float(check(item)))
        n += 1
    return SuiteResult(name, worst <= tol, n, worst)


def _random_hermitian(rng, psd=False):
    g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    return g @ g.conj().T if psd else g + g.conj().T


def _random_symmetric(rng):
    g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    return g + g.T


def run_selftest(samples: int, seed: int) -> list[SuiteResult]:
    rng_q, rng_c, rng_i, rng_o = oracle.split_rngs(seed, 4)
    pts = [oracle.random_icd(rng_i) for _ in range(samples)]
    region1 = []
    for q in pts:
        kind = icd.classify_region(q).kind
        if kind != icd.SEPARABLE:
            region1.append(icd.to_region1(q, kind)[0])
    out = []

    def eig_gap(h):
        a, b = qmat.hermitian_eig(h), qmat.jacobi_eig(h)
        return np.max(np.abs(a.values - b.values))
    out.append(_suite("qmat.eigh_vs_jacobi", [_random_hermitian(rng_q) for _ in range(samples)], eig_gap, 1e-9))

    def sqrt_res(h):
        r = qmat.psd_sqrt(h)
        return np.max(np.abs(r @ r - h)) / max(1.0, np.max(np.abs(h)))
    out.append(_suite("qmat.psd_sqrt", [_random_hermitian(rng_q, True) for _ in range(samples)], sqrt_res, 1e-9))

    def dual_res(v):
        return np.max(np.abs(qmat.dual_basis(qmat.dual_basis(v)) - v))
    vecs = [rng_q.standard_normal((3, 4)) + 1j * rng_q.standard_normal((3, 4)) for _ in range(samples)]
    out.append(_suite("qmat.biduality", vecs, dual_res, 1e-9))

    def takagi_res(t):
        return max(conc.takagi(t).residuals(t))
    out.append(_suite("concurrence.takagi", [_random_symmetric(rng_c) for _ in range(samples)], takagi_res, 1e-9))

    def lam_routes(_):
        rho = oracle.random_density(rng_c)
        return np.max(np.abs(np.array(conc.concurrence_general(rho).lambdas) - np.array(conc.lambdas_via_r(rho))))
    out.append(_suite("concurrence.lambda_routes", range(samples), lam_routes, 1e-6))

    def closed_vs_general(q):
        return abs(icd.concurrence_icd(q) - conc.concurrence_general(icd.icd_density(q)).concurrence)
    out.append(_suite("icd.concurrence_closed_form", pts, closed_vs_general, 1e-9))

    def classify(q):
        pt = qstate.ppt_min_eigenvalue(icd.icd_density(q))
        if abs(pt) <= 1e-10:
            return 0.0
        return float((icd.classify_region(q).kind == icd.SEPARABLE) != (pt >= 0.0))
    out.append(_suite("icd.classification_vs_ppt", pts, classify, 0.0))

    def violation(q):
        return abs(icd.concurrence_icd(q) + 2.0 * qstate.ppt_min_eigenvalue(icd.icd_density(q)))
    out.append(_suite("icd.concurrence_is_pt_violation", region1, violation, 1e-9))

    def slack(q):
        return abs(icd.concurrence_icd(q) - icd.classify_region(q).slack)
    out.append(_suite("icd.concurrence_is_inequality_violation", region1, slack, 1e-12))

    def spectrum(q):
        got = np.array(icd.lambda_spectrum_icd(q).descending)
        return np.max(np.abs(got - conc.takagi(icd.tau_icd(q)).lambdas))
    out.append(_suite("icd.lambda_spectrum", pts, spectrum, 1e-10))

    def saturation(q):
        d = lsd.lsd_closed_form(q)
        return max(abs((1.0 - d.lam) * q.sin2 - icd.concurrence_icd(q)),
                   np.max(np.abs(d.reconstruct() - icd.icd_density(q))))
    out.append(_suite("lsd.saturation", region1, saturation, 1e-10))

    def bsa(q):
        d = lsd.lsd_closed_form(q)
        if d.bsa is None:
            return 0.0
        prod = max(qstate.pure_concurrence(z) for z in d.bsa.states)
        recon = np.max(np.abs(d.bsa.operator() - d.lam * d.separable_density()))
        return max(prod, recon, max(0.0, -qstate.ppt_min_eigenvalue(d.separable_density())))
    out.append(_suite("lsd.bsa_ensemble", region1, bsa, 1e-9))

    def certify(q):
        v = lsd.verify_optimality(lsd.lsd_closed_form(q))
        return 0.0 if v.overall else max(v.max_residual, 1.0)
    out.append(_suite("lsd.verify_optimality", region1, certify, 1e-8))

    few = region1[:max(1, min(5, samples // 20))]
    budget = 2000

    def envelope(q):
        num = oracle.bsa_numeric(icd.icd_density(q), budget, int(rng_o.integers(2**63))).numeric_lambda
        return max(0.0, num - lsd.lsd_closed_form(q).lam)
    res = _suite("oracle.closed_form_upper_envelope", few, envelope, 1e-9)
    res.note = "numeric weight minus closed-form weight"
    out.append(res)

    def avg_conc(q):
        rho = icd.icd_density(q)
        got = oracle.min_avg_concurrence_sample(rho, 16, int(rng_o.integers(2**63)))
        return max(0.0, conc.concurrence_general(rho).concurrence - got)
    out.append(_suite("oracle.min_avg_concurrence", few, avg_conc, 1e-9))
    return out


# ---------------------------------------------------------------- driver

def _emit(text: str, cfg: RunConfig) -> None:
    if cfg.output_path:
        with open(cfg.output_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def run(cfg: RunConfig) -> int:
    if cfg.command == "analyze":
        doc = analyze(cfg)
        if cfg.format == "csv":
            s = point_summary(cfg.params)
            row = {"p1": s["p"][0], "p2": s["p"][1], "p3": s["p"][2], "p4": s["p"][3],
                   **{k: s[k] for k in CSV_HEADER[4:]}}
            _emit(rows_to_csv([row]), cfg)
        else:
            _emit(_json(doc), cfg)
        if "verdict" in doc and not doc["verdict"]["overall"]:
            return EXIT_VERIFY
        return EXIT_OK
    if cfg.command == "sweep":
        rows = sweep_rows(cfg)
        _emit(rows_to_csv(rows) if cfg.format == "csv" else _json(rows), cfg)
        return EXIT_OK
    if cfg.command == "verify":
        doc, code = verify(cfg)
        _emit(_json(doc), cfg)
        return code
    start = time.perf_counter()
    results = run_selftest(cfg.samples, cfg.seed)
    ok = all(r.passed for r in results)
    if cfg.format == "json":
        _emit(_json({"passed": ok, "seconds": time.perf_counter() - start,
                     "suites": [r.to_json() for r in results]}), cfg)
    else:
        lines = [f"{'PASS' if r.passed else 'FAIL'} {r.name} ({r.checks} checks, worst {r.worst:.3e})"
                 for r in results]
        lines.append(f"{'all suites passed' if ok else 'some suites FAILED'} in {time.perf_counter() - start:.1f} s")
        _emit("\n".join(lines) + "\n", cfg)
    return EXIT_OK if ok else EXIT_VERIFY


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
        return run(cfg)
    except SystemExit as exc:
        # argparse reports malformed flags with code 2 already
        return int(exc.code) if isinstance(exc.code, int) else EXIT_INPUT
    except CliError as exc:
        print(f"icdlab: {exc}", file=sys.stderr)
        return exc.code
    except ThetaOutOfRange as exc:
        print(f"icdlab: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except IcdLabError as exc:
        print(f"icdlab: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
