"""``twoseel`` command line: infer, simulate, diagnose.

Exit codes: 0 success, 2 bad input or configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import secrets
import sys
from collections import Counter
from pathlib import Path

import numpy as np

from .bartlett import estimate_eta
from .eel import ray_monotonicity_diagnostic
from .errors import InputError, SolverError
from .estfun import TwoSampleData, gini_data, gini_ef, mean_ef, regression_ef
from .oel import TwoSampleEL
from .regions import REPORT_ORDER, MethodId, confidence_interval, region_contour_2d
from .simulate import ScenarioSpec, run_coverage, splitmix64

EXIT_OK, EXIT_INPUT, EXIT_SOLVER = 0, 2, 3
CONTOUR_RAYS = 64


def read_csv(path: str) -> np.ndarray:
    """Numeric CSV as a 2-D array. A non-numeric first row is taken as a header."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"{path}: cannot read ({exc})") from None
    rows = []
    width = None
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            vals = [float(c) for c in row]
        except ValueError:
            if lineno == 1:
                continue
            raise InputError(f"{path}: row {lineno}: non-numeric value in {row!r}") from None
        if not all(math.isfinite(v) for v in vals):
            raise InputError(f"{path}: row {lineno}: non-finite value")
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise InputError(f"{path}: row {lineno}: expected {width} columns, found {len(vals)}")
        rows.append(vals)
    if not rows:
        raise InputError(f"{path}: no data rows")
    return np.array(rows)


def build_problem(ef_name: str, X: np.ndarray, Y: np.ndarray) -> TwoSampleEL:
    if X.shape[1] != Y.shape[1]:
        raise InputError(f"X has {X.shape[1]} columns but Y has {Y.shape[1]}")
    if ef_name == "gini":
        if X.shape[1] != 1:
            raise InputError("gini expects a single column of incomes")
        return TwoSampleEL(gini_ef(), gini_data(X[:, 0], Y[:, 0]))
    if ef_name == "mean":
        return TwoSampleEL(mean_ef(X.shape[1]), TwoSampleData(X, Y))
    if ef_name == "regression":
        if X.shape[1] < 2:
            raise InputError("regression expects columns x_1, ..., x_k, y")
        return TwoSampleEL(regression_ef(X.shape[1] - 1), TwoSampleData(X, Y))
    raise InputError(f"unknown estimating function {ef_name!r}")


def _parse_list(text: str, kind):
    items = [s for s in text.split(",") if s.strip()]
    if not items:
        raise InputError("empty list")
    return [kind(s.strip()) for s in items]


def _level(text):
    try:
        v = float(text)
    except ValueError:
        raise InputError(f"level {text!r} is not a number") from None
    if not 0.5 < v < 0.9999:
        raise InputError(f"level {v} outside (0.5, 0.9999)")
    return v


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _fmt(x: float) -> str:
    return repr(float(x))


# -- infer --------------------------------------------------------------------

def cmd_infer(args) -> int:
    methods = [MethodId.parse(s) for s in _parse_list(args.methods, str)]
    levels = _parse_list(args.levels, _level)
    problem = build_problem(args.ef, read_csv(args.x), read_csv(args.y))
    eta = estimate_eta(problem).eta
    results = []
    for method in methods:
        for level in levels:
            if problem.p == 1:
                ci = confidence_interval(method, problem, level)
                results.append({"method": method.value, "level": level, "critical": ci.critical,
                                "lower": ci.lower, "upper": ci.upper, "flags": ci.flags})
            elif problem.p == 2:
                rc = region_contour_2d(method, problem, level, rays=CONTOUR_RAYS)
                results.append({"method": method.value, "level": level, "critical": rc.critical,
                                "vertices": rc.vertices.tolist(), "failed_rays": rc.failed_rays,
                                "flags": rc.flags})
    report = {"ef": args.ef, "m": problem.data.m, "n": problem.data.n,
              "pi_tilde": problem.pi_tilde.tolist(), "eta": eta, "results": results}
    if problem.p > 2:
        report["note"] = "regions are only constructed for p <= 2"
    if args.format == "json":
        _emit(json.dumps(report, indent=2) + "\n", args.out)
        return EXIT_OK
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    pt = ";".join(_fmt(v) for v in problem.pi_tilde)
    if problem.p == 1:
        w.writerow(["method", "level", "critical", "pi_tilde", "eta", "lower", "upper", "flags"])
        for r in results:
            w.writerow([r["method"], r["level"], _fmt(r["critical"]), pt, _fmt(eta),
                        _fmt(r["lower"]), _fmt(r["upper"]), ";".join(r["flags"])])
    else:
        w.writerow(["method", "level", "critical", "pi_tilde", "eta", "vertex", "pi_1", "pi_2"])
        for r in results:
            for k, (a, b) in enumerate(r["vertices"]):
                w.writerow([r["method"], r["level"], _fmt(r["critical"]), pt, _fmt(eta), k, _fmt(a), _fmt(b)])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


# -- simulate -----------------------------------------------------------------

def row_seed(base: int, m: int, n: int) -> int:
    return splitmix64(base ^ splitmix64((m << 32) | n))


def load_config(path: str) -> dict:
    try:
        cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"{path}: cannot read ({exc})") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(cfg, dict):
        raise InputError("config must be a JSON object")
    known = {"scenario", "sizes", "m", "n", "levels", "methods", "replicates", "seed", "true_pi"}
    unknown = set(cfg) - known
    if unknown:
        raise InputError(f"unknown config keys {sorted(unknown)}")
    if "scenario" not in cfg:
        raise InputError("config needs a 'scenario'")
    return cfg


def simulation_table(cfg: dict) -> tuple[str, dict]:
    """Coverage table as CSV (rows (m, n), columns method_level), plus the sidecar metadata."""
    sizes = cfg.get("sizes")
    if sizes is None:
        if "m" not in cfg or "n" not in cfg:
            raise InputError("config needs 'sizes' or both 'm' and 'n'")
        sizes = [[cfg["m"], cfg["n"]]]
    try:
        sizes = [(int(m), int(n)) for m, n in sizes]
    except (TypeError, ValueError):
        raise InputError("'sizes' must be a list of [m, n] pairs") from None
    seed = cfg.get("seed")
    seed_source = "config"
    if seed is None:
        seed, seed_source = secrets.randbits(64), "entropy"
    if not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        raise InputError("seed must be an integer in [0, 2**64)")
    chosen = [MethodId.parse(s) for s in cfg.get("methods", [m.value for m in REPORT_ORDER])]
    methods = tuple(m for m in REPORT_ORDER if m in chosen)
    levels = tuple(_level(str(v)) for v in cfg.get("levels", (0.90, 0.95, 0.99)))
    header = ["m", "n"] + [f"{m.value}_{round(100 * lv, 2):g}" for lv in levels for m in methods]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    rows_meta = []
    spec = None
    for m, n in sizes:
        spec = ScenarioSpec(cfg["scenario"], m, n, true_pi=cfg.get("true_pi"), levels=levels,
                            methods=methods, replicates=int(cfg.get("replicates", 2000)),
                            seed=row_seed(seed, m, n))
        rep = run_coverage(spec)
        w.writerow([m, n] + [f"{100 * rep.cell(me, lv).coverage:.1f}" for lv in levels for me in methods])
        rows_meta.append({
            "m": m, "n": n, "seed": spec.seed, "replicates": spec.replicates,
            "failed": {f"{me.value}_{round(100 * lv, 2):g}": rep.cell(me, lv).failed
                       for lv in levels for me in methods},
            "failed_replicates": [r for r, _ in rep.failures],
        })
    meta = {"scenario": cfg["scenario"], "seed": seed, "seed_source": seed_source,
            "true_pi": list(spec.true_pi) if spec else None,
            "rows": rows_meta}
    return buf.getvalue(), meta


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    text, meta = simulation_table(cfg)
    _emit(text, args.out)
    meta_json = json.dumps(meta, indent=2) + "\n"
    if args.out is not None:
        _emit(meta_json, args.meta or args.out + ".meta.json")
    elif args.meta:
        _emit(meta_json, args.meta)
    else:
        sys.stderr.write(meta_json)
    return EXIT_OK


# -- diagnose -----------------------------------------------------------------

def cmd_diagnose(args) -> int:
    if args.rays < 1 or args.points < 1:
        raise InputError("--rays and --points must be positive")
    problem = build_problem(args.ef, read_csv(args.x), read_csv(args.y))
    rep = ray_monotonicity_diagnostic(problem, directions=args.rays, points=args.points)
    hist = Counter(it for r in rep.rays for it in r.newton_iters)
    report = {
        "ef": args.ef, "m": problem.data.m, "n": problem.data.n,
        "pi_tilde": problem.pi_tilde.tolist(),
        "std_error": problem.std_error.tolist(),
        "violations": rep.violations,
        "rays": [{"direction": r.direction.tolist(), "scan_radius": r.scan_radius,
                  "t_max": r.t_max, "points": len(r.t), "violations": r.violations}
                 for r in rep.rays],
        "newton_iterations": {str(k): hist[k] for k in sorted(hist)},
    }
    _emit(json.dumps(report, indent=2) + "\n", args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="twoseel", description="Two-sample extended empirical likelihood.")
    sub = p.add_subparsers(dest="command", required=True)

    inf = sub.add_parser("infer", help="intervals or 2-D regions from two CSV samples")
    inf.add_argument("--x", required=True)
    inf.add_argument("--y", required=True)
    inf.add_argument("--ef", required=True, choices=["mean", "gini", "regression"])
    inf.add_argument("--methods", default="oel,eel1,bel,eel2")
    inf.add_argument("--levels", default="0.95")
    inf.add_argument("--out")
    inf.add_argument("--format", choices=["csv", "json"], default="json")
    inf.set_defaults(func=cmd_infer)

    sim = sub.add_parser("simulate", help="Monte Carlo coverage from a JSON scenario config")
    sim.add_argument("--config", required=True)
    sim.add_argument("--out")
    sim.add_argument("--meta", help="sidecar JSON path (default: OUT.meta.json, or stderr)")
    sim.set_defaults(func=cmd_simulate)

    dia = sub.add_parser("diagnose", help="ray monotonicity diagnostic")
    dia.add_argument("--x", required=True)
    dia.add_argument("--y", required=True)
    dia.add_argument("--ef", required=True, choices=["mean", "gini", "regression"])
    dia.add_argument("--rays", type=int, default=8)
    dia.add_argument("--points", type=int, default=16)
    dia.add_argument("--out")
    dia.set_defaults(func=cmd_diagnose)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SolverError as exc:
        print(f"twoseel: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (InputError, ValueError, TypeError, OSError) as exc:
        print(f"twoseel: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"twoseel: numerical failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
