"""Command-line interface.

Subcommands: gen | solve | bench | verify | export-plots.
Exit codes: 0 success, 1 usage error, 2 data or configuration error,
3 a verification check ran and failed.
"""

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from . import dataio, datagen, metrics
from .linalg import thin_svd
from .sampling import draw_plan, probs_for_method, probs_to_csv
from .solvers import (
    IterativeConfig,
    ProblemInstance,
    ridge_exact,
    subsampled_ridge,
    two_step,
)
from .util import config_digest, derive_seed, file_digest

SOLVE_METHODS = ("exact", "uni", "col", "lev", "rlev", "opl", "rsis", "nopl")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _load_config(path):
    if path is None:
        raise UsageError("--config is required for this subcommand")
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not valid JSON: {exc}") from exc


def _write_vector_csv(path, values):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for v in values:
            writer.writerow([f"{v:.17g}"])


def _write_matrix_csv(path, a):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in a:
            writer.writerow([f"{v:.17g}" for v in row])


def cmd_gen(args) -> int:
    config = _load_config(args.config)
    spec = config.get("dataset", config)
    if args.seed is not None:
        spec = dict(spec, seed=args.seed)
    ds = datagen.generate(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    digest = config_digest(spec)
    design_path = out / "design.csv"
    response_path = out / "response.csv"
    beta_path = out / "beta_true.csv"
    _write_matrix_csv(design_path, ds.instance.a)
    _write_vector_csv(response_path, ds.instance.y)
    _write_vector_csv(beta_path, ds.beta_true)
    manifest = dataio.DatasetManifest(
        path="design.csv",
        n_rows=ds.instance.n,
        n_cols=ds.instance.p,
        response_path="response.csv",
        digest=file_digest(design_path),
        response_digest=file_digest(response_path),
        extras={
            "recipe": ds.recipe,
            "beta_true_path": "beta_true.csv",
            "config_digest": digest,
            "master_seed": int(ds.recipe["seed"]),
        },
    )
    dataio.save_manifest(manifest, out / "manifest.json")
    print(f"gen: wrote {design_path} ({ds.instance.n} x {ds.instance.p}), manifest.json")
    return 0


def _solve_dataset(args):
    """Resolve the dataset for cmd_solve from --config / --manifest / --design."""
    if args.config:
        config = _load_config(args.config)
        if "dataset" in config:
            a, y, _ = bench_mod.materialize_dataset(
                config["dataset"], row_limit=args.row_limit, center=args.center
            )
            return a, y
        raise UsageError("solve --config must contain a 'dataset' object")
    if args.manifest:
        loaded = dataio.load_csv_matrix(
            manifest=dataio.load_manifest(args.manifest),
            row_limit=args.row_limit,
            center=args.center,
        )
        if loaded.y is None:
            raise ValueError("manifest does not define a response")
        return loaded.a, loaded.y
    if args.design:
        manifest = dataio.DatasetManifest(
            path=args.design,
            response_path=args.response,
            response_col=args.response_col if args.response is None else None,
        )
        loaded = dataio.load_csv_matrix(
            manifest=manifest, row_limit=args.row_limit, center=args.center or "none"
        )
        if loaded.y is None:
            raise UsageError("solve needs --response or --response-col with --design")
        return loaded.a, loaded.y
    raise UsageError("solve needs one of --config, --manifest, or --design")


def cmd_solve(args) -> int:
    method = args.method
    if method == "nopl" and args.r0 is None:
        raise UsageError("method nopl requires --r0 (pilot sample size)")
    if method != "exact" and args.r is None:
        raise UsageError(f"method {method} requires --r (sample size)")
    a, y = _solve_dataset(args)
    inst = ProblemInstance(a, y, args.lam)
    seed = args.seed if args.seed is not None else 0
    run_meta = {
        "method": method.upper(),
        "seed": seed,
        "n": inst.n,
        "p": inst.p,
        "r": args.r,
        "r0": args.r0 if method == "nopl" else None,
        "m": args.m if method == "nopl" else None,
        "lam": inst.lam,
        "estimation_error": None,
        "prediction_error": None,
    }
    t0 = time.perf_counter()
    exact = None
    if method == "exact":
        sol = ridge_exact(inst)
        exact = sol
    elif method == "nopl":
        cfg = IterativeConfig(r=args.r, r0=args.r0, m=args.m, seed=seed, theta=args.theta)
        sol, _ = two_step(inst, cfg)
    else:
        tag = method.upper()
        svd = thin_svd(inst.a) if tag in ("LEV", "RLEV") else None
        if tag in ("OPL", "RSIS"):
            exact = ridge_exact(inst)
        pv = probs_for_method(
            tag, inst.a, svd=svd, lam=inst.lam, coef=None if exact is None else exact.beta
        )
        plan = draw_plan(pv, args.r, derive_seed(seed, "solve", tag))
        sol = subsampled_ridge(inst, plan)
    wall_ms = (time.perf_counter() - t0) * 1e3
    if exact is not None and method != "exact":
        run_meta["estimation_error"] = metrics.estimation_error(sol.beta, exact.beta)
        run_meta["prediction_error"] = metrics.prediction_error(inst.a, sol.beta, exact.beta)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    digest = config_digest(
        {k: run_meta[k] for k in ("method", "seed", "r", "r0", "m", "lam")}
    )
    run_meta["config_digest"] = digest
    run_meta["master_seed"] = seed
    dataio.save_solution_csv(
        sol, out / "solution.csv", meta={"config_digest": digest, "master_seed": seed}
    )
    dataio.save_run_records([run_meta], out / "run_record.jsonl")
    print(f"solve: {method} done in {wall_ms:.1f} ms, wrote {out / 'solution.csv'}")
    if run_meta["estimation_error"] is not None:
        print(
            f"solve: estimation error {run_meta['estimation_error']:.3e}, "
            f"prediction error {run_meta['prediction_error']:.3e}"
        )
    return 0


def cmd_bench(args) -> int:
    config = _load_config(args.config)
    summary = bench_mod.run_bench(
        config,
        args.out,
        master_seed=args.seed,
        jobs=args.jobs,
        row_limit=args.row_limit,
        center=args.center,
    )
    print(
        f"bench: {summary['n_records']} records -> {summary['records']} "
        f"(config digest {summary['config_digest'][:19]}...)"
    )
    return 0


def _default_verify_specs(seed):
    return {
        "trace-minimality": {"n": 5, "p": 50, "lam": 1.0, "trials": 200, "data_seed": 11},
        "mc-variance": {
            "n": 8,
            "p": 200,
            "lam": 1.0,
            "r": 200,
            "reps": 600,
            "data_seed": 12,
        },
        "error-bound": {
            "n": 20,
            "p": 200,
            "lam": 10.0,
            "eps": 0.5,
            "delta": 0.1,
            "reps": 100,
            "data_seed": 13,
        },
        "decay": {
            "n": 50,
            "p": 500,
            "lam": 10.0,
            "r": 250,
            "r0": 50,
            "m": 6,
            "seeds": 20,
            "data_seed": 14,
        },
        "risk-bound": {"n": 10, "p": 60, "lam": 1.0, "reps": 500, "data_seed": 15},
    }


def _run_check(name, spec, seed):
    ds = datagen.gen_example1(spec["n"], spec["p"], spec["lam"], spec["data_seed"])
    inst = ds.instance
    if name == "trace-minimality":
        return metrics.trace_minimality_check(inst, spec["trials"], seed)
    if name == "mc-variance":
        exact = ridge_exact(inst)
        pv = probs_for_method("OPL", inst.a, coef=exact.beta)
        return metrics.mc_variance_check(inst, pv, spec["r"], spec["reps"], seed)
    if name == "error-bound":
        return metrics.error_bound_check(
            inst, spec["eps"], spec["delta"], spec["reps"], seed
        )
    if name == "decay":
        return metrics.decay_check(
            inst, spec["r"], spec["r0"], spec["m"], spec["seeds"], seed
        )
    if name == "risk-bound":
        return metrics.risk_bound_check(
            inst.a, ds.beta_true, inst.lam, spec["reps"], seed
        )
    raise UsageError(f"unknown check name {name!r}")


def cmd_verify(args) -> int:
    seed = args.seed if args.seed is not None else 20240501
    specs = _default_verify_specs(seed)
    overrides = {}
    if args.config:
        config = _load_config(args.config)
        overrides = config.get("checks", {})
        if not isinstance(overrides, dict):
            raise ValueError("verify config must have a 'checks' object")
    names = list(specs) if args.checks is None else [s.strip() for s in args.checks.split(",")]
    for name in names:
        if name not in specs:
            raise UsageError(
                f"unknown check name {name!r}, expected a subset of {sorted(specs)}"
            )
    reports = []
    for name in names:
        spec = dict(specs[name])
        spec.update(overrides.get(name, {}))
        report = _run_check(name, spec, seed)
        reports.append(report)
        status = "PASS" if report.passed else "FAIL"
        print(
            f"verify: {status} {name}: observed {report.observed:.6g} "
            f"vs threshold {report.threshold:.6g}"
        )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dataio.save_check_reports(reports, out / "checks.jsonl")
    dataio.check_summary_csv(reports, out / "checks_summary.csv")
    if not all(r.passed for r in reports):
        return 3
    return 0


def cmd_export_plots(args) -> int:
    records = dataio.load_run_records(args.records)
    timings = dataio.load_run_records(args.timings) if args.timings else None
    digest = next((r.get("config_digest") for r in records if r.get("config_digest")), None)
    seed = next((r.get("master_seed") for r in records if r.get("master_seed") is not None), None)
    created = bench_mod.export_reports(records, timings, args.out, digest=digest, master_seed=seed)
    for path in created:
        print(f"export-plots: wrote {path}")
    if not created:
        print("export-plots: nothing to export (no usable records)", file=sys.stderr)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="subridge", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_default):
        p.add_argument("--config", help="path to a JSON config document")
        p.add_argument("--seed", type=int, help="master seed (uint64), overrides config")
        p.add_argument("--jobs", type=int, default=1, help="parallel workers")
        p.add_argument("--out", default=out_default, help="output directory")
        p.add_argument("--row-limit", type=int, dest="row_limit", help="use only the first N data rows")
        p.add_argument(
            "--center",
            choices=dataio.CENTER_CHOICES,
            help="center the design columns and/or the response",
        )

    p_gen = sub.add_parser("gen", help="generate a synthetic dataset to CSV + manifest")
    common(p_gen, "gen-out")
    p_gen.set_defaults(func=cmd_gen)

    p_solve = sub.add_parser("solve", help="solve one ridge problem")
    common(p_solve, "solve-out")
    p_solve.add_argument("--method", required=True, choices=SOLVE_METHODS)
    p_solve.add_argument("--manifest", help="dataset manifest JSON")
    p_solve.add_argument("--design", help="design matrix CSV")
    p_solve.add_argument("--response", help="response CSV (single column)")
    p_solve.add_argument("--response-col", type=int, dest="response_col", help="response column inside the design CSV")
    p_solve.add_argument("--lam", type=float, required=True, help="ridge shift")
    p_solve.add_argument("--r", type=int, help="sample size")
    p_solve.add_argument("--r0", type=int, help="pilot sample size (nopl)")
    p_solve.add_argument("--m", type=int, default=1, help="iterations (nopl)")
    p_solve.add_argument("--theta", type=float, default=0.0, help="uniform mixing floor")
    p_solve.set_defaults(func=cmd_solve)

    p_bench = sub.add_parser("bench", help="run a benchmark grid")
    common(p_bench, "bench-out")
    p_bench.set_defaults(func=cmd_bench)

    p_verify = sub.add_parser("verify", help="run statistical verification checks")
    common(p_verify, "verify-out")
    p_verify.add_argument(
        "--checks",
        help="comma-separated check names (default: all): "
        "trace-minimality,mc-variance,error-bound,decay,risk-bound",
    )
    p_verify.set_defaults(func=cmd_verify)

    p_export = sub.add_parser("export-plots", help="aggregate records into plot CSVs and figures")
    common(p_export, "plots-out")
    p_export.add_argument("--records", required=True, help="records.jsonl from bench")
    p_export.add_argument("--timings", help="timings.jsonl from bench")
    p_export.set_defaults(func=cmd_export_plots)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args) or 0
    except UsageError as exc:
        print(f"subridge: usage error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # argparse --help
        return int(exc.code or 0)
    except (ValueError, OSError) as exc:
        print(f"subridge: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
