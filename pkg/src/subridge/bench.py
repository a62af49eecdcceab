"""Benchmark harness: run the solver family over a (r, lambda, m, r0) grid
with per-rep derived seeds, and emit records, timings, plot data, and
figures.

Protocol per dataset and shift lambda:

  * the exact solution is computed once (every record's errors are measured
    against it) and its wall time is reported as setup, never inside a
    per-run time;
  * the thin SVD is computed once, and only when a leverage scheme asks;
  * static schemes (UNI, COL, LEV, RLEV, RSIS) run the fixed-probability
    refinement loop; the exact-coefficient weighting (OPL) runs the
    iterative solver with the exact inverse as preconditioner; NOPL runs
    the full pilot-driven solver;
  * anything determined by the data alone is charged to the setup column,
    never to per-run wall time: probability vectors and their alias tables
    for the static schemes, the SVD for the leverage schemes, the exact
    solve and explicit inverse for OPL, and the pilot's column-norm
    distribution (plus table) for NOPL. Seed-dependent work stays in the
    per-run wall: every draw, each subsampled Gram and solve, and for NOPL
    the whole per-run pilot (draw, r0-column Gram, inversion);
  * setup timings are medians over five fresh builds, so a single cold
    measurement cannot skew the reported split;
  * rep seeds are derived from (master seed, method, grid point, rep), so
    adding methods or reordering the grid never shifts another method's
    draws.

Output files: records.jsonl (deterministic: byte-identical for identical
config + master seed), timings.jsonl (wall clock, inherently run-dependent),
plot_*.csv and fig_*.png per swept axis and metric, meta.json.
"""

import itertools
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import dataio, datagen, plots
from .linalg import gram, spd_inverse, thin_svd
from .metrics import estimation_error, prediction_error
from .sampling import METHODS, probs_column, probs_for_method
from .solvers import IterativeConfig, ProblemInstance, refine_fixed, ridge_exact, two_step
from .util import config_digest, derive_seed

STATIC_METHODS = ("UNI", "COL", "LEV", "RLEV", "RSIS")


def _timed_ms(build, repeats=5):
    """Median wall ms over repeated fresh builds; returns (last result, ms)."""
    times = []
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = build()
        times.append((time.perf_counter() - t0) * 1e3)
    return out, float(np.median(times))


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated benchmark configuration (see parse_config for the JSON shape)."""

    dataset: dict
    methods: tuple
    r_grid: tuple
    lam_grid: tuple
    m_grid: tuple
    r0_grid: tuple
    reps: int
    seed: int
    theta: float = 0.0


def parse_config(raw: dict) -> ExperimentConfig:
    """Validate the single-document JSON config for bench runs.

    Shape:
      {"dataset": {...}, "methods": [...], "grid": {"r": [...], "lam": [...],
       "m": [...], "r0": [...]}, "reps": int, "seed": int, "theta": float}

    dataset is either a generator recipe ({"generator": "example1", "n": ...,
    "p": ..., "seed": ...}) or a CSV reference ({"csv": path} or
    {"manifest": path}, plus optional row_limit / center / response_col).
    """
    if not isinstance(raw, dict):
        raise ValueError("config must be a JSON object")
    dataset = raw.get("dataset")
    if not isinstance(dataset, dict):
        raise ValueError("config.dataset must be an object")
    methods = tuple(raw.get("methods", ()))
    if not methods:
        raise ValueError("config.methods must be a non-empty list")
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}, expected a subset of {METHODS}")
    grid = raw.get("grid", {})
    if not isinstance(grid, dict):
        raise ValueError("config.grid must be an object")

    def axis(name, required):
        vals = grid.get(name, ())
        vals = tuple(vals if isinstance(vals, (list, tuple)) else (vals,))
        if required and not vals:
            raise ValueError(f"config.grid.{name} must be non-empty")
        return vals

    r_grid = axis("r", True)
    lam_grid = axis("lam", True)
    m_grid = axis("m", True)
    r0_grid = axis("r0", "NOPL" in methods)
    if any(int(r) < 1 for r in r_grid):
        raise ValueError("grid.r values must be positive")
    if any(not float(l) > 0 for l in lam_grid):
        raise ValueError("grid.lam values must be positive")
    if any(int(m) < 1 for m in m_grid):
        raise ValueError("grid.m values must be positive")
    if any(int(r0) < 1 for r0 in r0_grid):
        raise ValueError("grid.r0 values must be positive")
    reps = int(raw.get("reps", 0))
    if reps < 1:
        raise ValueError("config.reps must be at least 1")
    seed = int(raw.get("seed", 0))
    theta = float(raw.get("theta", 0.0))
    if not 0 <= theta < 1:
        raise ValueError(f"config.theta must lie in [0, 1), got {theta}")
    return ExperimentConfig(
        dataset=dataset,
        methods=methods,
        r_grid=tuple(int(r) for r in r_grid),
        lam_grid=tuple(float(l) for l in lam_grid),
        m_grid=tuple(int(m) for m in m_grid),
        r0_grid=tuple(int(r0) for r0 in r0_grid),
        reps=reps,
        seed=seed,
        theta=theta,
    )


def materialize_dataset(spec: dict, row_limit=None, center=None):
    """Turn a config dataset spec into (a, y, description dict)."""
    if "generator" in spec or "kind" in spec:
        recipe = dict(spec)
        recipe.setdefault("lam", 1.0)  # instance shift is overridden per grid point
        ds = datagen.generate(recipe)
        return ds.instance.a, ds.instance.y, ds.recipe
    if "csv" in spec or "manifest" in spec:
        if "manifest" in spec:
            manifest = dataio.load_manifest(spec["manifest"])
        else:
            manifest = dataio.DatasetManifest(
                path=spec["csv"],
                response_col=spec.get("response_col"),
                response_path=spec.get("response_path"),
                has_header=bool(spec.get("has_header", False)),
                skip_cols=int(spec.get("skip_cols", 0)),
                center=spec.get("center", "none"),
                row_limit=spec.get("row_limit"),
                delimiter=spec.get("delimiter", ","),
            )
        loaded = dataio.load_csv_matrix(manifest=manifest, row_limit=row_limit, center=center)
        if loaded.y is None:
            raise ValueError("benchmark dataset needs a response column or file")
        return loaded.a, loaded.y, {"kind": "csv", "path": manifest.path}
    raise ValueError("dataset spec needs a 'generator', 'csv', or 'manifest' key")


def _canonical_key(rec):
    return (
        rec.get("r", 0),
        rec.get("lam", 0.0),
        rec.get("m", 0),
        rec.get("r0") if rec.get("r0") is not None else -1,
        rec.get("method", ""),
        rec.get("rep", -1),
    )


def run_bench(raw_config: dict, out_dir, master_seed=None, jobs=1, row_limit=None, center=None):
    """Execute a benchmark config; returns a summary dict with file paths.

    master_seed overrides config.seed when given (the CLI --seed flag).
    jobs > 1 fans (method, grid point, rep) tasks over a thread pool; records
    are canonically ordered before writing either way, so the records file
    does not depend on scheduling.
    """
    cfg = parse_config(raw_config)
    if master_seed is None:
        master_seed = cfg.seed
    effective = dict(raw_config)
    effective["seed"] = int(master_seed)
    if row_limit is not None:
        effective["row_limit"] = int(row_limit)
    if center is not None:
        effective["center"] = center
    digest = config_digest(effective)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    a, y, described = materialize_dataset(cfg.dataset, row_limit=row_limit, center=center)
    n, p = a.shape

    # shared data-determined setup: exact solution, optional SVD, probability
    # vectors with their alias tables, and the pilot's column-norm distribution
    need_svd = any(m in ("LEV", "RLEV") for m in cfg.methods)
    svd = None
    svd_ms = 0.0
    if need_svd:
        svd, svd_ms = _timed_ms(lambda: thin_svd(a))
    pilot_pv = None
    pilot_ms = 0.0
    if "NOPL" in cfg.methods:

        def build_pilot():
            pv = probs_column(a)
            pv.table()
            return pv

        pilot_pv, pilot_ms = _timed_ms(build_pilot)
    instances = {}
    exact = {}
    exact_ms = {}
    opl_precond = {}
    opl_extra_ms = {}
    static_pvs = {}
    probs_ms = {}
    for lam in cfg.lam_grid:
        inst = ProblemInstance(a, y, lam)
        instances[lam] = inst
        exact[lam], exact_ms[lam] = _timed_ms(lambda: ridge_exact(inst))
        if "OPL" in cfg.methods:
            opl_precond[lam], opl_extra_ms[lam] = _timed_ms(
                lambda: spd_inverse(gram(a, lam))
            )
        for method in cfg.methods:
            if method in ("NOPL", "OPL"):
                continue

            def build_static(method=method, lam=lam):
                pv = probs_for_method(method, a, svd=svd, lam=lam, coef=exact[lam].beta)
                pv.table()
                return pv

            static_pvs[(method, lam)], probs_ms[(method, lam)] = _timed_ms(build_static)

    def setup_ms_for(method, lam):
        if method == "NOPL":
            return pilot_ms
        if method == "OPL":
            return exact_ms[lam] + opl_extra_ms[lam]
        base = probs_ms[(method, lam)]
        if method in ("LEV", "RLEV"):
            base += svd_ms
        if method == "RSIS":
            base += exact_ms[lam]
        return base

    grid_points = list(itertools.product(cfg.r_grid, cfg.lam_grid, cfg.m_grid))
    records = []
    timings = []
    tasks = []
    for r, lam, m in grid_points:
        for method in cfg.methods:
            r0_values = cfg.r0_grid if method == "NOPL" else (None,)
            for r0 in r0_values:
                if r > p:
                    records.append(
                        {
                            "method": method,
                            "status": "skipped",
                            "reason": f"r={r} exceeds p={p}",
                            "r": r,
                            "lam": lam,
                            "m": m,
                            "r0": r0,
                            "n": n,
                            "p": p,
                            "config_digest": digest,
                            "master_seed": int(master_seed),
                        }
                    )
                    continue
                for rep in range(cfg.reps):
                    tasks.append((method, r, lam, m, r0, rep))

    def run_task(task):
        method, r, lam, m, r0, rep = task
        inst = instances[lam]
        parts = [master_seed, method, r, lam, m]
        if method == "NOPL":
            parts.append(r0)
        parts.append(rep)
        seed = derive_seed(*parts)
        t0 = time.perf_counter()
        if method == "NOPL":
            sol, _ = two_step(
                inst,
                IterativeConfig(r=r, r0=r0, m=m, seed=seed, theta=cfg.theta),
                pilot_probs=pilot_pv,
            )
        elif method == "OPL":
            sol, _ = two_step(
                inst,
                IterativeConfig(r=r, r0=1, m=m, seed=seed, theta=cfg.theta),
                precond=opl_precond[lam],
                method="OPL",
            )
        else:
            sol, _ = refine_fixed(inst, static_pvs[(method, lam)], r, m, seed)
        wall = (time.perf_counter() - t0) * 1e3
        ex = exact[lam]
        record = {
            "status": "ok",
            "method": method,
            "seed": seed,
            "rep": rep,
            "n": n,
            "p": p,
            "r": r,
            "r0": r0,
            "m": m,
            "lam": lam,
            "estimation_error": estimation_error(sol.beta, ex.beta),
            "prediction_error": prediction_error(inst.a, sol.beta, ex.beta),
            "config_digest": digest,
            "master_seed": int(master_seed),
        }
        timing = {
            "method": method,
            "rep": rep,
            "r": r,
            "r0": r0,
            "m": m,
            "lam": lam,
            "wall_ms": wall,
            "setup_ms": setup_ms_for(method, lam),
            "config_digest": digest,
            "master_seed": int(master_seed),
        }
        return record, timing

    if jobs and int(jobs) > 1:
        with ThreadPoolExecutor(max_workers=int(jobs)) as pool:
            results = list(pool.map(run_task, tasks))
    else:
        results = [run_task(t) for t in tasks]
    for record, timing in results:
        records.append(record)
        timings.append(timing)

    records.sort(key=_canonical_key)
    timings.sort(key=_canonical_key)
    records_path = out / "records.jsonl"
    timings_path = out / "timings.jsonl"
    dataio.save_run_records(records, records_path)
    dataio.save_run_records(timings, timings_path)

    plot_files = export_reports(records, timings, out, digest, int(master_seed))

    meta = {
        "config_digest": digest,
        "master_seed": int(master_seed),
        "dataset": described,
        "n": n,
        "p": p,
        "setup": {
            "svd_ms": svd_ms,
            "exact_ms": {str(k): v for k, v in exact_ms.items()},
        },
        "files": [records_path.name, timings_path.name] + [f.name for f in plot_files],
    }
    with open(out / "meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return {
        "records": records_path,
        "timings": timings_path,
        "plots": plot_files,
        "config_digest": digest,
        "n_records": len(records),
    }


def swept_axes(records) -> list:
    """Grid axes that actually vary across ok records (default: r)."""
    axes = []
    ok = [r for r in records if r.get("status", "ok") == "ok"]
    for axis in ("r", "lam", "m", "r0"):
        values = {rec.get(axis) for rec in ok if rec.get(axis) is not None}
        if len(values) > 1:
            axes.append(axis)
    return axes or ["r"]


def merge_timings(records, timings) -> list:
    """Attach wall_ms from the timing sidecar to matching records (in memory
    only; the persisted records stay timing-free so reruns are comparable)."""
    lookup = {}
    for t in timings or ():
        key = (t.get("method"), t.get("r"), t.get("lam"), t.get("m"), t.get("r0"), t.get("rep"))
        lookup[key] = t
    merged = []
    for rec in records:
        key = (rec.get("method"), rec.get("r"), rec.get("lam"), rec.get("m"), rec.get("r0"), rec.get("rep"))
        t = lookup.get(key)
        out = dict(rec)
        if t is not None:
            out["wall_ms"] = t.get("wall_ms")
            out["setup_ms"] = t.get("setup_ms")
        merged.append(out)
    return merged


def export_reports(records, timings, out_dir, digest=None, master_seed=None) -> list:
    """Write plot-data CSVs and render the matching PNG figures.

    One CSV + figure per (swept axis, metric), plus a timing figure per axis
    when wall times are available. Returns the created file paths.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    merged = merge_timings(records, timings) if timings else list(records)
    meta = {}
    if digest is not None:
        meta["config_digest"] = digest
    if master_seed is not None:
        meta["master_seed"] = master_seed
    created = []
    ylabels = {
        "estimation_error": "relative coefficient error",
        "prediction_error": "relative fit error",
    }
    for axis in swept_axes(merged):
        subset = merged
        if axis == "r0":
            subset = [r for r in merged if r.get("r0") is not None]
        axis_rows = None
        for metric, ylabel in ylabels.items():
            csv_path = out / f"plot_{metric}_vs_{axis}.csv"
            rows = dataio.export_plot_data(subset, axis, metric, csv_path, meta=meta)
            created.append(csv_path)
            if rows:
                fig_path = out / f"fig_{metric}_vs_{axis}.png"
                plots.render_metric_figure(rows, axis, fig_path, ylabel)
                created.append(fig_path)
                axis_rows = rows
        # the median_wall_ms column rides along in the metric CSVs; render the
        # timing panel from it when any timing was attached
        if axis_rows and any(r.get("median_wall_ms") is not None for r in axis_rows):
            fig_path = out / f"fig_wall_vs_{axis}.png"
            plots.render_time_figure(axis_rows, axis, fig_path)
            created.append(fig_path)
    return created
