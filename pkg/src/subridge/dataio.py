"""Dataset I/O: numeric CSV loading with manifests, run records as JSON
lines, and the plot-data CSV exporter.

File conventions: CSV numbers are written with %.17g so values round-trip
exactly; '#'-prefixed lines at the top of our own CSVs carry metadata (config
digest, master seed) and are skipped on read; JSON-lines records are one
object per line with sorted keys, so identical record lists produce identical
bytes.
"""

import csv
import json
import warnings
from pathlib import Path
from dataclasses import dataclass, field

import numpy as np

from .util import file_digest

RUN_RECORD_FIELDS = (
    "method",
    "seed",
    "n",
    "p",
    "r",
    "r0",
    "m",
    "lam",
    "estimation_error",
    "prediction_error",
    "wall_ms",
)

CENTER_CHOICES = ("a", "y", "both", "none")


@dataclass(frozen=True)
class DatasetManifest:
    """Where a dataset lives and how to load it.

    digest values are sha256 over file bytes and are verified at load time;
    None skips verification (used for documented external datasets that are
    not vendored). response_col indexes into the design CSV (0-based,
    negatives allowed); response_path points at a separate single-column CSV
    instead. skip_cols drops leading non-numeric id columns.
    """

    path: str
    n_rows: int | None = None
    n_cols: int | None = None
    response_col: int | None = None
    response_path: str | None = None
    has_header: bool = False
    skip_cols: int = 0
    row_limit: int | None = None
    center: str = "none"
    digest: str | None = None
    response_digest: str | None = None
    delimiter: str = ","
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "path": self.path,
            "n_rows": self.n_rows,
            "n_cols": self.n_cols,
            "response_col": self.response_col,
            "response_path": self.response_path,
            "has_header": self.has_header,
            "skip_cols": self.skip_cols,
            "row_limit": self.row_limit,
            "center": self.center,
            "digest": self.digest,
            "response_digest": self.response_digest,
            "delimiter": self.delimiter,
        }
        out.update(self.extras)
        return out


def save_manifest(manifest: DatasetManifest, path):
    with open(path, "w") as fh:
        json.dump(manifest.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_manifest(path) -> DatasetManifest:
    """Read a manifest; relative data paths resolve against the manifest's directory."""
    with open(path) as fh:
        raw = json.load(fh)
    base = Path(path).parent
    for key in ("path", "response_path"):
        value = raw.get(key)
        if value is not None and not Path(value).is_absolute():
            raw[key] = str(base / value)
    known = {
        "path",
        "n_rows",
        "n_cols",
        "response_col",
        "response_path",
        "has_header",
        "skip_cols",
        "row_limit",
        "center",
        "digest",
        "response_digest",
        "delimiter",
    }
    kwargs = {k: v for k, v in raw.items() if k in known}
    extras = {k: v for k, v in raw.items() if k not in known}
    return DatasetManifest(extras=extras, **kwargs)


def _parse_numeric_csv(path, delimiter=",", has_header=False, skip_cols=0, row_limit=None):
    """Rectangular numeric CSV -> 2-d array. Errors carry 1-based locations."""
    rows = []
    width = None
    header_pending = bool(has_header)
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        for lineno, raw in enumerate(reader, start=1):
            if not raw or (len(raw) == 1 and raw[0].strip() == ""):
                continue
            if raw[0].lstrip().startswith("#"):
                continue
            if header_pending:
                header_pending = False
                continue
            fields = raw[skip_cols:]
            while fields and fields[-1].strip() == "":
                fields.pop()
            if not fields:
                if not any(cell.strip() for cell in raw):
                    continue
                raise ValueError(f"{path}: row {lineno} has no fields after skip_cols={skip_cols}")
            if width is None:
                width = len(fields)
            elif len(fields) != width:
                raise ValueError(
                    f"{path}: ragged row at line {lineno}: expected {width} fields, got {len(fields)}"
                )
            parsed = np.empty(width)
            for j, cell in enumerate(fields):
                try:
                    parsed[j] = float(cell)
                except ValueError:
                    raise ValueError(
                        f"{path}: non-numeric value {cell!r} at line {lineno}, "
                        f"column {skip_cols + j + 1}"
                    ) from None
            rows.append(parsed)
            if row_limit is not None and len(rows) >= row_limit:
                break
    if not rows:
        raise ValueError(f"{path}: no data rows found")
    return np.vstack(rows)


@dataclass(frozen=True)
class LoadedDataset:
    a: np.ndarray
    y: np.ndarray | None
    n: int
    p: int
    manifest: DatasetManifest


def load_csv_matrix(
    path=None,
    manifest: DatasetManifest | None = None,
    row_limit=None,
    center=None,
) -> LoadedDataset:
    """Load a numeric CSV dataset, optionally via a manifest.

    Call with either a bare path (all options default) or a manifest;
    row_limit and center override the manifest when given. center is one of
    'a', 'y', 'both', 'none' and subtracts column means / the response mean.
    Digest mismatches, ragged rows, and non-numeric cells raise with
    locations.
    """
    if manifest is None:
        if path is None:
            raise ValueError("need a path or a manifest")
        manifest = DatasetManifest(path=str(path))
    path = manifest.path
    row_limit = manifest.row_limit if row_limit is None else int(row_limit)
    center = manifest.center if center is None else center
    if center not in CENTER_CHOICES:
        raise ValueError(f"center must be one of {CENTER_CHOICES}, got {center!r}")
    if manifest.digest is not None:
        actual = file_digest(path)
        if actual != manifest.digest:
            raise ValueError(
                f"{path}: digest mismatch: manifest says {manifest.digest}, file is {actual}"
            )
    data = _parse_numeric_csv(
        path,
        delimiter=manifest.delimiter,
        has_header=manifest.has_header,
        skip_cols=manifest.skip_cols,
        row_limit=row_limit,
    )
    if manifest.n_cols is not None and data.shape[1] != manifest.n_cols:
        raise ValueError(
            f"{path}: manifest says {manifest.n_cols} columns, file has {data.shape[1]}"
        )
    if manifest.n_rows is not None and row_limit is None and data.shape[0] != manifest.n_rows:
        raise ValueError(
            f"{path}: manifest says {manifest.n_rows} rows, file has {data.shape[0]}"
        )
    y = None
    if manifest.response_path is not None:
        if manifest.response_digest is not None:
            actual = file_digest(manifest.response_path)
            if actual != manifest.response_digest:
                raise ValueError(
                    f"{manifest.response_path}: digest mismatch: manifest says "
                    f"{manifest.response_digest}, file is {actual}"
                )
        resp = _parse_numeric_csv(
            manifest.response_path,
            delimiter=manifest.delimiter,
            has_header=manifest.has_header,
            skip_cols=0,
            row_limit=row_limit,
        )
        if resp.shape[1] != 1:
            raise ValueError(
                f"{manifest.response_path}: response file must have one column, got {resp.shape[1]}"
            )
        y = resp[:, 0]
        a = data
    elif manifest.response_col is not None:
        col = manifest.response_col
        y = data[:, col]
        a = np.delete(data, col % data.shape[1], axis=1)
    else:
        a = data
    if y is not None and y.shape[0] != a.shape[0]:
        raise ValueError(
            f"response has {y.shape[0]} rows, design has {a.shape[0]}"
        )
    if center in ("a", "both"):
        a = a - a.mean(axis=0, keepdims=True)
    if center in ("y", "both") and y is not None:
        y = y - y.mean()
    return LoadedDataset(a=a, y=y, n=a.shape[0], p=a.shape[1], manifest=manifest)


def _json_line(record: dict) -> str:
    return json.dumps(record, sort_keys=True, allow_nan=False, separators=(",", ": "))


def save_run_records(records, path):
    """Write run records as JSON lines, one object per record, in order."""
    with open(path, "w") as fh:
        for rec in records:
            fh.write(_json_line(dict(rec)))
            fh.write("\n")


def load_run_records(path) -> list:
    records = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


def save_check_reports(reports, path):
    """CheckReports as JSON lines (objects via their to_dict)."""
    with open(path, "w") as fh:
        for rep in reports:
            fh.write(_json_line(rep.to_dict() if hasattr(rep, "to_dict") else dict(rep)))
            fh.write("\n")


def check_summary_csv(reports, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name", "passed", "observed", "threshold", "seed"])
        for rep in reports:
            d = rep.to_dict() if hasattr(rep, "to_dict") else dict(rep)
            writer.writerow(
                [d["name"], d["passed"], f"{d['observed']:.17g}", f"{d['threshold']:.17g}", d["seed"]]
            )


def export_plot_data(records, x_field, metric, path, meta=None):
    """Aggregate per-rep records into one CSV row per (x, method).

    Columns: x_field, method, median, q25, q75, median_wall_ms. Values are
    raw (no log scaling; that belongs to whatever renders the figure).
    Records missing the metric or marked skipped are left out; a group with
    no usable records is dropped with a warning. Returns the rows written.
    """
    groups = {}
    for rec in records:
        if rec.get("status", "ok") != "ok":
            continue
        if x_field not in rec or rec.get("method") is None:
            continue
        key = (rec[x_field], rec["method"])
        groups.setdefault(key, {"metric": [], "wall": []})
        value = rec.get(metric)
        if value is not None:
            groups[key]["metric"].append(float(value))
        wall = rec.get("wall_ms")
        if wall is not None:
            groups[key]["wall"].append(float(wall))
    rows = []
    for (x, method), vals in sorted(groups.items()):
        if not vals["metric"]:
            warnings.warn(f"plot export: empty group ({x_field}={x}, method={method}), skipped")
            continue
        arr = np.asarray(vals["metric"])
        wall_med = float(np.median(vals["wall"])) if vals["wall"] else None
        rows.append(
            {
                x_field: x,
                "method": method,
                "median": float(np.median(arr)),
                "q25": float(np.quantile(arr, 0.25)),
                "q75": float(np.quantile(arr, 0.75)),
                "median_wall_ms": wall_med,
            }
        )
    with open(path, "w", newline="") as fh:
        if meta:
            for key, value in meta.items():
                fh.write(f"# {key}={value}\n")
        writer = csv.writer(fh)
        writer.writerow([x_field, "method", "median", "q25", "q75", "median_wall_ms"])
        for row in rows:
            writer.writerow(
                [
                    row[x_field],
                    row["method"],
                    f"{row['median']:.17g}",
                    f"{row['q25']:.17g}",
                    f"{row['q75']:.17g}",
                    "" if row["median_wall_ms"] is None else f"{row['median_wall_ms']:.17g}",
                ]
            )
    return rows


def load_plot_data(path) -> list:
    """Read back an export_plot_data CSV (skipping '#' metadata lines)."""
    rows = []
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    for raw in reader:
        row = dict(raw)
        for key in ("median", "q25", "q75", "median_wall_ms"):
            row[key] = float(row[key]) if row.get(key) else None
        rows.append(row)
    return rows


def save_solution_csv(solution, path, meta=None):
    """Coefficients as (index, beta) rows, 1-based index."""
    with open(path, "w", newline="") as fh:
        if meta:
            for key, value in meta.items():
                fh.write(f"# {key}={value}\n")
        writer = csv.writer(fh)
        writer.writerow(["index", "beta"])
        for i, b in enumerate(solution.beta, start=1):
            writer.writerow([i, f"{b:.17g}"])
