"""Static figure rendering for benchmark reports.

Figures are written straight to PNG files next to the exported plot-data
CSVs; there is no interactive display path. Error panels use a log y axis,
timing panels stay linear.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_METHOD_ORDER = ("UNI", "COL", "LEV", "RLEV", "OPL", "NOPL", "RSIS")


def _method_sort_key(method):
    try:
        return (_METHOD_ORDER.index(method), method)
    except ValueError:
        return (len(_METHOD_ORDER), method)


def _grouped(rows, x_field, value_key):
    series = {}
    for row in rows:
        val = row.get(value_key)
        if val is None:
            continue
        series.setdefault(row["method"], []).append((float(row[x_field]), row))
    for method in series:
        series[method].sort(key=lambda t: t[0])
    return series


def render_metric_figure(rows, x_field, out_path, ylabel, title=None, logy=True):
    """One curve per method with a shaded interquartile band."""
    series = _grouped(rows, x_field, "median")
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for method in sorted(series, key=_method_sort_key):
        pts = series[method]
        xs = [t[0] for t in pts]
        med = [t[1]["median"] for t in pts]
        ax.plot(xs, med, marker="o", markersize=4, label=method)
        q25 = [t[1].get("q25") for t in pts]
        q75 = [t[1].get("q75") for t in pts]
        if all(v is not None for v in q25) and all(v is not None for v in q75):
            ax.fill_between(xs, q25, q75, alpha=0.15)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(x_field)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def render_time_figure(rows, x_field, out_path, title=None):
    """Median per-run wall time per method against the swept axis."""
    series = _grouped(rows, x_field, "median_wall_ms")
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for method in sorted(series, key=_method_sort_key):
        pts = series[method]
        xs = [t[0] for t in pts]
        wall = [t[1]["median_wall_ms"] for t in pts]
        ax.plot(xs, wall, marker="s", markersize=4, label=method)
    ax.set_xlabel(x_field)
    ax.set_ylabel("median wall time per run [ms]")
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path
