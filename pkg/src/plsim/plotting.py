"""Metric CSV files and log-scale convergence plots (SVG)."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .solvers import COLUMNS, RunRecord  # noqa: E402

X_AXES = ("iter", "lfo_total", "comm_rounds", "time_units")
AXIS_LABELS = {
    "iter": "iteration",
    "lfo_total": "local first-order oracle calls",
    "comm_rounds": "communication rounds",
    "time_units": "time",
}


class PlotError(ValueError):
    pass


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, int):
        return str(v)
    return format(float(v), ".17g")


def write_csv(record: RunRecord, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for row in record.rows():
            w.writerow([_fmt(v) for v in row])
    return path


def read_csv(path: str | Path) -> dict[str, list[float | None]]:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise PlotError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    if header != COLUMNS:
        raise PlotError(f"{path}: unexpected columns {header}")
    if not body:
        raise PlotError(f"{path}: no data rows")
    cols = {c: [] for c in header}
    for lineno, row in enumerate(body, 2):
        if len(row) != len(header):
            raise PlotError(f"{path}:{lineno}: expected {len(header)} fields")
        for c, v in zip(header, row):
            cols[c].append(float(v) if v != "" else None)
    return cols


def _series(cols, x_axis):
    pairs = [(x, g) for x, g in zip(cols[x_axis], cols["gap"]) if g is not None and g > 0]
    return [p[0] for p in pairs], [p[1] for p in pairs]


def _finish(fig, out: Path) -> Path:
    out.parent.mkdir(parents=True, exist_ok=True)
    with matplotlib.rc_context({"svg.hashsalt": "plsim", "svg.fonttype": "path"}):
        fig.savefig(out, format="svg", metadata={"Date": None})
    plt.close(fig)
    return out


def plot_csvs(paths: list[str | Path], x_axis: str, out: str | Path, title: str | None = None) -> Path:
    """One log-scale gap curve per CSV against ``x_axis``; the legend uses file stems."""
    if x_axis not in X_AXES:
        raise PlotError(f"x-axis must be one of {', '.join(X_AXES)}")
    if not paths:
        raise PlotError("no CSV files given")
    data = [(Path(p).stem, read_csv(p)) for p in paths]
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    for name, cols in data:
        x, y = _series(cols, x_axis)
        ax.plot(x, y, label=name, linewidth=1.4)
    ax.set_yscale("log")
    ax.set_xlabel(AXIS_LABELS[x_axis])
    ax.set_ylabel("suboptimality gap")
    if title:
        ax.set_title(title)
    ax.legend(frameon=False)
    fig.tight_layout()
    return _finish(fig, Path(out))


def plot_panels(records: list[RunRecord], out: str | Path, title: str | None = None,
                axes=("lfo_total", "comm_rounds", "time_units")) -> Path:
    """Side-by-side panels of gap against each metering axis."""
    if not records or all(len(r) == 0 for r in records):
        raise PlotError("nothing to plot")
    relative = any(r.relative_gap for r in records)
    fig, axs = plt.subplots(1, len(axes), figsize=(4.2 * len(axes), 3.6), squeeze=False)
    for ax, axis in zip(axs[0], axes):
        for rec in records:
            x, y = _series(rec.columns, axis)
            ax.plot(x, y, label=rec.solver, linewidth=1.4)
        ax.set_yscale("log")
        ax.set_xlabel(AXIS_LABELS[axis])
    axs[0][0].set_ylabel("relative gap" if relative else "suboptimality gap")
    axs[0][0].legend(frameon=False)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    return _finish(fig, Path(out))
