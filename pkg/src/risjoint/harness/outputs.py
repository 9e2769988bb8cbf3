"""CSV and SVG writers for result tables.

CSV files are UTF-8 with a header row, ``.`` as decimal separator and one
row per (method, SNR). Floats are written with ``repr`` so they parse back
bit-exactly; missing values are empty fields.
"""
from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import fields

from .experiment import ResultRow, ResultTable, TrialRecord

COLUMNS = [f.name for f in fields(ResultRow)]
TRIAL_COLUMNS = [f.name for f in fields(TrialRecord)]
_INT_COLUMNS = {"trials_used", "failures", "trial", "als_iters", "bigamp_iters"}
_STR_COLUMNS = {"method", "error"}
METRICS = (("nmse_hr_db", "NMSE(Hr)"), ("nmse_hs_db", "NMSE(Hs)"), ("nmse_x_db", "NMSE(X)"))


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    return str(value)


def _parse(column, text):
    if column in _STR_COLUMNS:
        return text
    if text == "":
        return None
    if column == "failed":
        return text == "1"
    if column in _INT_COLUMNS:
        return int(text)
    return float(text)


def table_to_csv(table: ResultTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in table.rows:
        writer.writerow([_fmt(getattr(row, c)) for c in COLUMNS])
    return buf.getvalue()


def table_from_csv(text: str, label="") -> ResultTable:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header != COLUMNS:
        raise ValueError(f"unexpected CSV header {header}")
    rows = [ResultRow(**{c: _parse(c, v) for c, v in zip(COLUMNS, rec)}) for rec in reader if rec]
    return ResultTable(rows=rows, label=label)


def write_csv(table: ResultTable, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(table_to_csv(table))
    return path


def read_csv(path, label="") -> ResultTable:
    with open(path, encoding="utf-8", newline="") as fh:
        return table_from_csv(fh.read(), label)


def write_trials_csv(records, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRIAL_COLUMNS)
        for rec in records:
            writer.writerow([_fmt(getattr(rec, c)) for c in TRIAL_COLUMNS])
    return path


def write_svg(tables, path, title=""):
    """NMSE (dB) versus SNR, one panel per metric, one line per method/variant.

    ``tables`` is a :class:`ResultTable` or a list of them (sweep variants,
    distinguished by their ``label``).
    """
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if isinstance(tables, ResultTable):
        tables = [tables]
    metrics = [m for m in METRICS
               if any(getattr(r, m[0]) is not None for t in tables for r in t.rows)]
    metrics = metrics or [METRICS[-1]]  # all trials failed: keep an empty axis
    with matplotlib.rc_context({"svg.hashsalt": "risjoint", "svg.fonttype": "none"}):
        fig, axes = plt.subplots(1, len(metrics), figsize=(4.2 * len(metrics), 3.6), squeeze=False)
        for ax, (metric, label) in zip(axes[0], metrics):
            for table in tables:
                methods = list(dict.fromkeys(r.method for r in table.rows))
                for method in methods:
                    snr, vals = table.series(method, metric)
                    pts = [(s, v) for s, v in zip(snr, vals) if v is not None and math.isfinite(s)]
                    if not pts:
                        continue
                    name = method if not table.label else f"{method} {table.label}"
                    ax.plot(*zip(*pts), marker="o", label=name)
            ax.set_xlabel("SNR (dB)")
            ax.set_ylabel(f"{label} (dB)")
            ax.grid(True, alpha=0.3)
            if ax.get_legend_handles_labels()[0]:
                ax.legend(fontsize=7)
        if title:
            fig.suptitle(title)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path


def emit_outputs(table_or_tables, out_dir, stem="results", formats=("csv", "svg"), title=""):
    """Write ``<stem>[_<label>].csv`` per table and one combined SVG; returns paths."""
    os.makedirs(out_dir, exist_ok=True)
    tables = [table_or_tables] if isinstance(table_or_tables, ResultTable) else list(table_or_tables)
    if not tables or not any(t.rows for t in tables):
        raise ValueError("nothing to write")
    paths = []
    if "csv" in formats:
        for t in tables:
            suffix = f"_{t.label}" if t.label else ""
            paths.append(write_csv(t, os.path.join(out_dir, f"{stem}{suffix}.csv")))
    if "svg" in formats:
        paths.append(write_svg(tables, os.path.join(out_dir, f"{stem}.svg"), title))
    return paths
