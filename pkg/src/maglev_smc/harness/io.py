"""CSV traces and JSON run reports."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .runner import RunRecord
from .scenario import as_jsonable

TRACE_COLUMNS = ("t", "p", "v", "i", "u", "s", "s_tilde")


def _cell(x: float) -> str:
    return "" if not math.isfinite(x) else repr(float(x))


def write_trace_csv(trace, path) -> Path:
    """One row per sample; surface columns are blank where undefined."""
    path = Path(path)
    cols = np.column_stack([trace.t, trace.p, trace.v, trace.i, trace.u, trace.s, trace.s_tilde])
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for row in cols:
            writer.writerow([_cell(x) for x in row])
    return path


def read_trace_csv(path) -> dict:
    """Columns of a trace CSV as float arrays (blank cells become NaN)."""
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
    return {c: np.array([float(r[c]) if r[c] != "" else math.nan for r in rows]) for c in TRACE_COLUMNS}


def record_to_json(record: RunRecord) -> dict:
    out = record.summary()
    out["scenario"] = record.scenario
    return as_jsonable(out)


def write_report(record: RunRecord, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(record_to_json(record), indent=2, sort_keys=True))
    return path


def read_report(path) -> dict:
    tree = json.loads(Path(path).read_text())
    if "name" not in tree or "controller" not in tree:
        raise ValueError(f"{path} is not a run report")
    return tree


def save_record(record: RunRecord, out_dir) -> tuple[Path, Path]:
    """Write ``<name>.csv`` and ``<name>.json`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{record.name}.csv"
    if record.trace is not None:
        write_trace_csv(record.trace, csv_path)
    return csv_path, write_report(record, out / f"{record.name}.json")
