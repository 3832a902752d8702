"""JSON and CSV serialisation of verification and table outputs."""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Sequence

from . import __version__
from .checks import Record

CSV_COLUMNS = ("check_id", "surface", "profile", "field", "alpha")
CSV_TAIL = ("residual", "tolerance", "pass", "order")


def _num(x):
    if x is None:
        return None
    x = float(x)
    if math.isnan(x):
        return None
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def record_dict(rec: Record) -> dict:
    out = {
        "check_id": rec.check_id,
        "surface": rec.surface,
        "profile": rec.profile,
        "field": rec.field,
        "alpha": _num(rec.alpha),
        "point": [float(x) for x in rec.point],
        "residual": _num(rec.residual),
        "tolerance": _num(rec.tolerance),
        "pass": rec.passed,
        "order": _num(rec.order),
    }
    if rec.error:
        out["error"] = rec.error
    return out


def report_document(records: Sequence[Record], metadata: dict) -> dict:
    failed = sum(not r.passed for r in records)
    return {
        "metadata": {"version": __version__, **metadata},
        "summary": {"total": len(records), "passed": len(records) - failed, "failed": failed},
        "records": [record_dict(r) for r in records],
    }


def to_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def records_csv(records: Sequence[Record]) -> str:
    ndim = max((len(r.point) for r in records), default=0)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS + tuple(f"u{k + 1}" for k in range(ndim)) + CSV_TAIL)
    for r in records:
        d = record_dict(r)
        pt = list(d["point"]) + [None] * (ndim - len(d["point"]))
        row = [d[c] for c in CSV_COLUMNS] + pt + [d["residual"], d["tolerance"], d["pass"], d["order"]]
        w.writerow([_cell(x) for x in row])
    return buf.getvalue()


def rows_csv(rows: Sequence[dict]) -> str:
    """Tabular rows with a fixed column order taken from the first row."""
    if not rows:
        return ""
    columns = list(rows[0])
    for row in rows[1:]:
        for c in row:
            if c not in columns:
                columns.append(c)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(_num(row.get(c)) if isinstance(row.get(c), float) else row.get(c)) for c in columns])
    return buf.getvalue()
