"""Tabular serialization of sweep results (CSV / JSON) and atomic file output."""
from __future__ import annotations

import json
import math
import os
import tempfile
from typing import Iterable, Mapping, Sequence

from .cycle import CycleReport

SWEEP_SCHEMA = "qme-sim/sweep/v1"
SWEEP_COLUMNS = (
    "p",
    "kBT_pev",
    "heat_pev",
    "work_pev",
    "heat_cold_pev",
    "dSa_nats",
    "dSb_nats",
    "eta",
    "power_pev_per_s",
    "backend",
    "flags",
)
_REPORT_FIELDS = {
    "p": "p",
    "kBT_pev": "kBT",
    "heat_pev": "heat_p",
    "work_pev": "work_ext",
    "heat_cold_pev": "heat_cold",
    "dSa_nats": "dS_a",
    "dSb_nats": "dS_b",
    "eta": "efficiency",
    "power_pev_per_s": "power_ext",
}


def fmt(x) -> str:
    """Numbers with 12 significant digits; negative zero printed as zero."""
    if isinstance(x, str):
        return x
    if isinstance(x, bool) or x is None:
        return str(x)
    x = float(x)
    if math.isnan(x):
        return "nan"
    if x == 0:
        return "0"
    return f"{x:.12g}"


def report_row(r: CycleReport) -> dict:
    row = {col: getattr(r, attr) for col, attr in _REPORT_FIELDS.items()}
    row["backend"] = r.backend
    row["flags"] = ";".join(r.flags)
    return row


def to_csv(rows: Sequence[Mapping], columns: Sequence[str], schema: str, meta: Mapping | None = None) -> str:
    lines = [f"# schema: {schema}"]
    if meta is not None:
        lines.append("# config: " + json.dumps(meta, sort_keys=True, separators=(",", ":")))
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(fmt(row[c]) for c in columns))
    return "\n".join(lines) + "\n"


def sweep_csv(reports: Iterable[CycleReport], meta: Mapping | None = None) -> str:
    return to_csv([report_row(r) for r in reports], SWEEP_COLUMNS, SWEEP_SCHEMA, meta)


def _jsonable(x):
    if isinstance(x, float):
        return None if math.isnan(x) else float(fmt(x))
    return x


def to_json(rows: Sequence[Mapping], schema: str, meta: Mapping | None = None) -> str:
    doc = {
        "schema": schema,
        "config": meta,
        "rows": [{k: _jsonable(v) for k, v in row.items()} for row in rows],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def read_csv(text: str) -> tuple:
    """Parse a file written by :func:`to_csv`; returns ``(schema, meta, rows)``."""
    schema, meta = None, None
    body = []
    for line in text.splitlines():
        if line.startswith("# schema: "):
            schema = line[len("# schema: "):]
        elif line.startswith("# config: "):
            meta = json.loads(line[len("# config: "):])
        elif line and not line.startswith("#"):
            body.append(line)
    header = body[0].split(",")
    rows = [dict(zip(header, b.split(","))) for b in body[1:]]
    return schema, meta, rows


def atomic_write(path: str, data: str | bytes) -> None:
    """Write via a temporary file in the target directory and rename into place."""
    directory = os.path.dirname(os.path.abspath(path))
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
