"""Per-iteration convergence records and their CSV form."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

__all__ = ["TraceRecord", "Trace", "CSV_FIELDS", "write_csv", "read_csv", "trace_to_csv"]

CSV_FIELDS = ("epoch", "suboptimality", "objective", "tau", "backtracks", "wall_time")


@dataclass
class TraceRecord:
    epoch: float
    suboptimality: float
    objective: float
    tau: float = 1.0
    backtracks: int = 0
    wall_time: float = 0.0
    # not exported to CSV
    lyapunov: float = float("nan")
    shrinks: int = 0


@dataclass
class Trace:
    solver: str
    records: List[TraceRecord] = field(default_factory=list)
    z: Optional[np.ndarray] = None
    iterates: List[np.ndarray] = field(default_factory=list)
    info: dict = field(default_factory=dict)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    @property
    def final(self):
        return self.records[-1]


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_csv(trace, stream, wall_time=True):
    """Write the fixed-schema CSV. ``wall_time=False`` writes zeros in that column."""
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in trace.records:
        w.writerow([
            _fmt(r.epoch),
            _fmt(r.suboptimality),
            _fmt(r.objective),
            _fmt(r.tau),
            _fmt(int(r.backtracks)),
            _fmt(r.wall_time if wall_time else 0.0),
        ])


def trace_to_csv(trace, wall_time=True):
    buf = io.StringIO()
    write_csv(trace, buf, wall_time=wall_time)
    return buf.getvalue()


def read_csv(stream, solver="trace"):
    """Parse a trace CSV back into a :class:`Trace`."""
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is None or tuple(header) != CSV_FIELDS:
        raise ValueError(f"unexpected trace header: {header!r}")
    recs = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(CSV_FIELDS):
            raise ValueError(f"line {lineno}: expected {len(CSV_FIELDS)} fields")
        recs.append(TraceRecord(
            epoch=float(row[0]),
            suboptimality=float(row[1]),
            objective=float(row[2]),
            tau=float(row[3]),
            backtracks=int(row[4]),
            wall_time=float(row[5]),
        ))
    return Trace(solver=solver, records=recs)
