"""Trace persistence: per-run CSV plus a companion JSON metadata file.

Floats are written with 17 significant digits so a write/read round trip
reproduces every value bit for bit.  The metadata echoes the configuration
and carries run-level summaries the offline audits need (final value and
gradient, set sizes, per-iteration estimator spectrum bounds for convex-mode
checks).
"""

import csv
import json
from pathlib import Path

from .errors import FormatError
from .hat import IterationRecord

TRACE_COLUMNS = [
    "k", "f", "grad_norm", "deviation", "delta", "r_k", "A_k", "radius",
    "lambda", "step_norm", "on_boundary", "step_class", "kkt_residual",
    "wall_nanos",
]


def _fmt(x):
    return format(float(x), ".17g")


def metadata_path(trace_path):
    # Distinct double suffix so a trace named like its config cannot clobber
    # the config file.
    trace_path = Path(trace_path)
    return trace_path.parent / (trace_path.stem + ".meta.json")


def write_trace(path, records):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(TRACE_COLUMNS)
        for rec in records:
            writer.writerow([
                rec.k, _fmt(rec.f), _fmt(rec.grad_norm), _fmt(rec.deviation),
                _fmt(rec.delta), _fmt(rec.r_k), _fmt(rec.a_k), _fmt(rec.radius),
                _fmt(rec.lam), _fmt(rec.step_norm),
                "true" if rec.on_boundary else "false", rec.step_class,
                _fmt(rec.kkt_residual), rec.wall_nanos,
            ])


def read_trace(path):
    with open(path, "r", newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError("trace file is empty (missing header)") from None
        if header != TRACE_COLUMNS:
            for got, want in zip(header, TRACE_COLUMNS):
                if got != want:
                    raise FormatError(f"unexpected column {got!r} (wanted {want!r})",
                                      column=got)
            raise FormatError(f"header has {len(header)} columns, "
                              f"expected {len(TRACE_COLUMNS)}")
        records = []
        previous_k = -1
        for row in reader:
            if len(row) != len(TRACE_COLUMNS):
                raise FormatError(f"row {len(records)} has {len(row)} fields")
            try:
                rec = IterationRecord(
                    k=int(row[0]), f=float(row[1]), grad_norm=float(row[2]),
                    deviation=float(row[3]), delta=float(row[4]),
                    r_k=float(row[5]), a_k=float(row[6]), radius=float(row[7]),
                    lam=float(row[8]), step_norm=float(row[9]),
                    on_boundary=row[10] == "true", step_class=row[11],
                    kkt_residual=float(row[12]), wall_nanos=int(row[13]))
            except ValueError as exc:
                raise FormatError(f"unparseable value in row {len(records)}: {exc}") from exc
            if rec.k <= previous_k:
                raise FormatError("iteration numbers must be strictly increasing",
                                  column="k")
            previous_k = rec.k
            records.append(rec)
    return records


def write_metadata(path, meta):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(meta, handle, indent=2, sort_keys=True)
        handle.write("\n")


def read_metadata(path):
    with open(path, "r", encoding="utf-8") as handle:
        return json.load(handle)
