"""CSV writers.  Floats use 17 significant digits so they round-trip exactly."""

import csv
import os

from ..errors import IOFailure

TRACE_HEADER = ["k", "t", "f", "error", "constraint_violation", "grad_norm"]
SUMMARY_HEADER = [
    "label", "method", "iterations", "final_f", "final_error", "iterations_to_tolerance",
    "termination",
]


def fmt(x):
    if x is None:
        return ""
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".17g")


def _itt(val):
    return "never" if val is None else str(val)


def write_csv(path, header, rows):
    try:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc}") from None
    return path


def trace_rows(records):
    return [
        [str(r.k), fmt(r.t), fmt(r.f_value), fmt(r.error), fmt(r.constraint_violation), fmt(r.grad_norm)]
        for r in records
    ]


def write_trace(path, records):
    return write_csv(path, TRACE_HEADER, trace_rows(records))


def summary_row(s, tol_set):
    return [
        s.label,
        s.method,
        str(s.iterations),
        fmt(s.final_f),
        fmt(s.final_error),
        _itt(s.iterations_to_tolerance) if tol_set else "",
        s.reason,
    ]


def write_summary(path, summaries, tol_set):
    return write_csv(path, SUMMARY_HEADER, [summary_row(s, tol_set) for s in summaries])


def write_compare(path, labels, results):
    """Wide table aligning every method's trace on the iteration index."""
    by_label = [{r.k: r for r in res.records} for res in results]
    ks = sorted(set().union(*[set(d) for d in by_label]))
    header = ["k"]
    for lbl in labels:
        header += [f"t_{lbl}", f"error_{lbl}"]
    rows = []
    for k in ks:
        row = [str(k)]
        for d in by_label:
            rec = d.get(k)
            row += ["", ""] if rec is None else [fmt(rec.t), fmt(rec.error)]
        rows.append(row)
    return write_csv(path, header, rows)


def read_trace(path):
    """Parse a trace CSV back into a list of dicts of floats (``None`` for blanks)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for row in rows:
        rec = {}
        for key, val in row.items():
            if key == "k":
                rec[key] = int(val)
            else:
                rec[key] = None if val == "" else float(val)
        out.append(rec)
    return out
