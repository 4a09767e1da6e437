"""CSV trace and JSON summary emission.

Numbers are written with 12 significant digits, files are UTF-8 with LF
line endings, so identical runs give byte-identical files.
"""
import csv
import json
import math
import os

import numpy as np

from tslab.errors import ConfigError, OutputError

CSV_COLUMNS = ("t", "arm", "opt_arm", "gap_regret", "realized_regret", "cum_regret",
               "s_chosen", "e_mu", "e_theta", "saturated_played", "x_t", "y_t")
_BOOL_COLUMNS = {"e_mu", "e_theta", "saturated_played"}
_INT_COLUMNS = {"t", "arm", "opt_arm"}


def fmt_float(x):
    return format(float(x), ".12g")


def round12(obj):
    """Recursively round floats to 12 significant digits for JSON output."""
    if isinstance(obj, dict):
        return {str(k): round12(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round12(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return round12(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return str(x)
        return float(fmt_float(x))
    return obj


def trace_rows(trace):
    cols = trace.columns
    columns = []
    for name in CSV_COLUMNS:
        values = cols[name]
        if name in _BOOL_COLUMNS:
            columns.append(["1" if v else "0" for v in values.tolist()])
        elif name in _INT_COLUMNS:
            columns.append([str(v) for v in values.tolist()])
        else:
            columns.append([fmt_float(v) for v in values.tolist()])
    return zip(*columns)


def csv_name(rep):
    return f"run_{rep:04d}.csv"


def write_trace_csv(trace, path):
    if trace.T < 1:
        raise ConfigError("refusing to write an empty trace")
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            writer.writerows(trace_rows(trace))
    except OSError as exc:
        raise OutputError(f"cannot write trace {path}: {exc}") from exc


def read_trace_csv(path):
    """Read a trace CSV back into a dict of numpy columns."""
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = list(reader)
    except OSError as exc:
        raise OutputError(f"cannot read trace {path}: {exc}") from exc
    if tuple(header) != CSV_COLUMNS:
        raise ConfigError(f"{path}: unexpected header {header}")
    data = list(zip(*rows)) if rows else [()] * len(CSV_COLUMNS)
    out = {}
    for name, values in zip(CSV_COLUMNS, data):
        if name in _BOOL_COLUMNS:
            out[name] = np.array([v == "1" for v in values], dtype=bool)
        elif name in _INT_COLUMNS:
            out[name] = np.array([int(v) for v in values], dtype=np.int64)
        else:
            out[name] = np.array([float(v) for v in values], dtype=np.float64)
    return out


def summary_dict(results, cfg, audits=None):
    return round12({
        "schema_version": cfg.schema_version,
        "config": cfg.to_dict(),
        "config_digest": cfg.digest(),
        "backend": results[0].backend,
        "runs": [
            {
                "rep": r.rep,
                "seed": r.seed,
                "csv": csv_name(r.rep),
                "bound_report": r.bound.as_dict(),
                "invariants": r.invariants,
            }
            for r in results
        ],
        "audits": audits or {},
    })


def write_json(obj, path):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True, ensure_ascii=False)
            fh.write("\n")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc


def write_vectors(trace, path):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for t in sorted(trace.vectors):
                vec = trace.vectors[t]
                fh.write(json.dumps(round12({"t": t, **vec}), sort_keys=True) + "\n")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc


def emit_output(results, cfg, out_dir=None, fmt=None, audits=None, vectors=False):
    """Write per-run CSV traces and/or ``summary.json`` into ``out_dir``.

    Returns the list of written paths.
    """
    if not results:
        raise ConfigError("no results to write")
    out_dir = out_dir or cfg.output.get("dir", "tslab-out")
    fmt = fmt or cfg.output.get("format", "both")
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create output directory {out_dir}: {exc}") from exc
    written = []
    if fmt in ("csv", "both"):
        for r in results:
            path = os.path.join(out_dir, csv_name(r.rep))
            write_trace_csv(r.trace, path)
            written.append(path)
            if vectors:
                vpath = os.path.join(out_dir, f"run_{r.rep:04d}_vectors.jsonl")
                write_vectors(r.trace, vpath)
                written.append(vpath)
    if fmt in ("json", "both"):
        path = os.path.join(out_dir, "summary.json")
        write_json(summary_dict(results, cfg, audits), path)
        written.append(path)
    return written
