"""Audit of traces stored on disk by ``emit_output``."""
import glob
import json
import os

import numpy as np

from tslab.diagnostics import (AuditCheck, AuditReport, analysis_constants,
                               event_probability_audit, martingale_drift_audit)
from tslab.errors import ConfigError, OutputError
from tslab.harness.config import ExperimentConfig
from tslab.harness.output import read_trace_csv

#: CSV values carry 12 significant digits; reconstructed sums get this relative slack.
CSV_RTOL = 1e-9


def load_traces(directory):
    summary_path = os.path.join(directory, "summary.json")
    try:
        with open(summary_path, encoding="utf-8") as fh:
            summary = json.load(fh)
    except OSError as exc:
        raise OutputError(f"cannot read {summary_path}: {exc}") from exc
    cfg = ExperimentConfig.from_dict(summary["config"])
    paths = sorted(glob.glob(os.path.join(directory, "run_*.csv")))
    if not paths:
        raise ConfigError(f"no run_*.csv traces in {directory}")
    return cfg, [read_trace_csv(p) for p in paths]


def stored_invariants(cfg, traces):
    """Deterministic checks recomputable from the CSV columns alone."""
    n_arms = cfg.make_adversary().n_arms(cfg.d)
    scfg = cfg.sampler_config()
    caps = np.array([analysis_constants(scfg, t, n_arms).martingale_cap
                     for t in range(1, cfg.T + 1)])
    bad = {"x_within_cap": 0, "y_telescopes": 0, "cum_regret_prefix_sum": 0,
           "gap_regret_nonnegative": 0, "optimal_never_saturated_rows": 0}
    for tr in traces:
        T = tr["t"].shape[0]
        x, y = tr["x_t"], tr["y_t"]
        scale = np.maximum(np.abs(np.cumsum(np.abs(x))), 1.0)
        if np.any(np.abs(x) > caps[:T] * (1 + CSV_RTOL)):
            bad["x_within_cap"] += 1
        if np.any(np.abs(np.cumsum(x) - y) > CSV_RTOL * scale):
            bad["y_telescopes"] += 1
        gap = tr["gap_regret"]
        cscale = np.maximum(np.abs(tr["cum_regret"]), 1.0)
        if np.any(np.abs(np.cumsum(gap) - tr["cum_regret"]) > CSV_RTOL * cscale):
            bad["cum_regret_prefix_sum"] += 1
        if np.any(gap < 0):
            bad["gap_regret_nonnegative"] += 1
        if np.any(tr["saturated_played"] & (tr["arm"] == tr["opt_arm"]) & (tr["arm"] >= 0)):
            bad["optimal_never_saturated_rows"] += 1
    return bad


def audit_directory(directory, rounds=(5, 20, 100), drift_rounds=(10, 50, 200), min_reps=200):
    cfg, traces = load_traces(directory)
    bad = stored_invariants(cfg, traces)
    report = AuditReport()
    for name, count in bad.items():
        report.add(AuditCheck(f"invariant:{name}", float(count), 0.0, 0.0, 0.0, count == 0,
                              len(traces)))
    if len(traces) >= min_reps:
        probabilistic = event_probability_audit(traces, cfg.delta, rounds, min_reps=min_reps)
        report.checks.extend(probabilistic.checks)
        martingale_drift_audit(traces, drift_rounds, report=report)
    return cfg, report, all(v == 0 for v in bad.values())
