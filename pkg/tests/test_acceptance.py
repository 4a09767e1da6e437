"""Exit criteria for the laboratory, one test per criterion (criterion 2 has three parts).

Each test records a PASS/FAIL line that is printed in the pytest terminal summary.
"""
import filecmp
import math
import os
import time

import numpy as np
import pytest

from conftest import random_unit_ball, record_criterion
from tslab.diagnostics import (event_probability_audit, martingale_drift_audit)
from tslab.harness import ExperimentConfig, emit_output, replicate
from tslab.harness.scaling import fit_power_law
from tslab.linalg import (ANTI_CONCENTRATION_P, anti_concentration_floor, gaussian_tail_sandwich,
                          one_sided_tail, two_sided_tail)
from tslab.policy import PosteriorState

pytestmark = pytest.mark.slow

SEED = 20240601

EVENT_CFG = ExperimentConfig(d=3, N=5, T=200, R=0.5, delta=0.5, seed=SEED,
                             adversary={"id": "sphere-iid"}, noise={"kind": "gaussian", "R": 0.5})
EVENT_REPS = 500
SCALING_CFG = ExperimentConfig(d=5, N=20, T=20_000, R=0.5, delta=0.05, seed=SEED,
                               adversary={"id": "sphere-iid"}, noise={"kind": "gaussian", "R": 0.5})
SCALING_T = [2_500, 5_000, 10_000, 20_000]
SCALING_REPS = 20
TRAP_NOISE = {"kind": "uniform", "R": 0.1}
TRAP_TS = ExperimentConfig(d=2, N=None, T=10_000, R=0.1, delta=0.1, seed=SEED,
                           adversary={"id": "greedy-trap"}, policy={"id": "ts"}, noise=TRAP_NOISE)
TRAP_GREEDY = TRAP_TS.replace(policy={"id": "greedy"})
TRAP_REPS = 20

ALL_RUNS = []


def timed(fn, *args, **kw):
    start = time.perf_counter()
    out = fn(*args, **kw)
    return out, time.perf_counter() - start


@pytest.fixture(scope="module")
def event_runs():
    results, elapsed = timed(replicate, EVENT_CFG, EVENT_REPS)
    ALL_RUNS.extend(results)
    return results, elapsed


@pytest.fixture(scope="module")
def scaling_runs():
    results, elapsed = timed(replicate, SCALING_CFG, SCALING_REPS)
    ALL_RUNS.extend(results)
    return results, elapsed


@pytest.fixture(scope="module")
def trap_runs():
    ts = replicate(TRAP_TS, TRAP_REPS)
    greedy = replicate(TRAP_GREEDY, TRAP_REPS)
    ALL_RUNS.extend(ts + greedy)
    return ts, greedy


# 1 ---------------------------------------------------------------------------

def test_criterion_1_posterior_oracle_equivalence():
    rng = np.random.default_rng(SEED)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        d = int(rng.integers(1, 11))
        X = random_unit_ball(rng, 1000, d)
        r = X @ rng.uniform(-1, 1, d) + 0.5 * rng.standard_normal(1000)
        state = PosteriorState(d)
        for x, ri in zip(X, r):
            state.update(x, ri)
        B = np.eye(d) + X.T @ X
        B_inv = np.linalg.inv(B)
        mu = np.linalg.solve(B, X.T @ r)
        for got, ref in ((state.B, B), (state.B_inv, B_inv), (state.mu_hat, mu)):
            worst = max(worst, np.linalg.norm(got - ref) / max(np.linalg.norm(ref), 1e-300))
    elapsed = time.perf_counter() - start
    passed = worst <= 1e-8 and elapsed < 30
    record_criterion(1, "incremental posterior == batch", passed,
                     f"max rel err {worst:.2e} (tol 1e-8), {elapsed:.1f}s (< 30s)")
    assert worst <= 1e-8
    assert elapsed < 30


# 2 ---------------------------------------------------------------------------

def test_criterion_2a_tail_sandwich_brackets_erfc():
    start = time.perf_counter()
    misses = [z for z in np.round(np.arange(1, 51) * 0.1, 10)
              if not gaussian_tail_sandwich(z).contains(two_sided_tail(z))]
    floor_misses = [z for z in np.linspace(0, 1, 101)
                    if anti_concentration_floor(z) > one_sided_tail(z)]
    elapsed = time.perf_counter() - start
    passed = not misses and not floor_misses and elapsed < 1
    record_criterion("2a", "tail sandwich and anti-concentration floor", passed,
                     f"sandwich misses {misses}, floor misses {floor_misses}, {elapsed:.3f}s")
    assert not misses and not floor_misses
    assert elapsed < 1


def test_criterion_2b_p_closed_form():
    closed = 1.0 / (4.0 * math.e * math.sqrt(math.pi))
    passed = ANTI_CONCENTRATION_P == closed and anti_concentration_floor(1.0) == pytest.approx(closed)
    record_criterion("2b", "p equals 1/(4 e sqrt(pi))", passed, f"p = {ANTI_CONCENTRATION_P:.9f}")
    assert passed


def test_criterion_2c_p_stated_decimal():
    # stated target 0.051893 +- 1e-6; 1/(4 e sqrt(pi)) = 0.0518884, 4.6e-6 away
    err = abs(ANTI_CONCENTRATION_P - 0.051893)
    record_criterion("2c", "p = 0.051893 +- 1e-6 (as stated)", err <= 1e-6,
                     f"|p - 0.051893| = {err:.2e}")
    assert err <= 1e-6


# 3 / 4 / 8 -------------------------------------------------------------------

def test_criterion_3_event_audit(event_runs):
    results, elapsed = event_runs
    report = event_probability_audit([r.trace for r in results], EVENT_CFG.delta,
                                     rounds=(5, 20, 100))
    checks = [c for c in report.checks if c.name in ("e_mu_ever_fails", "e_theta_fails")]
    passed = all(c.passed for c in checks) and elapsed < 300
    detail = "; ".join(f"{c.name}{'@' + str(c.t) if c.t else ''}={c.statistic:.4g}<={c.threshold:.4g}"
                       for c in checks)
    record_criterion(3, "E_mu / E_theta failure rates", passed, f"{detail}; {elapsed:.0f}s")
    assert len(checks) == 4
    assert all(c.passed for c in checks)
    assert elapsed < 300


def test_criterion_4_unsaturated_play_floor(event_runs):
    results, _ = event_runs
    report = event_probability_audit([r.trace for r in results], EVENT_CFG.delta,
                                     rounds=(5, 20, 100))
    checks = [c for c in report.checks if c.name == "unsaturated_play"]
    passed = len(checks) == 3 and all(c.passed for c in checks)
    record_criterion(4, "unsaturated play >= p - 1/t^2 - 3 SE", passed,
                     "; ".join(f"t={c.t}: {c.statistic:.4g}>={c.threshold:.4g}" for c in checks))
    assert passed


def test_criterion_8_supermartingale_drift(event_runs):
    results, _ = event_runs
    report = martingale_drift_audit([r.trace for r in results], rounds=(10, 50, 200))
    passed = len(report.checks) == 3 and report.passed
    record_criterion(8, "mean X_t <= 3 SE", passed,
                     "; ".join(f"t={c.t}: {c.statistic:.4g}<={c.threshold:.4g}"
                               for c in report.checks))
    assert passed


# 6 ---------------------------------------------------------------------------

def test_criterion_6_regret_scaling(scaling_runs):
    results, elapsed = scaling_runs
    curves = np.stack([r.trace["cum_regret"] for r in results])
    means = [float(curves[:, T - 1].mean()) for T in SCALING_T]
    fit = fit_power_law(SCALING_T, means)
    ratios = [b / a for a, b in zip(means, means[1:])]
    envelope = results[0].bound.theorem_envelope
    frac = float(np.mean([r.final_regret <= r.bound.theorem_envelope for r in results]))
    passed = fit.beta < 0.85 and max(ratios) <= 1.75 and frac >= 0.95 and elapsed < 600
    record_criterion(6, "sublinear regret on sphere-iid", passed,
                     f"beta={fit.beta:.3f} [{fit.ci_low:.3f}, {fit.ci_high:.3f}] (< 0.85), "
                     f"ratios={[round(x, 3) for x in ratios]} (<= 1.75), "
                     f"R(T)<=envelope {envelope:.3g} in {frac:.0%} (>= 95%), {elapsed:.0f}s")
    assert fit.beta < 0.85
    assert max(ratios) <= 1.75
    assert frac >= 0.95
    assert elapsed < 600


# 7 ---------------------------------------------------------------------------

def test_criterion_7_exploration_value(trap_runs):
    ts, greedy = trap_runs
    ts_mean = float(np.mean([r.final_regret for r in ts]))
    greedy_mean = float(np.mean([r.final_regret for r in greedy]))
    ratio = ts_mean / greedy_mean
    record_criterion(7, "TS regret <= 0.5 x greedy on greedy-trap", ratio <= 0.5,
                     f"TS {ts_mean:.4g} vs greedy {greedy_mean:.4g}, ratio {ratio:.3f}")
    assert ratio <= 0.5


# 5 ---------------------------------------------------------------------------

def test_criterion_5_deterministic_invariants(event_runs, scaling_runs, trap_runs):
    keys = ("x_within_cap", "y_telescopes", "optimal_never_saturated", "s_sum_within_cap",
            "eigen_inequality")
    failures = [(r.config_digest[:8], r.rep, k) for r in ALL_RUNS for k in keys
                if not r.invariants[k]]
    passed = not failures and len(ALL_RUNS) == EVENT_REPS + SCALING_REPS + 2 * TRAP_REPS
    record_criterion(5, "hard invariants in every run", passed,
                     f"{len(ALL_RUNS)} runs checked, failures {failures[:5]}")
    assert not failures
    assert len(ALL_RUNS) == EVENT_REPS + SCALING_REPS + 2 * TRAP_REPS


# 9 ---------------------------------------------------------------------------

def _emit_all(root):
    batches = [
        ("events", EVENT_CFG, replicate(EVENT_CFG, EVENT_REPS)),
        ("scaling", SCALING_CFG, replicate(SCALING_CFG, SCALING_REPS)),
        ("trap_ts", TRAP_TS, replicate(TRAP_TS, TRAP_REPS)),
        ("trap_greedy", TRAP_GREEDY, replicate(TRAP_GREEDY, TRAP_REPS)),
    ]
    for name, cfg, results in batches:
        emit_output(results, cfg, os.path.join(root, name), "both")


def test_criterion_9_determinism(tmp_path, event_runs, scaling_runs, trap_runs):
    first = tmp_path / "first"
    # first execution reuses the runs already made by the other criteria
    emit_output(event_runs[0], EVENT_CFG, first / "events", "both")
    emit_output(scaling_runs[0], SCALING_CFG, first / "scaling", "both")
    emit_output(trap_runs[0], TRAP_TS, first / "trap_ts", "both")
    emit_output(trap_runs[1], TRAP_GREEDY, first / "trap_greedy", "both")
    _emit_all(tmp_path / "second")
    diffs, total = [], 0
    for sub in ("events", "scaling", "trap_ts", "trap_greedy"):
        names = sorted(os.listdir(first / sub))
        total += len(names)
        _, mismatch, errors = filecmp.cmpfiles(first / sub, tmp_path / "second" / sub, names,
                                               shallow=False)
        diffs += [f"{sub}/{n}" for n in mismatch + errors]
    record_criterion(9, "byte-identical artifacts across executions", not diffs,
                     f"{total} files compared, {len(diffs)} differ")
    assert not diffs
