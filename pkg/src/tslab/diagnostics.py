"""Per-round instrumentation of the regret analysis and replication-level audits.

Deterministic invariants (martingale increment cap, telescoping, optimal arm
never saturated, the sum-of-widths cap and the eigenvalue inequality) are
recorded as flags on every run; the probabilistic statements are checked by
the audits with explicit Monte-Carlo error bars.
"""
import math
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np

from tslab.errors import ConfigError
from tslab.linalg import ANTI_CONCENTRATION_P
from tslab.policy import FiniteSlate, UnitBall, log_floor, v_schedule

PI2_6 = math.pi ** 2 / 6.0
#: Absolute slack for float round-off in the eigenvalue-increment inequality.
EIG_SLACK = 1e-12


@dataclass(frozen=True)
class AnalysisConstants:
    ell: float
    v: float
    g: float
    p: float

    @property
    def martingale_cap(self):
        """Bound on ``|X_t|``: ``6 g / p``."""
        return 6.0 * self.g / self.p


def theta_multiplier(d, t, n_arms):
    """``min(sqrt(4 d ln t), sqrt(4 ln(N t)))``; only the first branch for infinite N."""
    first = math.sqrt(4.0 * d * log_floor(t))
    if math.isinf(n_arms):
        return first
    return min(first, math.sqrt(4.0 * log_floor(n_arms * t)))


def analysis_constants(cfg, t, n_arms):
    """``ell_t = R sqrt(d ln(t^3/delta)) + 1``, ``v_t``, ``g_t = mult * v_t + ell_t``, ``p``."""
    if t < 1:
        raise ConfigError(f"round index must be >= 1, got {t}")
    v = v_schedule(cfg, t)
    if cfg.ell_const is not None:
        ell = float(cfg.ell_const)
    else:
        ell = cfg.R * math.sqrt(cfg.d * log_floor(t ** 3 / cfg.delta)) + 1.0
    if cfg.g_const is not None:
        g = float(cfg.g_const)
    else:
        g = theta_multiplier(cfg.d, t, n_arms) * v + ell
    p = ANTI_CONCENTRATION_P if cfg.p_const is None else float(cfg.p_const)
    return AnalysisConstants(ell=ell, v=v, g=g, p=p)


def regret_step(contexts, chosen, mu_star, reward=None, optimal_reward=None):
    """Return ``(gap_regret, realized_regret)`` for one round.

    ``realized_regret = optimal_reward - reward``; when either reward is
    omitted (noiseless bookkeeping) it equals the gap regret.
    """
    mu_star = np.asarray(mu_star, dtype=np.float64)
    if isinstance(contexts, UnitBall):
        b = np.asarray(chosen, dtype=np.float64)
        best = float(np.linalg.norm(mu_star))
        gap = max(best - float(b @ mu_star), 0.0)
    else:
        X = contexts.contexts if isinstance(contexts, FiniteSlate) else np.asarray(contexts)
        means = X @ mu_star
        gap = max(float(means.max() - means[chosen]), 0.0)
    if reward is None or optimal_reward is None:
        return gap, gap
    return gap, float(optimal_reward) - float(reward)


def event_mu_margins(means_hat, means_true, widths, ell):
    """``ell * s_i - |b_i^T mu_hat - b_i^T mu|``; the event holds iff all are >= 0."""
    return ell * widths - np.abs(means_hat - means_true)


def check_event_mu(state, contexts, mu_star, ell):
    """Concentration of the regression estimate: ``(holds, margins)``.

    For a unit ball the supremum over arms is ``||mu_hat - mu||_B <= ell``,
    reported as a single margin.
    """
    mu_star = np.asarray(mu_star, dtype=np.float64)
    if isinstance(contexts, UnitBall):
        diff = state.mu_hat - mu_star
        margin = np.array([ell - math.sqrt(max(float(diff @ state.B @ diff), 0.0))])
        return bool(margin[0] >= 0), margin
    X = contexts.contexts
    margins = event_mu_margins(X @ state.mu_hat, X @ mu_star, state.widths(X), ell)
    return bool(np.all(margins >= 0)), margins


def check_event_theta(theta, means_hat, widths, radius):
    """All sampled scores lie within ``radius * s_i`` of their posterior means."""
    return bool(np.all(np.abs(np.asarray(theta) - means_hat) <= radius * np.asarray(widths)))


def saturated_set(gaps, widths, g):
    """Indices with ``gap_i > g * s_i``."""
    gaps = np.asarray(gaps, dtype=np.float64)
    widths = np.asarray(widths, dtype=np.float64)
    if gaps.shape != widths.shape:
        raise ConfigError("gaps and widths must be aligned")
    if math.isinf(g):
        return np.array([], dtype=np.int64)
    return np.flatnonzero(gaps > g * widths)


def martingale_increment(regret, e_mu, s_chosen, t, constants):
    """``X_t = regret * 1{E_mu} - (3g/p) s_a - 2g / (p t^2)``."""
    g, p = constants.g, constants.p
    return (regret if e_mu else 0.0) - 3.0 * g / p * s_chosen - 2.0 * g / (p * t * t)


def martingale_step(regret, e_mu, s_chosen, t, constants, y_prev=0.0):
    """Return ``(X_t, Y_t, within_cap)`` with ``Y_t = Y_{t-1} + X_t``."""
    x = martingale_increment(regret, e_mu, s_chosen, t, constants)
    return x, y_prev + x, abs(x) <= constants.martingale_cap


def s_sum_cap(d, T):
    """``5 sqrt(d T ln T)`` (log floored at 1)."""
    return 5.0 * math.sqrt(d * T * log_floor(T))


def eigen_increment_rhs(lam_before, lam_after):
    """``10 * sum_j (lam'_j - lam_j) / lam_j`` with both spectra sorted the same way."""
    lam_before = np.asarray(lam_before)
    return 10.0 * float(np.sum((np.asarray(lam_after) - lam_before) / lam_before))


def eigen_increment_holds(s_chosen, lam_before, lam_after):
    return s_chosen * s_chosen <= eigen_increment_rhs(lam_before, lam_after) + EIG_SLACK


@dataclass
class BoundReport:
    T: int
    d: int
    s_sum: float
    s_sum_cap: float
    theorem_envelope: float
    cumulative_regret: float
    cumulative_realized_regret: float

    @property
    def s_sum_ok(self):
        return self.s_sum <= self.s_sum_cap

    @property
    def envelope_dominates(self):
        return self.cumulative_regret <= self.theorem_envelope

    def as_dict(self):
        out = asdict(self)
        out["s_sum_ok"] = self.s_sum_ok
        out["envelope_dominates"] = self.envelope_dominates
        return out


def s_sum_bound_check(s_chosen, d, lam_pairs=None):
    """Check the running sum of chosen-arm widths against its cap at every prefix,
    and optionally the per-round eigenvalue inequality.

    Returns a dict with the final sum, cap, prefix violations and eigen violations.
    """
    s = np.asarray(s_chosen, dtype=np.float64)
    T = s.shape[0]
    running = np.cumsum(s)
    caps = np.array([s_sum_cap(d, t) for t in range(1, T + 1)])
    out = {
        "T": T,
        "s_sum": float(running[-1]) if T else 0.0,
        "s_sum_cap": s_sum_cap(d, max(T, 1)),
        "prefix_violations": int(np.sum(running > caps)),
    }
    if lam_pairs is not None:
        out["eigen_violations"] = int(sum(
            not eigen_increment_holds(si, lb, la) for si, (lb, la) in zip(s, lam_pairs)))
    return out


def theorem_bound(cfg, T, n_arms):
    """Explicit high-probability regret envelope at horizon ``T``:

    ``(3g/p) 5 sqrt(d T ln T) + (2g/p) pi^2/6 + (6g/p) sqrt(2 T ln(2/delta))``
    with ``g = g_T``.
    """
    if T < 1:
        raise ConfigError(f"T must be >= 1, got {T}")
    c = analysis_constants(cfg, T, n_arms)
    ratio = c.g / c.p
    return (3.0 * ratio * s_sum_cap(cfg.d, T)
            + 2.0 * ratio * PI2_6
            + 6.0 * ratio * math.sqrt(2.0 * T * log_floor(2.0 / cfg.delta)))


# --- traces --------------------------------------------------------------------

SCALAR_COLUMNS = (
    ("t", np.int64),
    ("arm", np.int64),
    ("opt_arm", np.int64),
    ("gap_regret", np.float64),
    ("realized_regret", np.float64),
    ("cum_regret", np.float64),
    ("s_chosen", np.float64),
    ("e_mu", np.bool_),
    ("e_theta", np.bool_),
    ("saturated_played", np.bool_),
    ("x_t", np.float64),
    ("y_t", np.float64),
    ("reward", np.float64),
    ("ell", np.float64),
    ("v", np.float64),
    ("g", np.float64),
    ("n_saturated", np.int64),
    ("opt_saturated", np.bool_),
    ("x_within_cap", np.bool_),
    ("eig_lhs", np.float64),
    ("eig_rhs", np.float64),
)


@dataclass
class StepTrace:
    """One round of a run. Vector fields are ``None`` on thinned-out rounds."""

    t: int
    arm: int
    opt_arm: int
    gap_regret: float
    realized_regret: float
    cum_regret: float
    s_chosen: float
    e_mu: bool
    e_theta: bool
    saturated_played: bool
    x_t: float
    y_t: float
    theta: Optional[np.ndarray] = None
    widths: Optional[np.ndarray] = None
    saturated: Optional[np.ndarray] = None


class Trace:
    """Column store for a run: every scalar every round, vectors every ``stride`` rounds."""

    def __init__(self, T, stride=1):
        self.T = int(T)
        self.stride = max(int(stride), 1)
        self.columns = {name: np.zeros(self.T, dtype=dt) for name, dt in SCALAR_COLUMNS}
        self.vectors = {}

    def __len__(self):
        return self.T

    def __getitem__(self, name):
        return self.columns[name]

    def keep_vectors(self, t):
        return (t - 1) % self.stride == 0

    def step(self, i):
        c = self.columns
        vec = self.vectors.get(int(c["t"][i]), {})
        return StepTrace(
            t=int(c["t"][i]), arm=int(c["arm"][i]), opt_arm=int(c["opt_arm"][i]),
            gap_regret=float(c["gap_regret"][i]), realized_regret=float(c["realized_regret"][i]),
            cum_regret=float(c["cum_regret"][i]), s_chosen=float(c["s_chosen"][i]),
            e_mu=bool(c["e_mu"][i]), e_theta=bool(c["e_theta"][i]),
            saturated_played=bool(c["saturated_played"][i]),
            x_t=float(c["x_t"][i]), y_t=float(c["y_t"][i]),
            theta=vec.get("theta"), widths=vec.get("widths"), saturated=vec.get("saturated"),
        )

    def steps(self):
        for i in range(self.T):
            yield self.step(i)


def invariant_report(trace, d):
    """Deterministic invariants of one run as a dict of booleans and counts."""
    c = trace.columns
    y = 0.0
    telescopes = True
    for x, yt in zip(c["x_t"].tolist(), c["y_t"].tolist()):
        y += x
        if y != yt:
            telescopes = False
            break
    s_check = s_sum_bound_check(c["s_chosen"], d)
    eig_ok = c["eig_lhs"] <= c["eig_rhs"] + EIG_SLACK
    gap = c["gap_regret"]
    report = {
        "x_within_cap": bool(np.all(c["x_within_cap"])),
        "y_telescopes": telescopes,
        "optimal_never_saturated": not bool(np.any(c["opt_saturated"])),
        "s_sum_within_cap": s_check["prefix_violations"] == 0,
        "eigen_inequality": bool(np.all(eig_ok)),
        "gap_regret_nonnegative": bool(np.all(gap >= 0)),
        "gap_zero_iff_optimal": bool(np.all((gap == 0) | (c["arm"] != c["opt_arm"])
                                            | (c["arm"] < 0))),
        "cum_regret_prefix_sum": bool(np.allclose(np.cumsum(gap), c["cum_regret"],
                                                  rtol=0, atol=1e-9)),
        "s_sum": s_check["s_sum"],
        "s_sum_cap": s_check["s_sum_cap"],
    }
    report["all_ok"] = all(v for k, v in report.items() if isinstance(v, bool))
    return report


# --- replication audits --------------------------------------------------------

@dataclass
class AuditCheck:
    name: str
    statistic: float
    reference: float
    se: float
    threshold: float
    passed: bool
    n: int
    t: Optional[int] = None


@dataclass
class AuditReport:
    checks: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def add(self, check):
        self.checks.append(check)
        return check

    def as_dict(self):
        return {"passed": self.passed, "checks": [asdict(c) for c in self.checks]}

    def lines(self):
        for c in self.checks:
            where = f" t={c.t}" if c.t is not None else ""
            yield (f"{'PASS' if c.passed else 'FAIL'} {c.name}{where}: "
                   f"{c.statistic:.6g} vs threshold {c.threshold:.6g} "
                   f"(reference {c.reference:.6g}, se {c.se:.3g}, n={c.n})")


def binomial_se(prob, n):
    prob = min(max(prob, 0.0), 1.0)
    return math.sqrt(prob * (1.0 - prob) / n) if n > 0 else math.inf


def _stack(traces, name):
    return np.stack([tr[name] for tr in traces])


def event_probability_audit(traces, delta, rounds=(5, 20, 100), p=ANTI_CONCENTRATION_P,
                            min_reps=200, k_se=3.0):
    """Replication-level check of the high-probability event statements.

    (a) fraction of runs in which ``E_mu`` ever fails vs ``delta pi^2/6``;
    (b) per-round ``E_theta`` failure frequency vs ``1/t^2``;
    (c) unsaturated-play frequency on rounds where ``E_mu`` holds vs ``p - 1/t^2``.
    Standard errors are binomial at the reference probability.
    """
    n = len(traces)
    if n < min_reps:
        raise ConfigError(f"audit needs at least {min_reps} replications, got {n}")
    report = AuditReport()
    e_mu = _stack(traces, "e_mu")
    ever_fail = float(np.mean(~np.all(e_mu, axis=1)))
    ref = min(delta * PI2_6, 1.0)
    se = binomial_se(ref, n)
    report.add(AuditCheck("e_mu_ever_fails", ever_fail, ref, se, ref + k_se * se,
                          ever_fail <= ref + k_se * se, n))
    e_theta = _stack(traces, "e_theta")
    sat = _stack(traces, "saturated_played")
    T = e_mu.shape[1]
    for t in rounds:
        if t > T:
            continue
        i = t - 1
        fail = float(np.mean(~e_theta[:, i]))
        ref = min(1.0 / t ** 2, 1.0)
        se = binomial_se(ref, n)
        report.add(AuditCheck("e_theta_fails", fail, ref, se, ref + k_se * se,
                              fail <= ref + k_se * se, n, t))
        held = e_mu[:, i]
        m = int(held.sum())
        floor = max(p - 1.0 / t ** 2, 0.0)
        if m == 0:
            continue
        freq = float(np.mean(~sat[held, i]))
        se = binomial_se(floor, m)
        report.add(AuditCheck("unsaturated_play", freq, floor, se, floor - k_se * se,
                              freq >= floor - k_se * se, m, t))
    return report


def martingale_drift_audit(traces, rounds=(10, 50, 200), k_se=3.0, report=None):
    """Across-replication mean of ``X_t`` must not exceed ``k_se`` standard errors above 0."""
    report = report or AuditReport()
    X = _stack(traces, "x_t")
    n = X.shape[0]
    for t in rounds:
        if t > X.shape[1]:
            continue
        col = X[:, t - 1]
        mean = float(col.mean())
        se = float(col.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
        report.add(AuditCheck("martingale_drift", mean, 0.0, se, k_se * se,
                              mean <= k_se * se, n, t))
    return report


def bound_domination_audit(final_regrets, envelope, delta, k_se=3.0, report=None):
    """Fraction of runs with ``R(T) <= envelope`` must reach ``1 - delta - k_se SE``."""
    report = report or AuditReport()
    r = np.asarray(final_regrets, dtype=np.float64)
    n = r.shape[0]
    frac = float(np.mean(r <= envelope))
    ref = 1.0 - delta
    se = binomial_se(ref, n)
    report.add(AuditCheck("envelope_dominates", frac, ref, se, ref - k_se * se,
                          frac >= ref - k_se * se, n))
    return report
