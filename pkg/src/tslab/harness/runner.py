"""Seeded execution of single runs and replications."""
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from tslab import kernels
from tslab.diagnostics import (BoundReport, Trace, analysis_constants, invariant_report,
                               s_sum_cap, theorem_bound, theta_multiplier)
from tslab.environment import History, draw_reward, generate_contexts, oracle
from tslab.errors import ConfigError, InvariantFailure
from tslab.policy import PosteriorState, UnitBall
from tslab.rng import replication_streams


@dataclass
class RunResult:
    config_digest: str
    rep: int
    seed: dict
    trace: Trace
    bound: BoundReport
    invariants: dict
    wall_clock: float
    backend: str

    @property
    def final_regret(self):
        return float(self.trace["cum_regret"][-1])


def run_experiment(cfg, rep=0):
    """Run one replication of ``cfg`` for ``T`` rounds and return its full trace."""
    start = time.perf_counter()
    streams = replication_streams(cfg.seed, rep)
    env = cfg.environment()
    adversary = cfg.make_adversary()
    policy = cfg.make_policy()
    scfg = cfg.sampler_config()
    d, T = cfg.d, cfg.T
    mu = env.mu_star
    n_arms = adversary.n_arms(d)

    state = PosteriorState(d)
    design = state.B.view()
    design.flags.writeable = False
    history = History(design=design)
    trace = Trace(T, cfg.thin)
    col = trace.columns
    check_eigen = cfg.check_eigen
    lam_before = np.ones(d)
    cum = 0.0
    y = 0.0

    for i in range(T):
        t = i + 1
        spectrum = None
        if adversary.needs_spectrum and t > 1:
            spectrum = np.linalg.eigh(state.B)
        arms = generate_contexts(adversary, history, t, streams["contexts"], spectrum)
        c = analysis_constants(scfg, t, n_arms)
        radius = theta_multiplier(d, t, n_arms) * c.v
        choice, mu_tilde = policy.decide(state, arms, scfg, t, streams["sampler"])
        cf_noise = float(env.noise.draw(streams["counterfactual"]))

        if isinstance(arms, UnitBall):
            b = np.ascontiguousarray(choice, dtype=np.float64)
            b_star, gap_fn = oracle(arms, mu)
            s_chosen = math.sqrt(max(float(b @ state.B_inv @ b), 0.0))
            diff = state.mu_hat - mu
            e_mu = math.sqrt(max(float(diff @ state.B @ diff), 0.0)) <= c.ell
            dev = mu_tilde - state.mu_hat
            e_theta = math.sqrt(max(float(dev @ state.B @ dev), 0.0)) <= radius
            gap = max(gap_fn(b), 0.0)
            arm, a_star = -1, -1
            played_optimal = gap == 0.0
            sat_played = gap > c.g * s_chosen
            opt_sat = False
            n_sat = int(sat_played)
            best_mean = float(b_star @ mu)
            gaps = widths = theta = sat = None
            if cfg.assert_unit_gaps and gap > 1.0:
                raise InvariantFailure(f"gap {gap:.6g} > 1 at round {t}")
        else:
            X = arms.contexts
            widths = state.widths(X)
            means_hat = X @ state.mu_hat
            means_true = X @ mu
            a_star, gaps = oracle(arms, mu)
            e_mu = bool(np.all(np.abs(means_hat - means_true) <= c.ell * widths))
            theta = X @ mu_tilde
            e_theta = bool(np.all(np.abs(theta - means_hat) <= radius * widths))
            sat = gaps > c.g * widths
            arm = int(choice)
            b = X[arm]
            s_chosen = float(widths[arm])
            gap = float(gaps[arm])
            played_optimal = arm == a_star
            sat_played = bool(sat[arm])
            opt_sat = bool(sat[a_star])
            n_sat = int(sat.sum())
            best_mean = float(means_true[a_star])
            if cfg.assert_unit_gaps and gaps.max() > 1.0:
                raise InvariantFailure(f"gap {gaps.max():.6g} > 1 at round {t}")

        reward = draw_reward(b, env, streams["noise"])
        best_reward = reward if played_optimal else best_mean + cf_noise
        cum += gap
        x = (gap if e_mu else 0.0) - 3.0 * c.g / c.p * s_chosen - 2.0 * c.g / (c.p * t * t)
        y += x

        col["t"][i] = t
        col["arm"][i] = arm
        col["opt_arm"][i] = a_star
        col["gap_regret"][i] = gap
        col["realized_regret"][i] = best_reward - reward
        col["cum_regret"][i] = cum
        col["s_chosen"][i] = s_chosen
        col["e_mu"][i] = e_mu
        col["e_theta"][i] = e_theta
        col["saturated_played"][i] = sat_played
        col["x_t"][i] = x
        col["y_t"][i] = y
        col["reward"][i] = reward
        col["ell"][i] = c.ell
        col["v"][i] = c.v
        col["g"][i] = c.g
        col["n_saturated"][i] = n_sat
        col["opt_saturated"][i] = opt_sat
        col["x_within_cap"][i] = abs(x) <= c.martingale_cap
        if widths is not None and trace.keep_vectors(t):
            trace.vectors[t] = {"theta": theta, "widths": widths,
                                "saturated": np.flatnonzero(sat)}

        history.played.append((b, reward))
        state.update(b, reward)
        if check_eigen:
            lam_after = np.linalg.eigvalsh(state.B)
            col["eig_lhs"][i] = s_chosen * s_chosen
            col["eig_rhs"][i] = 10.0 * float(np.sum((lam_after - lam_before) / lam_before))
            lam_before = lam_after

    bound = BoundReport(
        T=T, d=d,
        s_sum=float(col["s_chosen"].sum()),
        s_sum_cap=s_sum_cap(d, T),
        theorem_envelope=theorem_bound(scfg, T, n_arms),
        cumulative_regret=cum,
        cumulative_realized_regret=float(col["realized_regret"].sum()),
    )
    return RunResult(
        config_digest=cfg.digest(),
        rep=int(rep),
        seed={"master": int(cfg.seed), "spawn_key": [int(rep)]},
        trace=trace,
        bound=bound,
        invariants=invariant_report(trace, d),
        wall_clock=time.perf_counter() - start,
        backend=kernels.BACKEND,
    )


def _run_one(args):
    cfg, rep = args
    return run_experiment(cfg, rep)


def replicate(cfg, k=None, workers=None, reps=None):
    """Run replications ``reps`` (default ``range(k)``) of ``cfg``.

    Replication ``i`` uses the stream keyed by (seed, i), so its trace does not
    depend on which other replications run or on the worker count.
    """
    if reps is None:
        k = cfg.reps if k is None else int(k)
        if k < 1:
            raise ConfigError(f"replication count must be >= 1, got {k}")
        reps = range(k)
    reps = list(reps)
    workers = cfg.workers if workers is None else int(workers)
    if workers <= 1 or len(reps) <= 1:
        return [run_experiment(cfg, r) for r in reps]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_one, [(cfg, r) for r in reps]))
