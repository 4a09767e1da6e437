"""Regret-growth studies over grids of dimension (or arm count) and horizon."""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from tslab.diagnostics import theorem_bound
from tslab.errors import ConfigError
from tslab.harness.runner import replicate


@dataclass
class PowerFit:
    beta: float
    intercept: float
    ci_low: float
    ci_high: float
    n_points: int


def fit_power_law(T, R, level=0.95):
    """Least-squares fit of ``log R = log c + beta log T`` with a t-based interval."""
    T = np.asarray(T, dtype=np.float64)
    R = np.asarray(R, dtype=np.float64)
    keep = (T > 0) & (R > 0)
    T, R = T[keep], R[keep]
    if T.shape[0] < 2:
        return PowerFit(math.nan, math.nan, math.nan, math.nan, int(T.shape[0]))
    res = stats.linregress(np.log(T), np.log(R))
    dof = T.shape[0] - 2
    if dof > 0:
        half = stats.t.ppf(0.5 + level / 2, dof) * res.stderr
    else:
        half = math.inf
    return PowerFit(float(res.slope), float(res.intercept), float(res.slope - half),
                    float(res.slope + half), int(T.shape[0]))


@dataclass
class ScalingCell:
    key: str
    value: int
    T: int
    mean: float
    median: float
    std: float
    se: float
    envelope: float
    envelope_fraction: float
    regrets: list = field(default_factory=list)


@dataclass
class ScalingReport:
    key: str
    cells: list
    fits: dict
    upper_fits: dict
    doubling_ratios: dict

    def cell(self, value, T):
        for c in self.cells:
            if c.value == value and c.T == T:
                return c
        raise KeyError((value, T))

    def as_dict(self):
        return {
            "key": self.key,
            "cells": [{k: v for k, v in c.__dict__.items() if k != "regrets"} for c in self.cells],
            "fits": {str(k): v.__dict__ for k, v in self.fits.items()},
            "upper_fits": {str(k): v.__dict__ for k, v in self.upper_fits.items()},
            "doubling_ratios": {str(k): v for k, v in self.doubling_ratios.items()},
        }


def _upper_half_fit(curves, T):
    """Fit the exponent of the mean cumulative-regret curve over ``[T/2, T]``."""
    mean_curve = np.mean(curves, axis=0)
    ts = np.unique(np.geomspace(max(T // 2, 1), T, num=min(32, T)).astype(np.int64))
    return fit_power_law(ts, mean_curve[ts - 1])


def scaling_study(base, T_grid, k, d_grid=None, n_grid=None, workers=None):
    """Mean ``R(T)`` per (d or N, T) cell over ``k`` replications and fitted exponents.

    With the anytime schedule one run to ``max(T_grid)`` per replication
    serves every horizon, since nothing in a run depends on ``T``.
    """
    if not T_grid:
        raise ConfigError("T grid must be nonempty")
    if d_grid is not None and n_grid is not None:
        raise ConfigError("vary either d or N, not both")
    key = "N" if n_grid is not None else "d"
    values = list(n_grid if n_grid is not None else (d_grid or [base.d]))
    T_grid = sorted(int(T) for T in T_grid)
    cells, fits, upper, ratios = [], {}, {}, {}
    for value in values:
        changes = {key: int(value)}
        if key == "d" and base.mu is not None and len(base.mu) != value:
            changes["mu"] = None
        by_T = {}
        curves = None
        if base.v_mode == "anytime":
            cfg = base.replace(T=T_grid[-1], **changes)
            results = replicate(cfg, k, workers=workers)
            curves = np.stack([r.trace["cum_regret"] for r in results])
            for T in T_grid:
                by_T[T] = (cfg, curves[:, T - 1])
        else:
            for T in T_grid:
                cfg = base.replace(T=T, **changes)
                results = replicate(cfg, k, workers=workers)
                by_T[T] = (cfg, np.array([r.final_regret for r in results]))
        means = []
        for T in T_grid:
            cfg, regrets = by_T[T]
            n_arms = cfg.make_adversary().n_arms(cfg.d)
            env = theorem_bound(cfg.sampler_config(), T, n_arms)
            sd = float(regrets.std(ddof=1)) if regrets.shape[0] > 1 else 0.0
            cells.append(ScalingCell(
                key=key, value=int(value), T=T,
                mean=float(regrets.mean()), median=float(np.median(regrets)), std=sd,
                se=sd / math.sqrt(regrets.shape[0]),
                envelope=env, envelope_fraction=float(np.mean(regrets <= env)),
                regrets=regrets.tolist(),
            ))
            means.append(float(regrets.mean()))
        fits[int(value)] = fit_power_law(T_grid, means)
        if curves is not None:
            upper[int(value)] = _upper_half_fit(curves, T_grid[-1])
        ratios[int(value)] = {
            f"{T}->{2 * T}": means[T_grid.index(2 * T)] / means[i]
            for i, T in enumerate(T_grid) if 2 * T in T_grid and means[i] > 0
        }
    return ScalingReport(key=key, cells=cells, fits=fits, upper_fits=upper,
                         doubling_ratios=ratios)
