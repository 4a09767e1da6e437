"""Thompson Sampling for linear payoffs and the baseline policies.

The posterior is the Bayesian linear-regression posterior under a Gaussian
prior/likelihood: ``N(mu_hat, v^2 B^{-1})`` with ``B = I + sum b b^T`` and
``mu_hat = B^{-1} sum b r``. All policies share :class:`PosteriorState`.
"""
import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from tslab import kernels
from tslab.errors import ConfigError, DataError, NumericalDegeneracyError
from tslab.linalg import as_vector

#: Full re-factorization period for the maintained inverse and Cholesky factor.
REFRESH_EVERY = 512
#: Drift probe threshold; a larger residual forces an early refresh.
DRIFT_TOL = 1e-9


def log_floor(x):
    """``ln(max(x, e))``: every logarithm in the schedules is at least 1."""
    return math.log(max(x, math.e))


class PosteriorState:
    """Sufficient statistics of the posterior, updated in place by one run.

    Attributes: ``B`` (design matrix), ``B_inv`` (maintained by Sherman-Morrison),
    ``chol`` (lower Cholesky factor of ``B``, maintained by rank-one updates),
    ``f`` (sum of ``b * r``), ``mu_hat`` and the round counter ``t``.
    """

    def __init__(self, d):
        d = int(d)
        if d < 1:
            raise ConfigError(f"dimension must be >= 1, got {d}")
        self.d = d
        self.B = np.eye(d)
        self.B_inv = np.eye(d)
        self.chol = np.eye(d)
        self.f = np.zeros(d)
        self.mu_hat = np.zeros(d)
        self.t = 1
        self._since_refresh = 0
        self.refreshes = 0

    @property
    def n_updates(self):
        return self.t - 1

    def update(self, b, r):
        b = np.ascontiguousarray(b, dtype=np.float64)
        if b.shape != (self.d,):
            raise ConfigError(f"context has shape {b.shape}, expected ({self.d},)")
        r = float(r)
        if not math.isfinite(r):
            raise DataError(f"non-finite reward {r!r}")
        if b @ b > 1.0 + 1e-12:
            warnings.warn(f"context norm {math.sqrt(b @ b):.6g} exceeds 1", RuntimeWarning,
                          stacklevel=2)
        kernels.rank_one_update(self.B, b)
        kernels.sherman_morrison_update(self.B_inv, b)
        kernels.cholesky_rank_one_update(self.chol, b)
        self.f += b * r
        self.t += 1
        self._since_refresh += 1
        if (self._since_refresh >= REFRESH_EVERY
                or kernels.inverse_residual(self.B, self.B_inv, b) > DRIFT_TOL):
            self.refresh()
        self.mu_hat = kernels.cho_solve(self.chol, self.f)
        return self

    def refresh(self):
        """Recompute the Cholesky factor and inverse of ``B`` from scratch."""
        try:
            self.chol = kernels.cholesky_factor(self.B)
        except ValueError as exc:
            raise NumericalDegeneracyError(f"design matrix lost definiteness: {exc}") from exc
        eye = np.eye(self.d)
        inv = np.empty_like(self.B)
        for j in range(self.d):
            inv[:, j] = kernels.cho_solve(self.chol, eye[j])
        self.B_inv = np.ascontiguousarray(0.5 * (inv + inv.T))
        self._since_refresh = 0
        self.refreshes += 1

    def widths(self, X):
        """``s_i = sqrt(b_i^T B^{-1} b_i)`` for each row of ``X``."""
        return kernels.quad_widths(np.ascontiguousarray(X, dtype=np.float64), self.B_inv)

    def copy(self):
        other = PosteriorState.__new__(PosteriorState)
        other.__dict__.update({k: (v.copy() if isinstance(v, np.ndarray) else v)
                               for k, v in self.__dict__.items()})
        return other


def init_state(d):
    return PosteriorState(d)


def posterior_update(state, b, r):
    """Fold one observation into ``state`` (in place) and return it."""
    return state.update(b, r)


@dataclass(frozen=True)
class SamplerConfig:
    """Scale and confidence parameters for the sampler and the analysis constants.

    ``horizon`` set means the fixed-horizon schedule ``v = R sqrt(9 d ln(T/delta))``;
    ``None`` means the anytime schedule with ``t`` in place of ``T``. The
    ``*_const`` fields override the default schedules with fixed values.
    """

    R: float
    delta: float
    d: int
    horizon: Optional[int] = None
    v_const: Optional[float] = None
    ell_const: Optional[float] = None
    g_const: Optional[float] = None
    p_const: Optional[float] = None

    def __post_init__(self):
        if not self.R >= 0:
            raise ConfigError(f"R must be >= 0, got {self.R}")
        if not 0 < self.delta < 1:
            raise ConfigError(f"delta must lie in (0, 1), got {self.delta}")
        if int(self.d) < 1:
            raise ConfigError(f"d must be >= 1, got {self.d}")
        if self.horizon is not None and int(self.horizon) < 1:
            raise ConfigError(f"horizon must be >= 1, got {self.horizon}")

    @property
    def v_mode(self):
        return "anytime" if self.horizon is None else "fixed"


def v_schedule(cfg, t):
    """Posterior scale ``v_t = R sqrt(9 d ln(t / delta))`` (``T`` instead of ``t``
    in fixed-horizon mode), logs floored at 1."""
    if t < 1:
        raise ConfigError(f"round index must be >= 1, got {t}")
    if cfg.v_const is not None:
        return float(cfg.v_const)
    n = t if cfg.horizon is None else cfg.horizon
    return cfg.R * math.sqrt(9.0 * cfg.d * log_floor(n / cfg.delta))


def sample_parameter(state, v, rng):
    """Draw ``mu_tilde ~ N(mu_hat, v^2 B^{-1})``; ``v = 0`` returns ``mu_hat`` exactly."""
    z = rng.standard_normal(state.d)
    return kernels.mvn_draw(state.mu_hat, float(v), state.chol, z)


@dataclass(frozen=True)
class FiniteSlate:
    contexts: np.ndarray

    def __post_init__(self):
        X = np.ascontiguousarray(self.contexts, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] < 1:
            raise ConfigError(f"slate must be a non-empty (N, d) array, got shape {X.shape}")
        object.__setattr__(self, "contexts", X)

    @property
    def n_arms(self):
        return self.contexts.shape[0]

    @property
    def dim(self):
        return self.contexts.shape[1]


@dataclass(frozen=True)
class UnitBall:
    dim: int

    def __post_init__(self):
        if int(self.dim) < 1:
            raise ConfigError(f"ball dimension must be >= 1, got {self.dim}")

    n_arms = math.inf


def _contexts(slate):
    return slate.contexts if isinstance(slate, FiniteSlate) else np.asarray(slate, dtype=float)


def select_arm(slate, mu_tilde):
    """Index maximizing ``b_i^T mu_tilde``; ties go to the lowest index."""
    X = _contexts(slate)
    if X.shape[0] < 1:
        raise ConfigError("empty slate")
    return int(np.argmax(X @ mu_tilde))


def select_continuous(ball, mu_tilde):
    """Maximizer of ``b^T mu_tilde`` over the unit ball."""
    mu_tilde = as_vector(mu_tilde, "mu_tilde")
    if ball.dim != mu_tilde.shape[0]:
        raise ConfigError(f"ball dimension {ball.dim} != parameter length {mu_tilde.shape[0]}")
    norm = float(np.linalg.norm(mu_tilde))
    if norm == 0.0:
        e = np.zeros(ball.dim)
        e[0] = 1.0
        return e
    return mu_tilde / norm


def lin_ucb_select(state, slate, alpha):
    X = _contexts(slate)
    scores = X @ state.mu_hat
    if alpha:
        scores = scores + alpha * state.widths(X)
    return int(np.argmax(scores))


def uniform_select(slate, rng):
    n = _contexts(slate).shape[0] if not isinstance(slate, int) else slate
    return int(rng.integers(n))


# --- policy objects driven by the harness -------------------------------------

class Policy:
    """Per-round decision rule.

    ``decide`` returns ``(choice, mu_tilde)``: the arm index (or a vector for a
    continuous arm set) and the parameter used for scoring. Policies that do
    not sample report ``mu_hat`` as their parameter.
    """

    name = "policy"
    samples = False

    def scale(self, cfg, t):
        return 0.0

    def decide(self, state, arms, cfg, t, rng):
        raise NotImplementedError


class ThompsonSampling(Policy):
    name = "ts"
    samples = True

    def scale(self, cfg, t):
        return v_schedule(cfg, t)

    def decide(self, state, arms, cfg, t, rng):
        mu_tilde = sample_parameter(state, self.scale(cfg, t), rng)
        if isinstance(arms, UnitBall):
            return select_continuous(arms, mu_tilde), mu_tilde
        return select_arm(arms, mu_tilde), mu_tilde


class Greedy(Policy):
    name = "greedy"

    def decide(self, state, arms, cfg, t, rng):
        mu = state.mu_hat
        if isinstance(arms, UnitBall):
            return select_continuous(arms, mu), mu
        return select_arm(arms, mu), mu


class LinUCB(Policy):
    name = "linucb"

    def __init__(self, alpha=1.0):
        if alpha < 0:
            raise ConfigError(f"alpha must be >= 0, got {alpha}")
        self.alpha = float(alpha)

    def decide(self, state, arms, cfg, t, rng):
        mu = state.mu_hat
        if isinstance(arms, UnitBall):
            # max b.mu + alpha ||b||_{B^-1} over the ball has no closed form; use the mean direction
            return select_continuous(arms, mu), mu
        return lin_ucb_select(state, arms, self.alpha), mu


class UniformRandom(Policy):
    name = "uniform"

    def decide(self, state, arms, cfg, t, rng):
        if isinstance(arms, UnitBall):
            g = rng.standard_normal(arms.dim)
            return g / np.linalg.norm(g), state.mu_hat
        return uniform_select(arms, rng), state.mu_hat


POLICIES = {
    "ts": ThompsonSampling,
    "greedy": Greedy,
    "linucb": LinUCB,
    "uniform": UniformRandom,
}


def make_policy(spec):
    """Build a policy from ``{"id": ..., **params}`` or a bare id string."""
    if isinstance(spec, str):
        spec = {"id": spec}
    spec = dict(spec)
    pid = spec.pop("id", None)
    if pid not in POLICIES:
        raise ConfigError(f"unknown policy id {pid!r}; choose from {sorted(POLICIES)}")
    try:
        return POLICIES[pid](**spec)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for policy {pid!r}: {exc}") from exc
