"""Context adversaries, sub-Gaussian reward noise and the omniscient oracle."""
import math
from dataclasses import dataclass, field

import numpy as np

from tslab.errors import ConfigError
from tslab.policy import FiniteSlate, UnitBall

NORM_TOL = 1e-12


@dataclass(frozen=True)
class NoiseKind:
    """Zero-mean reward noise that is R-sub-Gaussian by construction.

    ``none`` is identically zero; ``uniform`` and ``rademacher`` are bounded
    in [-R, R]; ``gaussian`` has standard deviation R.
    """

    kind: str = "gaussian"
    R: float = 1.0

    KINDS = ("none", "uniform", "gaussian", "rademacher")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigError(f"unknown noise kind {self.kind!r}; choose from {self.KINDS}")
        if not self.R >= 0:
            raise ConfigError(f"noise scale must be >= 0, got {self.R}")

    @property
    def subgaussian_scale(self):
        return 0.0 if self.kind == "none" else float(self.R)

    def draw(self, rng, size=None):
        if self.kind == "none":
            return 0.0 if size is None else np.zeros(size)
        if self.kind == "gaussian":
            return self.R * rng.standard_normal(size)
        if self.kind == "uniform":
            return rng.uniform(-self.R, self.R, size)
        signs = rng.integers(0, 2, size) * 2 - 1
        return self.R * signs if size is not None else float(self.R * signs)


@dataclass(frozen=True)
class LinearEnvironment:
    mu_star: np.ndarray
    noise: NoiseKind = field(default_factory=NoiseKind)

    def __post_init__(self):
        mu = np.ascontiguousarray(self.mu_star, dtype=np.float64)
        if mu.ndim != 1:
            raise ConfigError("mu_star must be a vector")
        if np.linalg.norm(mu) > 1.0 + NORM_TOL:
            raise ConfigError(f"||mu_star|| = {np.linalg.norm(mu):.6g} exceeds 1")
        object.__setattr__(self, "mu_star", mu)

    @property
    def R(self):
        return self.noise.subgaussian_scale

    @property
    def dim(self):
        return self.mu_star.shape[0]


def draw_reward(b, env, rng):
    """``b^T mu + eta`` with ``eta`` drawn from the environment's noise."""
    return float(np.dot(b, env.mu_star)) + float(env.noise.draw(rng))


def oracle(contexts, mu_star):
    """Optimal arm and gap vector for a finite slate.

    For a :class:`UnitBall` returns ``(b_star, gap_fn)`` where ``b_star`` is
    the unit-norm maximizer and ``gap_fn(b) = max - b^T mu``.
    """
    mu_star = np.asarray(mu_star, dtype=np.float64)
    if isinstance(contexts, UnitBall):
        norm = float(np.linalg.norm(mu_star))
        if norm == 0.0:
            b_star = np.zeros(contexts.dim)
            b_star[0] = 1.0
        else:
            b_star = mu_star / norm
        return b_star, (lambda b: norm - float(np.dot(b, mu_star)))
    X = contexts.contexts if isinstance(contexts, FiniteSlate) else np.asarray(contexts)
    means = X @ mu_star
    a_star = int(np.argmax(means))
    gaps = means[a_star] - means
    gaps[a_star] = 0.0
    np.maximum(gaps, 0.0, out=gaps)
    return a_star, gaps


# --- adversaries --------------------------------------------------------------

@dataclass
class History:
    """What an adversary may see before round ``t``: the design matrix ``B(t)``
    and the played (context, reward) pairs of rounds ``1..t-1``. Current-round
    noise never appears here."""

    design: np.ndarray
    played: list = field(default_factory=list)

    @property
    def rounds(self):
        return len(self.played)


def _unit_rows(G):
    norms = np.linalg.norm(G, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return G / norms


class Adversary:
    name = "adversary"
    needs_spectrum = False

    def n_arms(self, d):
        raise NotImplementedError

    def contexts(self, history, t, rng, spectrum=None):
        raise NotImplementedError


class FixedSlateAdversary(Adversary):
    name = "fixed"

    def __init__(self, contexts):
        X = np.ascontiguousarray(contexts, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] < 1:
            raise ConfigError(f"fixed slate must be a non-empty (N, d) array, got {X.shape}")
        if np.any(np.linalg.norm(X, axis=1) > 1.0 + NORM_TOL):
            raise ConfigError("fixed slate has a context with norm > 1")
        self.slate = FiniteSlate(X)

    def n_arms(self, d):
        return self.slate.n_arms

    def contexts(self, history, t, rng, spectrum=None):
        return self.slate


class IidSphere(Adversary):
    """``N`` fresh uniform unit vectors every round (the benign case)."""

    name = "sphere-iid"

    def __init__(self, N, d):
        if N < 1 or d < 1:
            raise ConfigError(f"sphere-iid needs N, d >= 1, got N={N}, d={d}")
        self.N, self.d = int(N), int(d)

    def n_arms(self, d):
        return self.N

    def contexts(self, history, t, rng, spectrum=None):
        return FiniteSlate(_unit_rows(rng.standard_normal((self.N, self.d))))


class RotatingBasis(Adversary):
    """The standard basis rotated by ``omega * t`` in the plane of the first two axes."""

    name = "rotating-basis"

    def __init__(self, d, omega=0.1):
        if d < 1:
            raise ConfigError(f"rotating-basis needs d >= 1, got {d}")
        self.d, self.omega = int(d), float(omega)

    def n_arms(self, d):
        return self.d

    def contexts(self, history, t, rng, spectrum=None):
        Q = np.eye(self.d)
        if self.d >= 2:
            c, s = math.cos(self.omega * t), math.sin(self.omega * t)
            Q[0, 0], Q[0, 1], Q[1, 0], Q[1, 1] = c, -s, s, c
        return FiniteSlate(Q.T.copy())


class OrthogonalDrift(Adversary):
    """History-adaptive: contexts cluster around the least-explored eigendirection
    of ``B(t)``, with both signs and a small isotropic jitter. Round 1 (no
    history) is an ordinary sphere draw."""

    name = "orthogonal-drift"
    needs_spectrum = True

    def __init__(self, N, d, jitter=0.3):
        if N < 1 or d < 1:
            raise ConfigError(f"orthogonal-drift needs N, d >= 1, got N={N}, d={d}")
        self.N, self.d, self.jitter = int(N), int(d), float(jitter)

    def n_arms(self, d):
        return self.N

    def contexts(self, history, t, rng, spectrum=None):
        G = rng.standard_normal((self.N, self.d))
        if history is None or history.rounds == 0:
            return FiniteSlate(_unit_rows(G))
        if spectrum is None:
            spectrum = np.linalg.eigh(history.design)
        u = spectrum[1][:, 0]
        signs = np.where(np.arange(self.N) % 2 == 0, 1.0, -1.0)[:, None]
        return FiniteSlate(_unit_rows(signs * u[None, :] + self.jitter * G / math.sqrt(self.d)))


class UnitBallArms(Adversary):
    name = "unit-ball"

    def __init__(self, d):
        self.ball = UnitBall(int(d))

    def n_arms(self, d):
        return math.inf

    def contexts(self, history, t, rng, spectrum=None):
        return self.ball


def greedy_trap_slate(d):
    """Two arms ``e1`` (decent, scored first) and ``e2`` (better, never tried by greedy)."""
    if d < 2:
        raise ConfigError("greedy-trap needs d >= 2")
    X = np.zeros((2, d))
    X[0, 0] = 1.0
    X[1, 1] = 1.0
    return X


def greedy_trap_mu(d):
    mu = np.zeros(d)
    mu[0], mu[1] = 0.6, 0.8
    return mu


ADVERSARIES = ("fixed", "sphere-iid", "rotating-basis", "orthogonal-drift", "greedy-trap",
               "unit-ball")


def make_adversary(spec, d, N=None):
    """Build an adversary from ``{"id": ..., **params}``."""
    if isinstance(spec, str):
        spec = {"id": spec}
    spec = dict(spec)
    aid = spec.pop("id", None)
    try:
        if aid == "fixed":
            return FixedSlateAdversary(spec.pop("contexts"), **spec)
        if aid == "sphere-iid":
            return IidSphere(spec.pop("N", N), d, **spec)
        if aid == "rotating-basis":
            return RotatingBasis(d, **spec)
        if aid == "orthogonal-drift":
            return OrthogonalDrift(spec.pop("N", N), d, **spec)
        if aid == "greedy-trap":
            return FixedSlateAdversary(greedy_trap_slate(d), **spec)
        if aid == "unit-ball":
            return UnitBallArms(d, **spec)
    except (TypeError, KeyError) as exc:
        raise ConfigError(f"bad parameters for adversary {aid!r}: {exc}") from exc
    raise ConfigError(f"unknown adversary id {aid!r}; choose from {ADVERSARIES}")


def generate_contexts(adv, history, t, rng, spectrum=None):
    """One round's arm set; every emitted context has norm at most 1."""
    arms = adv.contexts(history, t, rng, spectrum)
    if isinstance(arms, FiniteSlate):
        norms = np.linalg.norm(arms.contexts, axis=1)
        assert np.all(norms <= 1.0 + NORM_TOL), f"adversary {adv.name} emitted norm {norms.max()}"
    return arms
