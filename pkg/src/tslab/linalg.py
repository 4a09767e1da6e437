"""Dense positive-definite linear algebra for small dimensions, plus the
Gaussian tail-bound helpers used by the diagnostics.

Functions here return new arrays; the in-place versions live in
``tslab.kernels`` and are used by :class:`tslab.policy.PosteriorState`.
"""
import math
from dataclasses import dataclass

import numpy as np

from tslab import kernels
from tslab.errors import ConfigError, DomainError, NumericalDegeneracyError

SQRT_PI = math.sqrt(math.pi)

#: The anti-concentration constant 1/(4 e sqrt(pi)).
ANTI_CONCENTRATION_P = 1.0 / (4.0 * math.e * SQRT_PI)


def as_vector(x, name="x"):
    v = np.ascontiguousarray(x, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] < 1:
        raise ConfigError(f"{name} must be a non-empty 1-d vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ConfigError(f"{name} has non-finite entries")
    return v


def as_square(A, name="B"):
    M = np.ascontiguousarray(A, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise ConfigError(f"{name} must be a square matrix, got shape {M.shape}")
    return M


def _check_dims(M, x):
    if M.shape[0] != x.shape[0]:
        raise ConfigError(f"dimension mismatch: matrix is {M.shape[0]}x{M.shape[0]}, "
                          f"vector has length {x.shape[0]}")


def rank_one_update(B, x):
    """Return ``B + x x^T``."""
    B = as_square(B)
    x = as_vector(x)
    _check_dims(B, x)
    out = B.copy()
    kernels.rank_one_update(out, x)
    return out


def sherman_morrison_inverse(B_inv, x):
    """Given ``B^{-1}``, return ``(B + x x^T)^{-1}`` in O(d^2)."""
    B_inv = as_square(B_inv, "B_inv")
    x = as_vector(x)
    _check_dims(B_inv, x)
    out = B_inv.copy()
    kernels.sherman_morrison_update(out, x)
    return out


def cholesky(B):
    """Lower-triangular ``L`` with ``L @ L.T == B``.

    Raises NumericalDegeneracyError if ``B`` is not positive definite.
    """
    B = as_square(B)
    try:
        return kernels.cholesky_factor(B)
    except ValueError as exc:
        raise NumericalDegeneracyError(f"matrix is not positive definite: {exc}") from exc


def sample_mvn(mean, scale, chol_precision, rng):
    """Draw from ``N(mean, scale^2 B^{-1})`` where ``chol_precision`` factors ``B``.

    The covariance factor is applied by a triangular solve against ``L^T``,
    so ``B^{-1}`` is never formed. One vector of standard normals is consumed
    even when ``scale == 0`` to keep the stream aligned.
    """
    mean = as_vector(mean, "mean")
    L = as_square(chol_precision, "chol_precision")
    _check_dims(L, mean)
    if scale < 0:
        raise ConfigError(f"scale must be non-negative, got {scale}")
    z = rng.standard_normal(mean.shape[0])
    return kernels.mvn_draw(mean, float(scale), L, z)


def mahalanobis_width(b, B_inv):
    """``sqrt(b^T B^{-1} b)``."""
    b = as_vector(b, "b")
    B_inv = as_square(B_inv, "B_inv")
    _check_dims(B_inv, b)
    q = float(b @ B_inv @ b)
    return math.sqrt(q) if q > 0.0 else 0.0


def eigen_spectrum(B):
    """Eigenvalues of the symmetric matrix ``B`` in descending order."""
    B = as_square(B)
    try:
        lam = np.linalg.eigvalsh(B)
    except np.linalg.LinAlgError as exc:
        raise NumericalDegeneracyError(f"eigenvalue solver failed: {exc}") from exc
    return lam[::-1].copy()


@dataclass(frozen=True)
class TailBoundPair:
    lower: float
    upper: float

    def __post_init__(self):
        if not (0.0 <= self.lower <= self.upper <= 1.0):
            raise DomainError(f"invalid tail bracket [{self.lower}, {self.upper}]")

    def contains(self, value):
        return self.lower <= value <= self.upper


def two_sided_tail(z):
    """Exact ``P(|Z| > z)`` for a standard normal ``Z``."""
    return math.erfc(z / math.sqrt(2.0))


def one_sided_tail(z):
    """Exact ``P(Z > z)`` for a standard normal ``Z``."""
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def gaussian_tail_sandwich(z, variant="exact"):
    """Bracket ``P(|Z - m| > z sigma)``.

    ``variant="exact"`` uses the continued-fraction sandwich for erfc
    (Abramowitz & Stegun 7.1.13) and is valid for every ``z >= 0``.
    ``variant="simplified"`` returns the pair
    ``exp(-z^2/2)/(2 sqrt(pi) z)``, ``exp(-z^2/2)/(sqrt(pi) z)`` for ``z >= 1``;
    its upper end undershoots the true tail for moderate ``z`` (e.g. ``z=2``)
    and is kept only for comparison.
    """
    z = float(z)
    if not z >= 0.0:
        raise DomainError(f"z must be >= 0, got {z}")
    g = math.exp(-0.5 * z * z)
    if variant == "exact":
        x = z / math.sqrt(2.0)
        c = 2.0 / SQRT_PI * g
        lower = c / (x + math.sqrt(x * x + 2.0))
        upper = c / (x + math.sqrt(x * x + 4.0 / math.pi))
        upper = min(upper, 1.0)
        return TailBoundPair(min(lower, upper), upper)
    if variant == "simplified":
        if z < 1.0:
            raise DomainError(f"simplified tail bounds need z >= 1, got {z}")
        return TailBoundPair(g / (2.0 * SQRT_PI * z), min(g / (SQRT_PI * z), 1.0))
    raise ConfigError(f"unknown tail-bound variant {variant!r}")


def anti_concentration_floor(z):
    """Lower bound ``exp(-z^2) / (4 sqrt(pi))`` on ``P(Z - m > z sigma)``, z in [0, 1]."""
    z = float(z)
    if not 0.0 <= z <= 1.0:
        raise DomainError(f"anti-concentration floor is only stated for z in [0, 1], got {z}")
    return math.exp(-z * z) / (4.0 * SQRT_PI)
