"""Common priors over correlated good/bad states.

Two economies share this module. The two-type economy is described by the
stationary good-state mass ``mu`` and the transition probability
``p = P(b | g)`` between the two types' states. The continuum economy uses a
stationary, reversible two-state continuous-time Markov chain indexed by type
distance, parameterized by ``mu`` and the bad-to-good rate ``lambda_b``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

# Slack used when comparing derived probabilities against range boundaries.
RANGE_TOL = 1e-12


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


@dataclass(frozen=True)
class TwoTypePrior:
    """Prior for the two-type economy.

    Attributes
    ----------
    mu : float
        Stationary probability of the good state, ``1/2 <= mu < 1``.
    p : float
        Transition probability ``P_gb``, ``0 <= p <= (1 - mu)/mu``.
    """

    mu: float
    p: float

    def __post_init__(self):
        _check_mu(self.mu)
        upper = (1.0 - self.mu) / self.mu
        if not (-RANGE_TOL <= self.p <= upper + RANGE_TOL):
            raise DomainError(
                f"p={self.p!r} outside admissible range [0, (1-mu)/mu={upper:.6g}]")

    def transition(self) -> "TransitionMatrix":
        p_bg = self.mu * self.p / (1.0 - self.mu)
        return TransitionMatrix(1.0 - self.p, self.p, p_bg, 1.0 - p_bg, mu=self.mu)


@dataclass(frozen=True)
class ChainParams:
    """Rates of the reversible two-state chain.

    Only ``lambda_b`` is stored; ``lambda_g`` follows from local balance
    ``mu * lambda_g = (1 - mu) * lambda_b``. ``lambda_b = 0`` freezes the chain
    (perfectly correlated states).
    """

    mu: float
    lambda_b: float

    def __post_init__(self):
        _check_mu(self.mu)
        if not (self.lambda_b >= 0.0 and math.isfinite(self.lambda_b)):
            raise DomainError(f"lambda_b must be finite and >= 0, got {self.lambda_b!r}")

    @property
    def lambda_g(self) -> float:
        return self.lambda_b * (1.0 - self.mu) / self.mu

    @property
    def total_rate(self) -> float:
        return self.lambda_g + self.lambda_b

    @property
    def rate_matrix(self) -> np.ndarray:
        lg, lb = self.lambda_g, self.lambda_b
        return np.array([[-lg, lg], [lb, -lb]])


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic 2x2 matrix ``P(omega_theta | omega_theta')``.

    Entries may be numpy arrays of a common shape, in which case the object
    represents a batch of matrices (one per type distance). ``mu`` records the
    stationary mass of the prior that generated the matrix.
    """

    p_gg: float
    p_gb: float
    p_bg: float
    p_bb: float
    mu: float

    def as_array(self) -> np.ndarray:
        """Return the matrix with shape ``(..., 2, 2)``."""
        top = np.stack(np.broadcast_arrays(self.p_gg, self.p_gb), axis=-1)
        bottom = np.stack(np.broadcast_arrays(self.p_bg, self.p_bb), axis=-1)
        return np.stack([top, bottom], axis=-2)

    @classmethod
    def from_array(cls, arr, mu: float) -> "TransitionMatrix":
        arr = np.asarray(arr, dtype=float)
        return cls(arr[..., 0, 0], arr[..., 0, 1], arr[..., 1, 0], arr[..., 1, 1], mu=mu)


def _check_mu(mu):
    if not (0.5 <= mu < 1.0):
        raise DomainError(f"mu must satisfy 1/2 <= mu < 1, got {mu!r}")


def _decay(params: ChainParams, delta):
    delta = np.asarray(delta, dtype=float)
    if np.any(delta < 0) or np.any(np.isnan(delta)):
        raise DomainError("type distance delta must be nonnegative")
    with np.errstate(over="ignore", invalid="ignore"):
        e = np.exp(-delta * params.total_rate)
    # 0 * inf when the chain is frozen and delta is infinite
    e = np.where(params.total_rate == 0.0, 1.0, e)
    return e if e.ndim else float(e)


def transition(params: ChainParams, delta) -> TransitionMatrix:
    """Closed-form ``P(delta) = exp(Q delta)`` of the two-state chain.

    ``delta`` may be a scalar (including ``math.inf`` for the stationary limit)
    or an array of distances.
    """
    e = _decay(params, delta)
    lg, lb = params.lambda_g, params.lambda_b
    k = lg + lb
    if k == 0.0:
        one = np.ones_like(np.asarray(e, dtype=float))
        zero = np.zeros_like(one)
        if one.ndim == 0:
            one, zero = 1.0, 0.0
        return TransitionMatrix(one, zero, zero, one, mu=params.mu)
    return TransitionMatrix(
        (lb + lg * e) / k,
        (lg - lg * e) / k,
        (lb - lb * e) / k,
        (lg + lb * e) / k,
        mu=params.mu,
    )


def transition_derivative(params: ChainParams, delta) -> np.ndarray:
    """``P'(delta) = Q exp(Q delta)``, shape ``(..., 2, 2)``."""
    e = np.asarray(_decay(params, delta), dtype=float)
    lg, lb = params.lambda_g, params.lambda_b
    return np.stack([
        np.stack([-lg * e, lg * e], axis=-1),
        np.stack([lb * e, -lb * e], axis=-1),
    ], axis=-2)


class DensityRegime(enum.Enum):
    SIGMA = "SIGMA"    # sigma_g >= sigma_b > xi
    MIDDLE = "MIDDLE"  # sigma_g >= xi >= sigma_b
    XI = "XI"          # xi > sigma_g >= sigma_b


class TwoTypeDensity(NamedTuple):
    sigma_g: float
    xi: float
    sigma_b: float
    regime: DensityRegime


def two_type_density(prior: TwoTypePrior) -> TwoTypeDensity:
    """Joint state masses of the two types and their ordering regime.

    ``sigma_g = P(g_l, g_h)``, ``xi = P(g_l, b_h) = P(b_l, g_h)`` and
    ``sigma_b = P(b_l, b_h)``. Equalities are classified as MIDDLE.
    """
    mu, p = prior.mu, prior.p
    sigma_g = mu - mu * p
    xi = mu * p
    sigma_b = (1.0 - mu) - mu * p
    if sigma_g >= xi - RANGE_TOL and xi >= sigma_b - RANGE_TOL:
        regime = DensityRegime.MIDDLE
    elif sigma_b > xi:
        regime = DensityRegime.SIGMA
    else:
        regime = DensityRegime.XI
    return TwoTypeDensity(sigma_g, xi, max(sigma_b, 0.0), regime)
