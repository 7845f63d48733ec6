"""Blackwell experiments and what they are worth to each buyer type.

An experiment is stored as the pair ``(pi_g, pi_b)``: the probability of the
good signal in the good state and of the bad signal in the bad state. Values
are expressed net of the reservation utility ``mu * u``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from .prior import ChainParams, DomainError, TransitionMatrix, transition

# |mu*pi_g + (1-mu)*pi_b - mu| at or below this counts as uninformative.
RSP_TOL = 1e-12
# Joint masses closer than this are a tie, resolved to the default action.
TIE_TOL = 1e-15


class NotResponsiveError(ValueError):
    """The experiment violates the responsiveness constraint for this prior."""


@dataclass(frozen=True)
class Experiment:
    pi_g: float
    pi_b: float

    def __post_init__(self):
        for name in ("pi_g", "pi_b"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise DomainError(f"{name} must lie in [0, 1], got {v!r}")

    def accuracy(self, mu: float) -> float:
        """Probability that a responsive owner takes the right action."""
        return mu * self.pi_g + (1.0 - mu) * self.pi_b

    def is_responsive(self, mu: float) -> bool:
        return self.accuracy(mu) >= mu - RSP_TOL

    def is_informative(self, mu: float) -> bool:
        return self.accuracy(mu) - mu > RSP_TOL

    def to_dict(self) -> dict:
        return {"pi_g": float(self.pi_g), "pi_b": float(self.pi_b)}


FULLY_INFORMATIVE = Experiment(1.0, 1.0)


@dataclass(frozen=True)
class MenuItem:
    experiment: Experiment
    price: float

    def __post_init__(self):
        if not self.price >= 0.0:
            raise DomainError(f"price must be nonnegative, got {self.price!r}")

    def to_dict(self) -> dict:
        return {**self.experiment.to_dict(), "price": float(self.price)}

    @classmethod
    def from_dict(cls, d: dict) -> "MenuItem":
        return cls(Experiment(float(d["pi_g"]), float(d["pi_b"])), float(d["price"]))


class GammaTerms(NamedTuple):
    """Joint masses (signal, own state) when buying another type's product.

    ``gamma_gb`` is the mass of the good signal together with the bad own
    state, and so on.
    """

    gamma_gg: float
    gamma_gb: float
    gamma_bg: float
    gamma_bb: float


def reservation_utility(mu, u):
    return mu * u


def own_value(exp: Experiment, mu: float, u):
    """Value of a responsive experiment to the type it is designed for."""
    if not exp.is_responsive(mu):
        raise NotResponsiveError(
            f"experiment {exp} is not responsive for mu={mu}: "
            f"{exp.accuracy(mu):.6g} < {mu:.6g}")
    return (exp.accuracy(mu) - mu) * u


def gamma_terms(pi_g, pi_b, mu: float, trans: TransitionMatrix) -> GammaTerms:
    """Signal/state joint masses for a buyer at the far end of ``trans``.

    ``pi_g`` and ``pi_b`` may be arrays broadcastable against the entries of
    ``trans``; an :class:`Experiment` may be passed as ``pi_g`` with
    ``pi_b=None``.
    """
    if isinstance(pi_g, Experiment):
        pi_g, pi_b = pi_g.pi_g, pi_g.pi_b
    if abs(trans.mu - mu) > 1e-12:
        raise DomainError(f"transition generated for mu={trans.mu}, used with mu={mu}")
    good_sg = mu * pi_g              # seller state good, signal good
    bad_sg = (1.0 - mu) * (1.0 - pi_b)
    good_sb = mu * (1.0 - pi_g)
    bad_sb = (1.0 - mu) * pi_b
    return GammaTerms(
        good_sg * trans.p_gg + bad_sg * trans.p_bg,
        good_sg * trans.p_gb + bad_sg * trans.p_bb,
        good_sb * trans.p_gg + bad_sb * trans.p_bg,
        good_sb * trans.p_gb + bad_sb * trans.p_bb,
    )


def cross_value(exp, mu: float, u, trans: TransitionMatrix, pi_b=None):
    """Value of another type's experiment, with full best responses.

    The buyer picks the better action after each signal; on ties the default
    action ``a_g`` is taken, which leaves the value unchanged.
    """
    g = gamma_terms(exp, pi_b, mu, trans)
    return (np.maximum(g.gamma_gg, g.gamma_gb) + np.maximum(g.gamma_bg, g.gamma_bb) - mu) * u


def best_actions(exp, mu: float, trans: TransitionMatrix, pi_b=None):
    """Best action after (good signal, bad signal); ``True`` means ``a_g``."""
    g = gamma_terms(exp, pi_b, mu, trans)
    return g.gamma_gg >= g.gamma_gb - TIE_TOL, g.gamma_bg >= g.gamma_bb - TIE_TOL


def posterior(exp: Experiment, mu: float, signal: str) -> float:
    """Posterior probability of the good state after ``signal``."""
    if signal in ("good", "g"):
        num = mu * exp.pi_g
        den = num + (1.0 - mu) * (1.0 - exp.pi_b)
    elif signal in ("bad", "b"):
        num = mu * (1.0 - exp.pi_g)
        den = num + (1.0 - mu) * exp.pi_b
    else:
        raise ValueError(f"signal must be 'good' or 'bad', got {signal!r}")
    if den <= 0.0:
        raise DomainError(f"signal {signal!r} has zero probability under {exp}")
    return num / den


def signal_probability(exp: Experiment, mu: float, signal: str) -> float:
    if signal in ("good", "g"):
        return mu * exp.pi_g + (1.0 - mu) * (1.0 - exp.pi_b)
    return mu * (1.0 - exp.pi_g) + (1.0 - mu) * exp.pi_b


def informativeness_radius(exp: Experiment, params: ChainParams, theta_max: float,
                           n_scan: int = 1000, xtol: float = 1e-10) -> float:
    """Largest type distance at which a buyer still follows the bad signal.

    Returns ``math.inf`` when ``gamma_bb >= gamma_bg`` throughout
    ``[0, theta_max]``.
    """
    mu = params.mu
    if not exp.is_informative(mu):
        raise DomainError(f"{exp} is not strictly informative for mu={mu}")
    if params.lambda_b <= 0.0:
        raise DomainError("informativeness radius needs lambda_b > 0")

    def gap(delta):
        g = gamma_terms(exp, None, mu, transition(params, delta))
        return g.gamma_bb - g.gamma_bg

    grid = np.linspace(0.0, theta_max, n_scan + 1)
    vals = gap(grid)
    neg = np.nonzero(vals < 0.0)[0]
    if neg.size == 0:
        return math.inf
    j = neg[0]
    return brentq(gap, grid[j - 1], grid[j], xtol=xtol)
