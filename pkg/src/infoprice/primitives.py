"""Payoff functions and type distributions for the continuum economy."""
from __future__ import annotations

import math
import warnings

import numpy as np
from scipy.interpolate import CubicSpline

from .prior import DomainError


class Payoff:
    """Ex-post payoff ``u(theta)`` with first and second derivatives.

    Missing derivatives fall back to central differences with step
    ``1e-6 * (1 + |theta|)``; expect roughly 1e-10 absolute error on the first
    derivative and far less accuracy on the second.
    """

    def __init__(self, value, d1=None, d2=None, name="custom", params=None):
        self._value = value
        self._d1 = d1
        self._d2 = d2
        self.name = name
        self.params = dict(params or {})
        self._warned = False

    def __call__(self, theta):
        return self._value(np.asarray(theta, dtype=float))

    def d1(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self._d1 is not None:
            return self._d1(theta)
        self._warn()
        h = 1e-6 * (1.0 + np.abs(theta))
        return (self._value(theta + h) - self._value(theta - h)) / (2.0 * h)

    def d2(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self._d2 is not None:
            return self._d2(theta)
        self._warn()
        h = 1e-4 * (1.0 + np.abs(theta))
        return (self.d1(theta + h) - self.d1(theta - h)) / (2.0 * h)

    def _warn(self):
        if not self._warned:
            warnings.warn(f"payoff {self.name!r} has no analytic derivative; "
                          "using central finite differences", RuntimeWarning, stacklevel=3)
            self._warned = True

    def __repr__(self):
        return f"Payoff({self.name}, {self.params})"


def constant(c=1.0):
    return Payoff(lambda t: np.full_like(t, c, dtype=float), lambda t: np.zeros_like(t),
                  lambda t: np.zeros_like(t), "constant", {"c": c})


def affine(intercept=0.0, slope=1.0):
    return Payoff(lambda t: intercept + slope * t, lambda t: np.full_like(t, slope),
                  lambda t: np.zeros_like(t), "affine",
                  {"intercept": intercept, "slope": slope})


def power(scale=1.0, exponent=1.0):
    """``scale * theta**exponent``; derivatives at 0 are one-sided limits."""
    if exponent <= 0:
        raise DomainError("power payoff needs a positive exponent")
    k = exponent

    def d1(t):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(t > 0, scale * k * np.power(t, k - 1.0), scale * k * (k == 1.0))

    def d2(t):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(t > 0, scale * k * (k - 1.0) * np.power(t, k - 2.0),
                            scale * 2.0 * (k == 2.0))

    return Payoff(lambda t: scale * np.power(t, k), d1, d2, "power",
                  {"scale": scale, "exponent": exponent})


def bounded_exponential(scale=1.0, rate=1.0, offset=0.0):
    """``offset + scale * (1 - exp(-rate * theta))``."""
    return Payoff(lambda t: offset + scale * (1.0 - np.exp(-rate * t)),
                  lambda t: scale * rate * np.exp(-rate * t),
                  lambda t: -scale * rate * rate * np.exp(-rate * t),
                  "bounded_exponential", {"scale": scale, "rate": rate, "offset": offset})


def exponential(scale=1.0, rate=1.0):
    """``scale * exp(rate * theta)``."""
    return Payoff(lambda t: scale * np.exp(rate * t),
                  lambda t: scale * rate * np.exp(rate * t),
                  lambda t: scale * rate * rate * np.exp(rate * t),
                  "exponential", {"scale": scale, "rate": rate})


def tabulated(thetas, values):
    """Cubic-spline interpolation through ``(theta, u)`` pairs."""
    thetas = np.asarray(thetas, dtype=float)
    values = np.asarray(values, dtype=float)
    if thetas.ndim != 1 or thetas.size < 4 or thetas.shape != values.shape:
        raise DomainError("tabulated payoff needs matching 1-D arrays with >= 4 points")
    if np.any(np.diff(thetas) <= 0):
        raise DomainError("tabulated payoff abscissae must be strictly increasing")
    spline = CubicSpline(thetas, values, bc_type="natural")
    d1, d2 = spline.derivative(1), spline.derivative(2)
    return Payoff(spline, d1, d2, "table",
                  {"theta": thetas.tolist(), "u": values.tolist()})


PAYOFF_FAMILIES = {
    "constant": constant,
    "affine": affine,
    "power": power,
    "bounded_exponential": bounded_exponential,
    "exponential": exponential,
}


class TypeDistribution:
    """Distribution of types on ``[0, theta_max]`` with cdf and pdf."""

    def __init__(self, cdf, pdf, theta_max, name, params=None):
        self._cdf = cdf
        self._pdf = pdf
        self.theta_max = float(theta_max)
        self.name = name
        self.params = dict(params or {})

    def cdf(self, theta):
        return self._cdf(np.asarray(theta, dtype=float))

    def pdf(self, theta):
        return self._pdf(np.asarray(theta, dtype=float))

    def hazard(self, theta):
        theta = np.asarray(theta, dtype=float)
        with np.errstate(divide="ignore"):
            return self.pdf(theta) / (1.0 - self.cdf(theta))

    def __repr__(self):
        return f"TypeDistribution({self.name}, theta_max={self.theta_max}, {self.params})"


def uniform(theta_max=2.0):
    b = float(theta_max)
    return TypeDistribution(lambda t: np.clip(t / b, 0.0, 1.0),
                            lambda t: np.full_like(t, 1.0 / b), b, "uniform")


def truncated_exponential(rate=1.0, theta_max=2.0):
    """Exponential distribution with the given rate, truncated to ``[0, theta_max]``."""
    if rate <= 0:
        raise DomainError("truncated exponential needs a positive rate")
    b = float(theta_max)
    mass = -math.expm1(-rate * b)
    return TypeDistribution(
        lambda t: np.clip(-np.expm1(-rate * t) / mass, 0.0, 1.0),
        lambda t: rate * np.exp(-rate * t) / mass,
        b, "truncated_exponential", {"rate": rate})


DISTRIBUTION_FAMILIES = {
    "uniform": lambda theta_max, **kw: uniform(theta_max),
    "truncated_exponential": lambda theta_max, **kw: truncated_exponential(theta_max=theta_max, **kw),
}
