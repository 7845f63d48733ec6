"""Optimal menus when the buyer's type is drawn from an interval.

Types live on ``[0, theta_max]`` and the states of two types at distance
``delta`` are linked by the reversible chain in :mod:`infoprice.prior`. The
optimal schedule has at most three regions: distorted zero-rent products
below ``theta_low``, fully informative products with positive rents on
``[theta_low, theta_high]``, and full-surplus pricing above ``theta_high``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import integrate
from scipy.optimize import brentq, minimize_scalar

from .primitives import Payoff, TypeDistribution, uniform
from .prior import ChainParams, DomainError

SAMPLE_TOL = 1e-10
ROOT_XTOL = 1e-14


class AssumptionError(ValueError):
    """The economy violates a shape assumption the solver relies on."""


class WrongRegimeError(ValueError):
    """The requested solver does not apply to this economy."""


class ConsistencyError(RuntimeError):
    """Two independent computations of the same quantity disagree."""


@dataclass(frozen=True)
class ContinuumEconomy:
    """Types on ``[0, theta_max]`` with payoff ``u`` and distribution ``F``.

    Construction samples ``u`` and ``F`` on ``n_check`` points and raises
    :class:`DomainError` if ``u`` decreases, ``u'`` is not finite, the density
    is not positive or the hazard rate decreases.
    """

    theta_max: float
    params: ChainParams
    u: Payoff
    F: TypeDistribution = None
    n_check: int = 2001

    def __post_init__(self):
        if not (self.theta_max > 0 and math.isfinite(self.theta_max)):
            raise DomainError(f"theta_max must be positive and finite, got {self.theta_max!r}")
        if self.F is None:
            object.__setattr__(self, "F", uniform(self.theta_max))
        if abs(self.F.theta_max - self.theta_max) > 1e-12:
            raise DomainError("distribution support does not match theta_max")
        th = self.samples()
        u, du = self.u(th), self.u.d1(th)
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(du))):
            raise DomainError("payoff or its derivative is not finite on [0, theta_max]")
        if np.any(u < 0) or np.any(du < -SAMPLE_TOL):
            raise DomainError("payoff must be nonnegative and nondecreasing")
        pdf = self.F.pdf(th)
        if np.any(pdf <= 0) or not np.all(np.isfinite(pdf)):
            raise DomainError("type density must be positive and finite on [0, theta_max]")
        hz = self.F.hazard(th[:-1])
        if np.any(np.diff(hz) < -SAMPLE_TOL * np.maximum(1.0, hz[1:])):
            raise DomainError("hazard rate f/(1-F) must be nondecreasing")

    @property
    def mu(self) -> float:
        return self.params.mu

    def samples(self, n=None) -> np.ndarray:
        return np.linspace(0.0, self.theta_max, n or self.n_check)


class C2Status(NamedTuple):
    holds: bool
    theta_G: float | None


class PostedPrice(NamedTuple):
    price: float
    revenue: float
    cutoff: float


@dataclass(frozen=True, eq=False)
class MenuSchedule:
    """Menu on a type grid, one product per grid point.

    ``regime`` is ``"FULL_SURPLUS"``, ``"SCREENING"`` or ``"POSTED_PRICE"``.
    ``theta_G`` is ``None`` when the full-surplus condition holds.
    """

    grid: np.ndarray
    pi_g: np.ndarray
    pi_b: np.ndarray
    price: np.ndarray
    rent: np.ndarray
    theta_star_low: float
    theta_star_high: float
    theta_G: float | None
    revenue: float
    regime: str
    extra: dict = field(default_factory=dict)

    def header(self) -> dict:
        return {"regime": self.regime, "theta_star_low": self.theta_star_low,
                "theta_star_high": self.theta_star_high, "theta_G": self.theta_G,
                "revenue": self.revenue, "grid_size": int(self.grid.size), **self.extra}

    def columns(self) -> dict:
        return {"theta": self.grid, "pi_g": self.pi_g, "pi_b": self.pi_b,
                "price": self.price, "rent": self.rent}


# ---------------------------------------------------------------- C2 and bounds

def _c2_gap(econ, theta):
    return econ.u.d1(theta) - 2.0 * econ.params.lambda_b * econ.u(theta)


def check_c2(econ: ContinuumEconomy, n_samples: int = 2001) -> C2Status:
    """Test ``u' <= 2 lambda_b u`` on a uniform sample of ``[0, theta_max]``.

    On failure ``theta_G`` is the first point where ``u' - 2 lambda_b u``
    falls from positive to nonpositive, or ``theta_max`` if it never does.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    th = econ.samples(n_samples)
    gap = _c2_gap(econ, th)
    if np.all(gap <= SAMPLE_TOL):
        return C2Status(True, None)
    first_pos = int(np.argmax(gap > SAMPLE_TOL))
    after = np.nonzero(gap[first_pos:] <= 0.0)[0]
    if after.size == 0:
        return C2Status(False, econ.theta_max)
    j = first_pos + int(after[0])
    root = brentq(lambda t: float(_c2_gap(econ, t)), th[j - 1], th[j], xtol=ROOT_XTOL)
    return C2Status(False, root)


def gronwall_bound(econ: ContinuumEconomy, theta):
    """Upper bound ``u(0) exp(2 lambda_b theta)`` implied by the full-surplus condition."""
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < 0) or np.any(theta > econ.theta_max):
        raise DomainError("theta outside [0, theta_max]")
    return econ.u(0.0) * np.exp(2.0 * econ.params.lambda_b * theta)


def check_assumption_1(econ: ContinuumEconomy, n_samples: int | None = None) -> list[str]:
    """Return the sampled violations of log-concavity and of ``u' - 2 lambda_g u`` decreasing."""
    th = econ.samples(n_samples)
    u, d1, d2 = econ.u(th), econ.u.d1(th), econ.u.d2(th)
    scale = max(1.0, float(np.max(np.abs(d1))) ** 2, float(np.max(u * np.abs(d2))))
    problems = []
    if np.any(u * d2 - d1 * d1 > SAMPLE_TOL * scale):
        problems.append("u is not log-concave")
    if np.any(d2 - 2.0 * econ.params.lambda_g * d1 > SAMPLE_TOL * max(1.0, float(np.max(np.abs(d2))))):
        problems.append("u' - 2 lambda_g u is not nonincreasing")
    return problems


# ---------------------------------------------------------------- posted price

def solve_posted_price(econ: ContinuumEconomy, n_scan: int = 4001) -> PostedPrice:
    """Monopoly price for perfectly correlated states (``lambda_b = 0``).

    Searches over the marginal type ``c``; the price is ``v(c) = (1-mu) u(c)``
    and everyone at or above ``c`` buys the fully informative experiment.
    """
    if econ.params.lambda_b != 0.0:
        raise WrongRegimeError("posted price applies only when lambda_b == 0")
    mu = econ.mu

    def rev(c):
        return (1.0 - mu) * econ.u(c) * (1.0 - econ.F.cdf(c))

    grid = econ.samples(n_scan)
    vals = rev(grid)
    i = int(np.argmax(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    res = minimize_scalar(lambda c: -float(rev(c)), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-13})
    c = float(res.x) if -res.fun >= vals[i] else float(grid[i])
    return PostedPrice(float((1.0 - mu) * econ.u(c)), float(rev(c)), c)


def posted_price_schedule(econ: ContinuumEconomy, grid_size: int = 401) -> MenuSchedule:
    """Posted price written as a schedule; non-buyers get the uninformative product."""
    mu = econ.mu
    pp = solve_posted_price(econ)
    grid = econ.samples(grid_size)
    buys = grid >= pp.cutoff
    pi_g = np.where(buys, 1.0, (2.0 * mu - 1.0) / mu)
    price = np.where(buys, pp.price, 0.0)
    rent = np.where(buys, (1.0 - mu) * econ.u(grid) - pp.price, 0.0)
    return MenuSchedule(grid, pi_g, np.ones_like(grid), price, rent, pp.cutoff,
                        econ.theta_max, None, pp.revenue, "POSTED_PRICE",
                        {"posted_price": pp.price})


# ---------------------------------------------------------------- screening menu

def chi(econ: ContinuumEconomy, theta, theta_high):
    """Sign of the ``pi_g`` coefficient in the virtual surplus below ``theta_high``."""
    theta = np.asarray(theta, dtype=float)
    lg = econ.params.lambda_g
    u, du = econ.u(theta), econ.u.d1(theta)
    tail = (econ.F.cdf(theta_high) - econ.F.cdf(theta)) / econ.F.pdf(theta)
    return u - (du - 2.0 * lg * u) * tail


def virtual_surplus(econ: ContinuumEconomy, theta, pi_g, theta_high):
    """Virtual surplus of product ``(pi_g, 1)`` at ``theta`` for rent region ending at ``theta_high``."""
    theta = np.asarray(theta, dtype=float)
    if np.any(theta > theta_high + 1e-15):
        raise DomainError("virtual surplus is defined for theta <= theta_high")
    f = econ.F.pdf(theta)
    if np.any(f <= 0):
        raise DomainError("zero density")
    mu, lg = econ.mu, econ.params.lambda_g
    u, du = econ.u(theta), econ.u.d1(theta)
    acc = mu * pi_g + 1.0 - 2.0 * mu
    tail = (econ.F.cdf(theta_high) - econ.F.cdf(theta)) / f
    return acc * u - (acc * du - 2.0 * mu * lg * pi_g * u) * tail


def _integral_u(econ, a, b):
    if b <= a:
        return 0.0
    val, _ = integrate.quad(lambda s: float(econ.u(s)), a, b, epsabs=1e-14, epsrel=1e-13, limit=200)
    return val


def continuity_gap(econ: ContinuumEconomy, theta_low: float, theta) -> float:
    """Rent at ``theta`` of a fully informative segment starting at ``theta_low``."""
    mu, lg = econ.mu, econ.params.lambda_g
    return ((1.0 - mu) * (float(econ.u(theta)) - float(econ.u(theta_low)))
            - 2.0 * mu * lg * _integral_u(econ, theta_low, theta))


def theta_low_for(econ: ContinuumEconomy, theta_high: float, theta_G: float,
                  n_scan: int = 400) -> float:
    """Smallest root of ``chi(., theta_high)`` on ``[0, theta_G]``, or a corner."""
    th = np.linspace(0.0, theta_G, n_scan + 1)
    vals = chi(econ, th, theta_high)
    if vals[0] >= 0.0:
        return 0.0
    pos = np.nonzero(vals >= 0.0)[0]
    if pos.size == 0:
        return theta_G
    j = int(pos[0])
    return brentq(lambda t: float(chi(econ, t, theta_high)), th[j - 1], th[j], xtol=ROOT_XTOL)


def theta_high_for(econ: ContinuumEconomy, theta_low: float, theta_G: float,
                   n_scan: int = 400) -> float:
    """Where the rent of the segment starting at ``theta_low`` returns to zero."""
    if continuity_gap(econ, theta_low, econ.theta_max) >= 0.0:
        return econ.theta_max
    th = np.linspace(theta_G, econ.theta_max, n_scan + 1)
    vals = np.array([continuity_gap(econ, theta_low, t) for t in th])
    j = int(np.nonzero(vals < 0.0)[0][0])
    if j == 0:
        return theta_G
    return brentq(lambda t: continuity_gap(econ, theta_low, t), th[j - 1], th[j], xtol=ROOT_XTOL)


def solve_thresholds(econ: ContinuumEconomy, theta_G: float, n_scan: int = 200) -> tuple[float, float]:
    """Solve ``chi(theta_low, theta_high) = 0`` jointly with rent continuity at ``theta_high``.

    Outer root search on ``theta_high`` in ``[theta_G, theta_max]``, inner
    root search for ``theta_low``.
    """
    def outer(th_hi):
        return continuity_gap(econ, theta_low_for(econ, th_hi, theta_G), th_hi)

    hi = econ.theta_max
    if outer(hi) >= 0.0:
        return theta_low_for(econ, hi, theta_G), hi
    grid = np.linspace(theta_G, hi, n_scan + 1)
    vals = np.array([outer(t) for t in grid])
    neg = np.nonzero(vals < 0.0)[0]
    j = int(neg[0])
    if j == 0:
        return theta_low_for(econ, theta_G, theta_G), theta_G
    th_hi = brentq(outer, grid[j - 1], grid[j], xtol=ROOT_XTOL)
    return theta_low_for(econ, th_hi, theta_G), th_hi


def schedule_revenue(econ: ContinuumEconomy, theta_low: float, theta_high: float) -> float:
    """Expected payment of the three-region schedule with the given thresholds."""
    mu, lg = econ.mu, econ.params.lambda_g
    F, f, u = econ.F.cdf, econ.F.pdf, econ.u

    def quad(fn, a, b):
        if b <= a:
            return 0.0
        return integrate.quad(lambda s: float(fn(s)), a, b, epsabs=1e-14, epsrel=1e-12, limit=200)[0]

    def low_price(s):
        return (mu * pi_g_distorted(econ, s) + 1.0 - 2.0 * mu) * u(s)

    rev = quad(lambda s: low_price(s) * f(s), 0.0, theta_low)
    mass = float(F(theta_high) - F(theta_low))
    rev += (1.0 - mu) * float(u(theta_low)) * mass
    rev += quad(lambda s: 2.0 * mu * lg * u(s) * (F(theta_high) - F(s)), theta_low, theta_high)
    rev += quad(lambda s: (1.0 - mu) * u(s) * f(s), theta_high, econ.theta_max)
    return rev


def pi_g_distorted(econ: ContinuumEconomy, theta):
    """Good-state accuracy offered to zero-rent types below ``theta_low``."""
    mu, lg = econ.mu, econ.params.lambda_g
    du, u = econ.u.d1(theta), econ.u(theta)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (2.0 * mu - 1.0) / mu * du / (du - 2.0 * lg * u)
    return np.where(np.isfinite(out), out, (2.0 * mu - 1.0) / mu)


def region_of(theta, theta_low, theta_high):
    """0 below ``theta_low``, 1 on ``[theta_low, theta_high]``, 2 above."""
    theta = np.asarray(theta, dtype=float)
    return np.where(theta < theta_low, 0, np.where(theta <= theta_high, 1, 2))


def products_at(econ: ContinuumEconomy, theta, region):
    """``(pi_g, pi_b)`` of the screening schedule in the given regions."""
    theta = np.asarray(theta, dtype=float)
    pi_g = np.where(region == 0, pi_g_distorted(econ, theta), 1.0)
    return pi_g, np.ones_like(pi_g)


def gamma_selection(econ: ContinuumEconomy, theta, region):
    """Envelope derivative of rents: zero on zero-rent regions, the informative formula on region 1."""
    theta = np.asarray(theta, dtype=float)
    mu, lg = econ.mu, econ.params.lambda_g
    pi_g, pi_b = products_at(econ, theta, region)
    u, du = econ.u(theta), econ.u.d1(theta)
    g = (mu * pi_g + (1.0 - mu) * pi_b - mu) * du - 2.0 * mu * lg * (pi_g + pi_b - 1.0) * u
    return np.where(region == 1, g, 0.0)


def cumulative_simpson(fn, grid, breaks=()) -> np.ndarray:
    """``int_{grid[0]}^{grid[i]} fn`` by Simpson's rule on each grid interval.

    Intervals containing a break point are split there. ``fn(theta, ref)``
    receives the midpoint ``ref`` of the piece being integrated so that
    piecewise integrands can choose their branch consistently.
    """
    grid = np.asarray(grid, dtype=float)
    cuts = [grid]
    for b in breaks:
        if grid[0] < b < grid[-1]:
            cuts.append([b])
    pts = np.unique(np.concatenate(cuts))
    a, b = pts[:-1], pts[1:]
    mid = 0.5 * (a + b)
    pieces = (b - a) / 6.0 * (fn(a, mid) + 4.0 * fn(mid, mid) + fn(b, mid))
    owner = np.searchsorted(grid, mid) - 1
    per_interval = np.bincount(owner, weights=pieces, minlength=grid.size - 1)
    return np.concatenate([[0.0], np.cumsum(per_interval)])


def full_surplus_schedule(econ: ContinuumEconomy, grid_size: int = 401) -> MenuSchedule:
    mu = econ.mu
    grid = econ.samples(grid_size)
    price = (1.0 - mu) * econ.u(grid)
    revenue = schedule_revenue(econ, 0.0, 0.0)
    return MenuSchedule(grid, np.ones_like(grid), np.ones_like(grid), price,
                        np.zeros_like(grid), 0.0, 0.0, None, revenue, "FULL_SURPLUS")


def solve_menu(econ: ContinuumEconomy, grid_size: int = 401) -> MenuSchedule:
    """Revenue-maximizing schedule on a uniform grid of ``grid_size`` types.

    Returns the full-surplus schedule when the full-surplus condition holds.

    Raises
    ------
    WrongRegimeError
        If ``lambda_b == 0``; use :func:`solve_posted_price`.
    AssumptionError
        If the screening path is needed and the payoff violates the
        log-concavity assumptions.
    """
    if grid_size < 3:
        raise ValueError("grid_size must be at least 3")
    if econ.params.lambda_b == 0.0:
        raise WrongRegimeError("lambda_b == 0: states are perfectly correlated, use a posted price")
    c2 = check_c2(econ)
    if c2.holds:
        return full_surplus_schedule(econ, grid_size)
    problems = check_assumption_1(econ)
    if problems:
        raise AssumptionError("; ".join(problems))
    theta_G = c2.theta_G
    lo, hi = solve_thresholds(econ, theta_G)
    mu, lg = econ.mu, econ.params.lambda_g

    grid = econ.samples(grid_size)
    region = region_of(grid, lo, hi)
    pi_g, pi_b = products_at(econ, grid, region)
    u = econ.u(grid)

    def rent_rate(theta, ref):
        return np.where((ref >= lo) & (ref <= hi), 2.0 * mu * lg * econ.u(theta), 0.0)

    accrued = cumulative_simpson(rent_rate, grid, (lo, hi))
    mid_price = (1.0 - mu) * float(econ.u(lo)) + accrued
    price = np.select([region == 0, region == 1],
                      [(mu * pi_g + 1.0 - 2.0 * mu) * u, mid_price], (1.0 - mu) * u)
    rent = (mu * pi_g + (1.0 - mu) * pi_b - mu) * u - price
    rent = np.where(region == 1, rent, 0.0)
    revenue = schedule_revenue(econ, lo, hi)
    return MenuSchedule(grid, pi_g, pi_b, price, rent, lo, hi, theta_G, revenue, "SCREENING")


def rent_schedule(schedule: MenuSchedule, econ: ContinuumEconomy, tol: float = 1e-6) -> np.ndarray:
    """Rents rebuilt from the envelope selection, checked against ``schedule.rent``."""
    lo, hi = schedule.theta_star_low, schedule.theta_star_high
    rents = cumulative_simpson(lambda t, ref: gamma_selection(econ, t, region_of(ref, lo, hi)),
                               schedule.grid, (lo, hi))
    gap = float(np.max(np.abs(rents - schedule.rent)))
    if gap > tol:
        raise ConsistencyError(f"envelope rents differ from schedule rents by {gap:.3g}")
    return rents
