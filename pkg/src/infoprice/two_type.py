"""Optimal menus when the buyer is one of two types, low or high."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .prior import RANGE_TOL, DensityRegime, DomainError, TwoTypePrior, two_type_density
from .valuation import (FULLY_INFORMATIVE, Experiment, MenuItem, cross_value,
                        own_value)


class Regime(enum.Enum):
    FULL_SURPLUS = "FULL_SURPLUS"
    RENTS_TO_HIGH = "RENTS_TO_HIGH"
    DISTORT_LOW = "DISTORT_LOW"


class C1Clause(enum.Enum):
    C1_A = "C1_A"
    C1_B = "C1_B"
    C1_CI = "C1_CI"
    C1_CII = "C1_CII"
    NOT_C1 = "NOT_C1"


class IncentiveError(RuntimeError):
    """A solved menu failed its ex-post incentive check."""


@dataclass(frozen=True)
class TwoTypeEconomy:
    """Two-type economy: low type with probability ``rho``."""

    prior: TwoTypePrior
    rho: float
    u_l: float
    u_h: float

    def __post_init__(self):
        if not (0.0 < self.rho < 1.0):
            raise DomainError(f"rho must lie in (0, 1), got {self.rho!r}")
        if not (0.0 < self.u_l < self.u_h):
            raise DomainError(f"need 0 < u_l < u_h, got u_l={self.u_l!r}, u_h={self.u_h!r}")

    @property
    def mu(self) -> float:
        return self.prior.mu

    @property
    def ratio(self) -> float:
        return self.u_l / self.u_h


@dataclass(frozen=True)
class TwoTypeMenu:
    low: MenuItem
    high: MenuItem
    regime: Regime

    def revenue(self, rho: float) -> float:
        return rho * self.low.price + (1.0 - rho) * self.high.price

    def to_dict(self, econ: TwoTypeEconomy | None = None) -> dict:
        doc = {"kind": "two_type", "regime": self.regime.value,
               "low": self.low.to_dict(), "high": self.high.to_dict()}
        if econ is not None:
            doc["revenue"] = self.revenue(econ.rho)
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "TwoTypeMenu":
        return cls(MenuItem.from_dict(doc["low"]), MenuItem.from_dict(doc["high"]),
                   Regime(doc.get("regime", Regime.FULL_SURPLUS.value)))


def classify_c1(econ: TwoTypeEconomy) -> C1Clause:
    """Which clause of the full-surplus condition holds, if any."""
    mu, p, r = econ.mu, econ.prior.p, econ.ratio
    half_band = (1.0 - mu) / (2.0 * mu)
    top = (1.0 - mu) / mu
    if 0.0 < p < half_band - RANGE_TOL:
        if r >= (1.0 - mu - 2.0 * mu * p) / (1.0 - mu):
            return C1Clause.C1_A
        return C1Clause.NOT_C1
    if p < half_band - RANGE_TOL:  # p == 0
        return C1Clause.NOT_C1
    if mu >= 2.0 / 3.0:
        return C1Clause.C1_B if p <= top + RANGE_TOL else C1Clause.NOT_C1
    if p <= 0.5:
        return C1Clause.C1_CI
    if r >= (2.0 * p - 1.0) * mu / (1.0 - mu):
        return C1Clause.C1_CII
    return C1Clause.NOT_C1


def full_surplus_menu(econ: TwoTypeEconomy) -> TwoTypeMenu:
    mu = econ.mu
    return TwoTypeMenu(MenuItem(FULLY_INFORMATIVE, (1.0 - mu) * econ.u_l),
                       MenuItem(FULLY_INFORMATIVE, (1.0 - mu) * econ.u_h),
                       Regime.FULL_SURPLUS)


def solve(econ: TwoTypeEconomy, check: bool = True) -> TwoTypeMenu:
    """Revenue-maximizing two-type menu.

    With ``check`` set, the menu is audited against every IC/IR constraint
    (using full best responses) and :class:`IncentiveError` is raised on a
    violation larger than 1e-9.
    """
    if classify_c1(econ) is not C1Clause.NOT_C1:
        menu = full_surplus_menu(econ)
    else:
        menu = _solve_not_c1(econ)
    if check:
        worst = max(constraint_slacks(menu, econ).values(), key=lambda s: -s)
        if worst < -1e-9:
            raise IncentiveError(f"solved menu violates a constraint by {-worst:.3g}: {menu}")
    return menu


def _solve_not_c1(econ: TwoTypeEconomy) -> TwoTypeMenu:
    mu, rho, u_l, u_h = econ.mu, econ.rho, econ.u_l, econ.u_h
    sg, xi, sb, regime = two_type_density(econ.prior)
    full_h = (1.0 - mu) * u_h
    if regime is DensityRegime.SIGMA:
        if econ.ratio >= (1.0 - rho) * (sg - xi) / (sg + xi):
            t_h = 2.0 * xi * u_h + (sb + xi) * u_l
            return TwoTypeMenu(MenuItem(FULLY_INFORMATIVE, (1.0 - mu) * u_l),
                               MenuItem(FULLY_INFORMATIVE, t_h), Regime.RENTS_TO_HIGH)
        pi_g = (sg - sb) * (u_h - u_l) / ((sg - xi) * u_h - (sg + xi) * u_l)
        low = Experiment(min(pi_g, 1.0), 1.0)
    elif regime is DensityRegime.XI:
        if econ.ratio >= (1.0 - rho) * (xi - sb) / (xi + sb):
            t_h = (sg + sb) * u_h + (sb + xi) * u_l
            return TwoTypeMenu(MenuItem(FULLY_INFORMATIVE, (1.0 - mu) * u_l),
                               MenuItem(FULLY_INFORMATIVE, t_h), Regime.RENTS_TO_HIGH)
        pi_b = (sg - sb) * u_h / ((xi - sb) * u_h - (sb + xi) * u_l)
        low = Experiment(1.0, min(pi_b, 1.0))
    else:  # MIDDLE always satisfies the full-surplus condition
        raise AssertionError("MIDDLE density regime reached the not-C1 branch")
    # clip rounding noise when the distortion lands on the responsiveness floor
    return TwoTypeMenu(MenuItem(low, max(own_value(low, mu, u_l), 0.0)),
                       MenuItem(FULLY_INFORMATIVE, full_h), Regime.DISTORT_LOW)


def constraint_slacks(menu: TwoTypeMenu, econ: TwoTypeEconomy) -> dict:
    """Slack of IR_l, IR_h, IC_lh and IC_hl (negative means violated)."""
    mu = econ.mu
    trans = econ.prior.transition()
    rent_l = own_value(menu.low.experiment, mu, econ.u_l) - menu.low.price
    rent_h = own_value(menu.high.experiment, mu, econ.u_h) - menu.high.price
    dev_l = cross_value(menu.high.experiment, mu, econ.u_l, trans) - menu.high.price
    dev_h = cross_value(menu.low.experiment, mu, econ.u_h, trans) - menu.low.price
    return {"IR_l": rent_l, "IR_h": rent_h, "IC_lh": rent_l - dev_l, "IC_hl": rent_h - dev_h}


def boundary_full_surplus(u, mu: float):
    """Lower edge ``p = (1-mu)/(2 mu) * (u-1)/u`` of the full-surplus band."""
    u = np.asarray(u, dtype=float)
    return (1.0 - mu) / (2.0 * mu) * (u - 1.0) / u


def boundary_rents(u, rho: float):
    """Rents/distortion boundary ``p = ((1-rho) u - 1) / (2 (1-rho) u)``."""
    u = np.asarray(u, dtype=float)
    return ((1.0 - rho) * u - 1.0) / (2.0 * (1.0 - rho) * u)


# Ratio used for cells with u(h) == u(l); the economy itself requires u_h > u_l.
_DEGENERATE_RATIO_NUDGE = 1e-9


def region_map(mu: float, rho: float, u_l: float, u_values, p_values) -> list[dict]:
    """Regime and menu for each ``(u, p)`` cell, ``u = u(h)/u(l)``.

    Rows are emitted row-major in ``p`` then ``u`` order. Cells with ``u == 1``
    are evaluated in the limit ``u -> 1+``.
    """
    u_values = np.asarray(u_values, dtype=float)
    p_values = np.asarray(p_values, dtype=float)
    if u_values.size == 0 or p_values.size == 0:
        raise ValueError("region map grid is empty")
    if np.any(u_values < 1.0):
        raise DomainError("payoff ratios must satisfy u >= 1")
    rows = []
    for p in p_values:
        prior = TwoTypePrior(mu, float(p))
        for u in u_values:
            u_eff = max(float(u), 1.0 + _DEGENERATE_RATIO_NUDGE)
            econ = TwoTypeEconomy(prior, rho, u_l, u_l * u_eff)
            menu = solve(econ)
            rows.append({
                "u": float(u), "p": float(p), "regime": menu.regime.value,
                "t_l": menu.low.price, "t_h": menu.high.price,
                "pi_lg": menu.low.experiment.pi_g, "pi_lb": menu.low.experiment.pi_b,
                "revenue": menu.revenue(rho),
            })
    return rows


def boundary_curves(mu: float, rho: float, u_values) -> list[dict]:
    u_values = np.asarray(u_values, dtype=float)
    fs = boundary_full_surplus(u_values, mu)
    rt = boundary_rents(u_values, rho)
    return [{"u": float(u), "p_full_surplus": float(a), "p_rents": float(b)}
            for u, a, b in zip(u_values, fs, rt)]


def regime_counts(rows) -> dict:
    counts = {r.value: 0 for r in Regime}
    for row in rows:
        counts[row["regime"]] += 1
    return counts


def admissible_p_max(mu: float) -> float:
    return (1.0 - mu) / mu
