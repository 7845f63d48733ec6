"""Independent checks of solver output: audits, brute force and simulation."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import continuum as ct
from .prior import ChainParams, DomainError, transition
from .two_type import Regime, TwoTypeEconomy, TwoTypeMenu, constraint_slacks
from .valuation import Experiment, MenuItem, best_actions, cross_value

SCHEMA_VERSION = 1
IC_TOL = 1e-8


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of an audit.

    Violations are ``(buyer, imitated, magnitude)`` for IC and
    ``(type, magnitude)`` for IR; only magnitudes above the tolerance are kept.
    """

    ic_violations: list = field(default_factory=list)
    ir_violations: list = field(default_factory=list)
    revenue_closed_form: float | None = None
    revenue_oracle: float | None = None
    monotone: bool = True
    max_mc_error: float | None = None
    mirrlees_gap: float | None = None
    tolerance: float = IC_TOL

    @property
    def passed(self) -> bool:
        return not self.ic_violations and not self.ir_violations and self.monotone

    @property
    def worst_ic(self) -> float:
        return max((v[2] for v in self.ic_violations), default=0.0)

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["ic_violations"] = [list(v) for v in self.ic_violations]
        doc["ir_violations"] = [list(v) for v in self.ir_violations]
        return {"schema_version": SCHEMA_VERSION, "passed": self.passed, **doc}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


# ---------------------------------------------------------------- audits

def audit_menu(menu, econ, tolerance: float = IC_TOL, max_listed: int = 1000) -> VerificationReport:
    """Check every IC and IR constraint with full best responses.

    ``menu`` is a :class:`TwoTypeMenu` (with a :class:`TwoTypeEconomy`) or a
    :class:`MenuSchedule` (with a :class:`ContinuumEconomy`). At most
    ``max_listed`` IC violations are kept, largest first.
    """
    if isinstance(menu, TwoTypeMenu):
        if not isinstance(econ, TwoTypeEconomy):
            raise TypeError("two-type menu needs a two-type economy")
        return _audit_two_type(menu, econ, tolerance)
    if isinstance(menu, ct.MenuSchedule):
        if not isinstance(econ, ct.ContinuumEconomy):
            raise TypeError("schedule needs a continuum economy")
        return _audit_schedule(menu, econ, tolerance, max_listed)
    raise TypeError(f"cannot audit {type(menu).__name__}")


def _audit_two_type(menu, econ, tol):
    s = constraint_slacks(menu, econ)
    ic = [(b, o, -s[k]) for k, b, o in (("IC_hl", "h", "l"), ("IC_lh", "l", "h")) if s[k] < -tol]
    ir = [(t, -s[k]) for k, t in (("IR_l", "l"), ("IR_h", "h")) if s[k] < -tol]
    mu = econ.mu
    monotone = menu.high.experiment.accuracy(mu) >= menu.low.experiment.accuracy(mu) - 1e-12
    return VerificationReport(ic, ir, menu.revenue(econ.rho), None, bool(monotone), tolerance=tol)


def schedule_values(schedule, econ):
    """Own values ``V(pi_theta, theta)`` along the grid."""
    mu = econ.mu
    return (mu * schedule.pi_g + (1.0 - mu) * schedule.pi_b - mu) * econ.u(schedule.grid)


def deviation_matrix(schedule, econ) -> np.ndarray:
    """``D[i, j]``: payoff of type ``grid[i]`` buying product ``j``."""
    th = schedule.grid
    delta = np.abs(th[:, None] - th[None, :])
    trans = transition(econ.params, delta)
    u = econ.u(th)[:, None]
    return cross_value(schedule.pi_g[None, :], econ.mu, u, trans,
                       pi_b=schedule.pi_b[None, :]) - schedule.price[None, :]


def _audit_schedule(schedule, econ, tol, max_listed):
    mu = econ.mu
    th = schedule.grid
    if np.any(schedule.price < 0):
        raise DomainError("schedule has a negative price")
    truthful = schedule_values(schedule, econ) - schedule.price
    excess = deviation_matrix(schedule, econ) - truthful[:, None]
    bad = np.argwhere(excess > tol)
    order = np.argsort(-excess[bad[:, 0], bad[:, 1]])[:max_listed]
    ic = [(float(th[i]), float(th[j]), float(excess[i, j])) for i, j in bad[order]]
    ir = [(float(t), float(-v)) for t, v in zip(th, truthful) if v < -tol]
    acc = mu * schedule.pi_g + (1.0 - mu) * schedule.pi_b
    monotone = bool(np.all(np.diff(acc) >= -1e-12))
    return VerificationReport(ic, ir, schedule.revenue, None, monotone, tolerance=tol)


# ---------------------------------------------------------------- brute force, two types

def grid_search_two_type(econ: TwoTypeEconomy, resolution: int = 201):
    """Best menu with ``pi_h = (1, 1)`` over a grid of low-type experiments.

    Prices come from binding IR_l and binding IC_hl (or IR_h if that binds
    first); exclusion of the low type and pooling are scanned explicitly.
    Ties go to the first cell in ``(pi_g, pi_b)`` lexicographic order.
    """
    if resolution < 11:
        raise ValueError("resolution must be at least 11")
    mu, rho, u_l, u_h = econ.mu, econ.rho, econ.u_l, econ.u_h
    trans = econ.prior.transition()
    axis = np.linspace(0.0, 1.0, resolution)
    pg, pb = np.meshgrid(axis, axis, indexing="ij")
    acc = mu * pg + (1.0 - mu) * pb
    ok = acc >= mu - 1e-12
    t_l = np.where(ok, (acc - mu) * u_l, 0.0)
    rent_h = np.maximum(cross_value(pg, mu, u_h, trans, pi_b=pb) - t_l, 0.0)
    t_h = (1.0 - mu) * u_h - rent_h
    # the low type must not prefer the high product
    dev_l = cross_value(1.0, mu, u_l, trans, pi_b=1.0) - t_h
    ok &= dev_l <= 1e-9
    revenue = np.where(ok, rho * t_l + (1.0 - rho) * t_h, -np.inf)

    candidates = []
    i, j = np.unravel_index(int(np.argmax(revenue)), revenue.shape)
    if np.isfinite(revenue[i, j]):
        candidates.append((float(revenue[i, j]), Experiment(float(axis[i]), float(axis[j])),
                           float(t_l[i, j]), float(t_h[i, j])))
    # exclusion: the low type gets an uninformative product for free
    candidates.append(((1.0 - rho) * (1.0 - mu) * u_h, Experiment(1.0, 0.0), 0.0, (1.0 - mu) * u_h))
    # pooling on the fully informative product
    candidates.append(((1.0 - mu) * u_l, Experiment(1.0, 1.0), (1.0 - mu) * u_l, (1.0 - mu) * u_l))

    best = None
    for rev, exp, tl, th in candidates:
        menu = TwoTypeMenu(MenuItem(exp, max(tl, 0.0)), MenuItem(Experiment(1.0, 1.0), max(th, 0.0)),
                           Regime.DISTORT_LOW)
        if min(constraint_slacks(menu, econ).values()) < -1e-9:
            continue
        if best is None or rev > best[1] + 1e-15:
            best = (menu, rev)
    return best


# ---------------------------------------------------------------- Monte Carlo

def matching_delta(params: ChainParams, p: float) -> float:
    """Distance at which ``P_gb(delta) = p``; ``inf`` at the stationary limit."""
    lg, k = params.lambda_g, params.total_rate
    if k == 0.0:
        raise DomainError("frozen chain has P_gb = 0 at every distance")
    limit = lg / k
    if not (0.0 <= p <= limit + 1e-15):
        raise DomainError(f"P_gb can only reach [0, {limit:.6g}]")
    if p >= limit - 1e-15:
        return math.inf
    return -math.log1p(-p / limit) / k


def simulate_value(exp: Experiment, params: ChainParams, mu: float, u: float, delta: float,
                   n_draws: int, seed: int, n_partitions: int = 8):
    """Monte Carlo value of ``exp`` to a buyer at distance ``delta`` from its designed type.

    Draws are split across ``n_partitions`` streams spawned from ``seed``; the
    result depends only on ``(seed, n_partitions, n_draws)``.

    Returns
    -------
    (float, float)
        Mean payoff net of ``mu * u`` and its standard error.
    """
    if n_draws < 1000:
        raise ValueError("n_draws must be at least 1000")
    if abs(params.mu - mu) > 1e-12:
        raise DomainError("mu disagrees with the chain parameters")
    trans = transition(params, delta)
    follow_good, follow_bad = best_actions(exp, mu, trans)
    sizes = np.full(n_partitions, n_draws // n_partitions)
    sizes[: n_draws % n_partitions] += 1
    streams = np.random.SeedSequence(seed).spawn(n_partitions)
    total = total_sq = 0.0
    for size, ss in zip(sizes, streams):
        rng = np.random.default_rng(ss)
        seller_good = rng.random(size) < mu
        correct = np.where(seller_good, exp.pi_g, exp.pi_b)
        # signal "good" iff (seller good and correct) or (seller bad and wrong)
        signal_good = (rng.random(size) < correct) == seller_good
        stay = np.where(seller_good, trans.p_gg, trans.p_bb)
        buyer_good = (rng.random(size) < stay) == seller_good
        act_good = np.where(signal_good, follow_good, follow_bad)
        payoff = np.where(act_good == buyer_good, u, 0.0)
        total += float(payoff.sum())
        total_sq += float((payoff * payoff).sum())
    mean = total / n_draws
    var = max(total_sq / n_draws - mean * mean, 0.0)
    return mean - mu * u, math.sqrt(var / (n_draws - 1))


# ---------------------------------------------------------------- continuum checks

def mirrlees_check(schedule, econ) -> float:
    """Largest gap between rents from primitives and the envelope integral."""
    rents = schedule_values(schedule, econ) - schedule.price
    lo, hi = schedule.theta_star_low, schedule.theta_star_high
    env = ct.cumulative_simpson(
        lambda t, ref: ct.gamma_selection(econ, t, ct.region_of(ref, lo, hi)), schedule.grid, (lo, hi))
    return float(np.max(np.abs(rents - env)))


def integral_monotonicity(schedule, econ, n_pairs: int = 10_000, seed: int = 0) -> float:
    """Largest violation of the two-sided envelope inequality on random grid pairs.

    For types ``a`` and ``b`` the checked chain is
    ``V(pi_a, a) - V(pi_a, b) >= int_b^a gamma >= V(pi_b, a) - V(pi_b, b)``.
    """
    lo, hi = schedule.theta_star_low, schedule.theta_star_high
    env = ct.cumulative_simpson(
        lambda t, ref: ct.gamma_selection(econ, t, ct.region_of(ref, lo, hi)), schedule.grid, (lo, hi))
    rng = np.random.default_rng(seed)
    n = schedule.grid.size
    a, b = rng.integers(0, n, n_pairs), rng.integers(0, n, n_pairs)
    th, mu = schedule.grid, econ.mu
    trans = transition(econ.params, np.abs(th[a] - th[b]))
    u = econ.u(th)

    def value(prod, buyer):
        return cross_value(schedule.pi_g[prod], mu, u[buyer], trans, pi_b=schedule.pi_b[prod])

    own = schedule_values(schedule, econ)
    middle = env[a] - env[b]
    upper = own[a] - value(a, b)
    lower = value(b, a) - own[b]
    return float(max(np.max(middle - upper), np.max(lower - middle), 0.0))


def blackwell_monotone(schedule, econ) -> bool:
    mu = econ.mu
    return bool(np.all(np.diff(mu * schedule.pi_g + (1.0 - mu) * schedule.pi_b) >= -1e-12))


def revenue_search(econ, theta_G: float, n_scan: int = 60):
    """Maximize schedule revenue over ``theta_low`` with ``theta_high`` set by rent continuity.

    Independent of the first-order system used by the solver.

    Returns
    -------
    (theta_low, theta_high, revenue)
    """
    def rev(lo):
        hi = ct.theta_high_for(econ, lo, theta_G, n_scan=60)
        return ct.schedule_revenue(econ, lo, hi)

    grid = np.linspace(0.0, theta_G, n_scan + 1)
    vals = np.array([rev(x) for x in grid])
    i = int(np.argmax(vals))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, n_scan)]
    res = minimize_scalar(lambda x: -rev(x), bounds=(a, b), method="bounded",
                          options={"xatol": 1e-10})
    lo = float(res.x) if -res.fun >= vals[i] else float(grid[i])
    hi = ct.theta_high_for(econ, lo, theta_G)
    return lo, hi, ct.schedule_revenue(econ, lo, hi)


def local_ic_threshold(params: ChainParams, u, theta_max: float) -> float:
    """First type where ``u' = (lambda_g + lambda_b) u``; ``theta_max`` if none."""
    k = params.total_rate
    gap = lambda t: float(u.d1(t) - k * u(t))
    grid = np.linspace(0.0, theta_max, 2001)
    vals = np.array([gap(t) for t in grid])
    idx = np.nonzero((vals[:-1] > 0) & (vals[1:] <= 0))[0]
    if idx.size == 0:
        return theta_max
    j = int(idx[0])
    return brentq(gap, grid[j], grid[j + 1], xtol=1e-14)
