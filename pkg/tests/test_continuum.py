import math
import warnings

import numpy as np
import pytest

from infoprice import continuum as ct
from infoprice import primitives as pr
from infoprice.oracle import audit_menu
from infoprice.prior import ChainParams, DomainError

from conftest import benchmark_economy

MU = 2 / 3
THETA_G = math.log(1.5)


def make(u, lambda_b=1.0, mu=MU, theta_max=2.0, F=None):
    return ct.ContinuumEconomy(theta_max, ChainParams(mu, lambda_b), u, F)


# ---------------------------------------------------------------- primitives

@pytest.mark.parametrize("u", [pr.affine(0.5, 2.0), pr.power(1.5, 0.7), pr.bounded_exponential(2, 0.8),
                               pr.exponential(0.3, 1.2), pr.constant(2.0)])
def test_analytic_derivatives_match_differences(u):
    th = np.linspace(0.1, 2.0, 50)
    h = 1e-5
    np.testing.assert_allclose(u.d1(th), (u(th + h) - u(th - h)) / (2 * h), rtol=1e-6, atol=1e-8)
    np.testing.assert_allclose(u.d2(th), (u.d1(th + h) - u.d1(th - h)) / (2 * h), rtol=1e-5, atol=1e-7)


def test_finite_difference_fallback_warns_once():
    u = pr.Payoff(lambda t: 1 - np.exp(-t), name="bare")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        d1 = u.d1(np.array([0.5, 1.0]))
        u.d2(0.5)
    assert len(caught) == 1
    np.testing.assert_allclose(d1, np.exp(-np.array([0.5, 1.0])), atol=1e-9)


def test_tabulated_payoff_interpolates():
    th = np.linspace(0, 2, 9)
    u = pr.tabulated(th, np.sqrt(1 + th))
    np.testing.assert_allclose(u(th), np.sqrt(1 + th), atol=1e-15)
    assert float(u(1.1)) == pytest.approx(math.sqrt(2.1), abs=1e-3)
    with pytest.raises(DomainError):
        pr.tabulated([0, 1, 1, 2], [0, 1, 2, 3])


def test_truncated_exponential_distribution():
    F = pr.truncated_exponential(0.5, 2.0)
    assert float(F.cdf(0.0)) == 0.0 and float(F.cdf(2.0)) == pytest.approx(1.0)
    from scipy.integrate import quad
    assert quad(lambda t: float(F.pdf(t)), 0, 2)[0] == pytest.approx(1.0)
    hz = F.hazard(np.linspace(0, 1.9, 50))
    assert np.all(np.diff(hz) > 0)


def test_economy_rejects_decreasing_payoff():
    with pytest.raises(DomainError, match="nondecreasing"):
        make(pr.affine(2.0, -0.5))


def test_economy_rejects_decreasing_hazard():
    b = 20.0
    sb = (1 + b) ** -2
    F = pr.TypeDistribution(lambda t: (1 - (1 + t) ** -2.0) / (1 - sb),
                            lambda t: 2 * (1 + t) ** -3.0 / (1 - sb), b, "pareto")
    with pytest.raises(DomainError, match="hazard"):
        make(pr.bounded_exponential(), theta_max=b, F=F)


def test_economy_rejects_mismatched_support():
    with pytest.raises(DomainError):
        make(pr.bounded_exponential(), F=pr.uniform(3.0))


# ---------------------------------------------------------------- C2 and bounds

def test_c2_fails_at_log_three_halves(bench):
    status = ct.check_c2(bench)
    assert not status.holds
    assert status.theta_G == pytest.approx(THETA_G, abs=1e-10)


def test_c2_constant_payoff_holds():
    assert ct.check_c2(make(pr.constant(1.0))).holds


@pytest.mark.parametrize("lb", [1.0, 10.0, 100.0])
def test_c2_zero_start_always_fails(lb):
    # u(0) = 0 < u'(0) breaks u' <= 2 lambda_b u at the bottom for every finite rate
    status = ct.check_c2(make(pr.bounded_exponential(), lambda_b=lb))
    assert not status.holds
    assert status.theta_G == pytest.approx(math.log1p(1 / (2 * lb)), abs=1e-10)


@pytest.mark.parametrize("lb", [10.0, 100.0])
def test_c2_fast_mixing_holds(lb):
    assert ct.check_c2(make(pr.bounded_exponential(offset=0.1), lambda_b=lb)).holds


def test_c2_frozen_chain_fails_at_top():
    status = ct.check_c2(make(pr.bounded_exponential(), lambda_b=0.0))
    assert status == ct.C2Status(False, 2.0)


def test_c2_needs_two_samples(bench):
    with pytest.raises(ValueError):
        ct.check_c2(bench, 1)


def test_gronwall_examples(bench):
    e = make(pr.exponential(1.0, 1.0))
    th = np.linspace(0, 2, 41)
    assert float(ct.gronwall_bound(e, 0.0)) == pytest.approx(1.0)
    assert np.all(ct.gronwall_bound(e, th) >= e.u(th))
    assert ct.check_c2(e).holds
    assert np.all(ct.gronwall_bound(bench, th) == 0.0)
    assert np.all(bench.u(th[1:]) > 0)
    with pytest.raises(DomainError):
        ct.gronwall_bound(bench, 2.5)


@pytest.mark.parametrize("lb", [0.5, 2.0, 10.0, 100.0])
def test_c2_implies_gronwall(lb):
    e = make(pr.bounded_exponential(1.0, 0.3), lambda_b=lb)
    if ct.check_c2(e).holds:
        th = e.samples()
        assert np.all(e.u(th) <= ct.gronwall_bound(e, th) + 1e-12)


# ---------------------------------------------------------------- posted price

def test_posted_price_linear_uniform():
    pp = ct.solve_posted_price(make(pr.affine(0, 1), lambda_b=0.0, theta_max=1.0))
    assert pp.price == pytest.approx(1 / 6, abs=1e-9)
    assert pp.revenue == pytest.approx(1 / 12, abs=1e-12)


def test_posted_price_constant_payoff():
    pp = ct.solve_posted_price(make(pr.constant(3.0), lambda_b=0.0))
    assert pp.price == pytest.approx((1 - MU) * 3.0)
    assert pp.revenue == pytest.approx((1 - MU) * 3.0)


def test_posted_price_quadratic_against_grid():
    pp = ct.solve_posted_price(make(pr.power(1.0, 2.0), lambda_b=0.0, mu=0.5, theta_max=1.0))
    prices = np.linspace(0, 0.5, 500_001)
    grid_rev = prices * (1 - np.sqrt(2 * prices))
    assert pp.revenue == pytest.approx(grid_rev.max(), abs=1e-10)
    assert pp.price == pytest.approx(2 / 9, abs=1e-7)
    assert pp.revenue == pytest.approx(2 / 27, abs=1e-12)


def test_posted_price_wrong_regime(bench):
    with pytest.raises(ct.WrongRegimeError):
        ct.solve_posted_price(bench)


def test_posted_price_schedule():
    e = make(pr.affine(0, 1), lambda_b=0.0, theta_max=1.0)
    s = ct.posted_price_schedule(e, 101)
    assert s.regime == "POSTED_PRICE"
    assert np.all((s.price == 0.0) | np.isclose(s.price, 1 / 6, atol=1e-9))
    assert audit_menu(s, e).passed


# ---------------------------------------------------------------- screening schedule

def test_benchmark_thresholds(bench, bench_schedule):
    s = bench_schedule
    assert 0 <= s.theta_star_low <= s.theta_G <= s.theta_star_high <= 2.0
    assert s.theta_G == pytest.approx(THETA_G, abs=1e-10)
    assert s.theta_star_low == pytest.approx(0.23294, abs=1e-5)
    assert s.theta_star_high == pytest.approx(0.58852, abs=1e-5)
    assert float(ct.chi(bench, s.theta_star_low, s.theta_star_high)) == pytest.approx(0, abs=1e-12)
    assert ct.continuity_gap(bench, s.theta_star_low, s.theta_star_high) == pytest.approx(0, abs=1e-12)


def test_benchmark_schedule_shape(bench, bench_schedule):
    s, th = bench_schedule, bench_schedule.grid
    inside = (th >= s.theta_star_low) & (th <= s.theta_star_high)
    assert np.all(s.pi_b == 1.0)
    assert np.all(s.rent[~inside] == 0.0)
    assert np.all(s.rent[inside & (th > s.theta_star_low)] > 0)
    assert np.all(s.rent >= -1e-10)
    assert np.all(np.diff(s.price) >= 0)
    above = th > s.theta_star_high
    np.testing.assert_allclose(s.price[above], (1 - MU) * bench.u(th[above]), atol=1e-15)


def test_benchmark_rent_peak_at_theta_g(bench_schedule):
    s = bench_schedule
    steps = np.sign(np.diff(s.rent))
    nz = steps[steps != 0]
    assert np.count_nonzero(np.diff(nz)) == 1  # one rise then one fall
    peak = s.grid[np.argmax(s.rent)]
    assert peak == s.grid[np.argmin(np.abs(s.grid - THETA_G))]


def test_distorted_region(bench, bench_schedule):
    s = bench_schedule
    assert s.pi_g[0] == pytest.approx(0.5, abs=1e-15)
    low = s.grid < s.theta_star_low
    assert np.all(np.diff(s.pi_g[low]) > 0) and np.all(s.pi_g[low] < 1)
    assert np.all(s.pi_g[~low] == 1.0)
    acc = MU * s.pi_g + (1 - MU) * s.pi_b
    assert np.all(np.diff(acc) >= 0)
    assert s.price[0] == 0.0


def test_symmetric_prior_region_b_uninformative():
    e = make(pr.bounded_exponential(), mu=0.5)
    s = ct.solve_menu(e, 201)
    low = s.grid < s.theta_star_low
    assert low.any()
    assert np.all(s.pi_g[low] == 0.0) and np.all(s.price[low] == 0.0)


def test_full_surplus_when_c2_holds():
    e = make(pr.bounded_exponential(offset=0.1), lambda_b=10.0)
    s = ct.solve_menu(e, 201)
    assert s.regime == "FULL_SURPLUS" and s.theta_G is None
    np.testing.assert_allclose(s.price, (1 - MU) * e.u(s.grid))
    assert np.all(s.rent == 0)
    report = audit_menu(s, e, tolerance=0.0)
    assert report.passed


def test_solve_menu_errors():
    with pytest.raises(ct.WrongRegimeError):
        ct.solve_menu(make(pr.bounded_exponential(), lambda_b=0.0))
    with pytest.raises(ct.AssumptionError):
        ct.solve_menu(make(pr.power(1.0, 2.0), lambda_b=1.0))
    with pytest.raises(ValueError):
        ct.solve_menu(benchmark_economy(), 2)


def test_grid_convergence(bench, bench_schedule):
    fine = ct.solve_menu(bench, 1601)
    assert fine.theta_star_low == bench_schedule.theta_star_low
    np.testing.assert_allclose(fine.price[::4], bench_schedule.price, atol=1e-6)
    np.testing.assert_allclose(fine.rent[::4], bench_schedule.rent, atol=1e-6)


def test_revenue_matches_grid_payments(bench, bench_schedule):
    from scipy.integrate import simpson
    s = ct.solve_menu(bench, 4001)
    approx = simpson(s.price * bench.F.pdf(s.grid), x=s.grid)
    assert bench_schedule.revenue == pytest.approx(approx, abs=1e-5)


def test_rent_schedule_examples(bench, bench_schedule):
    s = bench_schedule
    rents = ct.rent_schedule(s, bench)
    assert np.all(rents[s.grid < s.theta_star_low] == 0)
    assert rents[-1] == pytest.approx(0, abs=1e-9)
    th = np.linspace(s.theta_star_low, s.theta_star_high, 7)
    g = ct.gamma_selection(bench, th, np.ones(7, dtype=int))
    lb = bench.params.lambda_b
    np.testing.assert_allclose(g, (1 - MU) * (bench.u.d1(th) - 2 * lb * bench.u(th)), atol=1e-15)


def test_rent_schedule_detects_tampering(bench, bench_schedule):
    s = bench_schedule
    bad = ct.MenuSchedule(s.grid, s.pi_g, s.pi_b, s.price, s.rent + 1e-3 * (s.rent > 0),
                          s.theta_star_low, s.theta_star_high, s.theta_G, s.revenue, s.regime)
    with pytest.raises(ct.ConsistencyError):
        ct.rent_schedule(bad, bench)


def test_virtual_surplus_examples(bench):
    hi = 0.6
    u_hi = float(bench.u(hi))
    assert float(ct.virtual_surplus(bench, hi, 0.7, hi)) == pytest.approx((MU * 0.7 + 1 - 2 * MU) * u_hi)
    e = make(pr.bounded_exponential(), mu=0.5)
    assert float(ct.virtual_surplus(e, 0.3, 0.0, hi)) == 0.0
    with pytest.raises(DomainError):
        ct.virtual_surplus(bench, 0.9, 0.5, hi)


def test_virtual_surplus_coefficient_sign_is_chi(bench, rng):
    hi = rng.uniform(0.1, 2.0, 1000)
    th = hi * rng.uniform(0, 1, 1000)
    coef = ct.virtual_surplus(bench, th, 1.0, hi) - ct.virtual_surplus(bench, th, 0.0, hi)
    np.testing.assert_allclose(coef, MU * ct.chi(bench, th, hi), atol=1e-12)


def test_cumulative_simpson_exact_for_cubics():
    grid = np.linspace(0, 1, 11)
    out = ct.cumulative_simpson(lambda t, ref: t ** 3 - t, grid, (0.33,))
    np.testing.assert_allclose(out, grid ** 4 / 4 - grid ** 2 / 2, atol=1e-15)


def test_truncated_exponential_economy_solves():
    e = make(pr.bounded_exponential(), F=pr.truncated_exponential(0.7, 2.0))
    s = ct.solve_menu(e, 201)
    assert 0 <= s.theta_star_low <= s.theta_G <= s.theta_star_high <= 2
    assert np.all(np.diff(s.price) >= 0)


def test_schedule_ic_on_grid(bench, bench_schedule):
    """Every grid type prefers its own product (tolerance 1e-8)."""
    report = audit_menu(bench_schedule, bench, tolerance=1e-8)
    assert not report.ir_violations
    n_bad = len(report.ic_violations)
    assert n_bad == 0, f"{n_bad} IC violations, worst {report.worst_ic:.3g}"
