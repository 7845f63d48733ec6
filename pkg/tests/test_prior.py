import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from infoprice.prior import (ChainParams, DensityRegime, DomainError, TransitionMatrix,
                             TwoTypePrior, transition, transition_derivative, two_type_density)

mus = st.floats(0.5, 0.99)
rates = st.floats(0.0, 20.0)
deltas = st.floats(0.0, 10.0)


def test_lambda_g_from_local_balance():
    params = ChainParams(2 / 3, 1.0)
    assert params.lambda_g == pytest.approx(0.5, abs=1e-15)
    assert params.mu * params.lambda_g == pytest.approx((1 - params.mu) * params.lambda_b)


@pytest.mark.parametrize("mu", [0.49, 1.0, 1.2, -0.1])
def test_mu_range_rejected(mu):
    with pytest.raises(DomainError):
        ChainParams(mu, 1.0)
    with pytest.raises(DomainError):
        TwoTypePrior(mu, 0.0)


def test_p_range():
    TwoTypePrior(2 / 3, 0.5)
    with pytest.raises(DomainError, match="outside admissible"):
        TwoTypePrior(2 / 3, 0.51)
    with pytest.raises(DomainError):
        TwoTypePrior(2 / 3, -0.01)


def test_negative_rate_rejected():
    with pytest.raises(DomainError):
        ChainParams(0.6, -1.0)


def test_identity_at_zero():
    np.testing.assert_allclose(transition(ChainParams(2 / 3, 1.0), 0.0).as_array(), np.eye(2), atol=1e-15)


def test_stationary_limit():
    P = transition(ChainParams(2 / 3, 1.0), math.inf).as_array()
    np.testing.assert_allclose(P, [[2 / 3, 1 / 3], [2 / 3, 1 / 3]], atol=1e-15)


def test_hand_value_and_expm():
    params = ChainParams(2 / 3, 1.0)
    delta = math.log(2) / 1.5
    P = transition(params, delta)
    assert P.p_gg == pytest.approx(5 / 6, abs=1e-14)
    np.testing.assert_allclose(P.as_array(), expm(params.rate_matrix * delta), atol=1e-13)


def test_frozen_chain_is_identity():
    params = ChainParams(0.7, 0.0)
    for d in (0.0, 3.0, math.inf):
        np.testing.assert_array_equal(transition(params, d).as_array(), np.eye(2))
    np.testing.assert_array_equal(transition_derivative(params, 2.0), np.zeros((2, 2)))


def test_negative_delta_rejected():
    with pytest.raises(DomainError):
        transition(ChainParams(0.6, 1.0), -0.1)


def test_derivative_examples():
    params = ChainParams(2 / 3, 1.0)
    np.testing.assert_allclose(transition_derivative(params, 0.0), params.rate_matrix)
    assert transition_derivative(params, math.log(2) / 1.5)[0, 0] == pytest.approx(-0.25, abs=1e-14)


def test_vectorized_shapes():
    P = transition(ChainParams(0.6, 2.0), np.linspace(0, 1, 7))
    assert P.as_array().shape == (7, 2, 2)
    assert TransitionMatrix.from_array(P.as_array(), 0.6).p_bg.shape == (7,)


@settings(max_examples=200, deadline=None)
@given(mus, rates, deltas, deltas)
def test_chapman_kolmogorov(mu, lb, d1, d2):
    params = ChainParams(mu, lb)
    lhs = transition(params, d1 + d2).as_array()
    rhs = transition(params, d1).as_array() @ transition(params, d2).as_array()
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(mus, rates, deltas)
def test_rows_stationarity_reversibility(mu, lb, d):
    P = transition(ChainParams(mu, lb), d)
    arr = P.as_array()
    np.testing.assert_allclose(arr.sum(axis=1), 1.0, atol=1e-15)
    np.testing.assert_allclose(np.array([mu, 1 - mu]) @ arr, [mu, 1 - mu], atol=1e-12)
    assert mu * P.p_gb == pytest.approx((1 - mu) * P.p_bg, abs=1e-13)


@settings(max_examples=100, deadline=None)
@given(mus, st.floats(0.01, 5.0), st.floats(0.0, 5.0))
def test_forward_backward(mu, lb, d):
    params = ChainParams(mu, lb)
    Q, P = params.rate_matrix, transition(params, d).as_array()
    D = transition_derivative(params, d)
    np.testing.assert_allclose(D, P @ Q, atol=1e-12)
    np.testing.assert_allclose(D, Q @ P, atol=1e-12)
    h = 1e-6
    fd = (transition(params, d + h).as_array() - P) / h
    np.testing.assert_allclose(fd, D, atol=10 * h * params.total_rate ** 2 + 1e-9)


@pytest.mark.parametrize("mu,p,expected,regime", [
    (2 / 3, 1 / 3, (4 / 9, 2 / 9, 1 / 9), DensityRegime.MIDDLE),
    (2 / 3, 0.0, (2 / 3, 0.0, 1 / 3), DensityRegime.SIGMA),
    (0.55, 0.6, (0.22, 0.33, 0.12), DensityRegime.XI),
])
def test_density_examples(mu, p, expected, regime):
    d = two_type_density(TwoTypePrior(mu, p))
    np.testing.assert_allclose(d[:3], expected, atol=1e-15)
    assert d.regime is regime


@settings(max_examples=300, deadline=None)
@given(mus, st.floats(0.0, 1.0))
def test_density_sums_to_one(mu, frac):
    d = two_type_density(TwoTypePrior(mu, frac * (1 - mu) / mu))
    assert min(d.sigma_g, d.xi, d.sigma_b) >= 0
    assert abs(d.sigma_g + 2 * d.xi + d.sigma_b - 1.0) <= 1e-15


def test_density_matches_transition():
    prior = TwoTypePrior(2 / 3, 0.2)
    P, d = prior.transition(), two_type_density(prior)
    assert prior.mu * P.p_gg == pytest.approx(d.sigma_g)
    assert (1 - prior.mu) * P.p_bg == pytest.approx(d.xi)
    assert (1 - prior.mu) * P.p_bb == pytest.approx(d.sigma_b)
