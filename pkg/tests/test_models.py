import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from banachmc.errors import InvalidArgumentError
from banachmc.function_spaces import make_partition
from banachmc.models import (
    BvpModel,
    FaModel,
    bvp_exact_mean,
    bvp_exact_mean_derivative,
    bvp_reference_second_moment,
    bvp_sample,
    bvp_solution,
    fa_exact_mean,
    fa_exact_second_moment,
    fa_sample,
    fa_second_moment_admissible,
    fa_second_moment_q_hat,
    make_level_sampler,
)


# ---------------------------------------------------------------- BVP

def test_bvp_sample_examples():
    P = make_partition(2)
    m = BvpModel(1.9, 1.5)
    np.testing.assert_allclose(bvp_sample(m, 0.5, P).nodal_values, [0.0, -math.sqrt(0.5), 0.0], atol=1e-15)
    u = bvp_sample(m, 0.25, P).nodal_values
    assert u[1] == pytest.approx(0.5 - 0.5, abs=1e-15)
    assert u[2] == pytest.approx(math.sqrt(0.75) - 0.5, rel=1e-14)
    assert u[2] == pytest.approx(0.36603, abs=1e-5)


def test_bvp_model_defaults_and_validation():
    m = BvpModel(1.5)
    assert m.eta == pytest.approx(1 + 1 / 1.5 - 0.01)
    assert m.kappa == pytest.approx(2 - m.eta)
    for kw in (dict(p=1.0), dict(p=2.5), dict(p=1.5, eta=1.7), dict(p=1.5, eta=0.9)):
        with pytest.raises(InvalidArgumentError):
            BvpModel(**kw)
    with pytest.raises(InvalidArgumentError):
        bvp_sample(m, 1.0, make_partition(2))


@pytest.mark.parametrize("eta", [1.2, 1.5, 1.9])
def test_bvp_mean_matches_quadrature(eta):
    for x in (0.1, 0.37, 0.5, 0.93):
        ref = integrate.quad(lambda y: bvp_solution(x, y, eta), 0, 1, points=[x], limit=200)[0]
        assert bvp_exact_mean(x, eta) == pytest.approx(ref, rel=1e-9, abs=1e-12)


@given(st.floats(0.01, 0.99), st.floats(1.05, 1.95))
def test_bvp_mean_derivative_against_finite_difference(x, eta):
    h = 1e-6
    fd = (bvp_exact_mean(x + h, eta) - bvp_exact_mean(x - h, eta)) / (2 * h)
    assert bvp_exact_mean_derivative(x, eta) == pytest.approx(fd, abs=1e-6)


@given(st.floats(1e-3, 0.999), st.floats(1.05, 1.95))
def test_bvp_mean_derivative_antisymmetry(x, eta):
    assert bvp_exact_mean_derivative(x, eta) == pytest.approx(-bvp_exact_mean_derivative(1 - x, eta), abs=1e-14)


def test_bvp_reference_second_moment():
    eta = 1.4
    P = make_partition(8)
    R = bvp_reference_second_moment(P, eta).values
    assert np.all(R[0] == 0.0) and np.all(R[:, 0] == 0.0)
    np.testing.assert_array_equal(R, R.T)
    # midpoint oracle for the diagonal entry at x = 1/2
    n = 10 ** 6
    y = (np.arange(n) + 0.5) / n
    ref = np.mean(bvp_solution(0.5, y, eta) ** 2)
    assert R[4, 4] == pytest.approx(ref, rel=1e-6)
    # Jensen: E[u(x)^2] >= E[u(x)]^2
    assert np.all(np.diag(R) >= bvp_exact_mean(P.nodes, eta) ** 2 - 1e-14)


# ---------------------------------------------------------------- FA

def test_fa_sample_examples():
    P = make_partition(2)
    v = fa_sample(FaModel(1.0, 2.0, 1.0), 0.5, P).cell_values
    assert v[0] == pytest.approx(2 * math.log(2), rel=1e-14)
    assert v[1] == pytest.approx(2 * math.log(1.5 / 1.0), rel=1e-14)
    m = fa_sample(FaModel(1.0, 2.0, 1.1), 0.25, P, "midpoint").cell_values
    np.testing.assert_allclose(m, [0.5 ** -1.1, 1.0], rtol=1e-14)
    with pytest.raises(InvalidArgumentError):
        fa_sample(FaModel(1.0, 2.0), 0.5, P, "nodal")


@given(st.floats(1e-6, 0.5), st.floats(1e-3, 0.99), st.floats(0.2, 1.45))
def test_cell_average_matches_quadrature(h, y, eta):
    from banachmc.models import fa_sample_values
    P = type(make_partition(1))(np.array([0.0, h, 1.0]))
    ref = integrate.quad(lambda x: (x + y) ** -eta, 0, h, epsabs=0, epsrel=1e-12)[0] / h
    assert fa_sample_values([y], P, eta)[0, 0] == pytest.approx(ref, rel=1e-10)


@pytest.mark.parametrize("eta", [0.5, 1.0, 1.1, 1.4])
def test_fa_mean_matches_quadrature(eta):
    for x in (1e-3, 0.2, 1.0):
        ref = integrate.quad(lambda y: (x + y) ** -eta, 0, 1, epsrel=1e-12)[0]
        assert fa_exact_mean(x, eta) == pytest.approx(ref, rel=1e-10)
    assert fa_exact_mean(1.0, 1.0) == pytest.approx(math.log(2))
    with pytest.raises(InvalidArgumentError):
        fa_exact_mean(0.0, eta)


def test_fa_second_moment_examples():
    assert fa_exact_second_moment(0.5, 0.5) == pytest.approx(4 / 3, rel=1e-14)
    assert fa_exact_second_moment(0.5, 1.0) == pytest.approx(2 * math.log(1.5), rel=1e-14)
    assert fa_exact_second_moment(0.25, 1.0) == pytest.approx(4 / 3 * math.log(2.5), rel=1e-14)
    ref = integrate.quad(lambda y: 1 / ((0.25 + y) * (1.0 + y)), 0, 1, epsrel=1e-13)[0]
    assert fa_exact_second_moment(0.25, 1.0) == pytest.approx(ref, rel=1e-12)
    np.testing.assert_allclose(fa_exact_second_moment([0.5, 1.0], [1.0, 0.5]), [2 * math.log(1.5)] * 2, rtol=1e-14)


@given(st.floats(1e-4, 1.0), st.floats(1e-4, 1.0))
def test_fa_second_moment_against_quadrature_and_symmetry(x, xp):
    ref = integrate.quad(lambda y: 1 / ((x + y) * (xp + y)), 0, 1, epsrel=1e-12, limit=200)[0]
    v = fa_exact_second_moment(x, xp)
    assert v == pytest.approx(ref, rel=1e-9)
    assert v == pytest.approx(fa_exact_second_moment(xp, x), rel=1e-14)


@given(st.floats(1e-3, 1.0))
def test_fa_second_moment_is_continuous_at_the_diagonal(x):
    on = fa_exact_second_moment(x, x)
    near = fa_exact_second_moment(x, x + 1e-6 * x)
    assert near == pytest.approx(on, rel=2e-6)


def test_fa_model_validation():
    m = FaModel(1.0, 1.5)
    assert m.eta == pytest.approx(1 + 2 / 3 - 0.01)
    assert FaModel(1.0, 1.5, 1.1).q_hat == 2.0 and FaModel(1.0, 1.5, 1.1).alpha == pytest.approx(0.9)
    assert FaModel(1.0, 1.5, 1.6).q_hat == pytest.approx(1.6666666666, rel=1e-9)
    for args in ((0.9, 1.5), (1.0, 1.0), (1.0, 2.5), (1.0, 1.5, 1.7)):
        with pytest.raises(InvalidArgumentError):
            FaModel(*args)


def test_second_moment_admissibility():
    assert fa_second_moment_admissible(1.0, 2.0) and fa_second_moment_admissible(1.5, 1.1)
    assert not fa_second_moment_admissible(1.5, 2.0)
    with pytest.raises(InvalidArgumentError):
        FaModel.second_moment(1.5, 2.0)
    assert fa_second_moment_q_hat(1.0, 2.0) == 2.0
    assert fa_second_moment_q_hat(1.2, 1.5) == 2.0
    assert fa_second_moment_q_hat(1.5, 1.1) == pytest.approx(1.5)
    with pytest.raises(InvalidArgumentError):
        fa_second_moment_q_hat(1.5, 2.0)


# ---------------------------------------------------------------- samplers

def dyadic(level):
    return make_partition(2 ** level)


def test_bvp_coupled_difference_vanishes_at_shared_nodes():
    s = make_level_sampler(BvpModel(1.5), dyadic)
    fine, coarse = s.coupled_sample(4, seed=3)
    diff = (fine - coarse.prolong(fine.partition)).nodal_values
    np.testing.assert_allclose(diff[::2], 0.0, atol=1e-15)
    assert np.any(np.abs(diff[1::2]) > 0)


def test_level_one_is_paired_with_zero():
    s = make_level_sampler(FaModel(1.0, 1.5), dyadic)
    fine, coarse = s.coupled_sample(1, seed=0)
    assert np.all(coarse.cell_values == 0.0) and np.all(fine.cell_values > 0.0)


def test_fa_coupled_pair_is_consistent():
    # cell averages are nested: the coarse value is the mean of its two children
    s = make_level_sampler(FaModel(1.0, 1.5, 1.1), dyadic)
    fine, coarse = s.coupled_sample(5, seed=8)
    np.testing.assert_allclose(fine.cell_values.reshape(-1, 2).mean(axis=1), coarse.cell_values, rtol=1e-13)


def test_sampler_rejects_unknown_model():
    with pytest.raises(InvalidArgumentError):
        make_level_sampler(object(), dyadic)


def test_fa_second_moment_off_diagonal_example():
    assert fa_exact_second_moment(0.25, 0.5) == pytest.approx(4 * math.log(5 / 3), rel=1e-14)
    ref = integrate.quad(lambda y: 1 / ((0.25 + y) * (0.5 + y)), 0, 1, epsrel=1e-13)[0]
    assert fa_exact_second_moment(0.25, 0.5) == pytest.approx(ref, rel=1e-12)


def test_interpolation_commutes_with_expectation():
    # the average of 10^5 interpolated samples approaches the interpolant of the mean
    from banachmc.estimators import slmc_estimate, stream
    eta, M = 1.4, 10 ** 5
    s = make_level_sampler(BvpModel(1.5, eta), dyadic)
    est = slmc_estimate(s, 3, M, seed=1).estimate.nodal_values
    x = dyadic(3).nodes
    y = stream(1, 3).random(M)
    sd = np.std(bvp_solution(x[None, :], y[:, None], eta), axis=0)
    diff = np.abs(est - bvp_exact_mean(x, eta))
    assert diff[0] == 0.0
    assert np.all(diff[1:] <= 4 * sd[1:] / math.sqrt(M))
