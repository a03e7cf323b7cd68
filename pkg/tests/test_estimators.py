import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from banachmc.allocation import AllocationPlan
from banachmc.errors import EvaluationError, InvalidArgumentError
from banachmc.estimators import (
    ErrorMeasurement,
    ParametricLevelSampler,
    aggregate,
    experiment_key,
    fit_rate_loglog,
    mlmc_estimate,
    replicate_error,
    second_moment_mlmc,
    second_moment_slmc,
    slmc_estimate,
    stream,
)
from banachmc.function_spaces import cell_average_project, lp_norm_piecewise, make_partition
from banachmc.models import FaModel, make_level_sampler


def dyadic(level):
    return make_partition(2 ** level)


def plan_for(levels, M):
    return AllocationPlan("mlmc_minkowski", 2.0, 2.0, levels[-1], list(M), 0.0, "test", levels=list(levels))


def linear_sampler():
    # X_l = y * x interpolated on level l, so every correction X_l - X_{l-1} is zero
    return ParametricLevelSampler(lambda y, P: y[:, None] * P.nodes[None, :], dyadic)


# ---------------------------------------------------------------- streams

def test_streams_are_reproducible_and_distinct():
    a = stream(7, 1, 2).random(5)
    np.testing.assert_array_equal(a, stream(7, 1, 2).random(5))
    assert not np.array_equal(a, stream(7, 2, 1).random(5))
    assert experiment_key("bvp_rates") == experiment_key("bvp_rates")
    assert experiment_key("bvp_rates") != experiment_key("fa_rates")


def test_prefix_reuse_across_sample_sizes():
    s = linear_sampler()
    small = slmc_estimate(s, 3, 10, seed=4).estimate
    big = slmc_estimate(s, 3, 20, seed=4).estimate
    y = stream(4, 3).random(20)
    np.testing.assert_allclose(small.nodal_values, y[:10].mean() * small.partition.nodes, rtol=1e-14)
    np.testing.assert_allclose(big.nodal_values, y.mean() * big.partition.nodes, rtol=1e-14)


# ---------------------------------------------------------------- single level

def test_slmc_fixed_sampler():
    s = ParametricLevelSampler(lambda y, P: np.ones((y.size, P.n_cells + 1)) * 3.0, dyadic)
    out = slmc_estimate(s, 2, 17, seed=0)
    np.testing.assert_array_equal(out.estimate.nodal_values, np.full(5, 3.0))
    assert out.samples_drawn == [17] and out.wall_cost == 17 * 4


def test_slmc_single_sample_is_the_sample():
    s = linear_sampler()
    out = slmc_estimate(s, 2, 1, seed=9, key=(3,))
    y = stream(9, 3, 2).random(1)[0]
    np.testing.assert_allclose(out.estimate.nodal_values, y * dyadic(2).nodes, rtol=1e-15)


@pytest.mark.parametrize("M", [0, -3, 2.5])
def test_slmc_rejects_sample_size(M):
    with pytest.raises(InvalidArgumentError):
        slmc_estimate(linear_sampler(), 2, M, seed=0)


def test_nonfinite_sample_reports_index():
    s = ParametricLevelSampler(lambda y, P: np.where(y[:, None] > 0.5, np.inf, 1.0) * np.ones(P.n_cells + 1), dyadic)
    with pytest.raises(EvaluationError) as info:
        slmc_estimate(s, 1, 50, seed=0)
    level, j = info.value.index
    assert level == 1 and stream(0, 1).random(50)[j] > 0.5


# ---------------------------------------------------------------- multilevel

def test_telescoping_is_exact_for_deterministic_levels():
    s = ParametricLevelSampler(lambda y, P: np.tile(np.sin(3 * P.nodes), (y.size, 1)), dyadic)
    out = mlmc_estimate(s, plan_for([1, 2, 3, 4, 5], [9, 7, 5, 3, 1]), seed=1)
    np.testing.assert_allclose(out.estimate.nodal_values, np.sin(3 * dyadic(5).nodes), atol=1e-14)
    assert out.wall_cost == sum(m * 2 ** l for m, l in zip([9, 7, 5, 3, 1], range(1, 6)))


def test_corrections_vanish_for_exactly_represented_samples():
    s = linear_sampler()
    out = mlmc_estimate(s, plan_for([2, 3, 4], [50, 20, 5]), seed=3)
    y = stream(3, 2).random(50)
    np.testing.assert_allclose(out.estimate.nodal_values, y.mean() * dyadic(4).nodes, atol=1e-14)


def test_one_level_equals_single_level():
    model = FaModel(1.0, 1.5, 1.1)
    s = make_level_sampler(model, dyadic)
    a = mlmc_estimate(s, plan_for([4], [33]), seed=5, key=(2,)).estimate
    b = slmc_estimate(s, 4, 33, seed=5, key=(2,)).estimate
    np.testing.assert_array_equal(a.cell_values, b.cell_values)


def test_multilevel_needs_nested_meshes():
    s = ParametricLevelSampler(lambda y, P: np.zeros((y.size, P.n_cells + 1)),
                               {1: make_partition(2), 2: make_partition(3)})
    with pytest.raises(InvalidArgumentError):
        mlmc_estimate(s, plan_for([1, 2], [1, 1]), seed=0)


def test_multilevel_is_unbiased_on_a_toy():
    # X_l = y^l on one cell per level map entry; E[X_2] = 1/3
    s = ParametricLevelSampler(lambda y, P: np.tile((y ** round(math.log2(P.n_cells)))[:, None],
                                                    (1, P.n_cells)), dyadic, basis="cell")
    plan = plan_for([1, 2], [40, 10])
    vals = np.array([mlmc_estimate(s, plan, seed=11, key=(k,)).estimate.cell_values[0]
                     for k in range(3000)])
    se = vals.std(ddof=1) / math.sqrt(vals.size)
    assert abs(vals.mean() - 1 / 3) < 4 * se


# ---------------------------------------------------------------- second moment

def test_second_moment_single_sample_is_rank_one():
    s = linear_sampler()
    U = second_moment_slmc(s, 3, 1, seed=2).estimate.values
    y = stream(2, 3).random(1)[0]
    u = y * dyadic(3).nodes
    np.testing.assert_allclose(U, np.outer(u, u), rtol=1e-14)
    assert np.linalg.matrix_rank(U) == 1


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_second_moment_estimates_are_symmetric(seed):
    s = make_level_sampler(FaModel.second_moment(1.0, 1.5), dyadic)
    a = second_moment_slmc(s, 4, 13, seed=seed).estimate.values
    b = second_moment_mlmc(s, plan_for([2, 3, 4], [20, 8, 3]), seed=seed).estimate.values
    np.testing.assert_array_equal(a, a.T)
    np.testing.assert_allclose(b, b.T, atol=1e-14)


def test_second_moment_cost_units():
    s = linear_sampler()
    out = second_moment_mlmc(s, plan_for([1, 2], [5, 2]), seed=0)
    assert out.wall_cost == 5 * 2 ** 2 + 2 * 4 ** 2


# ---------------------------------------------------------------- errors and fits

def test_replicate_error_of_exact_estimator_is_zero():
    m = replicate_error(lambda k: 2.5, 2.5, abs, K=4, q_outer=2.0)
    assert m.aggregated == 0.0 and m.per_replicate_errors.tolist() == [0.0] * 4


def test_replicate_error_single_replicate():
    m = replicate_error(lambda k: 1.0, 4.0, abs, K=1, q_outer=1.5)
    assert m.aggregated == 3.0


@given(st.lists(st.floats(0.0, 1e6), min_size=1, max_size=40), st.floats(1.0, 4.0))
def test_aggregate_matches_definition(errs, q):
    e = np.asarray(errs)
    m = e.max()
    # scaled so tiny errors do not underflow in the reference
    ref = 0.0 if m == 0 else m * np.mean((e / m) ** q) ** (1 / q)
    assert aggregate(errs, q) == pytest.approx(ref, rel=1e-10, abs=1e-300)


def test_error_measurement_rejects_bad_input():
    with pytest.raises(InvalidArgumentError):
        ErrorMeasurement(np.array([]), 2.0)
    with pytest.raises(InvalidArgumentError):
        ErrorMeasurement(np.array([-1.0]), 2.0)
    with pytest.raises(InvalidArgumentError):
        replicate_error(lambda k: 0.0, 0.0, abs, K=0, q_outer=2.0)


@given(st.floats(1e-3, 1e3), st.floats(-3.0, 3.0))
def test_fit_recovers_exact_power_laws(C, rate):
    xs = 2.0 ** np.arange(1, 9)
    C_fit, r_fit = fit_rate_loglog(xs, C * xs ** -rate)
    assert r_fit == pytest.approx(rate, abs=1e-12)
    assert C_fit == pytest.approx(C, rel=1e-11)


@pytest.mark.parametrize("xs, ys", [([1, 2], [1, 0]), ([0, 2], [1, 1]), ([1], [1]), ([2, 2], [1, 3])])
def test_fit_rejects_degenerate_data(xs, ys):
    with pytest.raises(InvalidArgumentError):
        fit_rate_loglog(xs, ys)


def test_fa_error_decreases_with_sample_size():
    model = FaModel(1.0, 1.5, 1.1)
    s = make_level_sampler(model, dyadic)
    eta = model.eta
    P = dyadic(6)
    anti = lambda x: ((x + 1) ** (2 - eta) - x ** (2 - eta)) / ((1 - eta) * (2 - eta))
    mean = cell_average_project(anti, P)
    errs = []
    for M in (8, 128, 2048):
        m = replicate_error(lambda k: slmc_estimate(s, 6, M, seed=0, key=(k,)).estimate, mean,
                            lambda v: lp_norm_piecewise(v, 1.0), K=40, q_outer=1.5)
        errs.append(m.aggregated)
    assert errs[0] > errs[1] > errs[2]
