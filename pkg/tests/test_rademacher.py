import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, stats

from banachmc.errors import InvalidArgumentError
from banachmc.rademacher import (
    SpaceSpec,
    conjugate,
    f_alpha_ell,
    kahane_K_q1,
    khintchine_B,
    type_constant_lp_seq,
)


def test_khintchine_examples():
    assert khintchine_B(1.5) == 1.0
    assert khintchine_B(2.0) == 1.0
    assert khintchine_B(4.0) == pytest.approx(3 ** 0.25, rel=1e-12)


@pytest.mark.parametrize("q", [2.5, 3.0, 5.0, 8.0])
def test_khintchine_is_gaussian_moment(q):
    # oracle: numeric q-th absolute moment of the standard normal
    m = integrate.quad(lambda z: abs(z) ** q * stats.norm.pdf(z), -np.inf, np.inf)[0]
    assert khintchine_B(q) == pytest.approx(m ** (1 / q), rel=1e-9)


def test_kahane_examples():
    assert kahane_K_q1(2.0) == pytest.approx(math.sqrt(2))
    assert kahane_K_q1(1.3) == pytest.approx(math.sqrt(2))
    assert kahane_K_q1(3.0) == pytest.approx(2.0)


@pytest.mark.parametrize("fn", [khintchine_B, kahane_K_q1])
def test_constants_reject_q_below_one(fn):
    with pytest.raises(InvalidArgumentError):
        fn(0.9)


def test_type_constant_examples():
    assert type_constant_lp_seq(1.5, 16, 2.0) == pytest.approx(16 ** (1 / 6), rel=1e-12)
    assert type_constant_lp_seq(1.5, 16, 1.2) == 1.0
    assert type_constant_lp_seq(2.0, 12345, 2.0) == 1.0
    assert type_constant_lp_seq(math.inf, 100, 2.0) == pytest.approx(math.sqrt(2 * math.e * math.log(100)))
    assert type_constant_lp_seq(math.inf, 1, 2.0) == pytest.approx(math.sqrt(2.0))


@pytest.mark.parametrize("args", [(0.5, 4, 2.0), (1.5, 0, 2.0), (1.5, 4, 2.5), (1.5, 4, 0.9)])
def test_type_constant_rejects(args):
    with pytest.raises(InvalidArgumentError):
        type_constant_lp_seq(*args)


@pytest.mark.parametrize("s", [1.0, 1.2, 1.5, 1.9])
def test_growth_assumption_for_sequence_spaces(s):
    spec = SpaceSpec(1.0, 2.0, a0=1.0, a1=1.0 - 1.0 / s, C_tau=1.0)
    for N in [2 ** k for k in range(1, 15)] + [3, 7, 1000]:
        for r in np.linspace(s, 2.0, 9)[1:]:
            rc = conjugate(r)
            lhs = N ** (-(spec.a0 - spec.a1 * rc)) * type_constant_lp_seq(s, N, r) ** rc
            assert lhs <= spec.C_tau * (1 + 1e-11)


@given(st.floats(1.0, 2.5), st.integers(1, 10 ** 6))
def test_type_constant_monotone_in_r(s, N):
    rs = np.linspace(1.0, 2.0, 21)
    vals = [type_constant_lp_seq(s, N, r) for r in rs]
    # non-decreasing on the bounded branch r <= min(s, 2) and beyond
    assert all(b >= a * (1 - 1e-12) for a, b in zip(vals, vals[1:]))


def test_f_alpha_examples():
    spec = SpaceSpec(1.0, 2.0, a0=1.0, a1=0.5)
    for N in (3, 64, 1000):
        for r in (1.2, 1.5, 2.0):
            assert f_alpha_ell(r, N, 0.5, spec) == pytest.approx(N, rel=1e-12)
    spec = SpaceSpec(1.0, 2.0, a0=1.0, a1=1 / 3)
    assert f_alpha_ell(2.0, 8, 1.0, spec) == pytest.approx(8 ** (7 / 3), rel=1e-12)
    assert f_alpha_ell(2.0, 100, 1.0, spec) < f_alpha_ell(1.5, 100, 1.0, spec)
    with pytest.raises(InvalidArgumentError):
        f_alpha_ell(1.0, 8, 1.0, spec)


@given(st.floats(0.05, 2.0), st.floats(0.0, 1.0), st.floats(0.0, 2.0), st.integers(2, 10 ** 5))
def test_f_alpha_monotonicity_sign(alpha, a1, a0, N):
    spec = SpaceSpec(1.0, 2.0, a0=a0, a1=a1)
    rs = np.linspace(1.05, 2.0, 12)
    vals = np.array([f_alpha_ell(r, N, alpha, spec) for r in rs])
    d = np.diff(np.log(vals))
    if abs(alpha - a1) < 1e-9:
        assert np.allclose(d, 0.0, atol=1e-9)
    elif alpha > a1:
        assert np.all(d < 0)
    else:
        assert np.all(d > 0)


def test_space_spec_derived_exponents():
    s = SpaceSpec(1.2, 1.5, q_tilde=3.0)
    assert s.q_bar == 1.5 and s.q_hat == 2.0
    assert s.p_conj == pytest.approx(6.0) and s.q_bar_conj == pytest.approx(3.0)
    assert SpaceSpec(1.0, 1.5).q_tilde == 1.5


@pytest.mark.parametrize("kw", [dict(p=0.9, q=1.5), dict(p=1.6, q=1.5), dict(p=1.0, q=1.5, q_tilde=1.2),
                                dict(p=1.0, q=1.5, a0=-1.0), dict(p=1.0, q=1.5, C_tau=0.5)])
def test_space_spec_rejects(kw):
    with pytest.raises(InvalidArgumentError):
        SpaceSpec(**kw)


def test_conjugate():
    assert conjugate(2.0) == 2.0
    assert conjugate(1.5) == pytest.approx(3.0)
    assert math.isinf(conjugate(1.0))
    assert conjugate(math.inf) == 1.0
