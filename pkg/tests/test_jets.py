"""Jet2 algebra: product and chain rules hold exactly against symbolic forms."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pinnbands.errors import ShapeError, UnsupportedOrderError
from pinnbands.jets import Jet2

finite = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False)


def random_jet(rng, ndim=1):
    return Jet2(rng.normal(), rng.normal(size=ndim), _sym(rng, ndim))


def _sym(rng, n):
    a = rng.normal(size=(n, n))
    return 0.5 * (a + a.T)


def test_variable_and_constant():
    x = Jet2.variable(1.5, 0, 2)
    assert x.value == 1.5
    assert np.array_equal(x.d1, [1.0, 0.0])
    assert np.all(x.d2 == 0.0)
    c = Jet2.constant(4.0, 1)
    assert c.value == 4.0 and np.all(c.d1 == 0.0)


def test_dimension_limits():
    with pytest.raises(UnsupportedOrderError):
        Jet2(0.0, np.zeros(3), np.zeros((3, 3)))
    with pytest.raises(ShapeError):
        Jet2(0.0, np.zeros(2), np.zeros((1, 1)))


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=50, deadline=None)
def test_product_rule(seed):
    rng = np.random.default_rng(seed)
    f, g = random_jet(rng, 2), random_jet(rng, 2)
    p = f * g
    assert abs(p.value - f.value * g.value) < 1e-12
    expect_d1 = f.value * g.d1 + g.value * f.d1
    assert np.max(np.abs(p.d1 - expect_d1)) < 1e-12
    outer = np.outer(f.d1, g.d1)
    expect_d2 = f.value * g.d2 + g.value * f.d2 + outer + outer.T
    assert np.max(np.abs(p.d2 - expect_d2)) < 1e-12
    assert np.max(np.abs(p.d2 - p.d2.T)) == 0.0


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=50, deadline=None)
def test_chain_rule_exp(seed):
    rng = np.random.default_rng(seed)
    f = random_jet(rng)
    e = f.exp()
    ev = np.exp(f.value)
    assert abs(e.value - ev) < 1e-12 * max(1.0, abs(ev))
    assert np.max(np.abs(e.d1 - ev * f.d1)) < 1e-12 * max(1.0, abs(ev))
    expect = ev * f.d2 + ev * np.outer(f.d1, f.d1)
    assert np.max(np.abs(e.d2 - expect)) < 1e-11 * max(1.0, abs(ev))


def test_composition_against_hand_derivatives():
    # w(x) = sin(x) * exp(2x) at x = 0.7, exact jets of the composition
    x = Jet2.variable(0.7)
    w = x.sin() * (2.0 * x).exp()
    s, c, e = np.sin(0.7), np.cos(0.7), np.exp(1.4)
    d1 = c * e + 2 * s * e
    d2 = -s * e + 2 * c * e + 2 * (c * e + 2 * s * e)
    assert abs(w.value - s * e) < 1e-12
    assert abs(w.d1[0] - d1) < 1e-12
    assert abs(w.d2[0, 0] - d2) < 5e-12


def test_arithmetic_mixing_scalars():
    x = Jet2.variable(2.0)
    y = 3.0 * x - 1.0 + x * x
    assert y.value == 3.0 * 2.0 - 1.0 + 4.0
    assert y.d1[0] == 3.0 + 2.0 * 2.0
    assert y.d2[0, 0] == 2.0


def test_reciprocal_and_division():
    x = Jet2.variable(2.0)
    inv = 1.0 / 2.0
    r = x.reciprocal()
    assert abs(r.value - inv) < 1e-15
    assert abs(r.d1[0] + 1.0 / 4.0) < 1e-15
    assert abs(r.d2[0, 0] - 2.0 / 8.0) < 1e-15
    q = (x * x) / x
    assert abs(q.value - 2.0) < 1e-14
    assert abs(q.d1[0] - 1.0) < 1e-14
    assert abs(q.d2[0, 0]) < 1e-14


def test_trig_jets_vs_finite_differences():
    h = 1e-5

    def f(t):
        return np.sin(t) * np.cos(2.0 * t)

    x = Jet2.variable(0.9)
    j = x.sin() * (2.0 * x).cos()
    fd1 = (f(0.9 + h) - f(0.9 - h)) / (2 * h)
    fd2 = (f(0.9 + h) - 2 * f(0.9) + f(0.9 - h)) / h**2
    assert abs(j.d1[0] - fd1) < 1e-9
    assert abs(j.d2[0, 0] - fd2) < 1e-5
