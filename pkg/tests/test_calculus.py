import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from deltavar.calculus import (
    GridFunction,
    check_exgc_identity,
    delta_derivative,
    delta_derivative_n,
    delta_integral,
    difference_operators,
    nested_sigma_integral,
)
from deltavar.errors import DomainMismatch, TimeScaleError, TooFewPoints
from deltavar.timescale import h_grid, make_timescale, random_timescale


def gf(points, values):
    return GridFunction(make_timescale(points), values)


@st.composite
def grid_functions(draw, min_size=2, max_size=10):
    n = draw(st.integers(min_value=min_size, max_value=max_size))
    seed = draw(st.integers(min_value=0, max_value=2**32 - 1))
    rng = np.random.default_rng(seed)
    ts = random_timescale(n, rng, span=draw(st.sampled_from([0.5, 1.0, 5.0])))
    return GridFunction(ts, rng.normal(size=n))


def brute_nest(f, depth, k):
    """Literal recursion: int_a^{sigma(t_k)} of the (depth-1)-nest."""
    if depth == 0:
        return f.values[k]
    mu = f.ts.graininess
    return sum(mu[s] * brute_nest(f, depth - 1, s) for s in range(k + 1))


def test_derivative_of_constant():
    d = delta_derivative(gf([0, 1, 2], [7, 7, 7]))
    assert d.values.tolist() == [0, 0]
    assert d.points.tolist() == [0, 1]


def test_derivative_of_square_on_integers():
    t = np.arange(4.0)
    d = delta_derivative(gf(t, t**2))
    np.testing.assert_array_equal(d.values, 2 * t[:3] + 1)


def test_derivative_is_forward_difference_on_integers():
    f = gf(range(6), [3, -1, 4, 1, 5, 9])
    np.testing.assert_array_equal(delta_derivative(f).values, np.diff(f.values))


def test_second_derivative():
    t = np.arange(4.0)
    np.testing.assert_array_equal(delta_derivative_n(gf(t, t**2), 2).values, [2, 2])
    np.testing.assert_allclose(delta_derivative_n(gf(t, 3 * t), 2).values, [0, 0])
    f = gf(t, t**2)
    assert delta_derivative_n(f, 0) is f


def test_derivative_needs_points():
    with pytest.raises(TooFewPoints):
        delta_derivative_n(gf([0, 1, 2], [1, 2, 3]), 3)


def test_truncated_domain_keeps_parent_graininess():
    f = gf([0, 1, 3], [0, 1, 9])
    d = delta_derivative(f)
    assert d.domain.points.tolist() == [0, 1]
    assert d.graininess.tolist() == [1, 2]
    assert delta_derivative(d).values.tolist() == [(4 - 1) / 1]


def test_integral_examples():
    f = gf([0, 1, 2, 3], [1, 5, 1, 1])
    assert delta_integral(f, 1, 2) == 5
    assert delta_integral(gf([0, 1, 2, 3], [1, 1, 1, 1]), 0, 3) == 3
    assert delta_integral(f, 2, 2) == 0


def test_integral_errors():
    f = gf([0, 1, 2, 3], [1, 1, 1, 1])
    with pytest.raises(ValueError):
        delta_integral(f, 2, 1)
    with pytest.raises(TimeScaleError):
        delta_integral(f, 0, 1.5)
    with pytest.raises(TimeScaleError):
        delta_integral(f.restrict(2), 0, 3)


def test_mismatched_domains_do_not_combine():
    f = gf([0, 1, 2, 3], [1, 2, 3, 4])
    with pytest.raises(DomainMismatch):
        f + delta_derivative(f)
    g = f.restrict(3) + delta_derivative(f)
    assert len(g) == 3


def test_nested_examples():
    ones = gf([0, 1, 2, 3], [1, 1, 1, 1])
    assert nested_sigma_integral(ones, 1, 1) == 2
    assert nested_sigma_integral(ones, 2, 1) == 3
    assert nested_sigma_integral(gf([0, 1, 2, 3], [0, 0, 0, 0]), 2, 2) == 0


def test_nested_outside_range():
    ones = gf([0, 1, 2, 3], [1, 1, 1, 1])
    with pytest.raises(TimeScaleError):
        nested_sigma_integral(ones, 1, 3)


@settings(max_examples=60)
@given(grid_functions(max_size=8), st.integers(min_value=1, max_value=4))
def test_nested_matches_literal_recursion(f, depth):
    g = nested_sigma_integral(f, depth)
    for k in range(len(g)):
        expected = brute_nest(f, depth, k)
        assert g.values[k] == pytest.approx(expected, rel=1e-12, abs=1e-12)


@given(grid_functions())
def test_reconstruction(f):
    d = delta_derivative(f)
    lhs = f.values[1:]
    rhs = f.values[:-1] + f.graininess[:-1] * d.values
    np.testing.assert_allclose(lhs, rhs, rtol=1e-13, atol=1e-13 * np.max(np.abs(f.values)))


@given(grid_functions(), st.data())
def test_fundamental_theorem(f, data):
    d = delta_derivative(f)
    n = len(f)
    c = data.draw(st.integers(0, n - 1))
    e = data.draw(st.integers(c, n - 1))
    assert delta_integral(d, f.ts[c], f.ts[e]) == pytest.approx(
        f.values[e] - f.values[c], abs=1e-10 * (1 + np.max(np.abs(f.values))))


@given(grid_functions(min_size=3), st.data())
def test_additivity(f, data):
    idx = sorted(data.draw(st.lists(st.integers(0, len(f) - 1), min_size=3, max_size=3)))
    c, d, e = (f.ts[i] for i in idx)
    assert delta_integral(f, c, d) + delta_integral(f, d, e) == pytest.approx(
        delta_integral(f, c, e), abs=1e-12 * (1 + np.sum(np.abs(f.values))))


@given(grid_functions(), st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(f, alpha, beta):
    g = GridFunction(f.ts, np.cos(f.points))
    combo = alpha * f + beta * g
    np.testing.assert_allclose(
        delta_derivative(combo).values,
        alpha * delta_derivative(f).values + beta * delta_derivative(g).values,
        atol=1e-9 * (1 + np.max(np.abs(delta_derivative(f).values))))
    assert delta_integral(combo, f.ts.a, f.ts.b) == pytest.approx(
        alpha * delta_integral(f, f.ts.a, f.ts.b) + beta * delta_integral(g, g.ts.a, g.ts.b), abs=1e-10)


def test_difference_operators_match_repeated_quotients():
    rng = np.random.default_rng(3)
    ts = random_timescale(9, rng)
    f = GridFunction(ts, rng.normal(size=9))
    for i, d in enumerate(difference_operators(ts, 4)):
        np.testing.assert_allclose(d @ f.values, delta_derivative_n(f, i).values, rtol=1e-12)


def test_exgc_base_case():
    ts = h_grid(0, 6, 1)
    f = GridFunction(ts, ts.points)
    lhs = delta_derivative(nested_sigma_integral(f, 1)).values
    np.testing.assert_array_equal(lhs, ts.points[1:-1])
    assert check_exgc_identity(f, 0, 1, h=1) == 0


def test_exgc_constant_function():
    ts = h_grid(0, 3, 0.25)
    f = GridFunction(ts, np.full(len(ts), 2.5))
    for i, j in itertools.combinations(range(5), 2):
        if i >= 1:
            assert check_exgc_identity(f, i, j) <= 1e-10


def test_exgc_square_half_step():
    ts = h_grid(0, 4, 0.5)
    f = GridFunction(ts, ts.points**2)
    assert check_exgc_identity(f, 1, 2, h=0.5) <= 1e-10


def test_exgc_preconditions():
    ts = h_grid(0, 2, 1)
    f = GridFunction(ts, ts.points)
    with pytest.raises(TooFewPoints):
        check_exgc_identity(f, 0, 2)
    with pytest.raises(ValueError):
        check_exgc_identity(f, 1, 1)
    with pytest.raises(TimeScaleError):
        check_exgc_identity(gf([0, 1, 3, 4, 5], [1, 2, 3, 4, 5]), 0, 1)


def test_exgc_fails_off_lattice_when_forced():
    # the identity needs uniform steps: on a non-uniform scale the sides differ
    ts = make_timescale([0, 1, 3, 4, 7, 8])
    f = GridFunction(ts, ts.points**2)
    lhs = delta_derivative(nested_sigma_integral(f, 1)).values
    rhs = f.values[1:len(lhs) + 1]
    assert np.max(np.abs(lhs - rhs)) > 1
