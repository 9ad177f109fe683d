import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from deltavar.errors import DomainError, OrderMismatch, ParseError, UnboundVariable, UnknownIdentifier
from deltavar.lagrangian import (
    BinOp,
    Call,
    Const,
    Neg,
    Var,
    differentiate,
    evaluate,
    make_lagrangian,
    parse_expression,
    to_string,
)

VARS = ["t", "y0", "y1", "y2"]

leaves = st.one_of(
    st.sampled_from([Var(v) for v in VARS]),
    st.integers(0, 5).map(lambda k: Const(float(k))),
    st.sampled_from([Const(0.5), Const(1.25)]),
)


def _extend(children):
    return st.one_of(
        st.tuples(st.sampled_from("+-*/"), children, children).map(lambda a: BinOp(*a)),
        st.tuples(children, st.sampled_from([2.0, 3.0, -1.0, 0.5])).map(
            lambda a: BinOp("^", a[0], Const(a[1]))),
        children.map(Neg),
        st.tuples(st.sampled_from(["sin", "cos", "exp", "log", "sqrt"]), children).map(
            lambda a: Call(*a)),
    )


exprs = st.recursive(leaves, _extend, max_leaves=8)
envs = st.fixed_dictionaries({v: st.floats(-2, 2) for v in VARS})


def test_parse_power():
    assert parse_expression("y1^2") == BinOp("^", Var("y1"), Const(2.0))


def test_parse_precedence():
    e = parse_expression("t*y0 + y1^2")
    assert e == BinOp("+", BinOp("*", Var("t"), Var("y0")), BinOp("^", Var("y1"), Const(2.0)))


def test_parse_error_column():
    with pytest.raises(ParseError) as info:
        parse_expression("y1^^2")
    assert info.value.column == 4


@pytest.mark.parametrize("src, expected", [
    ("-y1^2", Neg(BinOp("^", Var("y1"), Const(2.0)))),
    ("2^3^2", BinOp("^", Const(2.0), Const(9.0))),
    ("y0^-1", BinOp("^", Var("y0"), Const(-1.0))),
    ("1 - 2 - 3", BinOp("-", BinOp("-", Const(1.0), Const(2.0)), Const(3.0))),
    ("  t /\ty0*y1 ", BinOp("*", BinOp("/", Var("t"), Var("y0")), Var("y1"))),
    ("sin(t)", Call("sin", Var("t"))),
])
def test_parse_shapes(src, expected):
    assert parse_expression(src) == expected


@pytest.mark.parametrize("src", ["", "   ", "y1 +", "(y1", "y1)", "sin t", "2 y1", "y1 $ 2", "y^2", "y01"])
def test_parse_rejects(src):
    with pytest.raises(ParseError):
        parse_expression(src)


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifier):
        parse_expression("abs(y1)")
    with pytest.raises(UnknownIdentifier):
        parse_expression("x + 1")


def test_non_constant_exponent():
    with pytest.raises(ParseError):
        parse_expression("y1^y0")


def test_order_checked_while_parsing():
    with pytest.raises(OrderMismatch):
        parse_expression("y2 + y1", order=1)


def test_eval_examples():
    assert evaluate(parse_expression("2*t"), {"t": 3}) == 6
    assert evaluate(parse_expression("y1^2"), {"y1": -2}) == 4
    with pytest.raises(DomainError) as info:
        evaluate(parse_expression("y1 + log(t)"), {"t": 0, "y1": 1})
    assert info.value.subexpr == "log(t)"


@pytest.mark.parametrize("src, env", [
    ("1/y0", {"y0": 0.0}),
    ("sqrt(y0)", {"y0": -1.0}),
    ("y0^0.5", {"y0": -4.0}),
    ("y0^-2", {"y0": 0.0}),
    ("exp(y0)", {"y0": 1e5}),
])
def test_eval_domain_errors(src, env):
    with pytest.raises(DomainError):
        evaluate(parse_expression(src), env)


def test_eval_unbound():
    with pytest.raises(UnboundVariable):
        evaluate(parse_expression("y0 + y1"), {"y0": 1.0})


def test_eval_vectorized():
    e = parse_expression("t*y0 + y1^2")
    t = np.array([0.0, 1.0, 2.0])
    out = evaluate(e, {"t": t, "y0": np.ones(3), "y1": np.array([1.0, 2.0, 3.0])})
    np.testing.assert_array_equal(out, [1, 5, 11])


@pytest.mark.parametrize("src, var, expected", [
    ("y1^2", "y1", "2 * y1"),
    ("t*y0 + y1^2", "y0", "t"),
    ("sin(t)*y0", "t", "cos(t) * y0"),
    ("3*t + y2", "y0", "0"),
])
def test_differentiate_shapes(src, var, expected):
    assert to_string(differentiate(parse_expression(src), var)) == expected


def _central(e, env, var, h):
    up, down = dict(env), dict(env)
    up[var] += h
    down[var] -= h
    return (evaluate(e, up) - evaluate(e, down)) / (2 * h)


@settings(max_examples=100, deadline=None)
@given(exprs, envs, st.sampled_from(VARS))
def test_derivative_matches_finite_differences(e, env, var):
    try:
        value = evaluate(e, env)
        d = evaluate(differentiate(e, var), env)
        fd = _central(e, env, var, 1e-6)
        fd_coarse = _central(e, env, var, 1e-4)
    except (DomainError, ZeroDivisionError):
        assume(False)
    assume(all(math.isfinite(v) and abs(v) < 1e4 for v in (value, d, fd, fd_coarse)))
    # skip points where the function is too rough for finite differences to be an oracle
    assume(abs(fd - fd_coarse) <= 1e-4 * (1 + abs(fd)))
    assert abs(d - fd) <= 1e-6 * (1 + abs(value) + abs(d))


@given(exprs)
def test_print_parse_round_trip(e):
    parsed = parse_expression(to_string(e))
    assert parse_expression(to_string(parsed)) == parsed


@given(st.text(alphabet="y0123t+-*/^() .sincoexplgqr", max_size=20))
def test_parse_never_crashes(src):
    try:
        e = parse_expression(src)
    except (ParseError, OrderMismatch):
        return
    assert parse_expression(to_string(e)) == e


@given(st.integers(0, 9).map(float), st.sampled_from(VARS))
def test_constant_derivative_is_zero(c, var):
    e = BinOp("*", Call("sin", Const(c)), BinOp("+", Const(c), Const(1.0)))
    assert differentiate(e, var) == Const(0.0)


def test_make_lagrangian_quadratic():
    lag = make_lagrangian("y1^2", 1)
    assert [to_string(p) for p in lag.partials] == ["0", "2 * y1"]
    lag2 = make_lagrangian("y2^2", 2)
    assert to_string(lag2.partials[2]) == "2 * y2"


def test_make_lagrangian_order_mismatch():
    with pytest.raises(OrderMismatch):
        make_lagrangian("y2^2", 1)
    with pytest.raises(OrderMismatch):
        make_lagrangian("quadratic-acceleration", 1)


def test_builtins():
    assert make_lagrangian("harmonic", 1)(0.0, 3.0, 2.0) == 4 - 9
    assert make_lagrangian("quadratic-velocity", 2)(0.0, 1.0, 3.0, 5.0) == 9


def test_lagrangian_batch_partials():
    lag = make_lagrangian("t*y0^2 + y0*y1", 1)
    t = np.array([1.0, 2.0])
    z = np.array([[1.0, 3.0], [4.0, 5.0]])
    np.testing.assert_allclose(lag.gradient(t, z), [[2 * 1 * 1 + 4, 2 * 2 * 3 + 5], [1, 3]])
    h = lag.hessian(t, z)
    np.testing.assert_allclose(h[0, 0], [2, 4])
    np.testing.assert_allclose(h[0, 1], [1, 1])
    np.testing.assert_allclose(h[1, 1], [0, 0])
