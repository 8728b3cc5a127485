import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import all_real_states, basis_states, pair_projector_expectation, real_states, state_value
from qframe.arithmetic import (
    UnsupportedComparison,
    abs_a,
    add_a,
    compare_a,
    div_a,
    eq_a,
    leq_a,
    lt_a,
    mixed_add,
    mul_a,
    proj_eq_a,
    proj_leq_a,
    sub_a,
)
from qframe.strings import ZERO, BasisState, PureState, canonicalize, encode_number, value

P = BasisState.parse
SQRT_HALF = 1 / math.sqrt(2)


def test_eq_examples():
    x = P("+1.1")
    assert eq_a(x, x)
    assert not eq_a(P("+1.1"), P("-1.1"))
    assert eq_a(ZERO, canonicalize("-", "0."))


def test_leq_examples():
    assert leq_a(P("+01.1"), P("+10.0"))
    assert leq_a(P("+1.1"), P("+1.1"))
    assert leq_a(P("-10."), P("-1."))
    assert not leq_a(P("-1."), P("-10."))


def test_ordering_refuses_complex():
    with pytest.raises(UnsupportedComparison):
        leq_a(P("+1.", "+1."), P("+1."))
    with pytest.raises(UnsupportedComparison):
        abs_a(P("-1.", "+1."))


def test_relations_match_values_exhaustively():
    states = all_real_states(3)
    vals = [state_value(s)[0] for s in states]
    for x, vx in zip(states, vals):
        for y, vy in zip(states, vals):
            assert eq_a(x, y) == (vx == vy)
            assert leq_a(x, y) == (vx <= vy)
            c = compare_a(x, y)
            assert not (c.equal and c.less_than)
            assert c.leq == leq_a(x, y)


def test_operations_match_values_exhaustively():
    states = all_real_states(3)
    vals = [state_value(s)[0] for s in states]
    for x, vx in zip(states, vals):
        for y, vy in zip(states, vals):
            for op, ref in ((add_a, vx + vy), (sub_a, vx - vy), (mul_a, vx * vy)):
                r = op(x, y)
                assert r.is_canonical
                assert state_value(r) == (ref, 0)


@given(basis_states(), basis_states())
def test_complex_operations_match_values(x, y):
    (a, b), (c, d) = state_value(x), state_value(y)
    assert state_value(add_a(x, y)) == (a + c, b + d)
    assert state_value(sub_a(x, y)) == (a - c, b - d)
    assert state_value(mul_a(x, y)) == (a * c - b * d, a * d + b * c)


def test_operation_examples():
    assert str(add_a(P("+1.1"), P("+10.1")).re) == "+100."
    x = P("+1.01")
    assert add_a(x, ZERO) == x
    assert sub_a(P("+1."), P("+1.")) == ZERO


def test_div_examples():
    assert div_a(P("+1."), P("+10."), 3) == P("+0.1")
    r = div_a(P("+1."), P("+11."), 4)
    assert state_value(r)[0] == Fraction(5, 16)
    x = P("-101.011")
    for ell in range(0, 6):
        assert div_a(x, x, ell) == P("+1.")
    with pytest.raises(ZeroDivisionError):
        div_a(P("+1."), ZERO, 3)


@given(real_states(), real_states(), st.integers(1, 10))
def test_div_error_bound(x, y, ell):
    vy = state_value(y)[0]
    if vy == 0:
        return
    q = state_value(x)[0] / vy
    r = state_value(div_a(x, y, ell))[0]
    assert abs(r - q) < Fraction(1, 2 ** ell)
    # truncation toward zero
    assert abs(r) <= abs(q) and (r == 0 or (r > 0) == (q > 0))


def test_abs_examples():
    assert abs_a(P("-1.01")) == P("+1.01")
    assert abs_a(P("+1.01")) == P("+1.01")
    assert abs_a(ZERO) == ZERO


@given(real_states(), real_states(), real_states())
def test_order_axioms(x, y, z):
    assert leq_a(x, x)
    assert leq_a(x, y) or leq_a(y, x)
    if leq_a(x, y) and leq_a(y, x):
        assert eq_a(x, y)
    if leq_a(x, y) and leq_a(y, z):
        assert leq_a(x, z)
    assert lt_a(x, y) == (leq_a(x, y) and not eq_a(x, y))


@given(basis_states(), basis_states())
def test_projectors_on_basis_states(x, y):
    assert proj_eq_a(x, y) == (1.0 if eq_a(x, y) else 0.0)


@given(real_states(), real_states())
def test_leq_projector_on_basis_states(x, y):
    assert proj_leq_a(x, y) == (1.0 if leq_a(x, y) else 0.0)


def test_projector_superposition_examples():
    u, v = P("+1."), P("+10.")
    sup = PureState.superpose([(u, 1), (v, 1)])
    assert proj_eq_a(sup, PureState.basis(u)) == pytest.approx(0.5, abs=1e-12)
    assert proj_leq_a(PureState.basis(u), PureState.basis(v)) == 1.0
    sup2 = PureState.superpose([(P("+1."), 1), (P("+100."), 1)])
    assert proj_leq_a(sup2, PureState.basis(v)) == pytest.approx(0.5, abs=1e-12)


@given(st.lists(real_states(4), min_size=1, max_size=4, unique=True),
       st.lists(real_states(4), min_size=1, max_size=4, unique=True),
       st.lists(st.complex_numbers(min_magnitude=0.1, max_magnitude=3), min_size=8, max_size=8))
def test_projectors_match_expanded_sums(xs, ys, amps):
    x = PureState.superpose(zip(xs, amps[:4]))
    y = PureState.superpose(zip(ys, amps[4:]))
    assert proj_eq_a(x, y) == pytest.approx(pair_projector_expectation(x, y, lambda a, b: a == b), abs=1e-12)
    assert proj_leq_a(x, y) == pytest.approx(pair_projector_expectation(x, y, lambda a, b: a[0] <= b[0]), abs=1e-12)


def test_mixed_add_examples():
    one, two = P("+1."), P("+10.")
    m = mixed_add(PureState.basis(one), PureState.basis(two))
    assert [(w, s) for w, s in m] == [(1.0, P("+11."))]
    sup = PureState.superpose([(one, 1), (two, 1)])
    m = mixed_add(sup, PureState.basis(one))
    got = {str(s.re): w for w, s in m}
    assert got == pytest.approx({"+10.": 0.5, "+11.": 0.5}, abs=1e-12)
    m = mixed_add(sup, PureState.basis(ZERO))
    assert {s: w for w, s in m} == pytest.approx({one: 0.5, two: 0.5}, abs=1e-12)


@given(st.lists(basis_states(3), min_size=1, max_size=3, unique=True),
       st.lists(basis_states(3), min_size=1, max_size=3, unique=True))
def test_mixed_add_expectation_is_linear(xs, ys):
    x = PureState.superpose((s, 1) for s in xs)
    y = PureState.superpose((s, 1) for s in ys)
    m = mixed_add(x, y)
    assert sum(w for w, _ in m) == pytest.approx(1, abs=1e-12)
    ex = sum(complex(value(s)) * abs(a) ** 2 for s, a in x.terms.items())
    ey = sum(complex(value(s)) * abs(a) ** 2 for s, a in y.terms.items())
    assert m.expected_value() == pytest.approx(ex + ey, abs=1e-9)


def test_div_rejects_complex():
    with pytest.raises(UnsupportedComparison):
        div_a(encode_number(1, 1), encode_number(1), 2)
