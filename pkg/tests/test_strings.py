import json
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import all_real_states, basis_states, canonical_text, component_value, components, state_value
from qframe.strings import (
    ZERO,
    BasisState,
    Component,
    DyadicComplex,
    MixedState,
    PureState,
    Sign,
    StateFormatError,
    canonicalize,
    deserialize,
    encode,
    encode_number,
    inner_product,
    parse_component,
    serialize,
    to_json,
    value,
)


def test_canonicalize_strips_zeros():
    s = canonicalize("+", "0011.0100")
    assert str(s.re) == "+11.01"
    assert (s.re.lo, s.re.hi) == (-2, 1)


def test_canonicalize_negative_zero():
    s = canonicalize("-", "000.00")
    assert s == ZERO
    assert s.re.sign is Sign.PLUS and (s.re.lo, s.re.hi, s.re.bits) == (0, 0, 0)


def test_canonicalize_keeps_canonical_input():
    s = canonicalize("+", "1011.0101")
    assert str(s.re) == "+1011.0101"
    assert (s.re.lo, s.re.hi) == (-4, 3)


def test_interval_must_contain_zero():
    with pytest.raises(ValueError):
        Component(Sign.PLUS, 1, 2, 1)


def test_value_examples():
    assert value(ZERO) == DyadicComplex.of(0)
    assert value(BasisState(parse_component("+0.001"), Component(Sign.PLUS, 0, 0, 0))).real == Fraction(1, 8)
    v = value(canonicalize("+", "1011.0101"))
    assert v.real == component_value(parse_component("+1011.0101")) == Fraction(181, 16)


def test_encode_examples():
    assert encode_number(0) == ZERO
    s = encode_number(2.5)
    assert str(s.re) == "+10.1" and (s.re.lo, s.re.hi) == (-1, 1)
    s = encode_number(Fraction(-1, 4), 1)
    assert str(s.re) == "-0.01" and str(s.im) == "+1."


def test_dyadic_rejects_non_dyadic():
    with pytest.raises(ValueError):
        DyadicComplex.of(Fraction(1, 3))


@given(basis_states())
def test_value_matches_bit_sum(x):
    v = value(x)
    assert (v.real, v.imag) == state_value(x)


@given(components())
def test_component_text_matches_binary_expansion(c):
    assert str(c) == canonical_text(component_value(c))


def test_encode_value_round_trip_exhaustive():
    states = all_real_states(3)
    assert len(states) == 255
    for x in states:
        assert encode(value(x)) == x
        assert x.is_canonical


@given(st.integers(-10**6, 10**6), st.integers(-20, 20), st.integers(-10**6, 10**6), st.integers(-20, 20))
def test_value_of_encode_is_identity(rn, re_, imn, ie):
    v = DyadicComplex.from_parts(rn, re_, imn, ie)
    assert value(encode(v)) == v


@given(components(), st.integers(0, 4), st.integers(0, 4))
def test_padding_zeros_keeps_value(c, below, above):
    padded = Component(c.sign, c.lo - below, c.hi + above, c.bits << below)
    assert component_value(padded) == component_value(c)
    assert padded.canonical() == c.canonical()
    assert padded.canonical().canonical() == padded.canonical()


def test_inner_product_examples():
    x, y = encode_number(1), encode_number(2)
    assert inner_product(x, x) == 1
    assert inner_product(x, y) == 0
    sup = PureState.superpose([(x, 1), (y, 1)])
    assert inner_product(sup, PureState.basis(x)) == pytest.approx(1 / math.sqrt(2), abs=1e-15)


def test_pure_state_validation():
    with pytest.raises(ValueError):
        PureState({encode_number(1): 0.5})
    s = PureState({encode_number(1): 1.0, encode_number(2): 1e-16})
    assert len(s) == 1


def test_mixed_state_validation():
    with pytest.raises(ValueError):
        MixedState(((0.5, ZERO), (0.4, encode_number(1))))
    with pytest.raises(ValueError):
        MixedState(((1.5, ZERO), (-0.5, encode_number(1))))


def test_zero_json_document():
    doc = to_json(ZERO)
    assert doc == {"re": {"sign": "+", "lo": 0, "hi": 0, "bits": "0"},
                   "im": {"sign": "+", "lo": 0, "hi": 0, "bits": "0"}}
    assert deserialize(serialize(ZERO)) == ZERO


def test_json_bits_most_significant_first():
    doc = to_json(canonicalize("+", "1011.0101"))
    assert doc["re"] == {"sign": "+", "lo": -4, "hi": 3, "bits": "10110101"}


@given(basis_states())
def test_basis_round_trip(x):
    assert deserialize(serialize(x)) == x


@given(st.lists(basis_states(), min_size=1, max_size=4, unique=True),
       st.lists(st.complex_numbers(min_magnitude=0.1, max_magnitude=2), min_size=4, max_size=4))
def test_pure_and_mixed_round_trip(states, amps):
    p = PureState.superpose(zip(states, amps))
    q = deserialize(serialize(p))
    assert q.allclose(p, 0)
    m = MixedState(tuple((1 / len(states), s) for s in states))
    m2 = deserialize(serialize(m))
    assert [w for w, _ in m2] == [w for w, _ in m] and [s for _, s in m2] == states


def test_bits_length_mismatch_is_reported():
    doc = to_json(encode_number(2.5))
    doc["re"]["bits"] = "1"
    with pytest.raises(StateFormatError) as e:
        deserialize(json.dumps(doc))
    assert e.value.position == "$.re.bits"


def test_malformed_json_reports_position():
    with pytest.raises(StateFormatError) as e:
        deserialize('{"re": ')
    assert e.value.position == 7
