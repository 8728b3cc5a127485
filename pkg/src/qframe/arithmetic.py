"""Arithmetic relations and operations on rational string states.

Relations work on the bit content directly: equality compares signs and
1-site sets, ordering finds the highest site where the 1-sets differ.
Operations work on exact integer mantissas and re-encode the result.
The projector forms are expectation sums over the finite support of the
operands.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .strings import (
    ZERO,
    ZERO_COMPONENT,
    BasisState,
    Component,
    MixedState,
    PureState,
    Sign,
    as_pure,
    component_from_mantissa,
)


class UnsupportedComparison(ValueError):
    """Ordering requested on states with a nonzero imaginary part."""


@dataclass(frozen=True)
class ComparisonOutcome:
    equal: bool
    less_than: bool

    @property
    def leq(self) -> bool:
        return self.equal or self.less_than


# -- relations ------------------------------------------------------------

def _same_ones(a: Component, b: Component) -> bool:
    lo = min(a.lo, b.lo)
    return a.bits << (a.lo - lo) == b.bits << (b.lo - lo)


def _component_eq(a: Component, b: Component) -> bool:
    if not _same_ones(a, b):
        return False
    return a.bits == 0 or a.sign == b.sign


def eq_a(x: BasisState, y: BasisState) -> bool:
    """Arithmetic equality: same signs and the same 1-sites on both chains.

    Zero components compare equal whatever their raw sign.
    """
    return _component_eq(x.re, y.re) and _component_eq(x.im, y.im)


def _compare_ones(a: Component, b: Component) -> int:
    """-1, 0, 1 as ``1_a`` is below, equal to, or above ``1_b``.

    ``1_a < 1_b`` when the highest site in exactly one of the sets lies
    in ``1_b``.
    """
    lo = min(a.lo, b.lo)
    A = a.bits << (a.lo - lo)
    B = b.bits << (b.lo - lo)
    diff = A ^ B
    if not diff:
        return 0
    top = diff.bit_length() - 1
    return -1 if (B >> top) & 1 else 1


def compare_components(a: Component, b: Component) -> int:
    """Total order on signed components: negatives < zero < positives.

    Negative pairs use the reversed 1-set order of their magnitudes.
    """
    ca = 0 if a.bits == 0 else int(a.sign)
    cb = 0 if b.bits == 0 else int(b.sign)
    if ca != cb:
        return -1 if ca < cb else 1
    if ca == 0:
        return 0
    c = _compare_ones(a, b)
    return c if ca > 0 else -c


def _require_real(*states: BasisState) -> None:
    for s in states:
        if s.im.bits:
            raise UnsupportedComparison(f"ordering is only defined on pure-real states, got {s}")


def compare_a(x: BasisState, y: BasisState) -> ComparisonOutcome:
    _require_real(x, y)
    c = compare_components(x.re, y.re)
    return ComparisonOutcome(equal=c == 0, less_than=c < 0)


def leq_a(x: BasisState, y: BasisState) -> bool:
    _require_real(x, y)
    return compare_components(x.re, y.re) <= 0


def lt_a(x: BasisState, y: BasisState) -> bool:
    _require_real(x, y)
    return compare_components(x.re, y.re) < 0


# -- projector expectations -------------------------------------------------

def _pair_expectation(x: PureState | BasisState, y: PureState | BasisState,
                      pred: Callable[[BasisState, BasisState], bool]) -> float:
    x, y = as_pure(x), as_pure(y)
    px = [(s, abs(a) ** 2) for s, a in x.terms.items()]
    py = [(s, abs(a) ** 2) for s, a in y.terms.items()]
    total = 0.0
    for u, wu in px:
        for v, wv in py:
            if pred(u, v):
                total += wu * wv
    return min(max(total, 0.0), 1.0)


def proj_eq_a(x: PureState | BasisState, y: PureState | BasisState) -> float:
    """``<x (x) y| P_=A |x (x) y>``."""
    return _pair_expectation(x, y, eq_a)


def proj_lt_a(x: PureState | BasisState, y: PureState | BasisState) -> float:
    return _pair_expectation(x, y, lt_a)


def proj_leq_a(x: PureState | BasisState, y: PureState | BasisState) -> float:
    """``<P_=A> + <P_<A>`` on pure-real superpositions."""
    for s in (x, y):
        for b in as_pure(s).terms:
            _require_real(b)
    return _pair_expectation(x, y, leq_a)


# -- operations --------------------------------------------------------------

def _add_components(a: Component, b: Component, sub: bool = False) -> Component:
    ma, ea = a.mantissa()
    mb, eb = b.mantissa()
    if sub:
        mb = -mb
    e = min(ea, eb)
    return component_from_mantissa((ma << (ea - e)) + (mb << (eb - e)), e)


def add_a(x: BasisState, y: BasisState) -> BasisState:
    return BasisState(_add_components(x.re, y.re), _add_components(x.im, y.im))


def sub_a(x: BasisState, y: BasisState) -> BasisState:
    return BasisState(_add_components(x.re, y.re, sub=True), _add_components(x.im, y.im, sub=True))


def mul_a(x: BasisState, y: BasisState) -> BasisState:
    a, ea = x.re.mantissa()
    b, eb = x.im.mantissa()
    c, ec = y.re.mantissa()
    d, ed = y.im.mantissa()
    # (a + bi)(c + di) with per-term exponents; align each sum on its smaller exponent
    e1, e2 = ea + ec, eb + ed
    e = min(e1, e2)
    re = component_from_mantissa((a * c << (e1 - e)) - (b * d << (e2 - e)), e)
    e3, e4 = ea + ed, eb + ec
    f = min(e3, e4)
    im = component_from_mantissa((a * d << (e3 - f)) + (b * c << (e4 - f)), f)
    return BasisState(re, im)


def neg_a(x: BasisState) -> BasisState:
    return sub_a(ZERO, x)


def div_a(x: BasisState, y: BasisState, ell: int) -> BasisState:
    """``x / y`` truncated toward zero at site ``-ell``.

    The result differs from the exact quotient by less than ``2**-ell``.
    """
    if ell < 0:
        raise ValueError("accuracy level must be nonnegative")
    if x.im.bits or y.im.bits:
        raise UnsupportedComparison("complex division is not supported")
    my, ey = y.re.mantissa()
    if my == 0:
        raise ZeroDivisionError("division by an arithmetic zero state")
    mx, ex = x.re.mantissa()
    # q = mx * 2**(ex - ey + ell) / my, truncated toward zero
    shift = ex - ey + ell
    num, den = mx, my
    if shift >= 0:
        num <<= shift
    else:
        den <<= -shift
    q = abs(num) // abs(den)
    if (num < 0) != (den < 0):
        q = -q
    return BasisState(component_from_mantissa(q, -ell), ZERO_COMPONENT)


def abs_a(x: BasisState) -> BasisState:
    """Arithmetic absolute value of a pure-real state."""
    if x.im.bits:
        raise UnsupportedComparison("absolute value is taken per component; split complex states first")
    return BasisState(abs_component(x.re), x.im)


def abs_component(c: Component) -> Component:
    if c.sign is Sign.PLUS:
        return c
    return Component(Sign.PLUS, c.lo, c.hi, c.bits)


def mixed_op(op: Callable[[BasisState, BasisState], BasisState],
             x: PureState | BasisState, y: PureState | BasisState) -> MixedState:
    """Diagonal ensemble of ``op`` over every basis pair of the supports."""
    x, y = as_pure(x), as_pure(y)
    ens = []
    for u, au in x.terms.items():
        wu = abs(au) ** 2
        for v, av in y.terms.items():
            ens.append((wu * abs(av) ** 2, op(u, v)))
    total = sum(w for w, _ in ens)
    return MixedState(tuple((w / total, s) for w, s in ens))


def mixed_add(x: PureState | BasisState, y: PureState | BasisState) -> MixedState:
    return mixed_op(add_a, x, y)
