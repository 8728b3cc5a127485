"""Cauchy conditions for state sequences and Cauchy operators.

Limits are truncated: every verdict is "holds at (ell_max, horizon)"
with witnesses searched up to ``witness_budget``.  For each precision
``ell`` the smallest witness ``h`` is reported, i.e. the smallest ``h``
such that every index pair in ``(h, horizon]`` stays within ``2**-ell``.
"""
from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import accumulate
from typing import Any, Callable, Sequence

from .arithmetic import (
    abs_component,
    add_a,
    compare_components,
    div_a,
    leq_a,
    mul_a,
    sub_a,
)
from .strings import (
    ZERO,
    ZERO_COMPONENT,
    BasisState,
    Component,
    DyadicComplex,
    PureState,
    Sign,
    as_pure,
    component_from_mantissa,
    encode,
)


class CauchyError(ValueError):
    pass


class WrongVariantError(CauchyError):
    """A superposed element was given to a basis-only check."""


class PreconditionError(CauchyError):
    pass


class InvariantError(CauchyError):
    pass


@dataclass(frozen=True)
class CauchyParams:
    ell_max: int = 8
    horizon: int = 64
    witness_budget: int = 32
    eps_p: float = 1e-9

    def __post_init__(self):
        if min(self.ell_max, self.horizon, self.witness_budget) < 1:
            raise ValueError("ell_max, horizon and witness_budget must be positive")
        if self.horizon <= self.witness_budget:
            raise ValueError("horizon must exceed witness_budget")
        if not 0 <= self.eps_p < 1:
            raise ValueError("eps_p must lie in [0, 1)")

    def to_json(self) -> dict:
        return {"ellMax": self.ell_max, "horizon": self.horizon,
                "witnessBudget": self.witness_budget, "epsP": self.eps_p}


@dataclass(frozen=True)
class EllResult:
    ell: int
    witness: int | None
    # failing pair when no witness fits the budget
    j: int | None = None
    k: int | None = None
    dev: float | None = None
    min_p: float | None = None

    @property
    def ok(self) -> bool:
        return self.witness is not None

    def to_json(self) -> dict:
        d: dict[str, Any] = {"ell": self.ell}
        if self.ok:
            d["witness"] = self.witness
        else:
            d["fail"] = {"j": self.j, "k": self.k, "dev": self.dev}
        if self.min_p is not None:
            d["minP"] = self.min_p
        return d


@dataclass(frozen=True)
class CauchyVerdict:
    holds: bool
    per_ell: tuple[EllResult, ...]
    params: CauchyParams

    def witness(self, ell: int) -> int | None:
        return self.per_ell[ell - 1].witness

    @property
    def min_p(self) -> float | None:
        ps = [r.min_p for r in self.per_ell if r.min_p is not None]
        return min(ps) if ps else None

    def to_json(self) -> dict:
        return {"holds": self.holds, "perEll": [r.to_json() for r in self.per_ell],
                "params": self.params.to_json()}


# -- integer states --------------------------------------------------------

def integer_state(n: int) -> BasisState:
    """The nonnegative integer string state ``|+, s>`` with ``l_r = 0``."""
    if n < 0:
        raise ValueError("integer states are nonnegative")
    return BasisState(Component(Sign.PLUS, 0, max(n.bit_length() - 1, 0), n), ZERO_COMPONENT)


def integer_value(state: BasisState) -> int:
    if state.re.sign is not Sign.PLUS or state.re.lo != 0 or state.im.bits:
        raise PreconditionError(f"{state} is not a nonnegative integer state")
    return state.re.bits


def power_state(ell: int, imaginary: bool = False) -> BasisState:
    """``|+, -ell>``, the state with value ``2**-ell`` (or ``i * 2**-ell``)."""
    c = component_from_mantissa(1, -ell)
    return BasisState(ZERO_COMPONENT, c) if imaginary else BasisState(c, ZERO_COMPONENT)


# -- sequences and operators --------------------------------------------------

@dataclass
class StateSequence:
    generator: Callable[[int], PureState | BasisState]
    horizon: int
    label: str = ""
    _cache: dict = field(default_factory=dict, repr=False)

    def __call__(self, n: int) -> PureState:
        if n not in self._cache:
            if n < 0 or n > self.horizon:
                raise IndexError(f"index {n} outside [0, {self.horizon}]")
            self._cache[n] = _checked_image(self.generator(n), n)
        return self._cache[n]


def _checked_image(x: Any, n: int) -> PureState:
    if isinstance(x, BasisState):
        return PureState.basis(x)
    if not isinstance(x, PureState):
        raise InvariantError(f"image at {n} is not a state: {x!r}")
    norm = sum(abs(a) ** 2 for a in x.terms.values())
    if abs(norm - 1) > 1e-12:
        raise InvariantError(f"image at {n} is not normalized")
    return x


class CauchyOperator:
    """Map from nonnegative integer states to (superpositions of) rational states.

    Subclasses implement :meth:`image` on the integer value.
    """

    label = "operator"

    def image(self, n: int) -> PureState | BasisState:
        raise NotImplementedError

    def __call__(self, state: BasisState) -> PureState:
        n = integer_value(state)
        return _checked_image(self.image(n), n)

    def at(self, n: int) -> PureState:
        return self(integer_state(n))

    def sequence(self, horizon: int) -> StateSequence:
        return StateSequence(self.at, horizon, self.label)

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.label}>"


def _truncate(q: Fraction, k: int) -> int:
    """Integer ``m`` with ``m / 2**k`` the k-bit truncation of ``q`` toward zero."""
    m = abs(q.numerator) * (1 << k) // q.denominator
    return -m if q < 0 else m


class ConstantOperator(CauchyOperator):
    def __init__(self, q: DyadicComplex | int | str | Fraction):
        self.q = q if isinstance(q, DyadicComplex) else DyadicComplex.of(q)
        self.state = encode(self.q)
        self.label = f"const:{self.q}"

    def image(self, n):
        return self.state


class TruncationOperator(CauchyOperator):
    """Index ``k`` maps to the k-bit binary truncations of ``re + i*im``."""

    def __init__(self, re: Fraction | int = 0, im: Fraction | int = 0, label: str | None = None):
        self.re, self.im = Fraction(re), Fraction(im)
        self.label = label or f"trunc:{self.re}" + (f"+{self.im}i" if self.im else "")

    def image(self, k):
        return BasisState(component_from_mantissa(_truncate(self.re, k), -k),
                          component_from_mantissa(_truncate(self.im, k), -k))


class Sqrt2Operator(CauchyOperator):
    label = "sqrt2"

    def image(self, k):
        return BasisState(component_from_mantissa(math.isqrt(2 << (2 * k)), -k), ZERO_COMPONENT)


class ParityOperator(CauchyOperator):
    """``|+0.>`` on even indices and ``|+1.>`` on odd ones; never Cauchy."""

    label = "parity"

    def image(self, n):
        return encode(DyadicComplex.of(n & 1))


class FunctionOperator(CauchyOperator):
    def __init__(self, fn: Callable[[int], PureState | BasisState], label: str = "fn"):
        self.fn = fn
        self.label = label

    def image(self, n):
        return self.fn(n)


def constant_operator(q) -> ConstantOperator:
    return ConstantOperator(q)


def truncation_operator(numerator: int, denominator: int, imaginary: bool = False) -> TruncationOperator:
    if denominator == 0:
        raise ZeroDivisionError("zero denominator")
    q = Fraction(numerator, denominator)
    if imaginary:
        return TruncationOperator(0, q, label=f"trunc:{q}i")
    return TruncationOperator(q, 0, label=f"trunc:{q}")


def sqrt2_operator() -> Sqrt2Operator:
    return Sqrt2Operator()


# -- pair conditions -------------------------------------------------------------

def _swap(x: BasisState) -> BasisState:
    return BasisState(x.im, x.re)


def project_real(x: BasisState) -> BasisState:
    """P_R on a basis state: the imaginary chain is zeroed."""
    return BasisState(x.re, ZERO_COMPONENT)


def project_imag(x: BasisState) -> BasisState:
    return BasisState(ZERO_COMPONENT, x.im)


def component_within(x: BasisState, y: BasisState, ell: int) -> bool:
    """Both ``|P_R x -A P_R y|_A`` and ``|P_I x -A P_I y|_A`` are ``<=_A |+,-ell>``."""
    target = power_state(ell)
    d = sub_a(project_real(x), project_real(y))
    if not leq_a(BasisState(abs_component(d.re)), target):
        return False
    d = sub_a(project_imag(x), project_imag(y))
    return leq_a(_swap(BasisState(ZERO_COMPONENT, abs_component(d.im))), target)


def max_deviation(x: BasisState, y: BasisState) -> Fraction:
    d = sub_a(x, y)
    return max(abs(d.re.fraction()), abs(d.im.fraction()))


def _grid(states: Sequence[PureState]) -> int:
    e = 0
    for s in states:
        for b in s.terms:
            e = min(e, b.re.lo, b.im.lo)
    return e


def _value_table(x: PureState, e: int) -> dict[tuple[int, int], float]:
    out: dict[tuple[int, int], float] = {}
    for b, a in x.terms.items():
        rm, re_ = b.re.mantissa()
        im, ie = b.im.mantissa()
        key = (rm << (re_ - e), im << (ie - e))
        out[key] = out.get(key, 0.0) + abs(a) ** 2
    return out


def pair_probability(x: PureState | BasisState, y: PureState | BasisState, ell: int) -> float:
    """Probability that real and imaginary differences are both within ``2**-ell``.

    Sum over basis pairs of the two supports of ``|<u|x>|^2 |<v|y>|^2``
    restricted to pairs meeting the condition.  Terms are grouped by
    exact value so large supports cost ``O(n log n)``.
    """
    x, y = as_pure(x), as_pure(y)
    if len(x) == 1 and len(y) == 1:
        return 1.0 if component_within(x.single(), y.single(), ell) else 0.0
    e = _grid([x, y])
    tol = 1 << (-ell - e) if -ell - e >= 0 else 0
    tx, ty = _value_table(x, e), _value_table(y, e)
    by_im: dict[int, tuple[list[int], list[float]]] = {}
    for (re, im), w in sorted(tx.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        keys, ws = by_im.setdefault(im, ([], []))
        keys.append(re)
        ws.append(w)
    prefix = {im: (keys, [0.0, *accumulate(ws)]) for im, (keys, ws) in by_im.items()}
    ims = sorted(prefix)
    total = 0.0
    for (re, im), w in ty.items():
        lo_i = bisect_left(ims, im - tol)
        hi_i = bisect_right(ims, im + tol)
        for xi in ims[lo_i:hi_i]:
            keys, cum = prefix[xi]
            a = bisect_left(keys, re - tol)
            b = bisect_right(keys, re + tol)
            total += w * (cum[b] - cum[a])
    return min(max(total, 0.0), 1.0)


def cauchy_probability(seq: StateSequence, j: int, m: int, ell: int) -> float:
    return pair_probability(seq(j), seq(m), ell)


# -- verdict assembly --------------------------------------------------------------

def _verdict(images: dict[int, PureState], other: dict[int, PureState] | None,
             p: CauchyParams, probabilistic: bool) -> CauchyVerdict:
    """Shared witness search.

    ``other`` switches to the cross condition (second index drawn from
    the other sequence).  Pairs are ordered ``j < k`` for a single
    sequence (the condition is symmetric) and all ``(j, k)`` otherwise.
    """
    H = p.horizon
    idx = range(1, H + 1)
    if other is None:
        pairs = [(j, k) for j in idx for k in idx if j < k]
    else:
        pairs = [(j, k) for j in idx for k in idx]
    rhs = images if other is None else other
    basis = not probabilistic and all(len(images[n]) == 1 for n in idx) and all(len(rhs[n]) == 1 for n in idx)

    results = []
    for ell in range(1, p.ell_max + 1):
        bad_floor = 0
        probs: dict[tuple[int, int], float] = {}
        for j, k in pairs:
            if basis:
                pr = 1.0 if component_within(images[j].single(), rhs[k].single(), ell) else 0.0
            else:
                pr = pair_probability(images[j], rhs[k], ell)
            probs[(j, k)] = pr
            if pr < 1 - p.eps_p:
                bad_floor = max(bad_floor, min(j, k))
        h = bad_floor
        if h <= p.witness_budget:
            tail = [pr for (j, k), pr in probs.items() if min(j, k) > h]
            min_p = min(tail) if tail and not basis else None
            results.append(EllResult(ell, h, min_p=min_p))
            continue
        b = p.witness_budget
        tail = {jk: pr for jk, pr in probs.items() if min(jk) > b}
        fj, fk = min(jk for jk, pr in tail.items() if pr < 1 - p.eps_p)
        if basis:
            dev = float(max_deviation(images[fj].single(), rhs[fk].single()))
            results.append(EllResult(ell, None, fj, fk, dev))
        else:
            mp = min(tail.values())
            results.append(EllResult(ell, None, fj, fk, 1.0 - tail[(fj, fk)], min_p=mp))
    return CauchyVerdict(all(r.ok for r in results), tuple(results), p)


def _images(seq: StateSequence | CauchyOperator, p: CauchyParams) -> dict[int, PureState]:
    if isinstance(seq, CauchyOperator):
        return {n: seq(integer_state(n)) for n in range(1, p.horizon + 1)}
    if seq.horizon < p.horizon:
        raise PreconditionError(f"sequence horizon {seq.horizon} < probe horizon {p.horizon}")
    return {n: seq(n) for n in range(1, p.horizon + 1)}


def is_cauchy_basis_seq(seq: StateSequence, p: CauchyParams = CauchyParams()) -> CauchyVerdict:
    images = _images(seq, p)
    for n, x in images.items():
        if len(x) != 1:
            raise WrongVariantError(f"element {n} is a superposition; use is_cauchy_super")
    return _verdict(images, None, p, probabilistic=False)


def is_cauchy_super(seq: StateSequence, p: CauchyParams = CauchyParams()) -> CauchyVerdict:
    return _verdict(_images(seq, p), None, p, probabilistic=True)


def is_cauchy_operator(op: CauchyOperator, p: CauchyParams = CauchyParams()) -> CauchyVerdict:
    """Operator Cauchy condition with integer states as indices.

    Single-state images are split into real and imaginary projections
    and tested component by component; superposed images use the pair
    probability test.
    """
    images = _images(op, p)
    return _verdict(images, None, p, probabilistic=False)


def _require_cauchy(x, p: CauchyParams, name: str) -> dict[int, PureState]:
    images = _images(x, p)
    if not _verdict(images, None, p, probabilistic=False).holds:
        raise PreconditionError(f"{name} is not Cauchy under {p}")
    return images


def equivalent_seqs(a: StateSequence | CauchyOperator, b: StateSequence | CauchyOperator,
                    p: CauchyParams = CauchyParams()) -> bool:
    """Interleaved condition: ``a_j`` and ``b_k`` close for all large ``j, k``."""
    ia = _require_cauchy(a, p, "first argument")
    ib = _require_cauchy(b, p, "second argument")
    return _verdict(ia, ib, p, probabilistic=False).holds


def _component_magnitude(x: PureState, imaginary: bool) -> Fraction:
    return max(abs((b.im if imaginary else b.re).fraction()) for b in x.terms)


def classify_number(op: CauchyOperator, p: CauchyParams = CauchyParams()) -> str:
    """``"real"``, ``"imaginary"`` or ``"complex"`` from the top half of the horizon."""
    images = _require_cauchy(op, p, "operator")
    top = [images[n] for n in range(p.horizon // 2 + 1, p.horizon + 1)]
    eps = Fraction(1, 1 << p.ell_max)
    if all(_component_magnitude(x, True) <= eps for x in top):
        return "real"
    if all(_component_magnitude(x, False) <= eps for x in top):
        return "imaginary"
    return "complex"


# -- operator arithmetic --------------------------------------------------------

def representative(x: PureState) -> BasisState:
    """Weight-dominant basis state; ties go to the arithmetically least one."""
    best = max(abs(a) ** 2 for a in x.terms.values())
    tied = [b for b, a in x.terms.items() if abs(a) ** 2 >= best - 1e-12]
    if len(tied) == 1:
        return tied[0]

    def key(b: BasisState):
        return (b.re.fraction(), b.im.fraction())
    return min(tied, key=key)


def _div_at(x: BasisState, y: BasisState, n: int) -> BasisState:
    if y.re.bits == 0 and y.im.bits == 0:
        return ZERO
    return div_a(x, y, n)


_OPS = {
    "+": lambda x, y, n: add_a(x, y),
    "-": lambda x, y, n: sub_a(x, y),
    "*": lambda x, y, n: mul_a(x, y),
    "/": _div_at,
}


class ArithmeticOperator(CauchyOperator):
    """Index-wise arithmetic of two operators on their representatives."""

    def __init__(self, kind: str, a: CauchyOperator, b: CauchyOperator):
        if kind not in _OPS:
            raise ValueError(f"unknown operation {kind!r}")
        self.kind, self.a, self.b = kind, a, b
        self.label = f"({a.label} {kind} {b.label})"

    def image(self, n):
        x = representative(self.a.at(n))
        y = representative(self.b.at(n))
        return _OPS[self.kind](x, y, n)


def op_add_r(a: CauchyOperator, b: CauchyOperator) -> CauchyOperator:
    return ArithmeticOperator("+", a, b)


def op_sub_r(a: CauchyOperator, b: CauchyOperator) -> CauchyOperator:
    return ArithmeticOperator("-", a, b)


def op_mul_r(a: CauchyOperator, b: CauchyOperator) -> CauchyOperator:
    return ArithmeticOperator("*", a, b)


def op_div_r(a: CauchyOperator, b: CauchyOperator, p: CauchyParams = CauchyParams()) -> CauchyOperator:
    """Quotient with accuracy ``2**-n`` at index ``n``.

    Indices where ``b`` is still an exact zero map to zero.
    """
    if equivalent_seqs(b, ConstantOperator(0), p):
        raise ZeroDivisionError(f"{b.label} is equivalent to zero at the probe precision")
    return ArithmeticOperator("/", a, b)
