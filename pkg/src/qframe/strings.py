"""Complex binary rational string states.

A basis state is the occupancy record left by a commuting product of
creation operators: one sign qubit and one bit per site for the real
(a) chain, and the same for the imaginary (b) chain.  The binal point
sits at site 0, so every chain interval ``[lo, hi]`` contains 0.

Canonical states carry no leading or trailing zeros.  Non-canonical
records are still valid basis states of the Fock space (gauge
transformations produce them) and are kept as-is until canonicalized.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import IntEnum
from fractions import Fraction
from typing import Any, Iterable, Iterator, Mapping, Union

AMP_EPS = 1e-15
NORM_TOL = 1e-12


class StateFormatError(ValueError):
    """Malformed state input; ``position`` locates the problem."""

    def __init__(self, message: str, position: Any = None):
        self.position = position
        where = f" at {position}" if position is not None else ""
        super().__init__(f"{message}{where}")


class Sign(IntEnum):
    PLUS = 1
    MINUS = -1

    @property
    def symbol(self) -> str:
        return "+" if self is Sign.PLUS else "-"

    @classmethod
    def parse(cls, text: str) -> "Sign":
        if text == "+":
            return cls.PLUS
        if text in ("-", "−"):
            return cls.MINUS
        raise StateFormatError(f"bad sign {text!r}")


@dataclass(frozen=True, slots=True)
class Component:
    """One signed bit string on ``[lo, hi]``; bit ``j - lo`` of ``bits`` is s(j)."""

    sign: Sign
    lo: int
    hi: int
    bits: int

    def __post_init__(self):
        if self.lo > 0 or self.hi < 0:
            raise StateFormatError(f"interval [{self.lo},{self.hi}] does not contain 0")
        if self.bits < 0 or self.bits >> (self.hi - self.lo + 1):
            raise StateFormatError(f"bits do not fit interval [{self.lo},{self.hi}]")

    @property
    def width(self) -> int:
        return self.hi - self.lo + 1

    @property
    def is_zero(self) -> bool:
        return self.bits == 0

    @property
    def is_canonical(self) -> bool:
        if self.bits == 0:
            return self.lo == 0 and self.hi == 0 and self.sign is Sign.PLUS
        if self.lo < 0 and not self.bits & 1:
            return False
        if self.hi > 0 and not (self.bits >> (self.hi - self.lo)) & 1:
            return False
        return True

    def bit(self, j: int) -> int:
        if j < self.lo or j > self.hi:
            return 0
        return (self.bits >> (j - self.lo)) & 1

    def ones(self) -> frozenset[int]:
        """The set of sites holding a 1."""
        out = []
        b, j = self.bits, self.lo
        while b:
            if b & 1:
                out.append(j)
            b >>= 1
            j += 1
        return frozenset(out)

    def mantissa(self) -> tuple[int, int]:
        """Signed integer ``m`` and exponent ``e`` with value ``m * 2**e``."""
        return int(self.sign) * self.bits, self.lo

    def fraction(self) -> Fraction:
        m, e = self.mantissa()
        return Fraction(m) * Fraction(2) ** e

    def canonical(self) -> "Component":
        if self.is_canonical:
            return self
        return component_from_mantissa(int(self.sign) * self.bits, self.lo)

    def text(self) -> str:
        """Bits most-significant first (site ``hi`` down to ``lo``)."""
        return format(self.bits, f"0{self.width}b")

    def __str__(self) -> str:
        s = self.text()
        cut = self.hi + 1
        return f"{self.sign.symbol}{s[:cut]}.{s[cut:]}"


ZERO_COMPONENT = Component(Sign.PLUS, 0, 0, 0)


def component_from_mantissa(m: int, e: int) -> Component:
    """Canonical component holding the value ``m * 2**e``."""
    if m == 0:
        return ZERO_COMPONENT
    sign = Sign.PLUS if m > 0 else Sign.MINUS
    m = abs(m)
    tz = (m & -m).bit_length() - 1
    m >>= tz
    e += tz
    if e >= 0:
        return Component(sign, 0, max(m.bit_length() - 1 + e, 0), m << e)
    return Component(sign, e, max(m.bit_length() - 1 + e, 0), m)


def component_from_bits(sign: Sign | str, lo: int, text: str) -> Component:
    """Build a raw component from a most-significant-first bit string starting at ``hi``."""
    if isinstance(sign, str):
        sign = Sign.parse(sign)
    if not text or any(c not in "01" for c in text):
        raise StateFormatError(f"bad bit string {text!r}")
    hi = lo + len(text) - 1
    return Component(sign, lo, hi, int(text, 2))


def parse_component(text: str) -> Component:
    """Parse the usual notation, e.g. ``"+1011.0101"`` or ``"-0.01"``.

    The digits are kept exactly as written (no zero stripping), so
    ``"+0011.0100"`` yields the raw interval ``[-4, 3]``.
    """
    text = text.strip()
    sign = Sign.PLUS
    if text and text[0] in "+-−":
        sign = Sign.parse(text[0])
        text = text[1:]
    whole, _, frac = text.partition(".")
    whole = whole or "0"
    return component_from_bits(sign, -len(frac), whole + frac)


@dataclass(frozen=True, slots=True)
class DyadicComplex:
    """Exact value ``re_num * 2**re_exp + i * im_num * 2**im_exp``.

    Numerators are odd or zero; zero carries exponent 0.
    """

    re_num: int
    re_exp: int
    im_num: int
    im_exp: int

    def __post_init__(self):
        for num, exp in ((self.re_num, self.re_exp), (self.im_num, self.im_exp)):
            if num == 0 and exp != 0 or num != 0 and num % 2 == 0:
                raise ValueError("DyadicComplex must be built canonically; use DyadicComplex.of")

    @staticmethod
    def _norm(m: int, e: int) -> tuple[int, int]:
        if m == 0:
            return 0, 0
        tz = (m & -m).bit_length() - 1
        return m >> tz, e + tz

    @classmethod
    def from_parts(cls, re_num: int, re_exp: int, im_num: int = 0, im_exp: int = 0) -> "DyadicComplex":
        return cls(*cls._norm(re_num, re_exp), *cls._norm(im_num, im_exp))

    @classmethod
    def of(cls, re: Any = 0, im: Any = 0) -> "DyadicComplex":
        """Accepts ints, Fractions, floats or decimal strings with dyadic values."""
        parts = []
        for x in (re, im):
            q = Fraction(x)
            d = q.denominator
            if d & (d - 1):
                raise ValueError(f"{x!r} is not a dyadic rational")
            parts += [q.numerator, -(d.bit_length() - 1)]
        return cls.from_parts(*parts)

    @property
    def real(self) -> Fraction:
        return Fraction(self.re_num) * Fraction(2) ** self.re_exp

    @property
    def imag(self) -> Fraction:
        return Fraction(self.im_num) * Fraction(2) ** self.im_exp

    def is_real(self) -> bool:
        return self.im_num == 0

    def __complex__(self) -> complex:
        return complex(float(self.real), float(self.imag))

    def __add__(self, other: "DyadicComplex") -> "DyadicComplex":
        return DyadicComplex.of(self.real + other.real, self.imag + other.imag)

    def __sub__(self, other: "DyadicComplex") -> "DyadicComplex":
        return DyadicComplex.of(self.real - other.real, self.imag - other.imag)

    def __mul__(self, other: "DyadicComplex") -> "DyadicComplex":
        a, b, c, d = self.real, self.imag, other.real, other.imag
        return DyadicComplex.of(a * c - b * d, a * d + b * c)

    def __neg__(self) -> "DyadicComplex":
        return DyadicComplex(-self.re_num, self.re_exp, -self.im_num, self.im_exp)

    def __str__(self) -> str:
        if self.im_num == 0:
            return str(self.real)
        return f"{self.real}+{self.imag}i"


@dataclass(frozen=True, slots=True)
class BasisState:
    """Occupancy record ``|gamma s, delta t>`` of both chains."""

    re: Component = ZERO_COMPONENT
    im: Component = ZERO_COMPONENT

    @property
    def is_canonical(self) -> bool:
        return self.re.is_canonical and self.im.is_canonical

    @property
    def is_real(self) -> bool:
        return self.im.bits == 0

    def canonical(self) -> "BasisState":
        if self.is_canonical:
            return self
        return BasisState(self.re.canonical(), self.im.canonical())

    def site_count(self) -> int:
        return self.re.width + self.im.width

    @classmethod
    def parse(cls, re: str = "+0", im: str = "+0") -> "BasisState":
        """Raw state from the usual notation, e.g. ``BasisState.parse("+1.1")``."""
        return cls(parse_component(re), parse_component(im))

    def __str__(self) -> str:
        if self.im == ZERO_COMPONENT:
            return str(self.re)
        return f"({self.re}, {self.im}i)"


ZERO = BasisState()


def canonicalize(re_sign: Sign | str, re: Component | str, im_sign: Sign | str = Sign.PLUS,
                 im: Component | str = "0") -> BasisState:
    """Canonical basis state from raw signs and bit components.

    ``re``/``im`` may be Components (their own sign is overridden) or
    bit strings in the ``"0011.0100"`` notation.
    """
    parts = []
    for sign, comp in ((re_sign, re), (im_sign, im)):
        if isinstance(sign, str):
            sign = Sign.parse(sign)
        if isinstance(comp, str):
            comp = parse_component(comp)
        parts.append(Component(sign, comp.lo, comp.hi, comp.bits).canonical())
    return BasisState(*parts)


def value(state: BasisState) -> DyadicComplex:
    """Eigenvalue of the number operator on ``state``."""
    rm, re_ = state.re.mantissa()
    im, ie = state.im.mantissa()
    return DyadicComplex.from_parts(rm, re_, im, ie)


def encode(v: DyadicComplex) -> BasisState:
    """Canonical basis state whose value is ``v``."""
    return BasisState(component_from_mantissa(v.re_num, v.re_exp),
                      component_from_mantissa(v.im_num, v.im_exp))


def encode_number(re: Any = 0, im: Any = 0) -> BasisState:
    return encode(DyadicComplex.of(re, im))


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized finite superposition of basis states."""

    terms: Mapping[BasisState, complex] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for s, a in self.terms.items():
            if not isinstance(s, BasisState):
                raise TypeError(f"PureState keys must be BasisState, got {type(s).__name__}")
            a = complex(a)
            if abs(a) > AMP_EPS:
                clean[s] = a
        norm = sum(abs(a) ** 2 for a in clean.values())
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"PureState is not normalized (norm^2 = {norm!r})")
        object.__setattr__(self, "terms", clean)

    @classmethod
    def basis(cls, state: BasisState) -> "PureState":
        return cls({state: 1.0})

    @classmethod
    def superpose(cls, pairs: Iterable[tuple[BasisState, complex]], normalize: bool = True) -> "PureState":
        """Sum amplitudes of repeated states, then (optionally) renormalize."""
        acc: dict[BasisState, complex] = {}
        for s, a in pairs:
            acc[s] = acc.get(s, 0) + complex(a)
        if normalize:
            n = math.sqrt(sum(abs(a) ** 2 for a in acc.values()))
            if n == 0:
                raise ValueError("cannot normalize the zero vector")
            acc = {s: a / n for s, a in acc.items()}
        return cls(acc)

    def __iter__(self) -> Iterator[tuple[BasisState, complex]]:
        return iter(self.terms.items())

    def __len__(self) -> int:
        return len(self.terms)

    def probabilities(self) -> dict[BasisState, float]:
        return {s: abs(a) ** 2 for s, a in self.terms.items()}

    def is_basis(self) -> bool:
        return len(self.terms) == 1

    def single(self) -> BasisState:
        if len(self.terms) != 1:
            raise ValueError("state is a superposition of %d basis states" % len(self.terms))
        return next(iter(self.terms))

    def allclose(self, other: "PureState", tol: float = 1e-10) -> bool:
        keys = set(self.terms) | set(other.terms)
        return all(abs(self.terms.get(k, 0) - other.terms.get(k, 0)) <= tol for k in keys)

    def __repr__(self) -> str:
        inner = ", ".join(f"{a:.6g}|{s}>" for s, a in self.terms.items())
        return f"PureState({inner})"


def as_pure(x: "BasisState | PureState") -> PureState:
    return PureState.basis(x) if isinstance(x, BasisState) else x


def inner_product(x: PureState | BasisState, y: PureState | BasisState) -> complex:
    """``<x|y>``."""
    x, y = as_pure(x), as_pure(y)
    if len(x.terms) > len(y.terms):
        return sum((x.terms[s].conjugate() * a for s, a in y.terms.items() if s in x.terms), 0j)
    return sum((a.conjugate() * y.terms[s] for s, a in x.terms.items() if s in y.terms), 0j)


@dataclass(frozen=True, eq=False)
class MixedState:
    """Probability-weighted ensemble (diagonal density operator)."""

    ensemble: tuple[tuple[float, Union[BasisState, PureState]], ...]

    def __post_init__(self):
        ens = tuple((float(w), s) for w, s in self.ensemble)
        if any(w < -NORM_TOL for w, _ in ens):
            raise ValueError("negative ensemble weight")
        total = sum(w for w, _ in ens)
        if abs(total - 1.0) > NORM_TOL:
            raise ValueError(f"ensemble weights sum to {total!r}")
        object.__setattr__(self, "ensemble", ens)

    def __iter__(self):
        return iter(self.ensemble)

    def __len__(self) -> int:
        return len(self.ensemble)

    def merged(self) -> dict[BasisState, float]:
        """Total weight per basis state (pure members contribute |amp|^2 shares)."""
        out: dict[BasisState, float] = {}
        for w, s in self.ensemble:
            for b, a in as_pure(s):
                out[b] = out.get(b, 0.0) + w * abs(a) ** 2
        return out

    def expected_value(self) -> complex:
        return sum((p * complex(value(b)) for b, p in self.merged().items()), 0j)


# -- JSON ---------------------------------------------------------------

def _component_json(c: Component) -> dict:
    return {"sign": c.sign.symbol, "lo": c.lo, "hi": c.hi, "bits": c.text()}


def _component_from_json(d: Any, path: str) -> Component:
    if not isinstance(d, dict):
        raise StateFormatError("expected an object", path)
    for key in ("sign", "lo", "hi", "bits"):
        if key not in d:
            raise StateFormatError(f"missing key {key!r}", path)
    lo, hi, bits = d["lo"], d["hi"], d["bits"]
    if not isinstance(lo, int) or not isinstance(hi, int) or isinstance(lo, bool) or isinstance(hi, bool):
        raise StateFormatError("lo/hi must be integers", path)
    if lo > 0 or hi < 0:
        raise StateFormatError(f"interval [{lo},{hi}] does not contain 0", path)
    if not isinstance(bits, str) or len(bits) != hi - lo + 1:
        raise StateFormatError(f"bits length must be hi-lo+1 = {hi - lo + 1}", f"{path}.bits")
    if any(c not in "01" for c in bits):
        raise StateFormatError("bits must be 0/1", f"{path}.bits")
    try:
        sign = Sign.parse(d["sign"])
    except StateFormatError:
        raise StateFormatError(f"bad sign {d['sign']!r}", f"{path}.sign") from None
    return Component(sign, lo, hi, int(bits, 2))


def to_json(state: BasisState | PureState | MixedState) -> dict:
    if isinstance(state, BasisState):
        return {"re": _component_json(state.re), "im": _component_json(state.im)}
    if isinstance(state, PureState):
        return {"terms": [{"state": to_json(s), "amp": [a.real, a.imag]} for s, a in state.terms.items()]}
    if isinstance(state, MixedState):
        return {"ensemble": [{"w": w, "state": to_json(s)} for w, s in state.ensemble]}
    raise TypeError(f"cannot serialize {type(state).__name__}")


def from_json(d: Any, path: str = "$") -> BasisState | PureState | MixedState:
    if not isinstance(d, dict):
        raise StateFormatError("expected an object", path)
    if "terms" in d:
        terms = d["terms"]
        if not isinstance(terms, list):
            raise StateFormatError("terms must be a list", f"{path}.terms")
        pairs = {}
        for i, t in enumerate(terms):
            p = f"{path}.terms[{i}]"
            if not isinstance(t, dict) or "state" not in t or "amp" not in t:
                raise StateFormatError("term needs 'state' and 'amp'", p)
            s = from_json(t["state"], f"{p}.state")
            if not isinstance(s, BasisState):
                raise StateFormatError("term state must be a basis state", f"{p}.state")
            amp = t["amp"]
            if (not isinstance(amp, list) or len(amp) != 2
                    or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in amp)):
                raise StateFormatError("amp must be [re, im]", f"{p}.amp")
            if s in pairs:
                raise StateFormatError("duplicate basis state", f"{p}.state")
            pairs[s] = complex(amp[0], amp[1])
        try:
            return PureState(pairs)
        except ValueError as e:
            raise StateFormatError(str(e), path) from None
    if "ensemble" in d:
        ens = d["ensemble"]
        if not isinstance(ens, list):
            raise StateFormatError("ensemble must be a list", f"{path}.ensemble")
        items = []
        for i, t in enumerate(ens):
            p = f"{path}.ensemble[{i}]"
            if not isinstance(t, dict) or "w" not in t or "state" not in t:
                raise StateFormatError("entry needs 'w' and 'state'", p)
            s = from_json(t["state"], f"{p}.state")
            if isinstance(s, MixedState):
                raise StateFormatError("nested ensembles are not allowed", f"{p}.state")
            items.append((t["w"], s))
        try:
            return MixedState(tuple(items))
        except (ValueError, TypeError) as e:
            raise StateFormatError(str(e), path) from None
    if "re" in d or "im" in d:
        re = _component_from_json(d["re"], f"{path}.re") if "re" in d else ZERO_COMPONENT
        im = _component_from_json(d["im"], f"{path}.im") if "im" in d else ZERO_COMPONENT
        return BasisState(re, im)
    raise StateFormatError("unrecognized state document", path)


def serialize(state: BasisState | PureState | MixedState) -> str:
    return json.dumps(to_json(state), separators=(",", ":"))


def deserialize(text: str) -> BasisState | PureState | MixedState:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise StateFormatError(e.msg, e.pos) from None
    return from_json(doc)

