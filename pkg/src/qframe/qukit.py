"""Base-k string states built from prime-dimensional registers.

A base ``k = p_1 ... p_m`` digit is stored as one digit per prime
register and recombined with the Chinese remainder map.  The gauge
group is U(1) phases times one SU(p) block per prime register.
"""
from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .strings import AMP_EPS, BasisState, Component, Sign

DIGITS = "0123456789abcdefghijklmnopqrstuvwxyz"
UNITARY_TOL = 1e-12


# -- minimal base --------------------------------------------------------------------

def prime_factors(n: int) -> list[int]:
    """Distinct prime factors in increasing order (trial division)."""
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def is_prime(n: int) -> bool:
    return n >= 2 and prime_factors(n) == [n]


def kmin(n: int) -> int:
    """Smallest base in which ``1/n`` has a finite expansion: the radical of ``n``."""
    if not isinstance(n, int) or n < 2:
        raise ValueError("kmin needs an integer n >= 2")
    return math.prod(prime_factors(n))


def verify_kmin(n: int, k: int) -> bool:
    """True iff ``n`` divides ``k**e`` for some ``e <= n``."""
    if n < 2 or k < 2:
        raise ValueError("need n, k >= 2")
    return any(pow(k, e, n) == 0 for e in range(1, n + 1))


def kmin_brute(n: int) -> int:
    return next(k for k in itertools.count(2) if verify_kmin(n, k))


# -- prime bases and digit maps ---------------------------------------------------

@dataclass(frozen=True)
class PrimeBase:
    primes: tuple[int, ...]

    def __post_init__(self):
        ps = tuple(int(p) for p in self.primes)
        if not ps:
            raise ValueError("a base needs at least one prime")
        if any(not is_prime(p) for p in ps):
            raise ValueError(f"not all primes: {ps}")
        if list(ps) != sorted(set(ps)):
            raise ValueError("primes must be distinct and increasing")
        object.__setattr__(self, "primes", ps)

    @property
    def k(self) -> int:
        return math.prod(self.primes)

    def combine(self, parts: Sequence[int]) -> int:
        """Chinese remainder: the unique ``d`` in ``[0, k)`` with ``d = parts[h] mod p_h``."""
        if len(parts) != len(self.primes):
            raise ValueError("one digit per prime register")
        k = self.k
        d = 0
        for s, p in zip(parts, self.primes):
            if not 0 <= s < p:
                raise ValueError(f"digit {s} out of range for p = {p}")
            m = k // p
            d += s * m * pow(m, -1, p)
        return d % k

    def split(self, d: int) -> tuple[int, ...]:
        if not 0 <= d < self.k:
            raise ValueError(f"digit {d} out of range for k = {self.k}")
        return tuple(d % p for p in self.primes)

    def to_json(self) -> dict:
        return {"primes": list(self.primes)}

    @classmethod
    def from_json(cls, d: Mapping) -> "PrimeBase":
        return cls(tuple(d["primes"]))


@dataclass(frozen=True)
class QukitComponent:
    """Signed digit string on ``[lo, hi]``; ``digits[h][j - lo]`` is register h at site j."""

    sign: Sign
    lo: int
    hi: int
    digits: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.lo > 0 or self.hi < 0:
            raise ValueError("interval must contain 0")
        if any(len(r) != self.hi - self.lo + 1 for r in self.digits):
            raise ValueError("register length must match the interval")

    @property
    def width(self) -> int:
        return self.hi - self.lo + 1

    def composite(self, base: PrimeBase, j: int) -> int:
        if len(self.digits) != len(base.primes):
            raise ValueError("register count does not match the base")
        return base.combine([r[j - self.lo] for r in self.digits])

    def value(self, base: PrimeBase) -> Fraction:
        total = sum(Fraction(self.composite(base, j)) * Fraction(base.k) ** j for j in range(self.lo, self.hi + 1))
        return int(self.sign) * total

    def canonical(self, base: PrimeBase) -> "QukitComponent":
        """Strip composite-zero digits at both ends, keeping site 0."""
        lo, hi = self.lo, self.hi
        while hi > 0 and self.composite(base, hi) == 0:
            hi -= 1
        while lo < 0 and self.composite(base, lo) == 0:
            lo += 1
        regs = tuple(r[lo - self.lo: hi - self.lo + 1] for r in self.digits)
        sign = self.sign if any(any(r) for r in regs) else Sign.PLUS
        return QukitComponent(sign, lo, hi, regs)

    def to_json(self, base: PrimeBase) -> dict:
        return {"sign": self.sign.symbol, "lo": self.lo, "hi": self.hi,
                "digits": {str(p): "".join(DIGITS[d] for d in reversed(r)) for p, r in zip(base.primes, self.digits)}}

    @classmethod
    def from_json(cls, d: Mapping, base: PrimeBase) -> "QukitComponent":
        lo, hi = d["lo"], d["hi"]
        regs = []
        for p in base.primes:
            text = d["digits"][str(p)]
            if len(text) != hi - lo + 1:
                raise ValueError(f"register {p} has the wrong length")
            vals = tuple(DIGITS.index(c) for c in reversed(text.lower()))
            if any(v >= p for v in vals):
                raise ValueError(f"digit out of range in register {p}")
            regs.append(vals)
        return cls(Sign.parse(d["sign"]), lo, hi, tuple(regs))


def zero_qukit_component(base: PrimeBase) -> QukitComponent:
    return QukitComponent(Sign.PLUS, 0, 0, tuple((0,) for _ in base.primes))


@dataclass(frozen=True)
class QukitBasisState:
    re: QukitComponent
    im: QukitComponent

    def value(self, base: PrimeBase) -> tuple[Fraction, Fraction]:
        return self.re.value(base), self.im.value(base)

    def site_count(self) -> tuple[int, int]:
        """Occupied sites per chain (the unary observable)."""
        return self.re.width, self.im.width

    def canonical(self, base: PrimeBase) -> "QukitBasisState":
        return QukitBasisState(self.re.canonical(base), self.im.canonical(base))

    def to_json(self, base: PrimeBase) -> dict:
        return {"base": base.to_json(), "re": self.re.to_json(base), "im": self.im.to_json(base)}

    @classmethod
    def from_json(cls, d: Mapping) -> tuple["QukitBasisState", PrimeBase]:
        base = PrimeBase.from_json(d["base"])
        return cls(QukitComponent.from_json(d["re"], base), QukitComponent.from_json(d["im"], base)), base


def qukit_value(x: QukitBasisState, base: PrimeBase) -> tuple[Fraction, Fraction]:
    return x.value(base)


def from_binary(b: BasisState) -> QukitBasisState:
    """A binary string state as a single-register (base 2) qukit state."""
    def comp(c: Component) -> QukitComponent:
        return QukitComponent(c.sign, c.lo, c.hi, (tuple(c.bit(j) for j in range(c.lo, c.hi + 1)),))
    return QukitBasisState(comp(b.re), comp(b.im))


def qukit_from_value(v: Fraction, base: PrimeBase, frac_digits: int) -> QukitComponent:
    """Component for a rational with at most ``frac_digits`` base-k fraction digits."""
    k = base.k
    scaled = abs(v) * Fraction(k) ** frac_digits
    if scaled.denominator != 1:
        raise ValueError(f"{v} needs more than {frac_digits} base-{k} digits")
    n = scaled.numerator
    ds = []
    while n:
        n, r = divmod(n, k)
        ds.append(r)
    ds += [0] * max(0, frac_digits + 1 - len(ds))
    lo = -frac_digits
    hi = lo + len(ds) - 1
    regs = tuple(tuple(base.split(d)[h] for d in ds) for h in range(len(base.primes)))
    sign = Sign.MINUS if v < 0 else Sign.PLUS
    return QukitComponent(sign, lo, hi, regs).canonical(base)


# -- gauge group ----------------------------------------------------------------------

def _check_block(u: Any, p: int) -> np.ndarray:
    m = np.asarray(u, dtype=complex)
    if m.shape != (p, p):
        raise ValueError(f"block for p = {p} must be {p}x{p}, got {m.shape}")
    if np.max(np.abs(m.conj().T @ m - np.eye(p))) > UNITARY_TOL:
        raise ValueError("block is not unitary")
    if abs(np.linalg.det(m) - 1) > UNITARY_TOL:
        raise ValueError("block does not have determinant 1")
    return m


def haar_sup(p: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((p, p)) + 1j * rng.standard_normal((p, p))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    q = q * (d / np.abs(d))
    return q / np.linalg.det(q) ** (1 / p)


@dataclass(frozen=True)
class SiteBlocks:
    """Per-site SU(p) matrices for one prime register (``default`` off the maps)."""

    p: int
    default: np.ndarray
    a_chain: Mapping[int, np.ndarray] = field(default_factory=dict)
    b_chain: Mapping[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "default", _check_block(self.default, self.p))
        object.__setattr__(self, "a_chain", {int(j): _check_block(u, self.p) for j, u in self.a_chain.items()})
        object.__setattr__(self, "b_chain", {int(j): _check_block(u, self.p) for j, u in self.b_chain.items()})

    def site(self, chain: str, j: int) -> np.ndarray:
        return (self.a_chain if chain == "a" else self.b_chain).get(j, self.default)


@dataclass(frozen=True)
class ProductGaugeElement:
    """U(1) phases per site times SU(p) blocks per prime register."""

    base: PrimeBase
    theta: float = 0.0
    phi: float = 0.0
    theta_sites: Mapping[int, float] = field(default_factory=dict)
    phi_sites: Mapping[int, float] = field(default_factory=dict)
    blocks: tuple[SiteBlocks, ...] = ()

    def __post_init__(self):
        if not self.blocks:
            object.__setattr__(self, "blocks", tuple(SiteBlocks(p, np.eye(p)) for p in self.base.primes))
        if tuple(b.p for b in self.blocks) != self.base.primes:
            raise ValueError("one block per prime register, in base order")

    @property
    def is_global(self) -> bool:
        return not (self.theta_sites or self.phi_sites or any(b.a_chain or b.b_chain for b in self.blocks))

    def phase(self, chain: str, j: int) -> complex:
        angle = self.theta_sites.get(j, self.theta) if chain == "a" else self.phi_sites.get(j, self.phi)
        return cmath.exp(1j * angle)


def u1_gauge(base: PrimeBase, theta: float, phi: float | None = None) -> ProductGaugeElement:
    return ProductGaugeElement(base, theta, theta if phi is None else phi)


def random_product_gauge(base: PrimeBase, rng: np.random.Generator, sites: Iterable[int] | None = None) -> ProductGaugeElement:
    """Global element when ``sites`` is None, otherwise independent draws per listed site."""
    theta, phi = rng.uniform(0, 2 * math.pi, 2)
    if sites is None:
        return ProductGaugeElement(base, theta, phi, blocks=tuple(SiteBlocks(p, haar_sup(p, rng)) for p in base.primes))
    sites = list(sites)
    ts = {j: float(rng.uniform(0, 2 * math.pi)) for j in sites}
    ps = {j: float(rng.uniform(0, 2 * math.pi)) for j in sites}
    blocks = tuple(SiteBlocks(p, haar_sup(p, rng), {j: haar_sup(p, rng) for j in sites},
                              {j: haar_sup(p, rng) for j in sites}) for p in base.primes)
    return ProductGaugeElement(base, theta, phi, ts, ps, blocks)


QukitState = dict  # QukitBasisState -> complex amplitude


def _chain_factors(g: ProductGaugeElement, c: QukitComponent, chain: str):
    # one (register, site) factor per entry: list of (digit, amplitude) alternatives
    factors = []
    for h, blk in enumerate(g.blocks):
        for j in range(c.lo, c.hi + 1):
            col = blk.site(chain, j)[:, c.digits[h][j - c.lo]]
            factors.append([(d, complex(a)) for d, a in enumerate(col) if abs(a) > AMP_EPS])
    phase = math.prod((g.phase(chain, j) for j in range(c.lo, c.hi + 1)), start=1 + 0j)
    return factors, phase


def _rebuild(c: QukitComponent, m: int, flat: Sequence[int]) -> QukitComponent:
    w = c.width
    return QukitComponent(c.sign, c.lo, c.hi, tuple(tuple(flat[h * w:(h + 1) * w]) for h in range(m)))


def apply_product_gauge(g: ProductGaugeElement, x: QukitState | QukitBasisState,
                        max_terms: int = 1 << 18) -> QukitState:
    """Gauge a superposition; each register digit expands along its block column."""
    if isinstance(x, QukitBasisState):
        x = {x: 1.0}
    m = len(g.base.primes)
    out: dict[QukitBasisState, complex] = {}
    for s, amp in x.items():
        if len(s.re.digits) != m or len(s.im.digits) != m:
            raise ValueError("state registers do not match the gauge base")
        fa, pa = _chain_factors(g, s.re, "a")
        fb, pb = _chain_factors(g, s.im, "b")
        if math.prod(len(f) for f in fa + fb) > max_terms:
            raise ValueError("gauged expansion is too large")
        na = len(fa)
        for combo in itertools.product(*(fa + fb)):
            a = amp * pa * pb * math.prod((c[1] for c in combo), start=1 + 0j)
            if abs(a) <= AMP_EPS:
                continue
            digits = [c[0] for c in combo]
            key = QukitBasisState(_rebuild(s.re, m, digits[:na]), _rebuild(s.im, m, digits[na:]))
            out[key] = out.get(key, 0) + a
    return {k: v for k, v in out.items() if abs(v) > AMP_EPS}


def state_norm(x: QukitState) -> float:
    return math.sqrt(sum(abs(a) ** 2 for a in x.values()))
