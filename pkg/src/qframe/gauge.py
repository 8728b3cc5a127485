"""Local and global SU(2) gauge transformations of string states.

A gauge acts site by site on the a-chain and b-chain qubits; the sign
qubits are left alone.  A gauged basis state is a product state, so it
is kept factored (:class:`ProductState`) and only expanded into basis
states on demand, with amplitudes below ``AMP_EPS`` dropped.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np

from .arithmetic import abs_component, eq_a, leq_a, mixed_op, proj_eq_a, proj_leq_a, sub_a
from .cauchy import (
    CauchyOperator,
    CauchyParams,
    CauchyVerdict,
    EllResult,
    PreconditionError,
    integer_state,
    max_deviation,
    pair_probability,
    power_state,
    project_imag,
    project_real,
)
from .strings import (
    AMP_EPS,
    ZERO_COMPONENT,
    BasisState,
    Component,
    MixedState,
    PureState,
    Sign,
    as_pure,
)

UNITARY_TOL = 1e-12
IDENTITY = np.eye(2, dtype=complex)
FLIP = np.array([[0, 1], [-1, 0]], dtype=complex)


class GaugeError(ValueError):
    pass


def site_unitary(m: Any, special: bool = True, tol: float = UNITARY_TOL) -> np.ndarray:
    """Validate a 2x2 (special) unitary and return it as a complex array."""
    u = np.asarray(m, dtype=complex)
    if u.shape != (2, 2):
        raise GaugeError(f"site unitary must be 2x2, got shape {u.shape}")
    if np.max(np.abs(u.conj().T @ u - IDENTITY)) > tol:
        raise GaugeError("site matrix is not unitary")
    if special and abs(np.linalg.det(u) - 1) > tol:
        raise GaugeError("site matrix does not have determinant 1")
    return u


def rotation(theta: float) -> np.ndarray:
    """``exp(-i theta sigma_y / 2)``, a real SU(2) rotation."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def haar_su2(rng: np.random.Generator) -> np.ndarray:
    """Haar-random SU(2): QR of a complex Gaussian matrix, phases fixed, det divided out."""
    z = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    q = q * (d / np.abs(d))
    q = q / np.sqrt(np.linalg.det(q))
    return q


@dataclass(frozen=True, eq=False)
class GaugeTransform:
    """Per-site unitaries for the real (a) and imaginary (b) chains.

    Sites missing from a chain map use ``default``.  Global gauges have
    empty maps.
    """

    kind: str = "global"
    a_chain: Mapping[int, np.ndarray] = field(default_factory=dict)
    b_chain: Mapping[int, np.ndarray] = field(default_factory=dict)
    default: np.ndarray = field(default_factory=lambda: IDENTITY.copy())
    _stacks: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.kind not in ("global", "local"):
            raise GaugeError(f"unknown gauge kind {self.kind!r}")
        if self.kind == "global" and (self.a_chain or self.b_chain):
            raise GaugeError("a global gauge has no site maps")
        object.__setattr__(self, "default", site_unitary(self.default))
        object.__setattr__(self, "a_chain", {int(j): site_unitary(u) for j, u in self.a_chain.items()})
        object.__setattr__(self, "b_chain", {int(j): site_unitary(u) for j, u in self.b_chain.items()})

    def site(self, chain: str, j: int) -> np.ndarray:
        table = self.a_chain if chain == "a" else self.b_chain
        return table.get(j, self.default)

    def stack(self, chain: str, lo: int, hi: int, dagger: bool = False) -> np.ndarray:
        """Site matrices for ``lo..hi`` as an ``(n, 2, 2)`` array."""
        key = (chain, lo, hi, dagger)
        out = self._stacks.get(key)
        if out is None:
            table = self.a_chain if chain == "a" else self.b_chain
            out = np.empty((hi - lo + 1, 2, 2), dtype=complex)
            out[:] = self.default
            for j, u in table.items():
                if lo <= j <= hi:
                    out[j - lo] = u
            if dagger:
                out = np.conj(np.swapaxes(out, 1, 2))
            out.flags.writeable = False
            self._stacks[key] = out
        return out

    def compose(self, first: "GaugeTransform") -> "GaugeTransform":
        """``self`` after ``first``: site matrices ``U_self(j) @ U_first(j)``."""
        if self.kind == "global" and first.kind == "global":
            return GaugeTransform("global", default=self.default @ first.default)
        sites_a = set(self.a_chain) | set(first.a_chain)
        sites_b = set(self.b_chain) | set(first.b_chain)
        return GaugeTransform(
            "local",
            {j: self.site("a", j) @ first.site("a", j) for j in sites_a},
            {j: self.site("b", j) @ first.site("b", j) for j in sites_b},
            self.default @ first.default,
        )

    def dagger(self) -> "GaugeTransform":
        return GaugeTransform(
            self.kind,
            {j: u.conj().T for j, u in self.a_chain.items()},
            {j: u.conj().T for j, u in self.b_chain.items()},
            self.default.conj().T,
        )

    def is_identity(self, tol: float = 1e-12) -> bool:
        mats = [self.default, *self.a_chain.values(), *self.b_chain.values()]
        return all(np.max(np.abs(u - IDENTITY)) <= tol for u in mats)

    def is_identity_on(self, a_sites: Iterable[int], b_sites: Iterable[int], tol: float = 1e-12) -> bool:
        return (all(np.max(np.abs(self.site("a", j) - IDENTITY)) <= tol for j in a_sites)
                and all(np.max(np.abs(self.site("b", j) - IDENTITY)) <= tol for j in b_sites))

    def restrict(self, a_sites: Iterable[int], b_sites: Iterable[int] = ()) -> "GaugeTransform":
        """Same unitaries on the listed sites, identity everywhere else."""
        return GaugeTransform("local", {j: self.site("a", j) for j in a_sites},
                              {j: self.site("b", j) for j in b_sites})

    def max_difference(self, other: "GaugeTransform") -> float:
        sites_a = set(self.a_chain) | set(other.a_chain)
        sites_b = set(self.b_chain) | set(other.b_chain)
        diffs = [np.max(np.abs(self.default - other.default))]
        diffs += [np.max(np.abs(self.site("a", j) - other.site("a", j))) for j in sites_a]
        diffs += [np.max(np.abs(self.site("b", j) - other.site("b", j))) for j in sites_b]
        return float(max(diffs))

    def to_json(self) -> dict:
        if self.kind == "global":
            return {"kind": "global", "u": _matrix_json(self.default)}
        return {
            "kind": "local",
            "aChain": {str(j): _matrix_json(u) for j, u in sorted(self.a_chain.items())},
            "bChain": {str(j): _matrix_json(u) for j, u in sorted(self.b_chain.items())},
            "default": _matrix_json(self.default),
        }

    @classmethod
    def from_json(cls, d: Mapping) -> "GaugeTransform":
        kind = d.get("kind")
        if kind == "global":
            return cls("global", default=_matrix_from_json(d["u"]))
        if kind == "local":
            return cls(
                "local",
                {int(j): _matrix_from_json(u) for j, u in d.get("aChain", {}).items()},
                {int(j): _matrix_from_json(u) for j, u in d.get("bChain", {}).items()},
                _matrix_from_json(d.get("default", IDENTITY)),
            )
        raise GaugeError(f"unknown gauge kind {kind!r}")


def _matrix_json(u: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in u]


def _matrix_from_json(m: Any) -> np.ndarray:
    def entry(z):
        if isinstance(z, (list, tuple)):
            return complex(z[0], z[1])
        return complex(z)
    try:
        return np.array([[entry(z) for z in row] for row in np.asarray(m, dtype=object).tolist()], dtype=complex)
    except (TypeError, ValueError, IndexError) as e:
        raise GaugeError(f"bad matrix {m!r}: {e}") from None


def identity_gauge() -> GaugeTransform:
    return GaugeTransform("global")


def global_gauge(u: Any) -> GaugeTransform:
    return GaugeTransform("global", default=u)


def local_gauge(a_chain: Mapping[int, Any], b_chain: Mapping[int, Any] | None = None,
                default: Any = IDENTITY) -> GaugeTransform:
    return GaugeTransform("local", a_chain, b_chain or {}, default)


def random_gauge(rng: np.random.Generator, kind: str = "local", sites: Sequence[int] = range(-4, 5)) -> GaugeTransform:
    """Haar-random gauge; local gauges draw independent unitaries per site and chain."""
    if kind == "global":
        return global_gauge(haar_su2(rng))
    a = {j: haar_su2(rng) for j in sites}
    b = {j: haar_su2(rng) for j in sites}
    return local_gauge(a, b, haar_su2(rng))


# -- factored states -------------------------------------------------------------

def _one_hot(c: Component) -> np.ndarray:
    v = np.zeros((c.width, 2), dtype=complex)
    bits = (c.bits >> np.arange(c.width, dtype=object)).astype(np.int64) & 1 if c.width > 60 else \
        (c.bits >> np.arange(c.width)) & 1
    v[np.arange(c.width), bits] = 1.0
    return v


@dataclass(frozen=True, eq=False)
class ProductState:
    """Tensor product of per-site qubit vectors on both chains (signs fixed)."""

    re_sign: Sign
    re_lo: int
    re_vec: np.ndarray
    im_sign: Sign
    im_lo: int
    im_vec: np.ndarray

    @classmethod
    def from_basis(cls, b: BasisState) -> "ProductState":
        return cls(b.re.sign, b.re.lo, _one_hot(b.re), b.im.sign, b.im.lo, _one_hot(b.im))

    @property
    def re_hi(self) -> int:
        return self.re_lo + len(self.re_vec) - 1

    @property
    def im_hi(self) -> int:
        return self.im_lo + len(self.im_vec) - 1

    def apply(self, g: GaugeTransform, dagger: bool = False) -> "ProductState":
        ua = g.stack("a", self.re_lo, self.re_hi, dagger)
        ub = g.stack("b", self.im_lo, self.im_hi, dagger)
        return ProductState(
            self.re_sign, self.re_lo, np.einsum("nij,nj->ni", ua, self.re_vec),
            self.im_sign, self.im_lo, np.einsum("nij,nj->ni", ub, self.im_vec),
        )

    def expand(self, eps: float = AMP_EPS, max_terms: int = 1 << 20) -> dict[BasisState, complex]:
        """Basis expansion keeping amplitudes above ``eps``.

        Each site has a dominant and a minor component; a term is a set
        of flipped sites, enumerated in decreasing ratio order with a
        product bound so pruned branches are never visited.
        """
        nr = len(self.re_vec)
        vec = np.concatenate([self.re_vec, self.im_vec])
        mag = np.abs(vec)
        major = np.argmax(mag, axis=1)
        idx = np.arange(len(vec))
        a_major = vec[idx, major]
        a_minor = vec[idx, 1 - major]
        m_major = mag[idx, major]
        if np.any(m_major == 0):
            raise GaugeError("product state has a zero site vector")
        base = complex(np.prod(a_major))
        if abs(base) == 0:
            return {}
        ratio = mag[idx, 1 - major] / m_major
        thr = eps / abs(base)
        active = [int(i) for i in np.argsort(-ratio, kind="stable") if ratio[i] >= thr]
        step = a_minor / a_major

        def to_int(bits: np.ndarray) -> int:
            out = 0
            for i in np.flatnonzero(bits)[::-1]:
                out |= 1 << int(i)
            return out

        re0 = to_int(major[:nr])
        im0 = to_int(major[nr:])
        re_hi, im_hi = self.re_hi, self.im_hi
        out: dict[BasisState, complex] = {}

        def emit(re_bits: int, im_bits: int, amp: complex):
            if len(out) >= max_terms:
                raise GaugeError(f"expansion exceeds {max_terms} terms")
            key = BasisState(Component(self.re_sign, self.re_lo, re_hi, re_bits),
                             Component(self.im_sign, self.im_lo, im_hi, im_bits))
            out[key] = out.get(key, 0) + amp

        ratios = [float(ratio[i]) for i in active]
        steps = [complex(step[i]) for i in active]

        def rec(pos: int, bound: float, re_bits: int, im_bits: int, amp: complex):
            emit(re_bits, im_bits, amp)
            for t in range(pos, len(active)):
                nb = bound * ratios[t]
                if nb < thr:
                    break
                i = active[t]
                if i < nr:
                    rec(t + 1, nb, re_bits ^ (1 << i), im_bits, amp * steps[t])
                else:
                    rec(t + 1, nb, re_bits, im_bits ^ (1 << (i - nr)), amp * steps[t])

        rec(0, 1.0, re0, im0, base)
        return out


@dataclass(frozen=True, eq=False)
class GaugedState:
    """Superposition of product states (amplitudes multiply the factored vectors)."""

    terms: tuple[tuple[complex, ProductState], ...]

    @classmethod
    def lift(cls, x: PureState | BasisState) -> "GaugedState":
        return cls(tuple((a, ProductState.from_basis(b)) for b, a in as_pure(x).terms.items()))

    def apply(self, g: GaugeTransform, dagger: bool = False) -> "GaugedState":
        return GaugedState(tuple((a, p.apply(g, dagger)) for a, p in self.terms))

    def to_pure(self, eps: float = AMP_EPS) -> PureState:
        acc: dict[BasisState, complex] = {}
        for a, p in self.terms:
            for b, c in p.expand(eps).items():
                acc[b] = acc.get(b, 0) + a * c
        norm = sum(abs(v) ** 2 for v in acc.values())
        if abs(norm - 1) > 1e-9:
            raise GaugeError(f"expansion lost normalization (norm^2 = {norm!r})")
        return PureState.superpose(acc.items(), normalize=True)


def apply_gauge(g: GaugeTransform, x: PureState | BasisState) -> PureState:
    """``U x`` expanded in the basis of the original frame."""
    return GaugedState.lift(x).apply(g).to_pure()


def gauge_lift(g: GaugeTransform, x: PureState | BasisState) -> GaugedState:
    """``U x`` kept factored."""
    return GaugedState.lift(x).apply(g)


# -- transformed relations and operations -----------------------------------------------

FrameInput = GaugedState | PureState | BasisState


class FrameArithmetic:
    """Relations and operations of the frame reached by gauge ``g``.

    Every operation is the conjugate of the original one: states are
    taken back with ``U^dagger``, the original operation is applied to
    the basis terms, and results are carried forward with ``U``.
    """

    def __init__(self, g: GaugeTransform):
        self.g = g
        # both maps are pure; frame images of basis states recur across pairs
        self._into: dict[BasisState, GaugedState] = {}
        self._back: dict[int, tuple[GaugedState, PureState]] = {}

    def into(self, x: PureState | BasisState) -> GaugedState:
        if isinstance(x, PureState) and len(x) == 1 and abs(next(iter(x.terms.values())) - 1) < AMP_EPS:
            x = x.single()
        if isinstance(x, BasisState):
            out = self._into.get(x)
            if out is None:
                out = self._into[x] = GaugedState.lift(x).apply(self.g)
            return out
        return GaugedState.lift(x).apply(self.g)

    def back(self, x: FrameInput) -> PureState:
        if not isinstance(x, GaugedState):
            x = GaugedState.lift(x)
        hit = self._back.get(id(x))
        if hit is not None and hit[0] is x:
            return hit[1]
        out = x.apply(self.g, dagger=True).to_pure()
        self._back[id(x)] = (x, out)
        return out

    def eq_probability(self, x: FrameInput, y: FrameInput) -> float:
        """``<x (x) y| U P_=A U^dagger |x (x) y>``."""
        return proj_eq_a(self.back(x), self.back(y))

    def leq_probability(self, x: FrameInput, y: FrameInput) -> float:
        return proj_leq_a(self.back(x), self.back(y))

    def binary(self, op: Callable[[BasisState, BasisState], BasisState],
               x: FrameInput, y: FrameInput) -> list[tuple[float, GaugedState]]:
        """``(U x U) op (U^dagger x U^dagger)`` as a diagonal ensemble of frame states."""
        mixed = mixed_op(op, self.back(x), self.back(y))
        return [(w, self.into(s)) for w, s in mixed]

    def unary(self, fn: Callable[[BasisState], BasisState], x: FrameInput) -> list[tuple[float, GaugedState]]:
        """``U fn U^dagger`` applied termwise (ensemble over the back-expanded support)."""
        back = self.back(x)
        return [(abs(a) ** 2, self.into(fn(b))) for b, a in back.terms.items()]

    def project(self, x: FrameInput, imaginary: bool) -> GaugedState:
        """``U P U^dagger`` with P zeroing one chain, then renormalized."""
        back = self.back(x)
        proj = project_imag if imaginary else project_real
        return self.into(PureState.superpose(((proj(b), a) for b, a in back.terms.items())))


def transformed_eq_probability(g: GaugeTransform, x: FrameInput, y: FrameInput) -> float:
    return FrameArithmetic(g).eq_probability(x, y)


def transformed_add_a(g: GaugeTransform, x: FrameInput, y: FrameInput) -> MixedState:
    """``+_AU`` on a pair of frame states; ensemble members are expanded ``U |u +A v>``."""
    from .arithmetic import add_a
    fa = FrameArithmetic(g)
    return MixedState(tuple((w, s.to_pure()) for w, s in fa.binary(add_a, x, y)))


class TransformedOperator:
    """Lazy view of ``U O U^dagger``."""

    def __init__(self, g: GaugeTransform, op: CauchyOperator):
        self.g, self.op = g, op
        self.frame = FrameArithmetic(g)
        self.label = f"U[{op.label}]"

    def __call__(self, x: FrameInput) -> GaugedState:
        back = self.frame.back(x)
        terms = []
        for b, a in back.terms.items():
            for pa, p in GaugedState.lift(self.op(b)).terms:
                terms.append((a * pa, p))
        return GaugedState(tuple(terms)).apply(self.g)

    def frame_integer_state(self, n: int) -> GaugedState:
        return self.frame.into(integer_state(n))

    def image(self, n: int) -> GaugedState:
        return self(self.frame_integer_state(n))


def transform_operator(g: GaugeTransform, op: CauchyOperator) -> TransformedOperator:
    return TransformedOperator(g, op)


def _abs_parts(b: BasisState) -> BasisState:
    return BasisState(abs_component(b.re), abs_component(b.im))


def is_cauchy_in_frame(g: GaugeTransform, op: CauchyOperator, p: CauchyParams = CauchyParams()) -> CauchyVerdict:
    """Cauchy condition of ``U O U^dagger`` in the frame of ``U``.

    Evaluated through the conjugated chain: frame images, conjugated
    component projections, ``-_AU``, ``|.|_AU`` and ``<=_AU`` against
    ``U|+,-ell>``; each step goes back and forth through ``U``.
    """
    fa = FrameArithmetic(g)
    tf = TransformedOperator(g, op)
    H = p.horizon
    images = {n: tf.image(n) for n in range(1, H + 1)}
    # (U^dagger x U^dagger) on the pair factorizes, so each register is taken back once
    backs = {n: fa.back(x) for n, x in images.items()}
    single = all(len(b) == 1 for b in backs.values())
    real_t = {ell: fa.back(fa.into(power_state(ell))) for ell in range(1, p.ell_max + 1)}
    imag_t = {ell: fa.back(fa.into(power_state(ell, imaginary=True))) for ell in range(1, p.ell_max + 1)}

    def within(abs_state: GaugedState, imaginary: bool) -> dict[int, float]:
        # <abs (x) U|+,-ell>| U P_<=A U^dagger |...>, real or imaginary chain
        back = fa.back(abs_state)
        out = {}
        for ell in range(1, p.ell_max + 1):
            t = imag_t[ell] if imaginary else real_t[ell]
            if imaginary:
                back_s = PureState.superpose((BasisState(b.im, ZERO_COMPONENT), a) for b, a in back.terms.items())
                t = PureState.superpose((BasisState(b.im, ZERO_COMPONENT), a) for b, a in t.terms.items())
                out[ell] = proj_leq_a(back_s, t)
            else:
                out[ell] = proj_leq_a(back, t)
        return out

    def abs_frame(d: GaugedState) -> list[tuple[float, GaugedState]]:
        return fa.unary(_abs_parts, d)

    def pair_chain(xj: GaugedState, xk: GaugedState, imaginary: bool | None) -> dict[int, float]:
        diffs = fa.binary(sub_a, xj, xk)
        acc = {ell: 0.0 for ell in range(1, p.ell_max + 1)}
        for w, d in diffs:
            for w2, a in abs_frame(d):
                if imaginary is None:
                    pr = within(fa.project(a, False), False)
                    pi = within(fa.project(a, True), True)
                    for ell in acc:
                        acc[ell] += w * w2 * pr[ell] * pi[ell]
                else:
                    pc = within(a, imaginary)
                    for ell in acc:
                        acc[ell] += w * w2 * pc[ell]
        return acc

    idx = range(1, H + 1)
    pairs = [(j, k) for j in idx for k in idx if j < k]
    probs: dict[tuple[int, int], dict[int, float]] = {}
    if single:
        comp = {(n, im): fa.project(images[n], im) for n in idx for im in (False, True)}
        for j, k in pairs:
            pr = pair_chain(comp[(j, False)], comp[(k, False)], False)
            pi = pair_chain(comp[(j, True)], comp[(k, True)], True)
            probs[(j, k)] = {ell: pr[ell] * pi[ell] for ell in pr}
    else:
        for j, k in pairs:
            probs[(j, k)] = pair_chain(images[j], images[k], None)
    dev = (lambda j, k: float(max_deviation(backs[j].single(), backs[k].single()))) if single else None
    return _frame_verdict(probs, p, probabilistic=not single, dev=dev)


def _frame_verdict(probs: dict[tuple[int, int], dict[int, float]], p: CauchyParams,
                   probabilistic: bool, dev: Callable[[int, int], float] | None = None) -> CauchyVerdict:
    results = []
    for ell in range(1, p.ell_max + 1):
        bad = [jk for jk, pr in probs.items() if pr[ell] < 1 - p.eps_p]
        h = max((min(jk) for jk in bad), default=0)
        if h <= p.witness_budget:
            tail = [pr[ell] for jk, pr in probs.items() if min(jk) > h]
            results.append(EllResult(ell, h, min_p=min(tail) if probabilistic and tail else None))
            continue
        tail = {jk: pr[ell] for jk, pr in probs.items() if min(jk) > p.witness_budget}
        fj, fk = min(jk for jk in bad if min(jk) > p.witness_budget)
        d = dev(fj, fk) if dev else 1.0 - tail[(fj, fk)]
        results.append(EllResult(ell, None, fj, fk, d,
                                 min_p=min(tail.values()) if probabilistic else None))
    return CauchyVerdict(all(r.ok for r in results), tuple(results), p)


# -- destruction of the Cauchy property in the original frame ------------------------

@dataclass(frozen=True)
class FseqSpec:
    """0-1 function ``f`` on ``(-inf, n]`` with ``f(n) = 1``.

    ``pattern`` lists ``f(n), f(n-1), ...`` and repeats; the default
    ``"1"`` is the all-ones function.
    """

    n: int = 0
    pattern: str = "1"
    m_min: int = 4
    m_max: int = 12

    def __post_init__(self):
        if not self.pattern or any(c not in "01" for c in self.pattern) or self.pattern[0] != "1":
            raise ValueError("pattern must be a 0-1 string starting with 1 (f(n) = 1)")
        if not 1 <= self.m_min <= self.m_max:
            raise ValueError("need 1 <= m_min <= m_max")

    def f(self, j: int) -> int:
        return int(self.pattern[(self.n - j) % len(self.pattern)]) if j <= self.n else 0

    def state(self, m: int) -> BasisState:
        """``|f>_m`` on sites ``[-m, max(n, 0)]``."""
        hi = max(self.n, 0)
        bits = 0
        for j in range(-m, hi + 1):
            bits |= self.f(j) << (j + m)
        return BasisState(Component(Sign.PLUS, -m, hi, bits), ZERO_COMPONENT)


@dataclass(frozen=True)
class DivergenceTable:
    ell: int
    rows: tuple[tuple[int, int, float], ...]  # (j, k, P_{j,k,ell})

    def tail_floor(self, m: int) -> float:
        """Smallest ``1 - P`` over pairs ``j != k`` with both indices ``>= m``."""
        vals = [1 - pr for j, k, pr in self.rows if j != k and j >= m and k >= m]
        return min(vals) if vals else math.inf

    def floors(self) -> dict[int, float]:
        ms = sorted({j for j, _, _ in self.rows})
        return {m: self.tail_floor(m) for m in ms[:-1]}

    @property
    def delta0(self) -> float:
        return min(self.floors().values())

    def to_csv(self) -> str:
        lines = ["j,k,ell,P"]
        lines += [f"{j},{k},{self.ell},{pr!r}" for j, k, pr in self.rows]
        return "\n".join(lines) + "\n"


def original_frame_divergence(spec: FseqSpec, g: GaugeTransform, ell: int) -> DivergenceTable:
    """``P_{j,k,ell}`` in the original frame for the gauged sequence ``U|f>_m``."""
    hi = max(spec.n, 0)
    sites = range(-spec.m_max, hi + 1)
    if g.is_identity_on(sites, ()):
        raise PreconditionError("identity gauge on the occupied sites: the experiment is degenerate")
    # the sequence lives on the real chain only; the imaginary chain is unoccupied
    ga = g.restrict(sites)
    ms = range(spec.m_min, spec.m_max + 1)
    states = {m: apply_gauge(ga, spec.state(m)) for m in ms}
    rows = tuple((j, k, pair_probability(states[j], states[k], ell)) for j in ms for k in ms)
    return DivergenceTable(ell, rows)
