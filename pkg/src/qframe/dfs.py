"""Logical qubits in subspaces left invariant by global SU(2) gauges."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

from .arithmetic import eq_a
from .gauge import haar_su2, site_unitary
from .strings import BasisState, Component, encode_number

SQ2 = math.sqrt(2)
KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)


def kron(*vs: np.ndarray) -> np.ndarray:
    return reduce(np.kron, vs)


def ket(bits: str) -> np.ndarray:
    return kron(*[KET1 if b == "1" else KET0 for b in bits])


def _projector(vectors: Sequence[np.ndarray], dim: int) -> np.ndarray:
    p = np.zeros((dim, dim), dtype=complex)
    for v in vectors:
        p += np.outer(v, v.conj())
    return p


@dataclass(frozen=True, eq=False)
class LogicalCode:
    name: str
    n_physical: int
    basis0: tuple[np.ndarray, ...]
    basis1: tuple[np.ndarray, ...]
    rest: tuple[np.ndarray, ...] = ()  # remaining invariant subspace, outside the code

    @property
    def dim(self) -> int:
        return 2 ** self.n_physical

    @property
    def proj0(self) -> np.ndarray:
        return _projector(self.basis0, self.dim)

    @property
    def proj1(self) -> np.ndarray:
        return _projector(self.basis1, self.dim)

    @property
    def proj_rest(self) -> np.ndarray:
        return _projector(self.rest, self.dim)

    def representative(self, bit: int, index: int = 0) -> np.ndarray:
        basis = self.basis1 if bit else self.basis0
        if not 0 <= index < len(basis):
            raise IndexError(f"representative {index} outside a {len(basis)}-dim block")
        return basis[index]

    def algebra_defect(self) -> float:
        """Worst deviation from idempotence, Hermiticity, orthogonality and completeness."""
        p0, p1, pr = self.proj0, self.proj1, self.proj_rest
        checks = [p0 @ p0 - p0, p1 @ p1 - p1, p0 - p0.conj().T, p1 - p1.conj().T, p0 @ p1,
                  p0 + p1 + pr - np.eye(self.dim)]
        return float(max(np.max(np.abs(c)) for c in checks))

    def to_json(self) -> dict:
        def mat(m):
            return [[[float(z.real), float(z.imag)] for z in row] for row in m]
        return {"name": self.name, "nPhysical": self.n_physical, "proj0": mat(self.proj0), "proj1": mat(self.proj1)}


def singlet() -> np.ndarray:
    return (ket("01") - ket("10")) / SQ2


def two_qubit_isospin_code() -> LogicalCode:
    """Logical 0 is the I=1 triplet, logical 1 the I=0 singlet."""
    triplet = (ket("00"), ket("11"), (ket("01") + ket("10")) / SQ2)
    return LogicalCode("isospin-2", 2, triplet, (singlet(),))


def three_qubit_code() -> LogicalCode:
    """The two I=1/2 blocks of three qubits, split by the spin of the first pair.

    Pair spin 0 gives logical 0, pair spin 1 gives logical 1; the I=3/2
    quartet is the unused remainder.
    """
    s, t0 = singlet(), (ket("01") + ket("10")) / SQ2
    zero = (kron(s, KET0), kron(s, KET1))
    one = (
        math.sqrt(2 / 3) * kron(ket("00"), KET1) - math.sqrt(1 / 3) * kron(t0, KET0),
        math.sqrt(1 / 3) * kron(t0, KET1) - math.sqrt(2 / 3) * kron(ket("11"), KET0),
    )
    quartet = (
        ket("000"),
        (ket("001") + ket("010") + ket("100")) / math.sqrt(3),
        (ket("011") + ket("101") + ket("110")) / math.sqrt(3),
        ket("111"),
    )
    return LogicalCode("isospin-3", 3, zero, one, quartet)


CODES = {"2": two_qubit_isospin_code, "3": three_qubit_code}


def global_operator(u: np.ndarray, n: int) -> np.ndarray:
    return kron(*[u] * n)


def invariance_defect(code: LogicalCode, u: np.ndarray) -> float:
    """Largest operator norm of ``[P_b, u x ... x u]`` over both logical projectors."""
    u = site_unitary(u)
    big = global_operator(u, code.n_physical)
    return float(max(np.linalg.norm(p @ big - big @ p, 2) for p in (code.proj0, code.proj1)))


# -- encoding -----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EncodedState:
    """Product of per-logical-bit physical blocks."""

    code: LogicalCode
    blocks: tuple[np.ndarray, ...]

    def gauged(self, site_unitaries: Sequence[np.ndarray] | np.ndarray) -> "EncodedState":
        """Apply one 2x2 unitary per physical qubit (a single matrix means a global gauge)."""
        n = self.code.n_physical
        us = np.asarray(site_unitaries, dtype=complex)
        if us.ndim == 2:
            us = np.broadcast_to(us, (len(self.blocks) * n, 2, 2))
        if len(us) != len(self.blocks) * n:
            raise ValueError("one unitary per physical qubit")
        out = tuple(kron(*us[i * n:(i + 1) * n]) @ b for i, b in enumerate(self.blocks))
        return EncodedState(self.code, out)

    def fidelity(self, other: "EncodedState") -> float:
        return float(np.prod([abs(np.vdot(a, b)) ** 2 for a, b in zip(self.blocks, other.blocks)]))


def encode_logical(bits: str, code: LogicalCode, representative: int = 0) -> EncodedState:
    if any(b not in "01" for b in bits):
        raise ValueError("logical bits must be 0/1")
    return EncodedState(code, tuple(code.representative(int(b), representative) for b in bits))


@dataclass(frozen=True)
class Decoded:
    positions: tuple[tuple[float, float, float], ...]  # (p0, p1, outside) per logical bit

    @property
    def leakage(self) -> float:
        return max((o for _, _, o in self.positions), default=0.0)

    def bits(self) -> str:
        return "".join("1" if p1 > p0 else "0" for p0, p1, _ in self.positions)

    def distribution(self, eps: float = 1e-15) -> dict[str, float]:
        dist = {"": 1.0}
        for p0, p1, _ in self.positions:
            dist = {s + b: w * p for s, w in dist.items() for b, p in (("0", p0), ("1", p1)) if w * p > eps}
        return dist

    def disturbance(self, intended: str) -> float:
        """Largest ``1 - p(intended bit)`` over positions."""
        return max((1 - (p1 if b == "1" else p0) for b, (p0, p1, _) in zip(intended, self.positions)), default=0.0)


def decode_logical(state: EncodedState) -> Decoded:
    code = state.code
    p0m, p1m = code.proj0, code.proj1
    out = []
    for b in state.blocks:
        p0 = float(np.real(np.vdot(b, p0m @ b)))
        p1 = float(np.real(np.vdot(b, p1m @ b)))
        out.append((p0, p1, max(0.0, 1.0 - p0 - p1)))
    return Decoded(tuple(out))


# -- logical rational strings -------------------------------------------------------------

def _component_bits(c: Component) -> str:
    return format(c.bits, f"0{c.width}b")[::-1]  # site lo first


def encode_string_state(x: BasisState, code: LogicalCode, representative: int = 0) -> tuple[EncodedState, EncodedState]:
    """Logical blocks for the real and imaginary chains (signs stay classical)."""
    return (encode_logical(_component_bits(x.re), code, representative),
            encode_logical(_component_bits(x.im), code, representative))


def decode_string_state(template: BasisState, re: EncodedState, im: EncodedState) -> BasisState:
    def comp(c: Component, enc: EncodedState) -> Component:
        bits = decode_logical(enc).bits()
        return Component(c.sign, c.lo, c.hi, int(bits[::-1], 2) if bits else 0)
    return BasisState(comp(template.re, re), comp(template.im, im))


@dataclass(frozen=True)
class CollapseReport:
    code: str
    seed: int
    gauges: int
    logical_identical: bool
    max_logical_deviation: float
    max_invariance_defect: float
    physical_fidelities: tuple[float, ...]
    control_disturbance: float
    control_logical_changed: bool

    @property
    def ok(self) -> bool:
        return (self.logical_identical and all(f < 1 - 1e-9 for f in self.physical_fidelities)
                and self.control_disturbance > 0)

    def to_json(self) -> dict:
        return {
            "code": self.code, "seed": self.seed, "gauges": self.gauges,
            "logicalIdentical": self.logical_identical,
            "maxLogicalDeviation": self.max_logical_deviation,
            "maxInvarianceDefect": self.max_invariance_defect,
            "physicalFidelities": list(self.physical_fidelities),
            "control": {"disturbance": self.control_disturbance, "logicalChanged": self.control_logical_changed},
            "ok": self.ok,
        }


def random_string_states(rng: np.random.Generator, count: int) -> list[BasisState]:
    out = []
    for _ in range(count):
        re_m, im_m = (int(v) for v in rng.integers(-31, 32, 2))
        re_e, im_e = (int(v) for v in rng.integers(-3, 1, 2))
        out.append(encode_number(re_m * 2.0 ** re_e, im_m * 2.0 ** im_e))
    return out


def frame_collapse_demo(code: LogicalCode, gauge_samples: int = 20, seed: int = 0,
                        strings: int = 10, representative: int = 0) -> CollapseReport:
    """Compare logical eqA tables and physical fidelities across sampled global gauges.

    A local gauge (independent unitary per physical qubit) is the control.
    """
    rng = np.random.default_rng(seed)
    states = random_string_states(rng, strings)
    encoded = [encode_string_state(x, code, representative) for x in states]

    def table(enc) -> np.ndarray:
        # probability that decoded logical states are arithmetically equal, pairwise
        dists = []
        for x, (re, im) in zip(states, enc):
            dr, di = decode_logical(re).distribution(), decode_logical(im).distribution()
            d = {}
            for br, wr in dr.items():
                for bi, wi in di.items():
                    s = BasisState(Component(x.re.sign, x.re.lo, x.re.hi, int(br[::-1], 2)),
                                   Component(x.im.sign, x.im.lo, x.im.hi, int(bi[::-1], 2)))
                    d[s] = d.get(s, 0.0) + wr * wi
            dists.append(d)
        n = len(dists)
        t = np.zeros((n, n))
        for i in range(n):
            for j in range(n):
                t[i, j] = sum(wa * wb for a, wa in dists[i].items() for b, wb in dists[j].items() if eq_a(a, b))
        return t

    base = table(encoded)
    gauges = [haar_su2(rng) for _ in range(gauge_samples)]
    dev, defect, fids = 0.0, 0.0, []
    for u in gauges:
        g_enc = [(re.gauged(u), im.gauged(u)) for re, im in encoded]
        dev = max(dev, float(np.max(np.abs(table(g_enc) - base))))
        defect = max(defect, invariance_defect(code, u))
        fids.append(float(np.prod([a.fidelity(b) * c.fidelity(d) for (a, c), (b, d) in zip(encoded, g_enc)])))

    disturbance, changed = 0.0, False
    for x, (re, im) in zip(states, encoded):
        for enc in (re, im):
            us = [haar_su2(rng) for _ in range(len(enc.blocks) * code.n_physical)]
            dec = decode_logical(enc.gauged(us))
            intended = decode_logical(enc).bits()
            disturbance = max(disturbance, dec.disturbance(intended))
            changed = changed or dec.bits() != intended
    return CollapseReport(code.name, seed, gauge_samples, dev < 1e-10, dev, defect, tuple(fids),
                          disturbance, changed)
