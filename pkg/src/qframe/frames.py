"""Frames, frame stage steps and finite frame fields."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .arithmetic import add_a, neg_a
from .gauge import FrameArithmetic, GaugeTransform, identity_gauge, random_gauge
from .strings import ZERO, BasisState, encode_number

EQ_TOL = 1e-9


class ResourceGuardError(RuntimeError):
    """Raised when a requested field would exceed the configured frame cap."""


class UnknownLawError(KeyError):
    pass


@dataclass(frozen=True, eq=False)
class Frame:
    id: str
    stage: int
    gauge: GaugeTransform  # relative to the parent
    cumulative: GaugeTransform
    parent_id: str | None = None


@dataclass(frozen=True, eq=False)
class FrameStep:
    gauge: GaugeTransform

    @property
    def is_isomorphism(self) -> bool:
        return self.gauge.is_identity()


IDENTITY_STEP = FrameStep(identity_gauge())


def root_frame(gauge: GaugeTransform | None = None, stage: int = 0, id: str = "r") -> Frame:
    g = gauge or identity_gauge()
    return Frame(id, stage, g, g)


def step_frame(w: FrameStep, f: Frame, id: str | None = None) -> Frame:
    """Child at ``stage + 1`` with cumulative gauge ``U . U'``."""
    return Frame(id or f"{f.id}.0", f.stage + 1, w.gauge, w.gauge.compose(f.cumulative), f.id)


def gauge_change(f: Frame, v: GaugeTransform) -> Frame:
    """Same-stage change of frame by ``v``."""
    return Frame(f.id, f.stage, v.compose(f.gauge), v.compose(f.cumulative), f.parent_id)


def trace_path(steps: Sequence[FrameStep], f0: Frame) -> list[Frame]:
    """Every frame visited by the path, ``f0`` first."""
    if not steps:
        raise ValueError("a path needs at least one step")
    frames = [f0]
    for i, w in enumerate(steps):
        frames.append(step_frame(w, frames[-1], f"{f0.id}/{i + 1}"))
    return frames


def compose_path(steps: Sequence[FrameStep], f0: Frame) -> Frame:
    return trace_path(steps, f0)[-1]


def recurrence_defect(frames: Sequence[Frame]) -> float:
    """Largest deviation from ``U_{j+1} = U'_{j+1} U_j`` along a traced path."""
    worst = 0.0
    for prev, cur in zip(frames, frames[1:]):
        worst = max(worst, cur.cumulative.max_difference(cur.gauge.compose(prev.cumulative)))
    return worst


def decomposition_defect(w: FrameStep, f: Frame) -> float:
    """Distance between ``W(U) f`` and ``V(U)`` applied after the pure isomorphism step."""
    direct = step_frame(w, f)
    iso = step_frame(IDENTITY_STEP, f)
    split = gauge_change(iso, w.gauge)
    stage_ok = direct.stage == iso.stage == f.stage + 1
    iso_defect = iso.cumulative.max_difference(f.cumulative)
    d = max(direct.cumulative.max_difference(split.cumulative), iso_defect)
    return d if stage_ok else float("inf")


@dataclass
class FrameField:
    frames: dict[str, Frame] = field(default_factory=dict)
    edges: list[tuple[str, str, FrameStep]] = field(default_factory=list)

    @property
    def stage_range(self) -> tuple[int, int]:
        stages = [f.stage for f in self.frames.values()]
        return min(stages), max(stages)

    def add(self, f: Frame) -> None:
        if f.id in self.frames:
            raise ValueError(f"duplicate frame id {f.id}")
        self.frames[f.id] = f

    def link(self, parent: str, child: str, w: FrameStep) -> None:
        if self.frames[child].stage != self.frames[parent].stage + 1:
            raise ValueError("edges must advance exactly one stage")
        self.edges.append((parent, child, w))

    def edge_defect(self) -> float:
        return max((self.frames[c].cumulative.max_difference(w.gauge.compose(self.frames[p].cumulative))
                    for p, c, w in self.edges), default=0.0)

    def check_invariants(self) -> None:
        inbound = {c for _, c, _ in self.edges}
        lo = self.stage_range[0]
        for f in self.frames.values():
            if f.stage > lo and f.id not in inbound:
                raise AssertionError(f"frame {f.id} has no inbound edge")
        for p, c, _ in self.edges:
            if self.frames[c].stage != self.frames[p].stage + 1:
                raise AssertionError(f"edge {p}->{c} does not advance one stage")

    def to_json(self) -> dict:
        nodes = [{"id": f.id, "stage": f.stage, "gauge": f.gauge.to_json()}
                 for f in sorted(self.frames.values(), key=lambda f: (f.stage, f.id))]
        return {"nodes": nodes, "edges": [{"from": p, "to": c} for p, c, _ in self.edges]}

    def to_dot(self) -> str:
        lines = ["digraph frames {", "  rankdir=LR;"]
        for f in sorted(self.frames.values(), key=lambda f: (f.stage, f.id)):
            lines.append(f'  "{f.id}" [label="{f.id}\\nstage {f.stage}"];')
        lines += [f'  "{p}" -> "{c}";' for p, c, _ in self.edges]
        lines.append("}")
        return "\n".join(lines) + "\n"


def field_size(depth: int, samples: int, two_way: bool) -> int:
    one = sum(samples ** s for s in range(depth + 1))
    return 2 * one - 1 if two_way else one


def build_frame_field(depth: int, samples: int, two_way: bool = False, seed: int = 0,
                      max_frames: int = 10_000, sites: Iterable[int] = range(-2, 3)) -> FrameField:
    """Desk-scale field: ``samples`` children per frame up to ``depth`` stages.

    The first child of every frame is the pure isomorphism step; the
    others use Haar-random local gauges.  Two-way fields also grow
    ``samples`` ancestors per frame down to stage ``-depth``.
    """
    if depth < 1 or samples < 1:
        raise ValueError("depth and samples must be at least 1")
    n = field_size(depth, samples, two_way)
    if n > max_frames:
        raise ResourceGuardError(f"field would hold {n} frames, cap is {max_frames}")
    rng = np.random.default_rng(seed)
    sites = list(sites)

    def draw(i: int) -> GaugeTransform:
        return identity_gauge() if i == 0 else random_gauge(rng, "local", sites)

    ff = FrameField()
    root = root_frame()
    ff.add(root)
    layer = [root]
    for _ in range(depth):
        nxt = []
        for f in layer:
            for i in range(samples):
                w = FrameStep(draw(i))
                child = step_frame(w, f, f"{f.id}.{i}")
                ff.add(child)
                ff.link(f.id, child.id, w)
                nxt.append(child)
        layer = nxt
    if two_way:
        layer = [root]
        for _ in range(depth):
            nxt = []
            for f in layer:
                for i in range(samples):
                    w = FrameStep(draw(i))
                    # ancestor chosen so that stepping it by w lands on f
                    anc = Frame(f"{f.id}^{i}", f.stage - 1, identity_gauge(),
                                w.gauge.dagger().compose(f.cumulative))
                    ff.add(anc)
                    ff.link(anc.id, f.id, w)
                    nxt.append(anc)
            layer = nxt
        # record the first inbound edge as each frame's parent
        first_parent: dict[str, tuple[str, FrameStep]] = {}
        for p, c, w in ff.edges:
            first_parent.setdefault(c, (p, w))
        for fid, (p, w) in first_parent.items():
            f = ff.frames[fid]
            ff.frames[fid] = Frame(f.id, f.stage, w.gauge, f.cumulative, p)
    return ff


# -- law transport ------------------------------------------------------------------

LAW_SAMPLES: tuple[BasisState, ...] = tuple(
    encode_number(re, im) for re, im in [
        (1, 0), (Fraction(-3, 4), 0), (Fraction(5, 2), 0), (0, Fraction(1, 2)), (Fraction(3, 8), Fraction(-5, 4)),
    ]
)


def _law_additive_inverse(fa: FrameArithmetic) -> bool:
    zero = fa.into(ZERO)
    for x in LAW_SAMPLES:
        X = fa.into(x)
        for w1, negx in fa.unary(neg_a, X):
            for w2, s in fa.binary(add_a, X, negx):
                if fa.eq_probability(s, zero) < 1 - EQ_TOL:
                    return False
    return True


def _law_commutative(fa: FrameArithmetic) -> bool:
    for x in LAW_SAMPLES:
        for y in LAW_SAMPLES:
            X, Y = fa.into(x), fa.into(y)
            for (_, s), (_, t) in zip(fa.binary(add_a, X, Y), fa.binary(add_a, Y, X)):
                if fa.eq_probability(s, t) < 1 - EQ_TOL:
                    return False
    return True


def _law_self_cancel(fa: FrameArithmetic) -> bool:
    # x + x = 0 at x = 1: false in every frame
    X = fa.into(encode_number(1))
    zero = fa.into(ZERO)
    return all(fa.eq_probability(s, zero) >= 1 - EQ_TOL for _, s in fa.binary(add_a, X, X))


LAWS = {
    "additive-inverse": _law_additive_inverse,
    "additive-commutativity": _law_commutative,
    "self-cancel": _law_self_cancel,
}

# truth value each demo law must take in every frame
LAW_EXPECTED = {"additive-inverse": True, "additive-commutativity": True, "self-cancel": False}


@dataclass(frozen=True)
class LawReport:
    law: str
    truth: dict[str, bool]

    @property
    def uniform(self) -> bool:
        return len(set(self.truth.values())) <= 1

    @property
    def holds(self) -> bool:
        return all(self.truth.values())

    def to_json(self) -> dict:
        return {"law": self.law, "uniform": self.uniform, "holds": self.holds,
                "frames": dict(sorted(self.truth.items()))}


def demo_physical_law_transport(ff: FrameField, law: str) -> LawReport:
    """Evaluate a dyadic identity with each frame's conjugated arithmetic."""
    try:
        check = LAWS[law]
    except KeyError:
        raise UnknownLawError(f"unknown law {law!r}; choose from {sorted(LAWS)}") from None
    truth = {fid: check(FrameArithmetic(f.cumulative)) for fid, f in ff.frames.items()}
    return LawReport(law, truth)
