import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qframe.frames import (
    IDENTITY_STEP,
    LAW_EXPECTED,
    LAWS,
    FrameStep,
    ResourceGuardError,
    UnknownLawError,
    build_frame_field,
    compose_path,
    decomposition_defect,
    demo_physical_law_transport,
    field_size,
    gauge_change,
    recurrence_defect,
    root_frame,
    step_frame,
    trace_path,
)
from qframe.gauge import FLIP, global_gauge, identity_gauge, random_gauge, rotation

SITES = range(-2, 3)


def site_product(mats_per_gauge, chain, j):
    """Ordered matrix product, last gauge applied last (leftmost)."""
    out = np.eye(2, dtype=complex)
    for g in mats_per_gauge:
        out = g.site(chain, j) @ out
    return out


def test_identity_step_advances_stage_only():
    r = root_frame(global_gauge(rotation(0.4)))
    c = step_frame(IDENTITY_STEP, r)
    assert c.stage == 1 and c.parent_id == r.id
    assert c.cumulative.max_difference(r.cumulative) == 0.0
    assert IDENTITY_STEP.is_isomorphism and not FrameStep(global_gauge(FLIP)).is_isomorphism


def test_step_multiplies_site_matrices():
    rng = np.random.default_rng(1)
    u, up = random_gauge(rng, sites=SITES), random_gauge(rng, sites=SITES)
    c = step_frame(FrameStep(u), root_frame(up))
    for chain in "ab":
        for j in range(-3, 4):
            assert np.max(np.abs(c.cumulative.site(chain, j) - u.site(chain, j) @ up.site(chain, j))) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 6))
def test_path_matches_ordered_product(seed, h):
    rng = np.random.default_rng(seed)
    g0 = random_gauge(rng, sites=SITES)
    steps = [FrameStep(random_gauge(rng, sites=SITES)) for _ in range(h)]
    frames = trace_path(steps, root_frame(g0))
    assert recurrence_defect(frames) < 1e-12
    end = compose_path(steps, root_frame(g0))
    assert end.stage == h
    gs = [g0] + [w.gauge for w in steps]
    for chain in "ab":
        for j in (-3, -1, 0, 2, 5):
            assert np.max(np.abs(end.cumulative.site(chain, j) - site_product(gs, chain, j))) < 1e-10
    for w, f in zip(steps, frames):
        assert decomposition_defect(w, f) < 1e-12


def test_identity_path_keeps_gauge():
    g = global_gauge(rotation(1.1))
    end = compose_path([IDENTITY_STEP] * 4, root_frame(g))
    assert end.stage == 4 and end.cumulative.max_difference(g) < 1e-15
    with pytest.raises(ValueError):
        trace_path([], root_frame())


def test_gauge_change_keeps_stage():
    f = step_frame(IDENTITY_STEP, root_frame())
    v = global_gauge(FLIP)
    g = gauge_change(f, v)
    assert g.stage == f.stage and g.cumulative.max_difference(v) < 1e-15


def test_field_shapes():
    ff = build_frame_field(1, 3)
    assert len(ff.frames) == 4 and len(ff.edges) == 3
    ff = build_frame_field(2, 1)
    assert len(ff.frames) == 3 and all(f.cumulative.is_identity() for f in ff.frames.values())
    for d, s in [(1, 2), (2, 3), (3, 2)]:
        ff = build_frame_field(d, s)
        assert len(ff.frames) == sum(s ** k for k in range(d + 1)) == field_size(d, s, False)
        ff.check_invariants()
        assert ff.edge_defect() < 1e-12


def test_two_way_field():
    ff = build_frame_field(2, 3, two_way=True, seed=4)
    assert len(ff.frames) == field_size(2, 3, True) == 25
    assert ff.stage_range == (-2, 2)
    ff.check_invariants()
    assert ff.edge_defect() < 1e-12
    # stage direction only ever increases along edges, so there are no cycles
    assert all(ff.frames[c].stage == ff.frames[p].stage + 1 for p, c, _ in ff.edges)


def test_field_determinism_and_guard():
    a = json.dumps(build_frame_field(2, 2, seed=9).to_json(), sort_keys=True)
    b = json.dumps(build_frame_field(2, 2, seed=9).to_json(), sort_keys=True)
    assert a == b
    with pytest.raises(ResourceGuardError):
        build_frame_field(6, 5, max_frames=100)
    with pytest.raises(ValueError):
        build_frame_field(0, 2)


def test_field_exports():
    ff = build_frame_field(1, 2, seed=0)
    doc = ff.to_json()
    assert [n["id"] for n in doc["nodes"]] == ["r", "r.0", "r.1"]
    assert doc["edges"] == [{"from": "r", "to": "r.0"}, {"from": "r", "to": "r.1"}]
    dot = ff.to_dot()
    assert dot.startswith("digraph") and '"r" -> "r.1";' in dot


def test_law_transport():
    ff = build_frame_field(1, 10, seed=2)
    for law in LAWS:
        rep = demo_physical_law_transport(ff, law)
        assert rep.uniform
        assert rep.holds is LAW_EXPECTED[law]
        assert len(rep.truth) == 11
    root_only = build_frame_field(1, 1)
    assert demo_physical_law_transport(root_only, "additive-inverse").truth["r"] is True
    with pytest.raises(UnknownLawError):
        demo_physical_law_transport(ff, "gravity")
