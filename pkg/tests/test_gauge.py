import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import basis_states, dense_gauge_action, pair_projector_expectation, state_value
from qframe.arithmetic import add_a, mixed_add
from qframe.cauchy import (
    CauchyParams,
    FunctionOperator,
    ParityOperator,
    PreconditionError,
    constant_operator,
    is_cauchy_operator,
    truncation_operator,
)
from qframe.gauge import (
    FLIP,
    IDENTITY,
    DivergenceTable,
    FrameArithmetic,
    FseqSpec,
    GaugeError,
    GaugeTransform,
    apply_gauge,
    gauge_lift,
    global_gauge,
    haar_su2,
    identity_gauge,
    is_cauchy_in_frame,
    local_gauge,
    original_frame_divergence,
    random_gauge,
    rotation,
    transform_operator,
    transformed_add_a,
    transformed_eq_probability,
)
from qframe.strings import BasisState, PureState, encode_number, inner_product

P = BasisState.parse
SMALL = CauchyParams(ell_max=3, horizon=12, witness_budget=6)


def norm2(x: PureState) -> float:
    return sum(abs(a) ** 2 for a in x.terms.values())


def as_dict(x: PureState) -> dict:
    return dict(x.terms)


def close(a: dict, b: dict, tol: float = 1e-10) -> bool:
    keys = set(a) | set(b)
    return all(abs(a.get(k, 0) - b.get(k, 0)) <= tol for k in keys)


def test_site_unitary_validation():
    with pytest.raises(GaugeError):
        global_gauge([[1, 0], [0, 2]])
    with pytest.raises(GaugeError):
        global_gauge([[1, 0], [0, -1]])  # unitary but det -1
    with pytest.raises(GaugeError):
        GaugeTransform("sideways")
    assert np.allclose(rotation(0.0), IDENTITY)
    u = haar_su2(np.random.default_rng(0))
    assert np.allclose(u @ u.conj().T, IDENTITY) and abs(np.linalg.det(u) - 1) < 1e-12


def test_flip_example():
    g = local_gauge({0: FLIP})
    y = apply_gauge(g, P("+1."))
    assert len(y) == 1
    (b, a), = y.terms.items()
    assert b == P("+0.") and a == pytest.approx(1)
    y = apply_gauge(g, P("+0."))
    (b, a), = y.terms.items()
    assert b == P("+1.") and a == pytest.approx(-1)


def test_identity_gauge_is_noop():
    x = PureState.superpose([(P("+1.01"), 1), (P("-10.", "+1."), 1j)])
    assert apply_gauge(identity_gauge(), x).allclose(x, 1e-12)


@settings(max_examples=60, deadline=None)
@given(basis_states(3), st.integers(0, 2 ** 32 - 1), st.sampled_from(["global", "local"]))
def test_gauge_matches_dense_oracle(x, seed, kind):
    g = random_gauge(np.random.default_rng(seed), kind, sites=range(-3, 4))
    got = as_dict(apply_gauge(g, x))
    want = dense_gauge_action(g.site, PureState.basis(x))
    assert close(got, want)


@settings(max_examples=40, deadline=None)
@given(st.lists(basis_states(2), min_size=1, max_size=3, unique=True), st.integers(0, 2 ** 32 - 1))
def test_gauge_preserves_norm_and_inner_products(xs, seed):
    rng = np.random.default_rng(seed)
    g = random_gauge(rng, "local", sites=range(-2, 3))
    x = PureState.superpose((b, complex(*rng.normal(size=2))) for b in xs)
    y = PureState.basis(xs[0])
    gx, gy = apply_gauge(g, x), apply_gauge(g, y)
    assert norm2(gx) == pytest.approx(1, abs=1e-10)
    assert inner_product(gx, gy) == pytest.approx(inner_product(x, y), abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(basis_states(2), st.integers(0, 2 ** 32 - 1))
def test_composition_and_inverse(x, seed):
    rng = np.random.default_rng(seed)
    u, v = random_gauge(rng, sites=range(-2, 3)), random_gauge(rng, sites=range(-2, 3))
    two_step = apply_gauge(v, apply_gauge(u, x))
    one_step = apply_gauge(v.compose(u), x)
    assert close(as_dict(two_step), as_dict(one_step))
    assert apply_gauge(u.dagger(), apply_gauge(u, x)).allclose(PureState.basis(x), 1e-10)
    assert u.compose(u.dagger()).is_identity(1e-12)


def test_gauge_json_round_trip():
    rng = np.random.default_rng(3)
    for g in (identity_gauge(), global_gauge(rotation(0.3)), random_gauge(rng, sites=range(-1, 2))):
        h = GaugeTransform.from_json(json.loads(json.dumps(g.to_json())))
        assert h.kind == g.kind and g.max_difference(h) == 0.0
    with pytest.raises(GaugeError):
        GaugeTransform.from_json({"kind": "global", "u": [[1, 0], [0]]})


def test_restrict_and_identity_on():
    g = local_gauge({-1: FLIP, 2: FLIP})
    assert g.is_identity_on([0, 1], [])
    assert not g.is_identity_on([-1], [])
    r = g.restrict([-1])
    assert not r.is_identity_on([-1], []) and r.is_identity_on([2], [0])


@settings(max_examples=25, deadline=None)
@given(basis_states(2), basis_states(2), st.integers(0, 2 ** 32 - 1))
def test_transformed_relations_are_covariant(x, y, seed):
    g = random_gauge(np.random.default_rng(seed), sites=range(-2, 3))
    fx, fy = gauge_lift(g, x), gauge_lift(g, y)
    from qframe.arithmetic import proj_eq_a
    assert transformed_eq_probability(g, fx, fy) == pytest.approx(proj_eq_a(PureState.basis(x), PureState.basis(y)), abs=1e-10)
    m = transformed_add_a(g, fx, fy)
    assert len(m) == 1
    w, s = next(iter(m))
    assert w == pytest.approx(1) and s.allclose(apply_gauge(g, add_a(x, y)), 1e-10)


def test_transformed_add_on_superposition():
    g = random_gauge(np.random.default_rng(11), sites=range(-1, 2))
    sup = PureState.superpose([(P("+1."), 1), (P("+10."), 1)])
    one = PureState.basis(P("+1."))
    m = transformed_add_a(g, gauge_lift(g, sup), gauge_lift(g, one))
    ref = mixed_add(sup, one)
    assert sorted(w for w, _ in m) == pytest.approx(sorted(w for w, _ in ref), abs=1e-10)
    for (w, s), (w2, s2) in zip(m, ref):
        assert s.allclose(apply_gauge(g, s2), 1e-10)


def test_frame_arithmetic_back_and_into():
    g = random_gauge(np.random.default_rng(5), sites=range(-2, 3))
    fa = FrameArithmetic(g)
    x = PureState.basis(P("+10.1"))
    assert fa.back(fa.into(x)).allclose(x, 1e-10)
    assert fa.into(x) is fa.into(x)
    p = fa.project(fa.into(PureState.basis(P("+1.", "+1."))), imaginary=False)
    assert fa.back(p).allclose(PureState.basis(P("+1.")), 1e-10)


def test_transformed_operator_identity_gauge():
    op = truncation_operator(1, 3)
    t = transform_operator(identity_gauge(), op)
    for n in range(6):
        assert t.image(n).to_pure().allclose(PureState.basis(op.image(n)), 1e-12)


def test_transformed_operator_is_conjugate():
    g = random_gauge(np.random.default_rng(9), sites=range(-3, 2))
    op = truncation_operator(1, 3)
    t = transform_operator(g, op)
    for n in (0, 3, 5):
        assert t.image(n).to_pure().allclose(apply_gauge(g, op.image(n)), 1e-10)


def test_frame_verdict_matches_original():
    rng = np.random.default_rng(2)
    for g in (global_gauge(rotation(0.3)), random_gauge(rng, sites=range(-4, 3))):
        for op in (truncation_operator(1, 3), constant_operator(1)):
            a, b = is_cauchy_in_frame(g, op, SMALL), is_cauchy_operator(op, SMALL)
            assert a.holds == b.holds
            assert [r.witness for r in a.per_ell] == [r.witness for r in b.per_ell]
        v = is_cauchy_in_frame(g, ParityOperator(), SMALL)
        assert not v.holds and v.per_ell[0].dev == pytest.approx(1.0, abs=1e-9)


def test_frame_verdict_with_superposed_images():
    third = truncation_operator(1, 3)
    sup = FunctionOperator(lambda n: PureState.superpose([(third.image(n), 1), (encode_number(1), 1)]), "sup")
    g = random_gauge(np.random.default_rng(4), sites=range(-3, 2))
    a, b = is_cauchy_in_frame(g, sup, SMALL), is_cauchy_operator(sup, SMALL)
    assert a.holds == b.holds is False
    assert a.per_ell[0].min_p == pytest.approx(b.per_ell[0].min_p, abs=1e-9)


def test_fseq_states():
    s = FseqSpec()
    assert state_value(s.state(3))[0] == 1 + 0.5 + 0.25 + 0.125
    alt = FseqSpec(n=2, pattern="10")
    assert [alt.f(j) for j in (3, 2, 1, 0, -1)] == [0, 1, 0, 1, 0]
    with pytest.raises(ValueError):
        FseqSpec(pattern="01")
    with pytest.raises(ValueError):
        FseqSpec(m_min=5, m_max=4)


def test_fseq_identity_rejected():
    with pytest.raises(PreconditionError):
        original_frame_divergence(FseqSpec(), identity_gauge(), 2)
    # a gauge that only touches the imaginary chain is identity on the occupied sites
    with pytest.raises(PreconditionError):
        original_frame_divergence(FseqSpec(), local_gauge({}, {0: FLIP}), 2)


def test_fseq_flip_gauge_keeps_sequence_constant():
    # every bit of the all-ones string flips, so every image is the zero string
    t = original_frame_divergence(FseqSpec(m_max=8), global_gauge(FLIP), 1)
    assert all(p == pytest.approx(1.0, abs=1e-12) for _, _, p in t.rows)
    assert t.delta0 == pytest.approx(0.0, abs=1e-12)


def test_fseq_rotation_diverges():
    t = original_frame_divergence(FseqSpec(m_max=9), global_gauge(rotation(0.3)), 2)
    assert t.delta0 > 0.05
    floors = t.floors()
    ms = sorted(floors)
    assert all(floors[a] <= floors[b] + 1e-15 for a, b in zip(ms, ms[1:]))


def test_fseq_pair_probability_matches_oracle():
    spec = FseqSpec(m_max=6)
    g = global_gauge(rotation(0.3))
    t = original_frame_divergence(spec, g, 2)
    ga = g.restrict(range(-6, 1))
    states = {m: apply_gauge(ga, spec.state(m)) for m in range(4, 7)}
    tol = 0.25

    def within(a, b):
        return abs(a[0] - b[0]) <= tol and abs(a[1] - b[1]) <= tol

    for j, k, p in t.rows:
        assert p == pytest.approx(pair_projector_expectation(states[j], states[k], within), abs=1e-10)


def test_divergence_table_csv():
    t = DivergenceTable(1, ((4, 4, 1.0), (4, 5, 0.25), (5, 4, 0.25), (5, 5, 1.0)))
    assert t.to_csv().splitlines()[0] == "j,k,ell,P"
    assert t.tail_floor(4) == 0.75 and t.tail_floor(5) == math.inf
    assert t.delta0 == 0.75
