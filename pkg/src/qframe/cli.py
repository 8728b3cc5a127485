"""Command-line entry point: seeded experiments with machine-readable reports.

Exit codes: 0 when every asserted property holds, 1 on a property
failure, 2 on invalid configuration.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import os
import sys
from fractions import Fraction
from typing import Any, Callable

import numpy as np

from . import __version__
from .arithmetic import add_a, div_a, mul_a, proj_eq_a, sub_a
from .cauchy import (
    CauchyOperator,
    CauchyParams,
    ParityOperator,
    StateSequence,
    constant_operator,
    is_cauchy_basis_seq,
    is_cauchy_operator,
    is_cauchy_super,
    sqrt2_operator,
    truncation_operator,
)
from .dfs import CODES, frame_collapse_demo, invariance_defect
from .frames import (
    LAWS,
    LAW_EXPECTED,
    FrameStep,
    ResourceGuardError,
    build_frame_field,
    decomposition_defect,
    demo_physical_law_transport,
    recurrence_defect,
    root_frame,
    trace_path,
)
from .gauge import (
    FLIP,
    FseqSpec,
    GaugeError,
    GaugeTransform,
    global_gauge,
    haar_su2,
    identity_gauge,
    is_cauchy_in_frame,
    original_frame_divergence,
    random_gauge,
    rotation,
    transformed_eq_probability,
    gauge_lift,
)
from .qukit import kmin, kmin_brute
from .strings import BasisState, Component, PureState, Sign, StateFormatError, from_json, value

COVARIANCE_TOL = 1e-10
DEFECT_TOL = 1e-12


class ConfigError(ValueError):
    pass


# -- argument parsing -----------------------------------------------------------------

def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"not a rational number: {text!r}") from None


def parse_operator(spec: str) -> CauchyOperator:
    """``const:x``, ``trunc:n/d``, ``itrunc:n/d``, ``sqrt2`` or ``parity``."""
    kind, _, arg = spec.partition(":")
    try:
        if kind == "const":
            return constant_operator(_fraction(arg))
        if kind in ("trunc", "itrunc"):
            q = _fraction(arg)
            return truncation_operator(q.numerator, q.denominator, imaginary=kind == "itrunc")
        if kind == "sqrt2" and not arg:
            return sqrt2_operator()
        if kind == "parity" and not arg:
            return ParityOperator()
    except (ValueError, ZeroDivisionError) as e:
        raise ConfigError(f"bad operator {spec!r}: {e}") from None
    raise ConfigError(f"unknown operator {spec!r}")


def parse_gauge(spec: str, rng: np.random.Generator) -> GaugeTransform:
    """``rot:theta``, ``flip``, ``identity``, ``haar``, ``local`` or a gauge JSON file."""
    kind, _, arg = spec.partition(":")
    try:
        if kind == "rot":
            return global_gauge(rotation(float(arg)))
        if spec == "flip":
            return global_gauge(FLIP)
        if spec == "identity":
            return identity_gauge()
        if spec == "haar":
            return global_gauge(haar_su2(rng))
        if spec == "local":
            return random_gauge(rng, "local")
        with open(spec) as fh:
            return GaugeTransform.from_json(json.load(fh))
    except (ValueError, GaugeError, KeyError) as e:
        raise ConfigError(f"bad gauge {spec!r}: {e}") from None
    except OSError as e:
        raise ConfigError(f"cannot read gauge file {spec!r}: {e.strerror}") from None


def parse_fseq(spec: str, m_max: int) -> FseqSpec:
    try:
        if spec == "ones":
            return FseqSpec(m_max=m_max)
        n, _, pattern = spec.partition(":")
        return FseqSpec(int(n), pattern or "1", m_max=m_max)
    except ValueError as e:
        raise ConfigError(f"bad fseq {spec!r}: {e}") from None


def read_json_input(path: str) -> Any:
    try:
        text = sys.stdin.read() if path == "-" else open(path).read()
        return json.loads(text)
    except OSError as e:
        raise ConfigError(f"cannot read {path!r}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON in {path!r} at position {e.pos}: {e.msg}") from None


# -- report assembly -------------------------------------------------------------------

class Report:
    def __init__(self, command: str, config: dict, tolerances: dict):
        self.command, self.config, self.tolerances = command, config, tolerances
        self.checks: list[dict] = []
        self.results: dict[str, Any] = {}
        self.table: list[dict] | None = None

    def check(self, name: str, passed: bool, **detail) -> bool:
        self.checks.append({"name": name, "pass": bool(passed), **detail})
        return passed

    @property
    def ok(self) -> bool:
        return all(c["pass"] for c in self.checks)

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "version": __version__,
            "seed": self.config.get("seed"),
            "config": self.config,
            "tolerances": self.tolerances,
            "checks": self.checks,
            "results": self.results,
            "ok": self.ok,
        }

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return json.dumps(_jsonable(self.to_json()), sort_keys=True, indent=2) + "\n"
        if fmt == "csv":
            buf = io.StringIO()
            rows = self.table if self.table else [{"check": c["name"], "pass": c["pass"]} for c in self.checks]
            w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
            return buf.getvalue()
        lines = [f"{self.command} (qframe {__version__}, seed {self.config.get('seed')})"]
        for c in self.checks:
            extra = {k: v for k, v in c.items() if k not in ("name", "pass")}
            lines.append(f"  [{'PASS' if c['pass'] else 'FAIL'}] {c['name']}" + (f"  {json.dumps(_jsonable(extra), sort_keys=True)}" if extra else ""))
        lines.append("ok" if self.ok else "FAILED")
        return "\n".join(lines) + "\n"


def _jsonable(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


# -- subcommands -----------------------------------------------------------------------

def _params(a) -> CauchyParams:
    try:
        return CauchyParams(a.ell_max, a.horizon, a.witness_budget)
    except ValueError as e:
        raise ConfigError(str(e)) from None


def _real_states(radius: int) -> list[BasisState]:
    """Every canonical pure-real state with interval inside ``[-radius, radius]``."""
    out = [BasisState(Component(Sign.PLUS, 0, 0, 0), Component(Sign.PLUS, 0, 0, 0))]
    width = 2 * radius + 1
    for bits in range(1, 1 << width):
        c = Component(Sign.PLUS, -radius, radius, bits).canonical()
        for sign in (Sign.PLUS, Sign.MINUS):
            out.append(BasisState(Component(sign, c.lo, c.hi, c.bits), Component(Sign.PLUS, 0, 0, 0)))
    return out


def cmd_arith(a, rep: Report) -> None:
    states = _real_states(a.radius)
    vals = [value(s).real for s in states]
    ops = {"add": (add_a, lambda x, y: x + y), "sub": (sub_a, lambda x, y: x - y), "mul": (mul_a, lambda x, y: x * y)}
    for name, (op, oracle) in ops.items():
        bad = None
        count = 0
        for (x, vx), (y, vy) in itertools.product(zip(states, vals), repeat=2):
            count += 1
            r = value(op(x, y))
            if r.real != oracle(vx, vy) or r.imag != 0:
                bad = bad or {"x": str(x), "y": str(y), "got": str(r.real), "want": str(oracle(vx, vy))}
        rep.check(f"{name} matches exact oracle", bad is None, pairs=count, **({"repro": bad} if bad else {}))
    rng = np.random.default_rng(a.seed)
    worst, bad = Fraction(0), None
    nonzero = [(s, v) for s, v in zip(states, vals) if v != 0]
    for _ in range(a.div_samples):
        x, vx = states[rng.integers(len(states))], None
        y, vy = nonzero[rng.integers(len(nonzero))]
        vx = value(x).real
        ell = int(rng.integers(1, a.ell_max + 1))
        err = abs(value(div_a(x, y, ell)).real - vx / vy)
        if err >= Fraction(1, 1 << ell) and bad is None:
            bad = {"x": str(x), "y": str(y), "ell": ell, "error": str(err)}
        worst = max(worst, err * (1 << ell))
    rep.check("div within 2^-ell", bad is None, samples=a.div_samples, worstScaledError=float(worst),
              **({"repro": bad} if bad else {}))
    rep.results["states"] = len(states)


def _sequence_from_json(doc: Any) -> StateSequence:
    if not isinstance(doc, dict) or not isinstance(doc.get("states"), list) or not doc["states"]:
        raise ConfigError('sequence input must be {"states": [state, ...]}')
    try:
        states = [from_json(s, f"$.states[{i}]") for i, s in enumerate(doc["states"])]
    except StateFormatError as e:
        raise ConfigError(f"bad state at {e.position}: {e}") from None
    pure = [s if isinstance(s, PureState) else PureState.basis(s) for s in states]
    return StateSequence(lambda n: pure[n - 1], len(pure), "input")


def cmd_cauchy(a, rep: Report) -> None:
    p = _params(a)
    verdicts = {}
    if a.seq:
        seq = _sequence_from_json(read_json_input(a.seq))
        if seq.horizon < p.horizon:
            raise ConfigError(f"sequence has {seq.horizon} states, horizon is {p.horizon}")
        superposed = any(len(seq(n)) > 1 for n in range(1, p.horizon + 1))
        v = is_cauchy_super(seq, p) if superposed else is_cauchy_basis_seq(seq, p)
        verdicts["input"] = v
    for spec in a.op or ([] if a.seq else ["const:1"]):
        verdicts[spec] = is_cauchy_operator(parse_operator(spec), p)
    for name, v in verdicts.items():
        want = a.expect == "holds"
        detail = {"verdict": v.to_json()}
        if v.holds != want and a.expect != "any":
            failing = next((r for r in v.per_ell if not r.ok), None)
            if failing is not None:
                detail["repro"] = failing.to_json()
        rep.check(f"{name} {'is' if want else 'is not'} Cauchy", a.expect == "any" or v.holds == want, **detail)


CORPUS = ("const:3/4", "const:-5/2", "trunc:1/3", "sqrt2", "itrunc:1/3")


def cmd_gauge(a, rep: Report) -> None:
    rng = np.random.default_rng(a.seed)
    if a.fseq:
        spec = parse_fseq(a.fseq, a.m_max)
        g = parse_gauge(a.u or "haar", rng)
        ell = a.ell_max if a.ell_max is not None else 2
        try:
            tab = original_frame_divergence(spec, g, ell)
        except ValueError as e:
            raise ConfigError(str(e)) from None
        floors = tab.floors()
        monotone = all(floors[m] <= floors[m2] for m, m2 in zip(floors, list(floors)[1:]))
        rep.results.update({"gauge": g.to_json(), "floors": floors, "delta0": tab.delta0})
        rep.check("positive divergence floor", tab.delta0 > 0, delta0=tab.delta0)
        rep.check("floor non-decreasing in m", monotone)
        rep.table = [{"j": j, "k": k, "ell": ell, "P": pr} for j, k, pr in tab.rows]
        return
    p = _params(a)
    gauges = [parse_gauge(a.u, rng)] if a.u else [random_gauge(rng) for _ in range(a.samples)]
    # covariance of the transformed equality projector
    worst = 0.0
    for g in gauges:
        for _ in range(a.pairs):
            x, y = _random_state(rng), _random_state(rng)
            if rng.random() < 0.3:
                y = x
            d = abs(transformed_eq_probability(g, gauge_lift(g, x), gauge_lift(g, y)) - proj_eq_a(x, y))
            worst = max(worst, d)
    rep.check("transformed equality is covariant", worst < COVARIANCE_TOL, maxDeviation=worst)
    ops = a.op or list(CORPUS)
    for spec in ops:
        op = parse_operator(spec)
        base = is_cauchy_operator(op, p).holds
        disagree = []
        for i, g in enumerate(gauges):
            if is_cauchy_in_frame(g, op, p).holds != base:
                disagree.append(i)
        rep.check(f"{spec}: frame verdict equals original ({'holds' if base else 'fails'})", not disagree,
                  gauges=len(gauges), **({"repro": {"gaugeIndex": disagree[0], "gauge": gauges[disagree[0]].to_json()}}
                                         if disagree else {}))


def _random_state(rng: np.random.Generator) -> BasisState:
    def comp():
        lo, hi = -int(rng.integers(0, 4)), int(rng.integers(0, 4))
        bits = int(rng.integers(0, 1 << (hi - lo + 1)))
        sign = Sign.MINUS if rng.random() < 0.5 and bits else Sign.PLUS
        return Component(sign, lo, hi, bits).canonical()
    return BasisState(comp(), comp())


def cmd_frames(a, rep: Report) -> None:
    rng = np.random.default_rng(a.seed)
    try:
        ff = build_frame_field(a.depth, a.samples, a.two_way, a.seed, a.max_frames)
    except ResourceGuardError as e:
        raise ConfigError(str(e)) from None
    ff.check_invariants()
    rep.check("edge recurrence", ff.edge_defect() < DEFECT_TOL, defect=ff.edge_defect())
    worst_rec = worst_dec = 0.0
    for _ in range(a.paths):
        h = int(rng.integers(1, 7))
        steps = [FrameStep(random_gauge(rng)) for _ in range(h)]
        frames = trace_path(steps, root_frame(random_gauge(rng)))
        worst_rec = max(worst_rec, recurrence_defect(frames))
        worst_dec = max(worst_dec, max(decomposition_defect(w, f) for w, f in zip(steps, frames)))
    rep.check("path recurrence", worst_rec < DEFECT_TOL, paths=a.paths, defect=worst_rec)
    rep.check("W = V I decomposition", worst_dec < DEFECT_TOL, defect=worst_dec)
    for law in a.law or sorted(LAWS):
        r = demo_physical_law_transport(ff, law)
        rep.check(f"law {law} uniform across frames", r.uniform and r.holds == LAW_EXPECTED[law],
                  holds=r.holds, frames=len(r.truth))
    rep.results["field"] = ff.to_json()
    rep.results["stageRange"] = list(ff.stage_range)
    if a.dot:
        with open(a.dot, "w") as fh:
            fh.write(ff.to_dot())


def cmd_kmin(a, rep: Report) -> None:
    if a.max < 2:
        raise ConfigError("--max must be at least 2")
    rows = [{"n": n, "kmin": kmin(n)} for n in range(2, a.max + 1)]
    rep.table = rows
    rep.results["table"] = [[r["n"], r["kmin"]] for r in rows]
    top = max(a.max, a.check_max)
    bad = [n for n in range(2, top + 1) if kmin(n) != kmin_brute(n)]
    rep.check("kmin equals brute-force minimal base", not bad, checkedUpTo=top,
              **({"repro": {"n": bad[0], "kmin": kmin(bad[0]), "brute": kmin_brute(bad[0])}} if bad else {}))


def cmd_dfs(a, rep: Report) -> None:
    rng = np.random.default_rng(a.seed)
    codes = ["2", "3"] if a.code == "both" else [a.code]
    for c in codes:
        code = CODES[c]()
        rep.check(f"{code.name} projector algebra", code.algebra_defect() < DEFECT_TOL, defect=code.algebra_defect())
        worst = max(invariance_defect(code, haar_su2(rng)) for _ in range(a.invariance_samples))
        rep.check(f"{code.name} global invariance", worst < DEFECT_TOL, samples=a.invariance_samples, defect=worst)
        r = frame_collapse_demo(code, a.samples, int(rng.integers(0, 2 ** 31)), a.strings)
        rep.check(f"{code.name} logical outcomes identical across gauges", r.logical_identical,
                  deviation=r.max_logical_deviation)
        rep.check(f"{code.name} physical states differ", all(f < 1 - 1e-9 for f in r.physical_fidelities),
                  maxFidelity=max(r.physical_fidelities))
        rep.check(f"{code.name} local control disturbed", r.control_disturbance > 0,
                  disturbance=r.control_disturbance)
        rep.results[code.name] = r.to_json()


COMMANDS: dict[str, Callable] = {
    "arith": cmd_arith, "cauchy": cmd_cauchy, "gauge": cmd_gauge,
    "frames": cmd_frames, "kmin": cmd_kmin, "dfs": cmd_dfs,
}


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed, default=0)
    common.add_argument("--ell-max", "--ell", dest="ell_max", type=_positive, default=None,
                        help="accuracy levels 1..ELL (divergence table: the single level, default 2)")
    common.add_argument("--horizon", type=_positive, default=64)
    common.add_argument("--witness-budget", type=_positive, default=32)
    common.add_argument("--samples", type=_positive, default=None)
    common.add_argument("--depth", type=_positive, default=2)
    common.add_argument("--format", choices=("json", "csv", "text"), default="json")
    common.add_argument("--out", default=None, help="write the report to FILE instead of stdout")

    parser = argparse.ArgumentParser(prog="qframe", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("arith", parents=[common], help="exhaustive arithmetic oracle sweep")
    p.add_argument("--radius", type=int, default=3, help="sites [-r, r]")
    p.add_argument("--div-samples", type=_positive, default=10_000)

    p = sub.add_parser("cauchy", parents=[common], help="Cauchy verdicts for operators or sequences")
    p.add_argument("--op", action="append", help="operator spec, repeatable")
    p.add_argument("--seq", help='JSON file ({"states": [...]}) or - for stdin')
    p.add_argument("--expect", choices=("holds", "fails", "any"), default="holds")

    p = sub.add_parser("gauge", parents=[common], help="covariance, frame preservation and divergence")
    p.add_argument("--op", action="append", help="operator spec, repeatable (default: corpus)")
    p.add_argument("--u", help="gauge spec: rot:THETA, flip, identity, haar, local or a JSON file")
    p.add_argument("--fseq", help="'ones' or N:PATTERN for the divergence table")
    p.add_argument("--pairs", type=_positive, default=20)
    p.add_argument("--m-max", type=_positive, default=12)

    p = sub.add_parser("frames", parents=[common], help="frame field and law transport")
    p.add_argument("--two-way", action="store_true")
    p.add_argument("--law", action="append", choices=sorted(LAWS))
    p.add_argument("--paths", type=_positive, default=20)
    p.add_argument("--max-frames", type=_positive, default=10_000)
    p.add_argument("--dot", help="also write GraphViz text to this file")

    p = sub.add_parser("kmin", parents=[common], help="minimal base table")
    p.add_argument("--max", type=int, default=10)
    p.add_argument("--check-max", type=int, default=50)

    p = sub.add_parser("dfs", parents=[common], help="decoherence-free logical qubits")
    p.add_argument("--code", choices=("2", "3", "both"), default="both")
    p.add_argument("--invariance-samples", type=_positive, default=1000)
    p.add_argument("--strings", type=_positive, default=10)
    return parser


SAMPLE_DEFAULTS = {"gauge": 5, "frames": 3, "dfs": 20}


def _threads() -> int:
    raw = os.environ.get("QFRAME_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"QFRAME_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError("QFRAME_THREADS must be positive")
    return n


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    if a.samples is None:
        a.samples = SAMPLE_DEFAULTS.get(a.command, 1)
    if a.ell_max is None and not (a.command == "gauge" and a.fseq):
        a.ell_max = 8
    try:
        threads = _threads()
        config = {k: v for k, v in sorted(vars(a).items()) if k not in ("out", "format")}
        config["threads"] = threads
        rep = Report(a.command, config, {
            "epsP": CauchyParams().eps_p, "covariance": COVARIANCE_TOL, "defect": DEFECT_TOL,
        })
        COMMANDS[a.command](a, rep)
    except ConfigError as e:
        print(f"qframe: error: {e}", file=sys.stderr)
        return 2
    text = rep.render(a.format)
    if a.out:
        with open(a.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if rep.ok else 1


if __name__ == "__main__":
    sys.exit(main())
