"""Command-line front end: JSON in, JSON out, deterministic output.

Every subcommand reads a single bundle file combining the graph (with edge
lengths), optional markings, and whichever payload it needs (multidegree,
divisor, series, metrized-complex series).  Exit codes: 0 success, 1 a
requested check failed, 2 malformed input.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .divisors import (
    AdmissibleMultidegree,
    DivisorError,
    MetricDivisor,
    canonical_divisor,
    dhar_reduce,
    divisor_to_json,
    divisor_to_multidegree,
    linearly_equivalent,
    metric_to_subdivided,
    multidegree_to_divisor,
    multidegree_to_json,
    rank as divisor_rank,
    subdivided_to_metric,
)
from .graph_core import GraphError, contract, genus, graph_to_json, reorient, subdivide, validate
from .jsonio import (
    Bundle,
    BundleError,
    markings_to_json,
    mc_to_json,
    series_to_json,
    tuple_to_json,
)
from .limit_series import (
    SeriesError,
    UncertifiedRegime,
    check_condition_I,
    check_mc_weak_glueing,
    check_weak_glueing,
    forgetful_map,
    inverse_forgetful,
    multivanishing,
    extended_sequence,
)
from .p1_algebra import FunctionError
from .smoothing_lifting import (
    ContextFlags,
    LiftError,
    check_condition_II,
    check_residue_condition,
    classify,
    lift_dispatch,
    lift_rank_one,
    lift_vertex_avoiding,
    max_dprime,
)
from .twisting import (
    TwistError,
    critical_indices,
    negative_twist,
    tight_tuple,
    twist,
    twisting_divisors,
)

USER_ERRORS = (
    GraphError,
    DivisorError,
    TwistError,
    SeriesError,
    FunctionError,
    LiftError,
    BundleError,
    json.JSONDecodeError,
    OSError,
)


def _load_bundle(path: str) -> Bundle:
    with open(path, "r", encoding="utf-8") as handle:
        return Bundle(json.load(handle))


def _emit(payload: dict, pretty: bool) -> None:
    if pretty:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(json.dumps(payload, sort_keys=True, separators=(",", ":")))


def cmd_validate(args) -> tuple[int, dict]:
    bundle = _load_bundle(args.bundle)
    problems = validate(bundle.graph, bundle.chain)
    if problems and args.reorient:
        fixed = reorient(bundle.graph)
        remaining = validate(fixed, bundle.chain)
        return (
            (0 if not remaining else 1),
            {
                "ok": not remaining,
                "problems": remaining,
                "graph": graph_to_json(fixed, bundle.chain),
            },
        )
    return (0 if not problems else 1), {"ok": not problems, "problems": problems}


def cmd_reduce(args) -> tuple[int, dict]:
    bundle = _load_bundle(args.bundle)
    sub = subdivide(bundle.graph, bundle.chain)
    D = metric_to_subdivided(bundle.divisor(), sub)
    base = args.base or sub.base.vertices[0]
    red, witness = dhar_reduce(D, sub, base)
    return 0, {
        "base": base,
        "reduced": divisor_to_json(subdivided_to_metric(red, sub)),
        "witness": {v: c for v, c in sorted(witness.values.items()) if c},
    }


def cmd_rank(args) -> tuple[int, dict]:
    bundle = _load_bundle(args.bundle)
    sub = subdivide(bundle.graph, bundle.chain)
    if "divisor" in bundle.data:
        D = bundle.divisor()
    else:
        D = MetricDivisor({})
    r = divisor_rank(D, sub, degree_cap=args.degree_cap)
    return 0, {"rank": r, "degree": D.degree()}


def cmd_equiv(args) -> tuple[int, dict]:
    bundle = _load_bundle(args.bundle)
    sub = subdivide(bundle.graph, bundle.chain)
    D1 = bundle.divisor("divisor")
    D2 = bundle.divisor("divisor2")
    eq, witness = linearly_equivalent(D1, D2, sub)
    out = {"equivalent": eq}
    if eq:
        out["witness"] = {v: c for v, c in sorted(witness.values.items()) if c}
    return 0, out


def cmd_twist(args) -> tuple[int, dict]:
    bundle = _load_bundle(args.bundle)
    w = bundle.multidegree()
    op = negative_twist if args.negative else twist
    for _ in range(args.count):
        w = op(w, bundle.graph, bundle.chain, args.vertex)
    return 0, {"multidegree": multidegree_to_json(w)}


def cmd_tight(args) -> tuple[int, dict]:
    bundle = _load_bundle(args.bundle)
    sub = subdivide(bundle.graph, bundle.chain)
    tup = tight_tuple(bundle.multidegree(), bundle.graph, bundle.chain, sub)
    return 0, {"tuple": tuple_to_json(tup)}


def cmd_twistdiv(args) -> tuple[int, dict]:
    bundle = _load_bundle(args.bundle)
    tree = contract(bundle.graph)
    seq = twisting_divisors(
        bundle.multidegree(), bundle.graph, bundle.chain, tree,
        args.edge, args.vertex, args.top,
    )
    return 0, {
        "divisors": [dict(sorted(d.items())) for d in seq.divisors],
        "critical": sorted(critical_indices(seq)),
    }


def cmd_multivanish(args) -> tuple[int, dict]:
    bundle = _load_bundle(args.bundle)
    series = bundle.series()
    out = {}
    for e in series.tree.graph.edges:
        entry = {}
        for v in (e.tail, e.head):
            d_v = series.tuple.member(v).w_at(v)
            seq = extended_sequence(
                series, e.id, v, min_top=series.tuple.b_at(e.id) + 1, degree_bound=d_v
            )
            entry[v] = list(
                multivanishing(series.spaces[v], seq, d_v, series.components[v])
            )
        out[e.id] = entry
    return 0, {"multivanishing": out}


def cmd_check_prelimit(args) -> tuple[int, dict]:
    bundle = _load_bundle(args.bundle)
    ok, report = check_condition_I(bundle.series())
    code = 0 if (ok or args.expect != "pass") else 1
    if args.expect == "fail" and ok:
        code = 1
    return code, {"condition_I": ok, "report": report}


def cmd_check_glueing(args) -> tuple[int, dict]:
    bundle = _load_bundle(args.bundle)
    report = check_weak_glueing(bundle.series())
    code = 0
    if args.expect == "pass" and not report.passed:
        code = 1
    if args.expect == "fail" and report.passed:
        code = 1
    return code, report.to_json()


def cmd_forgetful(args) -> tuple[int, dict]:
    bundle = _load_bundle(args.bundle)
    series = bundle.series()
    if "multidegree" in bundle.data:
        w = bundle.multidegree()
    else:
        w = series.tuple.member(sorted(series.tuple.w)[0])
    mc = forgetful_map(series, w)
    return 0, {"mc": mc_to_json(mc)}


def cmd_invert(args) -> tuple[int, dict]:
    bundle = _load_bundle(args.bundle)
    series = inverse_forgetful(bundle.mc())
    return 0, {"series": series_to_json(series)}


def cmd_classify(args) -> tuple[int, dict]:
    bundle = _load_bundle(args.bundle)
    context = ContextFlags(
        strongly_bn_general=args.bn_general, d_prime=args.d_prime
    )
    verdict = classify(bundle.mc(), context)
    return 0, verdict.to_json()


def cmd_dprime(args) -> tuple[int, dict]:
    bundle = _load_bundle(args.bundle)
    bound = max_dprime(bundle.graph, bundle.chain)
    out: dict = {"max_dprime": bound if bound is not None else "unbounded"}
    if args.check is not None:
        out["satisfies"] = check_condition_II(bundle.graph, bundle.chain, args.check)
        return (0 if out["satisfies"] else 1), out
    return 0, out


def cmd_residues(args) -> tuple[int, dict]:
    bundle = _load_bundle(args.bundle)
    if "multidegree" in bundle.data:
        data = bundle.multidegree()
    else:
        data = bundle.divisor()
    ok = check_residue_condition(data, bundle.graph, bundle.chain)
    return 0, {"residue_condition": ok}


def cmd_lift(args) -> tuple[int, dict]:
    bundle = _load_bundle(args.bundle)
    D = bundle.divisor()
    markings = bundle.markings()
    if args.mode == "dispatch":
        plan = lift_dispatch(D, bundle.graph, bundle.chain)
        out = {"route": plan.route, "detail": plan.detail}
        if plan.divisor is not None:
            out["divisor"] = divisor_to_json(plan.divisor)
        return 0, out
    if args.mode == "rank1":
        result = lift_rank_one(D, bundle.graph, bundle.chain, markings)
        if result.bypass:
            return 0, {"bypass": True, "detail": result.detail}
        return 0, {"bypass": False, "series": series_to_json(result.series)}
    sub = subdivide(bundle.graph, bundle.chain)
    r = divisor_rank(D, sub) if args.rank is None else args.rank
    series = lift_vertex_avoiding(D, r, bundle.graph, bundle.chain, markings)
    return 0, {"series": series_to_json(series)}


# -- fixtures ------------------------------------------------------------------

def _fixture_twisting_example() -> tuple[bool, dict]:
    """Two vertices joined by edges of lengths (4, 2, 3): the basic twist."""
    from .graph_core import ChainStructure, Edge, Multigraph

    g = Multigraph(
        ["v", "vp"],
        [Edge("e1", "v", "vp"), Edge("e2", "v", "vp"), Edge("e3", "v", "vp")],
    )
    chain = ChainStructure({"e1": 4, "e2": 2, "e3": 3})
    w = AdmissibleMultidegree({"v": 3}, {"e1": 1, "e2": 1})
    wt = twist(w, g, chain, "v")
    expected = AdmissibleMultidegree({"v": 2, "vp": 1}, {"e1": 2, "e3": 1})
    D = multidegree_to_divisor(w, g, chain)
    Dt = multidegree_to_divisor(wt, g, chain)
    placements_ok = (
        dict(D.vertex) == {"v": 3}
        and [(e, str(p), c) for e, p, c in D.edge] == [("e1", "1", 1), ("e2", "1", 1)]
        and dict(Dt.vertex) == {"v": 2, "vp": 1}
        and [(e, str(p), c) for e, p, c in Dt.edge] == [("e1", "2", 1), ("e3", "1", 1)]
    )
    ok = wt == expected and placements_ok
    return ok, {
        "twisted": multidegree_to_json(wt),
        "expected": multidegree_to_json(expected),
        "placements_ok": placements_ok,
    }


def _fixture_twisting_divisors() -> tuple[bool, dict]:
    """Twisting divisors 0, P3, P2+P3, P2+P3, P1+2P2+2P3 and the tight pair."""
    from .graph_core import ChainStructure, Edge, Multigraph

    g = Multigraph(
        ["v", "vp"],
        [Edge("e1", "v", "vp"), Edge("e2", "v", "vp"), Edge("e3", "v", "vp")],
    )
    chain = ChainStructure({"e1": 4, "e2": 2, "e3": 3})
    sub = subdivide(g, chain)
    tree = contract(g)
    w = AdmissibleMultidegree({"v": 3}, {"e1": 1, "e2": 1})
    seq = twisting_divisors(w, g, chain, tree, "e1", "v", 4)
    expected = (
        {},
        {"e3": 1},
        {"e2": 1, "e3": 1},
        {"e2": 1, "e3": 1},
        {"e1": 1, "e2": 2, "e3": 2},
    )
    tup = tight_tuple(w, g, chain, sub, tree)
    ok = (
        tuple(dict(d) for d in seq.divisors) == expected
        and sorted(critical_indices(seq)) == [0, 1, 3]
        and tup.b_at("v~vp") == 3
        and tup.member("v") == w
    )
    return ok, {
        "divisors": [dict(sorted(d.items())) for d in seq.divisors],
        "critical": sorted(critical_indices(seq)),
        "b": tup.b_at("v~vp"),
    }


def example_nonsmoothable_bundle() -> dict:
    """The two-component genus-one complex carrying a non-smoothable series."""
    return {
        "graph": {
            "vertices": ["v", "vp"],
            "edges": [
                {"id": "e1", "tail": "v", "head": "vp", "n": 2},
                {"id": "e2", "tail": "v", "head": "vp", "n": 1},
            ],
        },
        "markings": {
            "v": {"marked": {"e1": "0", "e2": "1"}, "extra": {"R": "2"}},
            "vp": {"marked": {"e1": "0", "e2": "1"}, "extra": {"R'": "2"}},
        },
        "mc": {
            "gamma": {"vertex": {"v": 2}},
            "parts": {"v": {"2": 2}, "vp": {}},
            "markings": {
                "v": {"marked": {"e1": "0", "e2": "1"}, "extra": {"R": "2"}},
                "vp": {"marked": {"e1": "0", "e2": "1"}, "extra": {"R'": "2"}},
            },
            "spaces": {
                "v": ["x/(x - 2)", "(x^2 - x)/(x^2 - 4*x + 4)"],
                "vp": ["(x - 2)/(x - 1)", "1"],
            },
        },
    }


def _fixture_nonsmoothable() -> tuple[bool, dict]:
    """Full pipeline on the non-smoothable example."""
    bundle = Bundle(example_nonsmoothable_bundle())
    mc = bundle.mc()
    sub = subdivide(bundle.graph, bundle.chain)
    w0 = divisor_to_multidegree(mc.gamma, bundle.graph, bundle.chain)
    tup = tight_tuple(w0, bundle.graph, bundle.chain, sub)
    series = inverse_forgetful(mc, tup)
    cond, _ = check_condition_I(series)
    report = check_weak_glueing(series)
    failures = [(s.gbar_edge, s.j) for s in report.failures()]
    verdict = classify(mc, ContextFlags(strongly_bn_general=True))
    mv = {}
    for v in ("v", "vp"):
        d_v = tup.member(v).w_at(v)
        seq = extended_sequence(series, "v~vp", v, min_top=tup.b_at("v~vp") + 1, degree_bound=d_v)
        mv[v] = list(multivanishing(series.spaces[v], seq, d_v, series.components[v]))
    ok = (
        cond
        and mv == {"v": [0, 2], "vp": [0, 1]}
        and tup.b_at("v~vp") == 1
        and not report.passed
        and failures == [("v~vp", 0)]
        and verdict.verdict == "NotSmoothable"
        and verdict.rule == "thm4.5"
    )
    return ok, {
        "condition_I": cond,
        "multivanishing": mv,
        "b": tup.b_at("v~vp"),
        "glueing_failures": [list(f) for f in failures],
        "verdict": verdict.to_json(),
    }


FIXTURES = {
    "twist-basic": _fixture_twisting_example,
    "twisting-divisors": _fixture_twisting_divisors,
    "nonsmoothable-complex": _fixture_nonsmoothable,
}


def cmd_fixtures(args) -> tuple[int, dict]:
    results = {}
    all_ok = True
    for name, fn in FIXTURES.items():
        ok, detail = fn()
        results[name] = {"ok": ok, "detail": detail}
        all_ok = all_ok and ok
    return (0 if all_ok else 1), {"ok": all_ok, "fixtures": results}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="troplift",
        description="Exact chip-firing, limit-series checks and divisor lifting "
        "on metric graphs with chain structures.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--pretty", action="store_true", help="indent JSON output")
    common.add_argument("--json", action="store_true", help="compact JSON output (default)")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text):
        p = sub.add_parser(name, help=help_text, parents=[common])
        p.set_defaults(fn=fn)
        if name != "fixtures":
            p.add_argument("bundle", help="path to the bundle JSON file")
        return p

    p = add("validate", cmd_validate, "check graph contract")
    p.add_argument("--reorient", action="store_true", help="repair edge directions")
    p = add("reduce", cmd_reduce, "reduced divisor at a base vertex")
    p.add_argument("--base", help="base vertex (default lex-least)")
    p = add("rank", cmd_rank, "divisor rank")
    p.add_argument("--degree-cap", type=int, default=24)
    add("equiv", cmd_equiv, "linear equivalence of divisor and divisor2")
    p = add("twist", cmd_twist, "twist a multidegree at a vertex")
    p.add_argument("--vertex", required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--negative", action="store_true")
    add("tight", cmd_tight, "tight tuple of reduced multidegrees")
    p = add("twistdiv", cmd_twistdiv, "twisting divisor sequence for (edge, vertex)")
    p.add_argument("--edge", required=True, help="edge of the contracted graph (or any edge over it)")
    p.add_argument("--vertex", required=True)
    p.add_argument("--top", type=int, required=True)
    add("multivanish", cmd_multivanish, "multivanishing sequences of a series")
    p = add("check-prelimit", cmd_check_prelimit, "multivanishing bound (condition I)")
    p.add_argument("--expect", choices=["pass", "fail"], default=None)
    p = add("check-glueing", cmd_check_glueing, "weak glueing condition")
    p.add_argument("--expect", choices=["pass", "fail"], default=None)
    add("forgetful", cmd_forgetful, "series -> metrized-complex series")
    add("invert", cmd_invert, "metrized-complex series -> series")
    p = add("classify", cmd_classify, "smoothability verdict")
    p.add_argument("--bn-general", action="store_true", help="assert strong Brill-Noether generality")
    p.add_argument("--d-prime", type=int, default=None)
    p = add("dprime", cmd_dprime, "largest admissible d'")
    p.add_argument("--check", type=int, default=None, help="test a specific d'")
    add("residues", cmd_residues, "residue distinctness condition")
    p = add("lift", cmd_lift, "explicit lifting constructions")
    p.add_argument("--mode", choices=["rank1", "vertex-avoiding", "dispatch"], default="dispatch")
    p.add_argument("--rank", type=int, default=None, help="expected rank (vertex-avoiding mode)")
    add("fixtures", cmd_fixtures, "replay the built-in worked examples")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        code, payload = args.fn(args)
    except UncertifiedRegime as exc:
        _emit({"error": str(exc), "kind": "uncertified"}, args.pretty)
        return 2
    except USER_ERRORS as exc:
        _emit({"error": str(exc), "kind": type(exc).__name__}, args.pretty)
        return 2
    _emit(payload, args.pretty)
    return code


if __name__ == "__main__":
    sys.exit(main())
