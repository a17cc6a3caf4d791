"""JSON forms for series-level objects and the single-file bundle."""

from __future__ import annotations

from typing import Mapping

from .divisors import (
    AdmissibleMultidegree,
    MetricDivisor,
    divisor_from_json,
    divisor_to_json,
    multidegree_from_json,
    multidegree_to_json,
)
from .graph_core import ChainStructure, Multigraph, graph_from_json, graph_to_json
from .limit_series import MetrizedComplexSeries, PreLimitSeries, SeriesError
from .p1_algebra import (
    FunctionSpace,
    MarkedComponent,
    PointDivisor,
    format_function,
    format_point,
    parse_function,
    parse_point,
)
from .twisting import TightTuple


def markings_to_json(markings: Mapping[str, MarkedComponent]) -> dict:
    return {
        v: {
            "marked": {e: format_point(p) for e, p in comp.marked.items()},
            "extra": {name: format_point(p) for name, p in comp.extra.items()},
        }
        for v, comp in sorted(markings.items())
    }


def markings_from_json(data: dict) -> dict[str, MarkedComponent]:
    out = {}
    for v, item in data.items():
        marked = {str(e): parse_point(str(p)) for e, p in item.get("marked", {}).items()}
        extra = {str(k): parse_point(str(p)) for k, p in item.get("extra", {}).items()}
        out[str(v)] = MarkedComponent(str(v), marked, extra)
    return out


def point_divisor_to_json(D: PointDivisor) -> dict:
    return {format_point(p): c for p, c in D.coeffs.items()}


def point_divisor_from_json(data: dict) -> PointDivisor:
    return PointDivisor({parse_point(str(k)): int(c) for k, c in data.items()})


def tuple_to_json(tup: TightTuple) -> dict:
    return {
        "w": {v: multidegree_to_json(w) for v, w in sorted(tup.w.items())},
        "b": dict(sorted(tup.b.items())),
    }


def tuple_from_json(data: dict) -> TightTuple:
    return TightTuple(
        {str(v): multidegree_from_json(item) for v, item in data["w"].items()},
        {str(e): int(c) for e, c in data["b"].items()},
    )


def series_to_json(series: PreLimitSeries) -> dict:
    return {
        "rank": series.rank,
        "tuple": tuple_to_json(series.tuple),
        "markings": markings_to_json(series.components),
        "spaces": {
            v: {
                "twist_divisor": point_divisor_to_json(sp.divisor),
                "basis": [format_function(f) for f in sp.basis],
            }
            for v, sp in sorted(series.spaces.items())
        },
    }


def series_from_json(
    data: dict, graph: Multigraph, chain: ChainStructure
) -> PreLimitSeries:
    try:
        tup = tuple_from_json(data["tuple"])
        markings = markings_from_json(data["markings"])
        rank = int(data["rank"])
        spaces = {}
        for v, item in data["spaces"].items():
            basis = tuple(parse_function(s) for s in item["basis"])
            divisor = point_divisor_from_json(item["twist_divisor"])
            spaces[str(v)] = FunctionSpace(basis, divisor)
    except (KeyError, TypeError) as exc:
        raise SeriesError(f"malformed series JSON: {exc}") from exc
    return PreLimitSeries(graph, chain, tup, markings, spaces, rank)


def mc_to_json(mc: MetrizedComplexSeries) -> dict:
    return {
        "gamma": divisor_to_json(mc.gamma),
        "parts": {
            v: point_divisor_to_json(d) for v, d in sorted(mc.parts.items())
        },
        "markings": markings_to_json(mc.components),
        "spaces": {
            v: [format_function(f) for f in fs]
            for v, fs in sorted(mc.functions.items())
        },
    }


def mc_from_json(
    data: dict, graph: Multigraph, chain: ChainStructure
) -> MetrizedComplexSeries:
    try:
        gamma = divisor_from_json(data["gamma"])
        markings = markings_from_json(data["markings"])
        parts = {
            str(v): point_divisor_from_json(item)
            for v, item in data.get("parts", {}).items()
        }
        functions = {
            str(v): tuple(parse_function(s) for s in fs)
            for v, fs in data["spaces"].items()
        }
    except (KeyError, TypeError) as exc:
        raise SeriesError(f"malformed metrized-complex series JSON: {exc}") from exc
    for v in graph.vertices:
        parts.setdefault(v, PointDivisor({}))
    return MetrizedComplexSeries(graph, chain, markings, gamma, parts, functions)


class BundleError(ValueError):
    """Raised when a bundle file is missing a required section."""


class Bundle:
    """A single JSON document holding graph, chain, markings and payloads."""

    def __init__(self, data: dict):
        if not isinstance(data, dict):
            raise BundleError("bundle must be a JSON object")
        self.data = data
        if "graph" not in data:
            raise BundleError("bundle is missing the 'graph' section")
        self.graph, self.chain = graph_from_json(data["graph"])

    def require(self, key: str):
        if key not in self.data:
            raise BundleError(f"bundle is missing the {key!r} section")
        return self.data[key]

    def multidegree(self, key: str = "multidegree") -> AdmissibleMultidegree:
        return multidegree_from_json(self.require(key))

    def divisor(self, key: str = "divisor") -> MetricDivisor:
        return divisor_from_json(self.require(key))

    def markings(self) -> dict[str, MarkedComponent]:
        if "markings" in self.data:
            return markings_from_json(self.data["markings"])
        from .smoothing_lifting import default_markings

        return default_markings(self.graph)

    def series(self) -> PreLimitSeries:
        return series_from_json(self.require("series"), self.graph, self.chain)

    def mc(self) -> MetrizedComplexSeries:
        return mc_from_json(self.require("mc"), self.graph, self.chain)
