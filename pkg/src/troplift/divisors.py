"""Divisors on G, Gtilde and the metric graph; chip-firing machinery.

The central objects are integral edge-reduced divisors on the metric graph
and their bijection with admissible multidegrees ``(w_G, mu)``: the vertex
coefficients plus, per edge, the distance of the (at most one) interior chip
from the tail.  Reduction at a base vertex is computed by Dhar's burning
algorithm on the subdivided graph and is the workhorse behind linear
equivalence tests and rank.

All arithmetic is exact; interior chip positions are ``fractions.Fraction``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .graph_core import (
    ChainStructure,
    GraphError,
    Multigraph,
    SubdividedGraph,
    genus,
    subdivide,
)


class DivisorError(ValueError):
    """Raised for malformed divisors or unsupported divisor operations."""


def _clean(coeffs: Mapping[str, int]) -> dict[str, int]:
    return {v: int(c) for v, c in sorted(coeffs.items()) if c != 0}


@dataclass(frozen=True)
class GraphDivisor:
    """Finitely supported integer divisor on a vertex set."""

    coeffs: Mapping[str, int]

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _clean(self.coeffs))

    def degree(self) -> int:
        return sum(self.coeffs.values())

    def get(self, v: str) -> int:
        return self.coeffs.get(v, 0)

    def is_effective(self) -> bool:
        return all(c >= 0 for c in self.coeffs.values())

    def effective_off(self, v0: str) -> bool:
        return all(c >= 0 for v, c in self.coeffs.items() if v != v0)

    def add(self, other: "GraphDivisor") -> "GraphDivisor":
        out = dict(self.coeffs)
        for v, c in other.coeffs.items():
            out[v] = out.get(v, 0) + c
        return GraphDivisor(out)

    def sub(self, other: "GraphDivisor") -> "GraphDivisor":
        out = dict(self.coeffs)
        for v, c in other.coeffs.items():
            out[v] = out.get(v, 0) - c
        return GraphDivisor(out)

    def shift(self, v: str, c: int) -> "GraphDivisor":
        out = dict(self.coeffs)
        out[v] = out.get(v, 0) + c
        return GraphDivisor(out)


@dataclass(frozen=True)
class MetricDivisor:
    """Divisor on the metric graph: vertex part plus interior chips.

    Each edge entry is ``(edge id, distance from tail, coefficient)`` with
    the distance a rational strictly between 0 and ``n(e)``.
    """

    vertex: Mapping[str, int]
    edge: tuple[tuple[str, Fraction, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "vertex", _clean(self.vertex))
        merged: dict[tuple[str, Fraction], int] = {}
        for eid, pos, c in self.edge:
            pos = Fraction(pos)
            merged[(eid, pos)] = merged.get((eid, pos), 0) + int(c)
        entries = tuple(
            (eid, pos, c) for (eid, pos), c in sorted(merged.items()) if c != 0
        )
        for eid, pos, _ in entries:
            if pos <= 0:
                raise DivisorError(f"edge chip at non-interior position {pos} on {eid!r}")
        object.__setattr__(self, "edge", entries)

    def degree(self) -> int:
        return sum(self.vertex.values()) + sum(c for _, _, c in self.edge)

    def is_integral(self) -> bool:
        return all(pos.denominator == 1 for _, pos, _ in self.edge)

    def is_effective(self) -> bool:
        return all(c >= 0 for c in self.vertex.values()) and all(
            c >= 0 for _, _, c in self.edge
        )

    def is_edge_reduced(self) -> bool:
        """Each open edge carries nothing or a single chip of coefficient 1."""
        seen: dict[str, int] = {}
        for eid, _, c in self.edge:
            if c != 1:
                return False
            seen[eid] = seen.get(eid, 0) + 1
        return all(k == 1 for k in seen.values())

    def restrict_edge(self, edge_id: str) -> tuple[tuple[Fraction, int], ...]:
        return tuple((pos, c) for eid, pos, c in self.edge if eid == edge_id)

    def scaled(self, m: int) -> "MetricDivisor":
        """The same divisor on the chain structure scaled by ``m``."""
        return MetricDivisor(self.vertex, tuple((e, pos * m, c) for e, pos, c in self.edge))


@dataclass(frozen=True)
class AdmissibleMultidegree:
    """Vertex degrees plus the per-edge residue of the interior chip.

    ``mu(e)`` lives in ``[0, n(e))``; the total degree counts one chip for
    every edge with nonzero residue on top of the vertex degrees.
    """

    w: Mapping[str, int]
    mu: Mapping[str, int]

    def __post_init__(self):
        object.__setattr__(self, "w", _clean(self.w))
        object.__setattr__(self, "mu", _clean(self.mu))

    def validate(self, graph: Multigraph, chain: ChainStructure) -> None:
        for v in self.w:
            if v not in set(graph.vertices):
                raise DivisorError(f"multidegree names unknown vertex {v!r}")
        for e in graph.edges:
            m = self.mu.get(e.id, 0)
            if not 0 <= m < chain.length(e.id):
                raise DivisorError(
                    f"mu({e.id!r})={m} outside [0, {chain.length(e.id)})"
                )

    def degree(self) -> int:
        return sum(self.w.values()) + sum(1 for m in self.mu.values() if m != 0)

    def w_at(self, v: str) -> int:
        return self.w.get(v, 0)

    def mu_at(self, e: str) -> int:
        return self.mu.get(e, 0)

    def is_effective(self) -> bool:
        return all(c >= 0 for c in self.w.values())

    def effective_off(self, v0: str) -> bool:
        return all(c >= 0 for v, c in self.w.items() if v != v0)


def multidegree_to_divisor(
    w: AdmissibleMultidegree, graph: Multigraph, chain: ChainStructure
) -> MetricDivisor:
    """The integral edge-reduced divisor D_w: one chip at distance mu(e) from
    the tail on every edge with nonzero residue."""
    w.validate(graph, chain)
    vertex = {v: w.w_at(v) for v in graph.vertices}
    edge = []
    for e in graph.edges:
        m = w.mu_at(e.id)
        if m != 0:
            edge.append((e.id, Fraction(m), 1))
    return MetricDivisor(vertex, tuple(edge))


def divisor_to_multidegree(
    D: MetricDivisor, graph: Multigraph, chain: ChainStructure
) -> AdmissibleMultidegree:
    """Inverse of :func:`multidegree_to_divisor` on integral edge-reduced divisors."""
    if not D.is_integral():
        raise DivisorError("not integral: interior chips at non-integer positions")
    if not D.is_edge_reduced():
        raise DivisorError("not edge-reduced: some open edge carries more than one chip")
    mu = {}
    for eid, pos, _ in D.edge:
        n = chain.length(eid)
        if not 0 < pos < n:
            raise DivisorError(f"chip position {pos} outside (0, {n}) on edge {eid!r}")
        mu[eid] = int(pos)
    w = {v: D.vertex.get(v, 0) for v in graph.vertices}
    out = AdmissibleMultidegree(w, mu)
    out.validate(graph, chain)
    return out


def metric_to_subdivided(D: MetricDivisor, sub: SubdividedGraph) -> GraphDivisor:
    """Integral metric divisors live on the vertices of Gtilde."""
    if not D.is_integral():
        raise DivisorError("only integral divisors live on the subdivided graph")
    out = dict(D.vertex)
    for eid, pos, c in D.edge:
        v = sub.vertex_at(eid, int(pos))
        out[v] = out.get(v, 0) + c
    return GraphDivisor(out)


def subdivided_to_metric(D: GraphDivisor, sub: SubdividedGraph) -> MetricDivisor:
    vertex = {}
    edge = []
    for v, c in D.coeffs.items():
        if v in sub.position:
            eid, k = sub.position[v]
            edge.append((eid, Fraction(k), c))
        else:
            vertex[v] = c
    return MetricDivisor(vertex, tuple(edge))


@dataclass(frozen=True)
class PLFunction:
    """Piecewise linear function on the metric graph.

    Stored through its integer values on V(Gtilde); on each unit segment the
    function is linear, so slopes are integers and breakpoints integral.
    """

    values: Mapping[str, int]
    sub: SubdividedGraph = field(compare=False)

    def __post_init__(self):
        vals = {v: int(self.values.get(v, 0)) for v in self.sub.graph.vertices}
        base = vals[self.sub.graph.vertices[0]] if self.sub.graph.vertices else 0
        # normalised so the lex-least vertex has value 0
        object.__setattr__(self, "values", {v: c - base for v, c in vals.items()})

    def value(self, v: str) -> int:
        return self.values[v]

    def slope(self, edge_id: str, v: str) -> int:
        """Outgoing slope at a G-vertex ``v`` along the G-edge ``edge_id``."""
        path = self.sub.path_vertices(edge_id)
        if v == path[0]:
            return self.values[path[1]] - self.values[path[0]]
        if v == path[-1]:
            return self.values[path[-2]] - self.values[path[-1]]
        raise DivisorError(f"{v!r} is not an endpoint of edge {edge_id!r}")

    def divisor(self) -> GraphDivisor:
        out = {}
        for e in self.sub.graph.edges:
            du = self.values[e.head] - self.values[e.tail]
            out[e.tail] = out.get(e.tail, 0) + du
            out[e.head] = out.get(e.head, 0) - du
        return GraphDivisor(out)

    def add(self, other: "PLFunction") -> "PLFunction":
        return PLFunction({v: self.values[v] + other.values[v] for v in self.values}, self.sub)

    def neg(self) -> "PLFunction":
        return PLFunction({v: -c for v, c in self.values.items()}, self.sub)

    def breakpoints(self, edge_id: str) -> tuple[tuple[int, int], ...]:
        path = self.sub.path_vertices(edge_id)
        return tuple((k, self.values[v]) for k, v in enumerate(path))


def zero_pl(sub: SubdividedGraph) -> PLFunction:
    return PLFunction({v: 0 for v in sub.graph.vertices}, sub)


def _fire_set(D: dict[str, int], graph: Multigraph, S: set[str], k: int, f: dict[str, int]):
    """Fire every vertex of S exactly k times, updating D and the record f."""
    for v in S:
        f[v] += k
    for e in graph.edges:
        t_in, h_in = e.tail in S, e.head in S
        if t_in and not h_in:
            D[e.tail] -= k
            D[e.head] += k
        elif h_in and not t_in:
            D[e.head] -= k
            D[e.tail] += k


def _burn(D: dict[str, int], graph: Multigraph, q: str) -> set[str]:
    """Dhar's burning: return the unburnt set (empty iff D is q-reduced)."""
    burnt = {q}
    changed = True
    while changed:
        changed = False
        for v in graph.vertices:
            if v in burnt:
                continue
            hot = sum(1 for e in graph.incident(v) if e.other(v) in burnt)
            if hot > D.get(v, 0):
                burnt.add(v)
                changed = True
    return set(graph.vertices) - burnt


def dhar_reduce_graph(
    D: GraphDivisor, graph: Multigraph, q: str
) -> tuple[GraphDivisor, dict[str, int]]:
    """q-reduce a divisor on an arbitrary connected multigraph.

    Returns the reduced divisor and the firing record ``f`` with
    ``reduced = D + div(f)``.
    """
    if q not in set(graph.vertices):
        raise DivisorError(f"unknown base vertex {q!r}")
    work = {v: D.get(v) for v in graph.vertices}
    f = {v: 0 for v in graph.vertices}

    # stage 1: make the divisor effective away from q, one BFS layer at a
    # time from the outside in; in-firing a tail set only feeds its boundary.
    dist = {q: 0}
    frontier = [q]
    while frontier:
        nxt = []
        for u in frontier:
            for e in graph.incident(u):
                w = e.other(u)
                if w not in dist:
                    dist[w] = dist[u] + 1
                    nxt.append(w)
        frontier = nxt
    maxdist = max(dist.values())
    for d in range(maxdist, 0, -1):
        layer = [v for v in graph.vertices if dist[v] == d]
        need = 0
        for v in layer:
            if work[v] < 0:
                gain = sum(1 for e in graph.incident(v) if dist[e.other(v)] < d)
                need = max(need, -(work[v] // gain))
        if need:
            inner = {v for v in graph.vertices if dist[v] < d}
            _fire_set(work, graph, inner, need, f)

    # stage 2: superstabilise via burning
    while True:
        S = _burn(work, graph, q)
        if not S:
            break
        k = None
        for v in S:
            out = sum(1 for e in graph.incident(v) if e.other(v) not in S)
            if out:
                k = min(k, work[v] // out) if k is not None else work[v] // out
        k = max(1, k if k is not None else 1)
        _fire_set(work, graph, S, k, f)

    base = f[q]
    f = {v: c - base for v, c in f.items()}
    return GraphDivisor(work), f


def dhar_reduce(
    D: GraphDivisor, sub: SubdividedGraph, q: str
) -> tuple[GraphDivisor, PLFunction]:
    """q-reduce a divisor on the subdivided graph, with a PL witness."""
    red, f = dhar_reduce_graph(D, sub.graph, q)
    return red, PLFunction(f, sub)


def base_vertex(sub: SubdividedGraph) -> str:
    """Reduction base for equivalence tests: the lexicographically least
    vertex of the original graph (not of the subdivision)."""
    return sub.base.vertices[0]


def canonical_divisor(sub: SubdividedGraph) -> GraphDivisor:
    """K(v) = valence(v) - 2 on V(Gtilde); its degree is 2g - 2."""
    return GraphDivisor({v: sub.graph.valence(v) - 2 for v in sub.graph.vertices})


def linearly_equivalent(
    D1: MetricDivisor | GraphDivisor,
    D2: MetricDivisor | GraphDivisor,
    sub: SubdividedGraph,
) -> tuple[bool, PLFunction | None]:
    """Decide linear equivalence by comparing reduced forms at a fixed base.

    On success the witness f satisfies ``D2 = D1 + div(f)``.
    """
    G1 = metric_to_subdivided(D1, sub) if isinstance(D1, MetricDivisor) else D1
    G2 = metric_to_subdivided(D2, sub) if isinstance(D2, MetricDivisor) else D2
    if G1.degree() != G2.degree():
        return False, None
    q = base_vertex(sub)
    R1, f1 = dhar_reduce(G1, sub, q)
    R2, f2 = dhar_reduce(G2, sub, q)
    if R1 != R2:
        return False, None
    return True, f1.add(f2.neg())


DEFAULT_RANK_DEGREE_CAP = 24


def rank(
    D: MetricDivisor | GraphDivisor,
    sub: SubdividedGraph,
    degree_cap: int = DEFAULT_RANK_DEGREE_CAP,
) -> int:
    """Divisor rank, brute-forced over effective divisors on V(Gtilde).

    Testing against vertex-supported divisors only is enough because the
    vertices of the unit subdivision form a rank-determining set.  The
    enumeration recurses one subtracted chip at a time and memoises on the
    reduced form, which collapses the bulk of the multiset enumeration.
    """
    Dg = metric_to_subdivided(D, sub) if isinstance(D, MetricDivisor) else D
    d = Dg.degree()
    if d < 0:
        return -1
    if d > degree_cap:
        raise DivisorError(
            f"degree {d} exceeds the rank degree cap {degree_cap}; raise degree_cap explicitly"
        )
    q = base_vertex(sub)
    verts = sub.graph.vertices
    memo: dict[tuple, bool] = {}

    def covers(red: GraphDivisor, k: int) -> bool:
        # red is q-reduced, hence effective iff nonnegative at q
        if red.get(q) < 0:
            return False
        if k == 0:
            return True
        key = (tuple(sorted(red.coeffs.items())), k)
        got = memo.get(key)
        if got is None:
            got = True
            for v in verts:
                nxt, _ = dhar_reduce_graph(red.shift(v, -1), sub.graph, q)
                if not covers(nxt, k - 1):
                    got = False
                    break
            memo[key] = got
        return got

    red0, _ = dhar_reduce(Dg, sub, q)
    r = -1
    while r < d and covers(red0, r + 1):
        r += 1
    return r


def riemann_roch_defect(
    D: GraphDivisor, sub: SubdividedGraph, degree_cap: int = DEFAULT_RANK_DEGREE_CAP
) -> int:
    """rank(D) - rank(K - D) - deg(D) - 1 + g; zero iff Riemann-Roch holds."""
    K = canonical_divisor(sub)
    g = genus(sub.graph)
    return (
        rank(D, sub, degree_cap)
        - rank(K.sub(D), sub, degree_cap)
        - D.degree()
        - 1
        + g
    )


def build_subdivision(graph: Multigraph, chain: ChainStructure) -> SubdividedGraph:
    """Convenience wrapper keeping a single construction path for callers."""
    return subdivide(graph, chain)


# -- JSON interchange ---------------------------------------------------------

def _fraction_to_str(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def parse_fraction(s: str) -> Fraction:
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise DivisorError(f"bad rational literal {s!r}") from exc


def divisor_to_json(D: MetricDivisor) -> dict:
    out: dict = {"vertex": dict(D.vertex)}
    if D.edge:
        out["edge"] = [
            {"edge": eid, "t": _fraction_to_str(pos), "c": c} for eid, pos, c in D.edge
        ]
    return out


def divisor_from_json(data: dict) -> MetricDivisor:
    try:
        vertex = {str(v): int(c) for v, c in data.get("vertex", {}).items()}
        edge = tuple(
            (str(item["edge"]), parse_fraction(str(item["t"])), int(item["c"]))
            for item in data.get("edge", [])
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DivisorError(f"malformed divisor JSON: {exc}") from exc
    return MetricDivisor(vertex, edge)


def multidegree_to_json(w: AdmissibleMultidegree) -> dict:
    return {"w": dict(w.w), "mu": dict(w.mu)}


def multidegree_from_json(data: dict) -> AdmissibleMultidegree:
    try:
        return AdmissibleMultidegree(
            {str(v): int(c) for v, c in data["w"].items()},
            {str(e): int(c) for e, c in data.get("mu", {}).items()},
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DivisorError(f"malformed multidegree JSON: {exc}") from exc
