"""Twists of admissible multidegrees, tight tuples and twisting divisors.

A twist at a vertex fires every chip on an incident edge one step away from
the vertex (feeding a fresh chip from the vertex onto each edge whose residue
is zero).  On a multitree one can also twist at an edge/vertex pair of the
contracted graph, moving chips only across that bundle of parallel edges.

The twisting divisors ``D_i`` attached to a pair (gbar-edge, vertex) are the
formal records, on the marked points indexed by the edges of the bundle, of
the chips the vertex loses under successive partial twists.  They drive the
multivanishing bookkeeping in the limit-series module.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import lcm
from typing import Mapping

from .divisors import (
    AdmissibleMultidegree,
    DivisorError,
    dhar_reduce,
    divisor_to_multidegree,
    metric_to_subdivided,
    multidegree_to_divisor,
    subdivided_to_metric,
)
from .graph_core import ChainStructure, ContractedTree, GraphError, Multigraph, SubdividedGraph, contract


class TwistError(ValueError):
    """Raised when a twisting operation is undefined for the given data."""


def twist(
    w: AdmissibleMultidegree, graph: Multigraph, chain: ChainStructure, v: str
) -> AdmissibleMultidegree:
    """Twist ``w`` at the vertex ``v``."""
    return _twist_edges(w, graph, chain, v, [e.id for e in graph.incident(v)])


def _twist_edges(
    w: AdmissibleMultidegree,
    graph: Multigraph,
    chain: ChainStructure,
    v: str,
    edge_ids: list[str],
) -> AdmissibleMultidegree:
    if v not in set(graph.vertices):
        raise TwistError(f"unknown vertex {v!r}")
    new_w = dict(w.w)
    new_mu = dict(w.mu)
    for eid in edge_ids:
        e = graph.edge(eid)
        s = e.sigma(v)
        n = chain.length(eid)
        m = w.mu_at(eid)
        if (m + s) % n == 0:
            other = e.other(v)
            new_w[other] = new_w.get(other, 0) + 1
        if m == 0:
            new_w[v] = new_w.get(v, 0) - 1
        new_mu[eid] = (m + s) % n
    return AdmissibleMultidegree(new_w, new_mu)


def negative_twist(
    w: AdmissibleMultidegree, graph: Multigraph, chain: ChainStructure, v: str
) -> AdmissibleMultidegree:
    """Inverse of :func:`twist`, as the composite of twists at every other vertex."""
    out = w
    for u in graph.vertices:
        if u != v:
            out = twist(out, graph, chain, u)
    return out


def partial_twist(
    w: AdmissibleMultidegree,
    graph: Multigraph,
    chain: ChainStructure,
    tree: ContractedTree,
    gbar_edge: str,
    v: str,
) -> AdmissibleMultidegree:
    """Twist at the pair (gbar-edge, v): fire only across that bundle."""
    if not tree.is_multitree:
        raise TwistError("partial twists are defined on multitrees only")
    bid = tree.gbar_edge(gbar_edge)
    e = tree.graph.edge(bid)
    if v not in (e.tail, e.head):
        raise TwistError(f"vertex {v!r} is not an endpoint of {bid!r}")
    return _twist_edges(w, graph, chain, v, list(tree.fibers[bid]))


def is_concentrated(
    w: AdmissibleMultidegree,
    graph: Multigraph,
    chain: ChainStructure,
    v: str,
) -> tuple[bool, tuple[str, ...] | None]:
    """Search for a vertex ordering witnessing concentration on ``v``.

    An ordering starting at ``v`` qualifies when each later vertex is
    negative after negatively twisting at all earlier ones.  Twists commute,
    so the search memoises on the set of used vertices.
    """
    verts = set(graph.vertices)
    if v not in verts:
        raise TwistError(f"unknown vertex {v!r}")
    if len(verts) == 1:
        return True, (v,)
    dead: set[frozenset[str]] = set()

    def extend(used: frozenset[str], state: AdmissibleMultidegree, order: list[str]):
        if len(used) == len(verts):
            return tuple(order)
        if used in dead:
            return None
        for u in sorted(verts - used):
            if state.w_at(u) < 0:
                got = extend(
                    used | {u},
                    negative_twist(state, graph, chain, u),
                    order + [u],
                )
                if got is not None:
                    return got
        dead.add(used)
        return None

    witness = extend(frozenset({v}), negative_twist(w, graph, chain, v), [v])
    return (witness is not None), witness


def reduced_multidegree(
    w0: AdmissibleMultidegree,
    graph: Multigraph,
    chain: ChainStructure,
    sub: SubdividedGraph,
    v: str,
) -> AdmissibleMultidegree:
    """The multidegree whose divisor is the v-reduced form of D_{w0}."""
    D = metric_to_subdivided(multidegree_to_divisor(w0, graph, chain), sub)
    red, _ = dhar_reduce(D, sub, v)
    return divisor_to_multidegree(subdivided_to_metric(red, sub), graph, chain)


@dataclass(frozen=True)
class TightTuple:
    """One concentrated multidegree per vertex, linked by partial twists.

    ``b[gbar-edge]`` counts the twists at (e, v2) carrying ``w[v2]`` to
    ``w[v1]``; the count is independent of the endpoint order.
    """

    w: Mapping[str, AdmissibleMultidegree]
    b: Mapping[str, int]

    def member(self, v: str) -> AdmissibleMultidegree:
        return self.w[v]

    def b_at(self, gbar_edge: str) -> int:
        return self.b[gbar_edge]


def _twist_count(
    w_from: AdmissibleMultidegree,
    w_to: AdmissibleMultidegree,
    graph: Multigraph,
    chain: ChainStructure,
    tree: ContractedTree,
    gbar_edge: str,
    v_from: str,
) -> int | None:
    """Number of twists at (gbar_edge, v_from) carrying w_from to w_to."""
    fiber = tree.fibers[tree.gbar_edge(gbar_edge)]
    L = lcm(*(chain.length(e) for e in fiber))
    mass = (
        sum(abs(c) for c in w_from.w.values())
        + sum(abs(c) for c in w_to.w.values())
        + len(fiber)
        + 2
    )
    bound = mass * L + 2 * L
    cur = w_from
    for k in range(bound + 1):
        if cur == w_to:
            return k
        cur = partial_twist(cur, graph, chain, tree, gbar_edge, v_from)
    return None


def tight_tuple(
    w0: AdmissibleMultidegree,
    graph: Multigraph,
    chain: ChainStructure,
    sub: SubdividedGraph,
    tree: ContractedTree | None = None,
) -> TightTuple:
    """The tight tuple of reduced multidegrees of the class of ``w0``.

    For each contracted edge the twist count b is recovered by iterating
    partial twists from one endpoint's member to the other's; reduced tuples
    always admit a nonnegative count.
    """
    tree = tree or contract(graph)
    if not tree.is_multitree:
        raise TwistError("tight tuples require a multitree")
    members = {
        v: reduced_multidegree(w0, graph, chain, sub, v) for v in graph.vertices
    }
    b: dict[str, int] = {}
    for e in tree.graph.edges:
        v1, v2 = e.tail, e.head
        k = _twist_count(members[v2], members[v1], graph, chain, tree, e.id, v2)
        if k is None:
            # twisting at the other endpoint inverts, exposing a negative count
            k_neg = _twist_count(members[v2], members[v1], graph, chain, tree, e.id, v1)
            if k_neg is None:
                raise TwistError(
                    f"members at {v1!r} and {v2!r} are not connected by partial twists at {e.id!r}"
                )
            raise TwistError(
                f"tight tuple has negative twist count -{k_neg} at {e.id!r}; "
                "the class has no effective representative"
            )
        b[e.id] = k
    return TightTuple(members, b)


def is_tight(
    tup: TightTuple,
    graph: Multigraph,
    chain: ChainStructure,
    tree: ContractedTree | None = None,
) -> bool:
    """Verify concentration of every member and the b-consistency relations."""
    tree = tree or contract(graph)
    if not tree.is_multitree:
        return False
    for v in graph.vertices:
        ok, _ = is_concentrated(tup.w[v], graph, chain, v)
        if not ok:
            return False
    for e in tree.graph.edges:
        k = tup.b.get(e.id)
        if k is None or k < 0:
            return False
        cur = tup.w[e.head]
        for _ in range(k):
            cur = partial_twist(cur, graph, chain, tree, e.id, e.head)
        if cur != tup.w[e.tail]:
            return False
    return True


@dataclass(frozen=True)
class TwistingDivisorSeq:
    """The nondecreasing divisors D_0 = 0 <= D_1 <= ... for a pair (e, v).

    Divisors are formal sums over the marked points of the component at
    ``vertex``, keyed by the ids of the edges lying over ``gbar_edge``.
    """

    gbar_edge: str
    vertex: str
    divisors: tuple[Mapping[str, int], ...]

    def degree(self, i: int) -> int:
        return sum(self.divisors[i].values())

    def increment(self, i: int) -> dict[str, int]:
        """Support of D_{i+1} - D_i (each edge occurs at most once)."""
        lo, hi = self.divisors[i], self.divisors[i + 1]
        return {e: c - lo.get(e, 0) for e, c in hi.items() if c != lo.get(e, 0)}

    @property
    def top(self) -> int:
        return len(self.divisors) - 1


def twisting_divisors(
    w_v: AdmissibleMultidegree,
    graph: Multigraph,
    chain: ChainStructure,
    tree: ContractedTree,
    gbar_edge: str,
    v: str,
    top: int,
) -> TwistingDivisorSeq:
    """D_0, ..., D_top for the pair (gbar_edge, v), from the residues of w_v.

    The increment from D_i to D_{i+1} consists of one marked point for every
    edge of the bundle whose signed residue is congruent to -i.
    """
    bid = tree.gbar_edge(gbar_edge)
    e = tree.graph.edge(bid)
    if v not in (e.tail, e.head):
        raise TwistError(f"vertex {v!r} is not an endpoint of {bid!r}")
    fiber = tree.fibers[bid]
    divisors = [{}]
    cur: dict[str, int] = {}
    for i in range(top):
        for eid in fiber:
            s = graph.edge(eid).sigma(v)
            if (s * w_v.mu_at(eid) + i) % chain.length(eid) == 0:
                cur[eid] = cur.get(eid, 0) + 1
        divisors.append(dict(cur))
    return TwistingDivisorSeq(bid, v, tuple(divisors))


def critical_indices(seq: TwistingDivisorSeq) -> set[int]:
    """Indices j with D_{j+1} != D_j."""
    return {j for j in range(seq.top) if seq.increment(j)}


def relative_twist_divisor(
    w_from: AdmissibleMultidegree,
    w_to: AdmissibleMultidegree,
    graph: Multigraph,
    chain: ChainStructure,
    sub: SubdividedGraph,
    v: str,
) -> dict[str, int]:
    """The formal divisor on the marked points of the component at ``v``
    recording a composite of twists from ``w_from`` to ``w_to``.

    Computed from the piecewise linear witness f with
    ``D_{w_to} = D_{w_from} + div(f)`` as the outgoing slopes of f at ``v``,
    which makes path independence automatic.  Raises when the two
    multidegrees are not in a common twist orbit.
    """
    D_from = metric_to_subdivided(multidegree_to_divisor(w_from, graph, chain), sub)
    D_to = metric_to_subdivided(multidegree_to_divisor(w_to, graph, chain), sub)
    q = sub.base.vertices[0]
    R_from, f_from = dhar_reduce(D_from, sub, q)
    R_to, f_to = dhar_reduce(D_to, sub, q)
    if R_from != R_to:
        raise TwistError("multidegrees are not related by twists (classes differ)")
    f = f_from.add(f_to.neg())
    out: dict[str, int] = {}
    for e in graph.incident(v):
        s = f.slope(e.id, v)
        if s:
            out[e.id] = s
    return out


def twist_path(
    w: AdmissibleMultidegree,
    graph: Multigraph,
    chain: ChainStructure,
    vertices: list[str],
) -> AdmissibleMultidegree:
    """Twist successively at each vertex of ``vertices``."""
    out = w
    for v in vertices:
        out = twist(out, graph, chain, v)
    return out
