"""Loopless multigraphs with positive integer edge lengths.

A graph ``G`` together with a length function ``n`` (the chain structure)
determines three derived objects used everywhere else in the package:

* the contracted graph ``Gbar`` in which every bundle of parallel edges is
  replaced by a single edge,
* the subdivided graph ``Gtilde`` obtained by inserting ``n(e) - 1`` vertices
  into each edge ``e``,
* the metric graph carrying divisors, with either ``V(G)`` or ``V(Gtilde)``
  as its vertex set.

All values are immutable after construction.  Vertex and edge ids are opaque
strings; lexicographic order on ids is the universal tie-breaker.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping


class GraphError(ValueError):
    """Raised for malformed graphs, chain structures or id mismatches."""


@dataclass(frozen=True)
class Edge:
    """A directed edge.  The tail/head pair fixes the direction convention."""

    id: str
    tail: str
    head: str

    def other(self, v: str) -> str:
        if v == self.tail:
            return self.head
        if v == self.head:
            return self.tail
        raise GraphError(f"vertex {v!r} is not an endpoint of edge {self.id!r}")

    def sigma(self, v: str) -> int:
        """+1 if ``v`` is the tail of this edge, -1 if it is the head."""
        if v == self.tail:
            return 1
        if v == self.head:
            return -1
        raise GraphError(f"vertex {v!r} is not an endpoint of edge {self.id!r}")


class Multigraph:
    """A loopless connected multigraph with directed edges.

    Parallel edges are allowed.  Construction checks only id sanity; use
    :func:`validate` for the full direction/connectivity contract.
    """

    def __init__(self, vertices: Iterable[str], edges: Iterable[Edge]):
        self.vertices: tuple[str, ...] = tuple(sorted(vertices))
        self.edges: tuple[Edge, ...] = tuple(sorted(edges, key=lambda e: e.id))
        if len(set(self.vertices)) != len(self.vertices):
            raise GraphError("duplicate vertex ids")
        if len({e.id for e in self.edges}) != len(self.edges):
            raise GraphError("duplicate edge ids")
        vset = set(self.vertices)
        for e in self.edges:
            if e.tail not in vset or e.head not in vset:
                raise GraphError(f"edge {e.id!r} has an endpoint outside the vertex set")
        self._by_id = {e.id: e for e in self.edges}
        self._incident: dict[str, tuple[Edge, ...]] = {v: () for v in self.vertices}
        inc: dict[str, list[Edge]] = {v: [] for v in self.vertices}
        for e in self.edges:
            inc[e.tail].append(e)
            if e.head != e.tail:
                inc[e.head].append(e)
        self._incident = {v: tuple(es) for v, es in inc.items()}

    def edge(self, edge_id: str) -> Edge:
        try:
            return self._by_id[edge_id]
        except KeyError:
            raise GraphError(f"unknown edge id {edge_id!r}") from None

    def incident(self, v: str) -> tuple[Edge, ...]:
        try:
            return self._incident[v]
        except KeyError:
            raise GraphError(f"unknown vertex id {v!r}") from None

    def valence(self, v: str) -> int:
        return len(self.incident(v))

    def is_connected(self) -> bool:
        if not self.vertices:
            return False
        seen = {self.vertices[0]}
        stack = [self.vertices[0]]
        while stack:
            u = stack.pop()
            for e in self.incident(u):
                w = e.other(u)
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == len(self.vertices)

    def parallel_classes(self) -> dict[tuple[str, str], tuple[Edge, ...]]:
        """Group edges by unordered endpoint pair, keyed by the sorted pair."""
        classes: dict[tuple[str, str], list[Edge]] = {}
        for e in self.edges:
            key = tuple(sorted((e.tail, e.head)))
            classes.setdefault(key, []).append(e)
        return {k: tuple(v) for k, v in sorted(classes.items())}

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Multigraph)
            and self.vertices == other.vertices
            and self.edges == other.edges
        )

    def __repr__(self) -> str:
        return f"Multigraph({len(self.vertices)} vertices, {len(self.edges)} edges)"


@dataclass(frozen=True)
class ChainStructure:
    """Positive integer length per edge of G."""

    n: Mapping[str, int]

    def __post_init__(self):
        for e, length in self.n.items():
            if not isinstance(length, int) or length < 1:
                raise GraphError(f"chain structure must be a positive integer, got n({e!r})={length!r}")

    def length(self, edge_id: str) -> int:
        try:
            return self.n[edge_id]
        except KeyError:
            raise GraphError(f"chain structure missing edge {edge_id!r}") from None

    def scaled(self, m: int) -> "ChainStructure":
        if m < 1:
            raise GraphError("scale factor must be positive")
        return ChainStructure({e: m * k for e, k in self.n.items()})


def validate(graph: Multigraph, chain: ChainStructure | None = None) -> list[str]:
    """Return the list of contract violations (empty when the graph is valid).

    Checks looplessness, connectivity and the shared-tail direction
    convention: all edges joining the same pair of vertices must point the
    same way.
    """
    problems = []
    for e in graph.edges:
        if e.tail == e.head:
            problems.append(f"loop: edge {e.id!r} has tail = head = {e.tail!r}")
    if not graph.vertices:
        problems.append("empty vertex set")
    elif not graph.is_connected():
        problems.append("graph is not connected")
    for (u, v), cls in graph.parallel_classes().items():
        tails = {e.tail for e in cls}
        if len(tails) > 1:
            ids = ",".join(e.id for e in cls)
            problems.append(f"edges {ids} between {u!r} and {v!r} do not share a tail")
    if chain is not None:
        for e in graph.edges:
            chain.length(e.id)
    return problems


def require_valid(graph: Multigraph, chain: ChainStructure | None = None) -> None:
    problems = validate(graph, chain)
    if problems:
        raise GraphError("; ".join(problems))


def reorient(graph: Multigraph) -> Multigraph:
    """Canonical repair of the direction convention.

    Every edge is re-pointed from its lexicographically smaller endpoint to
    the larger one, which trivially restores the shared-tail property.
    """
    edges = []
    for e in graph.edges:
        u, v = sorted((e.tail, e.head))
        edges.append(Edge(e.id, u, v))
    return Multigraph(graph.vertices, edges)


@dataclass(frozen=True)
class ContractedTree:
    """The graph Gbar plus the fibration of E(G) over E(Gbar)."""

    graph: Multigraph
    fiber_of: Mapping[str, str]          # G-edge id -> Gbar-edge id
    fibers: Mapping[str, tuple[str, ...]]  # Gbar-edge id -> G-edge ids over it
    is_multitree: bool
    is_chain: bool

    def gbar_edge(self, edge_id: str) -> str:
        """Resolve a G-edge id or a Gbar-edge id to the Gbar-edge id."""
        if edge_id in self.fibers:
            return edge_id
        if edge_id in self.fiber_of:
            return self.fiber_of[edge_id]
        raise GraphError(f"unknown edge id {edge_id!r}")

    def chain_order(self) -> tuple[str, ...]:
        """Vertices of a chain Gbar in path order, lex-least endpoint first."""
        if not self.is_chain:
            raise GraphError("contracted graph is not a chain")
        g = self.graph
        if len(g.vertices) == 1:
            return g.vertices
        ends = sorted(v for v in g.vertices if g.valence(v) == 1)
        order = [ends[0]]
        prev = None
        while len(order) < len(g.vertices):
            cur = order[-1]
            nxt = [e.other(cur) for e in g.incident(cur) if e.other(cur) != prev]
            order.append(nxt[0])
            prev = cur
        return tuple(order)


def gbar_edge_id(u: str, v: str) -> str:
    a, b = sorted((u, v))
    return f"{a}~{b}"


def contract(graph: Multigraph) -> ContractedTree:
    """Collapse each bundle of parallel edges of G to a single edge of Gbar."""
    require_valid(graph)
    fibers: dict[str, tuple[str, ...]] = {}
    fiber_of: dict[str, str] = {}
    bar_edges = []
    for (u, v), cls in graph.parallel_classes().items():
        bid = gbar_edge_id(u, v)
        bar_edges.append(Edge(bid, cls[0].tail, cls[0].head))
        fibers[bid] = tuple(e.id for e in cls)
        for e in cls:
            fiber_of[e.id] = bid
    gbar = Multigraph(graph.vertices, bar_edges)
    is_multitree = len(gbar.edges) == len(gbar.vertices) - 1
    valences = sorted(gbar.valence(v) for v in gbar.vertices)
    is_chain = is_multitree and (len(gbar.vertices) == 1 or all(k <= 2 for k in valences))
    return ContractedTree(gbar, fiber_of, fibers, is_multitree, is_chain)


def interior_vertex_id(edge_id: str, k: int) -> str:
    return f"{edge_id}@{k}"


@dataclass(frozen=True)
class SubdividedGraph:
    """Gtilde plus the ordered chain of inserted vertices per G-edge."""

    graph: Multigraph                    # Gtilde, all edges of length 1
    base: Multigraph                     # the original G
    chain: ChainStructure
    interior: Mapping[str, tuple[str, ...]]   # G-edge id -> inserted ids, tail to head
    position: Mapping[str, tuple[str, int]] = field(repr=False, default_factory=dict)
    # interior vertex id -> (G-edge id, distance from tail)

    def path_vertices(self, edge_id: str) -> tuple[str, ...]:
        """All Gtilde vertices along a G-edge, from tail to head inclusive."""
        e = self.base.edge(edge_id)
        return (e.tail,) + self.interior[edge_id] + (e.head,)

    def vertex_at(self, edge_id: str, dist: int) -> str:
        """The Gtilde vertex at integer distance ``dist`` from the tail."""
        n = self.chain.length(edge_id)
        if not 0 <= dist <= n:
            raise GraphError(f"distance {dist} outside [0, {n}] on edge {edge_id!r}")
        return self.path_vertices(edge_id)[dist]


def subdivide(graph: Multigraph, chain: ChainStructure) -> SubdividedGraph:
    """Insert ``n(e) - 1`` vertices into each edge, ordered tail to head."""
    require_valid(graph, chain)
    vertices = list(graph.vertices)
    edges = []
    interior: dict[str, tuple[str, ...]] = {}
    position: dict[str, tuple[str, int]] = {}
    vset = set(vertices)
    for e in graph.edges:
        n = chain.length(e.id)
        inserted = tuple(interior_vertex_id(e.id, k) for k in range(1, n))
        for k, w in enumerate(inserted, start=1):
            if w in vset:
                raise GraphError(f"subdivision vertex id {w!r} collides with an existing vertex")
            vset.add(w)
            vertices.append(w)
            position[w] = (e.id, k)
        interior[e.id] = inserted
        path = (e.tail,) + inserted + (e.head,)
        for k in range(n):
            edges.append(Edge(f"{e.id}#{k}", path[k], path[k + 1]))
    gtilde = Multigraph(vertices, edges)
    return SubdividedGraph(gtilde, graph, chain, interior, position)


def genus(graph: Multigraph) -> int:
    """First Betti number |E| - |V| + 1; invariant under subdivision."""
    if not graph.is_connected():
        raise GraphError("genus requires a connected graph")
    return len(graph.edges) - len(graph.vertices) + 1


# -- JSON interchange ---------------------------------------------------------

def graph_to_json(graph: Multigraph, chain: ChainStructure) -> dict:
    return {
        "vertices": list(graph.vertices),
        "edges": [
            {"id": e.id, "tail": e.tail, "head": e.head, "n": chain.length(e.id)}
            for e in graph.edges
        ],
    }


def graph_from_json(data: dict) -> tuple[Multigraph, ChainStructure]:
    """Parse the graph format; an omitted ``n`` defaults to 1."""
    try:
        vertices = list(data["vertices"])
        raw_edges = data["edges"]
    except (KeyError, TypeError) as exc:
        raise GraphError(f"malformed graph JSON: {exc}") from exc
    edges = []
    lengths = {}
    for item in raw_edges:
        try:
            e = Edge(str(item["id"]), str(item["tail"]), str(item["head"]))
        except (KeyError, TypeError) as exc:
            raise GraphError(f"malformed edge entry {item!r}") from exc
        n = item.get("n", 1)
        if not isinstance(n, int) or n < 1:
            raise GraphError(f"edge {e.id!r} has invalid length {n!r}")
        edges.append(e)
        lengths[e.id] = n
    return Multigraph(vertices, edges), ChainStructure(lengths)
