"""Shared builders: worked examples and seeded random generators."""

from __future__ import annotations

import random
from fractions import Fraction

import pytest

from troplift.divisors import AdmissibleMultidegree
from troplift.graph_core import ChainStructure, Edge, Multigraph, contract, subdivide
from troplift.p1_algebra import FunctionSpace, MarkedComponent, PointDivisor, parse_function
from troplift.twisting import tight_tuple


def three_edge_graph():
    """Two vertices joined by edges of lengths 4, 2, 3."""
    g = Multigraph(
        ["v", "vp"],
        [Edge("e1", "v", "vp"), Edge("e2", "v", "vp"), Edge("e3", "v", "vp")],
    )
    return g, ChainStructure({"e1": 4, "e2": 2, "e3": 3})


def three_edge_multidegree():
    return AdmissibleMultidegree({"v": 3}, {"e1": 1, "e2": 1})


def genus_one_graph():
    """Two vertices joined by edges of lengths 2 and 1."""
    g = Multigraph(["v", "vp"], [Edge("e1", "v", "vp"), Edge("e2", "v", "vp")])
    return g, ChainStructure({"e1": 2, "e2": 1})


def genus_one_series():
    """The non-smoothable series on the genus-one complex: all of its parts."""
    from troplift.limit_series import PreLimitSeries

    g, chain = genus_one_graph()
    sub = subdivide(g, chain)
    w0 = AdmissibleMultidegree({"v": 2}, {})
    tup = tight_tuple(w0, g, chain, sub)
    comp_v = MarkedComponent("v", {"e1": Fraction(0), "e2": Fraction(1)}, {"R": Fraction(2)})
    comp_vp = MarkedComponent("vp", {"e1": Fraction(0), "e2": Fraction(1)}, {"Rp": Fraction(2)})
    V_v = FunctionSpace(
        (parse_function("x/(x-2)"), parse_function("x*(x-1)/(x-2)^2")),
        PointDivisor({Fraction(2): 2}),
    )
    V_vp = FunctionSpace(
        (parse_function("(x-2)/(x-1)"), parse_function("1")),
        PointDivisor({Fraction(1): 1}),
    )
    series = PreLimitSeries(
        g, chain, tup,
        {"v": comp_v, "vp": comp_vp},
        {"v": V_v, "vp": V_vp},
        rank=1, sub=sub,
    )
    return g, chain, sub, w0, tup, series


@pytest.fixture
def nonsmoothable():
    return genus_one_series()


def random_connected_multigraph(rng: random.Random, max_genus: int = 3,
                                 max_vertices: int = 4, max_length: int = 3):
    """A random connected loopless multigraph with its chain structure.

    Edges point from the lex-smaller endpoint, so the direction convention
    holds by construction.
    """
    k = rng.randint(2, max_vertices)
    verts = [f"v{i}" for i in range(k)]
    pairs = []
    for i in range(1, k):
        j = rng.randrange(i)
        pairs.append((verts[j], verts[i]))
    extra = rng.randint(0, max_genus)
    for _ in range(extra):
        i, j = rng.sample(range(k), 2) if k > 1 else (0, 0)
        pairs.append((min(verts[i], verts[j]), max(verts[i], verts[j])))
    edges = []
    lengths = {}
    for idx, (u, w) in enumerate(pairs):
        u, w = min(u, w), max(u, w)
        eid = f"e{idx}"
        edges.append(Edge(eid, u, w))
        lengths[eid] = rng.randint(1, max_length)
    return Multigraph(verts, edges), ChainStructure(lengths)


def random_multitree(rng: random.Random, max_vertices: int = 4,
                     max_parallel: int = 3, max_length: int = 4):
    """A random multitree (tree of parallel-edge bundles) with lengths."""
    k = rng.randint(2, max_vertices)
    verts = [f"v{i}" for i in range(k)]
    edges = []
    lengths = {}
    idx = 0
    for i in range(1, k):
        j = rng.randrange(i)
        u, w = min(verts[j], verts[i]), max(verts[j], verts[i])
        for _ in range(rng.randint(1, max_parallel)):
            eid = f"e{idx}"
            idx += 1
            edges.append(Edge(eid, u, w))
            lengths[eid] = rng.randint(1, max_length)
    return Multigraph(verts, edges), ChainStructure(lengths)


def random_admissible(rng: random.Random, graph: Multigraph, chain: ChainStructure,
                      degree: int, lowest: int = -2) -> AdmissibleMultidegree:
    """A random admissible multidegree of the requested total degree."""
    mu = {}
    for e in graph.edges:
        n = chain.length(e.id)
        if n > 1 and rng.random() < 0.5:
            mu[e.id] = rng.randint(1, n - 1)
    if lowest >= 0:
        while sum(1 for m in mu.values() if m) > degree:
            mu.pop(next(iter(mu)))
    interior = sum(1 for m in mu.values() if m)
    w = {v: 0 for v in graph.vertices}
    remaining = degree - interior
    verts = list(graph.vertices)
    floor = min(lowest, -(abs(remaining) // len(verts)) - 1)
    while remaining != 0:
        v = rng.choice(verts)
        step = 1 if remaining > 0 else -1
        if step < 0 and w[v] <= (lowest if lowest >= 0 else floor):
            continue
        w[v] += step
        remaining -= step
    return AdmissibleMultidegree(w, mu)


def chain_of_loops(pair_sizes: list[int], pair_lengths: list[tuple[int, ...]]):
    """A chain graph: vertex u_i, pair i joins u_{i-1} and u_i."""
    m = len(pair_sizes)
    verts = [f"u{i}" for i in range(m + 1)]
    edges = []
    lengths = {}
    for i, (size, lens) in enumerate(zip(pair_sizes, pair_lengths)):
        assert size == len(lens)
        for k in range(size):
            eid = f"p{i}x{k}"
            edges.append(Edge(eid, verts[i], verts[i + 1]))
            lengths[eid] = lens[k]
    return Multigraph(verts, edges), ChainStructure(lengths)
