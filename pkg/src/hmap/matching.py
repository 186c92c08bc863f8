"""Minimum-weight perfect matching over the active agents.

Directed pair costs are folded into an undirected graph (the cheaper
direction wins), an all-zero virtual vertex is added when the vertex count is
odd, and the matching itself is delegated to the networkx implementation of
Edmonds' blossom algorithm. Infinite costs never enter the matcher: they are
simply missing edges.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

import networkx as nx

from hmap.errors import InfeasibleRoundError

VIRTUAL = -1
BRUTE_FORCE_MAX = 12


def _key(a, b):
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class MatchGraph:
    vertices: tuple
    weights: Mapping  # sorted pair -> finite weight; absent pairs are infeasible
    provenance: Mapping = field(default_factory=dict)  # sorted pair -> (sender, receiver)
    virtual: Optional[int] = None

    def weight(self, a, b) -> float:
        return self.weights.get(_key(a, b), math.inf)

    @property
    def real_vertices(self):
        return tuple(v for v in self.vertices if v != self.virtual)

    def edges(self):
        """Edges in lexicographic order."""
        return sorted(self.weights.items())


@dataclass(frozen=True)
class Matching:
    pairs: tuple  # sorted tuple of sorted pairs
    total: float

    def partner(self, v):
        for a, b in self.pairs:
            if a == v:
                return b
            if b == v:
                return a
        return None

    def covered(self):
        return {v for pair in self.pairs for v in pair}


def make_matching(graph: MatchGraph, pairs) -> Matching:
    pairs = tuple(sorted(_key(a, b) for a, b in pairs))
    return Matching(pairs, math.fsum(graph.weights[p] for p in pairs))


def symmetrize(ids, directed) -> MatchGraph:
    """Undirected graph from directed costs ``directed[a][b]`` (a sends to b).

    ``directed`` may be a nested mapping keyed by id or a square array in the
    order of ``ids``. Ties go to the lower id as sender.
    """
    ids = tuple(ids)
    pos = {v: k for k, v in enumerate(ids)}

    def w(a, b):
        if isinstance(directed, Mapping):
            return float(directed[a][b])
        return float(directed[pos[a]][pos[b]])

    weights, prov = {}, {}
    for a, b in itertools.combinations(sorted(ids), 2):
        w_ab, w_ba = w(a, b), w(b, a)
        best = min(w_ab, w_ba)
        if math.isinf(best):
            continue
        weights[(a, b)] = best
        prov[(a, b)] = (a, b) if w_ab <= w_ba else (b, a)
    return MatchGraph(tuple(sorted(ids)), weights, prov)


def augment_virtual(graph: MatchGraph) -> MatchGraph:
    if len(graph.vertices) % 2 == 0:
        return graph
    weights = dict(graph.weights)
    for v in graph.vertices:
        weights[_key(VIRTUAL, v)] = 0.0
    return MatchGraph(tuple(sorted(graph.vertices + (VIRTUAL,))), weights,
                      dict(graph.provenance), VIRTUAL)


def _infeasible(graph, covered):
    missing = [v for v in graph.vertices if v not in covered]
    return InfeasibleRoundError(
        f"no finite perfect matching; unmatched vertices {missing}",
        {"unmatched": missing, "vertices": list(graph.vertices),
         "edges": len(graph.weights)})


def blossom_mwpm(graph: MatchGraph) -> Matching:
    """Minimum-weight perfect matching (Edmonds' blossom via networkx)."""
    if len(graph.vertices) % 2:
        raise _infeasible(graph, set())
    G = nx.Graph()
    G.add_nodes_from(graph.vertices)
    for (a, b), w in graph.edges():
        # maximum-cardinality first, then maximum weight: negate for min-weight
        G.add_edge(a, b, weight=-w)
    mate = nx.max_weight_matching(G, maxcardinality=True, weight="weight")
    matching = make_matching(graph, mate)
    covered = matching.covered()
    if len(covered) != len(graph.vertices):
        raise _infeasible(graph, covered)
    return matching


def _perfect_matchings(vertices, weights):
    if not vertices:
        yield []
        return
    first, rest = vertices[0], vertices[1:]
    for k, other in enumerate(rest):
        if _key(first, other) not in weights:
            continue
        for tail in _perfect_matchings(rest[:k] + rest[k + 1:], weights):
            yield [(first, other)] + tail


def brute_force_mwpm(graph: MatchGraph) -> Matching:
    """Exhaustive oracle over all perfect matchings; refuses n > 12."""
    n = len(graph.vertices)
    if n > BRUTE_FORCE_MAX:
        raise ValueError(f"brute force limited to {BRUTE_FORCE_MAX} vertices, got {n}")
    if n % 2:
        raise _infeasible(graph, set())
    best = None
    for pairs in _perfect_matchings(list(graph.vertices), graph.weights):
        m = make_matching(graph, pairs)
        if best is None or m.total < best.total:
            best = m
    if best is None:
        raise _infeasible(graph, set())
    return best


def greedy_matching(graph: MatchGraph) -> Matching:
    """Ascending-weight edge selection skipping conflicts; may leave vertices bare."""
    used = set()
    pairs = []
    for (a, b), _ in sorted(graph.weights.items(), key=lambda kv: (kv[1], kv[0])):
        if a in used or b in used:
            continue
        used.update((a, b))
        pairs.append((a, b))
    return make_matching(graph, pairs)
