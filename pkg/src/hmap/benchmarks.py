"""Baseline schemes.

Inner baselines restrict the pair problem and keep the proposed pairing.
Outer baselines keep the full pair solver and change how pairs are chosen.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from hmap.engine import Pairing, Scheme, build_weight_matrix, proposed_pairing
from hmap.errors import InfeasibleRoundError
from hmap.inner import PROPOSED, InnerVariant, solve_pair
from hmap.matching import (VIRTUAL, augment_virtual, blossom_mwpm,
                           greedy_matching, symmetrize)
from hmap.scenario import substream

INNER_VARIANTS = {
    "proposed": PROPOSED,
    "max_power": InnerVariant(name="max_power", max_power=True),
    "fixed_speed": InnerVariant(name="fixed_speed", speed_fraction=0.5),
    "no_semantic": InnerVariant(name="no_semantic", fixed_eta=1.0),
    "no_rag": InnerVariant(name="no_rag", rho_override=0.0),
    "no_motion": InnerVariant(name="no_motion", allow_motion=False),
}
OUTER_SCHEMES = ("distance_based", "pure_greedy", "random_topology")
SCHEMES = tuple(INNER_VARIANTS) + OUTER_SCHEMES


def inner_variant_solve(ctx, variant):
    if isinstance(variant, str):
        variant = INNER_VARIANTS[variant]
    return solve_pair(ctx, variant)


def _direct(weights, a, b):
    """Sender/receiver for a matched pair by the cheaper directed energy."""
    w_ab = weights.cost(a, b, augmented=False)
    w_ba = weights.cost(b, a, augmented=False)
    if math.isinf(w_ab) and math.isinf(w_ba):
        return None
    lo, hi = min(a, b), max(a, b)
    w_lohi = w_ab if lo == a else w_ba
    w_hilo = w_ba if lo == a else w_ab
    return (lo, hi) if w_lohi <= w_hilo else (hi, lo)


def _split(match_pairs, weights):
    pairs, idle = [], []
    for a, b in match_pairs:
        if VIRTUAL in (a, b):
            idle.append(b if a == VIRTUAL else a)
            continue
        d = _direct(weights, a, b)
        if d is None:
            return None
        pairs.append(d)
    return sorted(pairs), sorted(idle)


def _distance_pairing(active, weights):
    pos = {a.id: a.position for a in active}
    ids = weights.ids
    n = len(ids)
    dist = np.full((n, n), math.inf)
    for r, a in enumerate(ids):
        for c, b in enumerate(ids):
            if r != c and math.isfinite(min(weights.energy[r, c], weights.energy[c, r])):
                dist[r, c] = math.hypot(pos[a][0] - pos[b][0], pos[a][1] - pos[b][1])
    match = blossom_mwpm(augment_virtual(symmetrize(ids, dist)))
    pairs, idle = _split(match.pairs, weights)
    return Pairing(pairs, idle, match.total, weights)


def _greedy_pairing(weights, round_index):
    graph = symmetrize(weights.ids, weights.energy)
    match = greedy_matching(graph)
    covered = match.covered()
    idle = [v for v in graph.vertices if v not in covered]
    if len(idle) > len(graph.vertices) % 2:
        raise InfeasibleRoundError(
            f"greedy pairing left {len(idle)} agents unmatched",
            {"round": round_index, "unmatched": idle})
    pairs = sorted(graph.provenance[p] for p in match.pairs)
    return Pairing(pairs, idle, match.total, weights)


def _random_pairing(weights, params, round_index, cap):
    vertices = list(weights.ids)
    if len(vertices) % 2:
        vertices.append(VIRTUAL)
    for attempt in range(cap):
        rng = substream(params.rng_seed, "random_topology", round_index, attempt)
        order = [vertices[k] for k in rng.permutation(len(vertices))]
        match_pairs = [tuple(sorted(order[k:k + 2])) for k in range(0, len(order), 2)]
        split = _split(match_pairs, weights)
        if split is None:
            continue
        pairs, idle = split
        total = math.fsum(weights.cost(s, r, augmented=False) for s, r in pairs)
        return Pairing(pairs, idle, total, weights)
    raise InfeasibleRoundError(
        f"random pairing found no feasible matching in {cap} draws",
        {"round": round_index, "resample_cap": cap})


@dataclass(frozen=True)
class SchemeSpec(Scheme):
    name: str = "proposed"
    resample_cap: int = 20

    def __post_init__(self):
        if self.name not in SCHEMES:
            raise ValueError(f"unknown scheme {self.name!r}; choose from {', '.join(SCHEMES)}")

    @property
    def variant(self):
        return INNER_VARIANTS.get(self.name, PROPOSED)

    @property
    def outer(self):
        return self.name if self.name in OUTER_SCHEMES else "proposed"

    def pair(self, active, params, rhos, round_index, solver=None, jobs=1) -> Pairing:
        return outer_variant_match(active, params, self, rhos, round_index, solver, jobs)


def scheme_spec(name, **options) -> SchemeSpec:
    return SchemeSpec(name, **options)


def outer_variant_match(active, params, scheme: SchemeSpec, rhos, round_index=1,
                        solver=None, jobs=1) -> Pairing:
    outer = scheme.outer
    zeta = 0.0 if outer == "pure_greedy" else None
    weights = build_weight_matrix(active, params, rhos, scheme.variant, zeta=zeta,
                                  solver=solver, jobs=jobs)
    if outer == "proposed":
        return proposed_pairing(weights)
    if outer == "distance_based":
        return _distance_pairing(active, weights)
    if outer == "pure_greedy":
        return _greedy_pairing(weights, round_index)
    return _random_pairing(weights, params, round_index, scheme.resample_cap)
