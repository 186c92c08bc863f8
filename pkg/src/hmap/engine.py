"""Round-by-round aggregation of all sources onto a single root agent.

Each round pairs up the active agents (one sender, one receiver per pair),
solves every pair's joint plan, retires the senders and fuses their payload
into the receivers, until one agent remains.

Trace JSON layout (``AggregationTrace.to_json``)::

    {
      "scheme": str, "seed": int, "params": {key: value, ...},
      "agents": [{"id", "center", "radius", "position", "payload"}, ...],
      "rounds": [
        {"index", "active_before", "active_after", "pair_count", "idle",
         "centroid", "energy", "matched_weight",
         "pairs": [{"sender", "receiver", "payload_after", "plan": {...}}, ...],
         "weights": {...}            # only with verbose=True
        }, ...
      ],
      "root": int, "total_energy": float
    }

Energies are in J, positions in m, payloads in bits. Non-finite numbers are
written as the strings "inf", "-inf" or "nan".
"""

from __future__ import annotations

import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from hmap import geometry, physics
from hmap.errors import DomainError, InfeasibleRoundError
from hmap.inner import PROPOSED, InnerVariant, PairContext, solve_pair
from hmap.matching import VIRTUAL, augment_virtual, blossom_mwpm, symmetrize
from hmap.scenario import AgentState, SystemParams, format_params, substream


def centroid(active) -> tuple:
    active = list(active)
    if not active:
        raise DomainError("centroid of an empty agent set")
    pts = np.array([a.position for a in active], dtype=float)
    c = pts.mean(axis=0)
    return float(c[0]), float(c[1])


def potential(p_end_j, l_next, center, params, zeta=None) -> float:
    """Planning surcharge for leaving the receiver at ``p_end_j``."""
    z = params.zeta if zeta is None else zeta
    return z * physics.distance(p_end_j, center) ** params.delta * l_next


def correlation_inputs(agent: AgentState, predecessor: Optional[AgentState], regions,
                       samples: int, seed: int) -> float:
    """Coverage overlap between what ``agent`` held and what it last received."""
    if predecessor is None:
        return 1.0
    own = agent.sources - predecessor.sources
    cov_u = [regions[k] for k in sorted(own)]
    cov_v = [regions[k] for k in sorted(predecessor.sources)]
    if not cov_u:
        return 1.0
    return geometry.jaccard(cov_u, cov_v, samples=samples, seed=seed)


def area_seed(params, round_index, agent_id) -> int:
    rng = substream(params.rng_seed, "area", round_index, agent_id)
    return int(rng.integers(0, 2 ** 32))


@dataclass
class WeightMatrix:
    """Directed costs for one round; row sends to column."""

    ids: tuple
    energy: np.ndarray  # W, inf when infeasible
    potential: np.ndarray
    plans: dict  # (sender, receiver) -> InteractionPlan

    @property
    def augmented(self) -> np.ndarray:
        return self.energy + self.potential

    def index(self, agent_id):
        return self.ids.index(agent_id)

    def cost(self, sender, receiver, augmented=True) -> float:
        a, b = self.index(sender), self.index(receiver)
        return float(self.augmented[a, b] if augmented else self.energy[a, b])

    def to_dict(self):
        return {"ids": list(self.ids), "energy": _clean(self.energy.tolist()),
                "potential": _clean(self.potential.tolist())}


def _solve_one(job):
    ctx, variant, solver = job
    return solver(ctx, variant) if solver is not None else solve_pair(ctx, variant)


def build_weight_matrix(active, params, rhos, variant: InnerVariant = PROPOSED,
                        zeta=None, solver=None, jobs=1) -> WeightMatrix:
    """Solve every ordered pair and add the receiver-side potential."""
    active = sorted(active, key=lambda a: a.id)
    ids = tuple(a.id for a in active)
    n = len(active)
    center = centroid(active)
    pairs = [(a, b) for a, b in itertools.permutations(active, 2)]
    jobs_list = [(PairContext(a, b, rhos[a.id], rhos[b.id], params), variant, solver)
                 for a, b in pairs]
    if jobs > 1 and len(jobs_list) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            plans = list(pool.map(_solve_one, jobs_list, chunksize=max(1, len(jobs_list) // (4 * jobs))))
    else:
        plans = [_solve_one(j) for j in jobs_list]
    energy = np.full((n, n), math.inf)
    phi = np.zeros((n, n))
    cache = {}
    pos = {v: k for k, v in enumerate(ids)}
    for (a, b), plan in zip(pairs, plans):
        cache[(a.id, b.id)] = plan
        if not plan.feasible:
            continue
        r, c = pos[a.id], pos[b.id]
        energy[r, c] = plan.energy
        phi[r, c] = potential(plan.p_end_j, plan.fused_payload, center, params, zeta)
    return WeightMatrix(ids, energy, phi, cache)


@dataclass
class Pairing:
    pairs: list  # (sender, receiver) in ascending sender order
    idle: list
    matched_weight: float
    weights: Optional[WeightMatrix] = None


def proposed_pairing(weights: WeightMatrix) -> Pairing:
    """Blossom matching on the augmented costs, cheaper direction per pair."""
    graph = augment_virtual(symmetrize(weights.ids, weights.augmented))
    match = blossom_mwpm(graph)
    pairs, idle = [], []
    for a, b in match.pairs:
        if VIRTUAL in (a, b):
            idle.append(b if a == VIRTUAL else a)
        else:
            pairs.append(graph.provenance[(a, b)])
    return Pairing(sorted(pairs), sorted(idle), match.total, weights)


@dataclass
class RoundRecord:
    index: int
    active_before: list
    active_after: list
    pairs: list  # [(sender, receiver, payload_after, plan)]
    idle: list
    centroid: tuple
    energy: float
    matched_weight: float
    weights: Optional[WeightMatrix] = None

    @property
    def pair_count(self):
        return len(self.pairs)

    def to_dict(self, verbose=False):
        out = {
            "index": self.index, "active_before": list(self.active_before),
            "active_after": list(self.active_after), "pair_count": self.pair_count,
            "idle": list(self.idle), "centroid": list(self.centroid),
            "energy": self.energy, "matched_weight": self.matched_weight,
            "pairs": [{"sender": s, "receiver": r, "payload_after": lp,
                       "plan": _plan_dict(plan, verbose)}
                      for s, r, lp, plan in self.pairs],
        }
        if verbose and self.weights is not None:
            out["weights"] = self.weights.to_dict()
        return out


def _plan_dict(plan, verbose):
    d = plan.to_dict()
    if verbose:
        d["diagnostics"] = plan.diagnostics
    return d


@dataclass
class AggregationTrace:
    scheme: str
    seed: int
    params: SystemParams
    agents: list  # initial AgentState snapshot
    rounds: list = field(default_factory=list)
    root: Optional[int] = None
    final_states: dict = field(default_factory=dict)

    @property
    def total_energy(self) -> float:
        return math.fsum(plan.breakdown.total for r in self.rounds for *_, plan in r.pairs)

    def phase_energies(self) -> dict:
        plans = [plan for r in self.rounds for *_, plan in r.pairs]
        return {
            "mobility": math.fsum(p.breakdown.mobility for p in plans),
            "computation": math.fsum(p.breakdown.computation for p in plans),
            "communication": math.fsum(p.breakdown.e_comm for p in plans),
        }

    def to_dict(self, verbose=False) -> dict:
        return {
            "scheme": self.scheme, "seed": self.seed,
            "params": _params_dict(self.params),
            "agents": [{"id": a.id, "center": list(a.center), "radius": a.radius,
                        "position": list(a.position), "payload": a.payload}
                       for a in self.agents],
            "rounds": [r.to_dict(verbose) for r in self.rounds],
            "root": self.root, "total_energy": self.total_energy,
        }

    def to_json(self, verbose=False) -> str:
        return json.dumps(_clean(self.to_dict(verbose)), sort_keys=True, indent=1,
                          allow_nan=False) + "\n"


def _params_dict(params):
    out = {}
    for line in format_params(params).splitlines():
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def _clean(obj):
    if isinstance(obj, float):
        if math.isfinite(obj):
            return obj
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return _clean(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


class Scheme:
    """Proposed scheme; benchmark schemes override ``variant`` or ``pair``."""

    name = "proposed"
    variant = PROPOSED

    def pair(self, active, params, rhos, round_index, solver=None, jobs=1) -> Pairing:
        weights = build_weight_matrix(active, params, rhos, self.variant, solver=solver, jobs=jobs)
        return proposed_pairing(weights)


def _resolve(scheme):
    if scheme is None:
        return Scheme()
    if isinstance(scheme, str):
        from hmap.benchmarks import scheme_spec
        return scheme_spec(scheme)
    return scheme


def default_correlation(params):
    def rho(agent, predecessor, regions, round_index):
        return correlation_inputs(agent, predecessor, regions, params.area_samples,
                                  area_seed(params, round_index, agent.id))
    return rho


def execute_round(active, retired, regions, params, scheme, round_index,
                  solver=None, correlation=None, jobs=1):
    """One pairing round. Returns (RoundRecord, next active list)."""
    active = sorted(active, key=lambda a: a.id)
    if len(active) < 2:
        raise DomainError("a round needs at least two active agents")
    correlation = correlation or default_correlation(params)
    rhos = {}
    for a in active:
        pred = retired.get(a.predecessor) if a.predecessor is not None else None
        rhos[a.id] = correlation(a, pred, regions, round_index)
    center = centroid(active)
    pairing = scheme.pair(active, params, rhos, round_index, solver=solver, jobs=jobs)

    by_id = {a.id: a for a in active}
    nxt = {}
    records = []
    for s, r in pairing.pairs:
        plan = pairing.weights.plans[(s, r)]
        if not plan.feasible:
            raise InfeasibleRoundError(f"matched pair {s}->{r} has no feasible plan",
                                       {"round": round_index, "pair": [s, r]})
        snd, rcv = by_id[s], by_id[r]
        fused = plan.fused_payload
        nxt[r] = rcv.evolve(position=plan.p_end_j, payload=fused,
                            sources=rcv.sources | snd.sources, predecessor=s)
        retired[s] = snd.evolve(position=plan.p_end_i, active=False)
        records.append((s, r, fused, plan))
    for i in pairing.idle:
        nxt[i] = by_id[i].evolve(predecessor=None)
    new_active = [nxt[k] for k in sorted(nxt)]
    record = RoundRecord(
        round_index, [a.id for a in active], [a.id for a in new_active], records,
        list(pairing.idle), center, math.fsum(p.breakdown.total for *_, p in records),
        pairing.matched_weight, pairing.weights)
    return record, new_active


def run_aggregation(agents, params: SystemParams, scheme=None, solver: Optional[Callable] = None,
                    correlation: Optional[Callable] = None, jobs=1) -> AggregationTrace:
    """Aggregate every source onto one root; ``solver(ctx, variant)`` may stub the pair solve."""
    scheme = _resolve(scheme)
    agents = sorted(agents, key=lambda a: a.id)
    regions = {a.id: geometry.CircleRegion(a.center, a.radius) for a in agents if a.radius > 0}
    trace = AggregationTrace(scheme.name, params.rng_seed, params, list(agents))
    active = list(agents)
    retired = {}
    k = 0
    while len(active) > 1:
        k += 1
        record, active = execute_round(active, retired, regions, params, scheme, k,
                                       solver=solver, correlation=correlation, jobs=jobs)
        trace.rounds.append(record)
    if active:
        trace.root = active[0].id
        trace.final_states = {a.id: a for a in active}
    return trace
