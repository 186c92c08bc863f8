import json
import math

import numpy as np
import pytest

from hmap.engine import (build_weight_matrix, centroid, correlation_inputs,
                         potential, proposed_pairing, run_aggregation)
from hmap.errors import DomainError
from hmap.geometry import CircleRegion
from hmap.matching import brute_force_mwpm, augment_virtual, symmetrize
from hmap.scenario import AgentState, SystemParams, generate_scenario

from audit import plan_energy
from stubs import flat_correlation, trivial_solver

P = SystemParams()


def agent(i, pos, payload=5e6, radius=90.0):
    return AgentState(i, pos, radius, pos, payload, frozenset({i}))


def test_centroid():
    assert centroid([agent(1, (3.0, 4.0))]) == (3.0, 4.0)
    assert centroid([agent(1, (0.0, 0.0)), agent(2, (10.0, 0.0))]) == (5.0, 0.0)
    with pytest.raises(DomainError):
        centroid([])


def test_centroid_translation(rng):
    pts = rng.uniform(0, 500, size=(7, 2))
    t = np.array([13.5, -40.25])
    base = centroid([agent(k, tuple(p)) for k, p in enumerate(pts)])
    moved = centroid([agent(k, tuple(p + t)) for k, p in enumerate(pts)])
    assert moved == pytest.approx(tuple(np.array(base) + t), abs=1e-9)


def test_potential_examples():
    assert potential((5.0, 5.0), 1e7, (5.0, 5.0), P) == 0.0
    # 1e-14 * 100**3 * 1e7
    assert potential((100.0, 0.0), 1e7, (0.0, 0.0), P) == pytest.approx(0.1, rel=1e-12)
    assert potential((60.0, 80.0), 2e7, (0.0, 0.0), P) == pytest.approx(0.2, rel=1e-12)
    assert potential((100.0, 0.0), 1e7, (0.0, 0.0), P, zeta=0.0) == 0.0


def test_correlation_inputs():
    regions = {1: CircleRegion((0.0, 0.0), 10.0), 2: CircleRegion((0.0, 0.0), 10.0),
               3: CircleRegion((100.0, 0.0), 10.0)}
    a = agent(1, (0.0, 0.0))
    assert correlation_inputs(a, None, regions, 20_000, 1) == 1.0
    merged = a.evolve(sources=frozenset({1, 2}), predecessor=2)
    assert correlation_inputs(merged, agent(2, (0.0, 0.0)), regions, 20_000, 1) == 1.0
    merged = a.evolve(sources=frozenset({1, 3}), predecessor=3)
    assert correlation_inputs(merged, agent(3, (100.0, 0.0)), regions, 20_000, 1) == 0.0


def test_weights_without_potential():
    active = [agent(1, (100.0, 100.0)), agent(2, (200.0, 120.0), payload=9e6)]
    rhos = {1: 1.0, 2: 1.0}
    W = build_weight_matrix(active, P, rhos, zeta=0.0)
    for (s, r), plan in W.plans.items():
        assert W.cost(s, r) == plan.energy
    assert np.all(np.diag(W.energy) == math.inf)


def test_weights_dominate_energy_and_are_asymmetric():
    active = [agent(1, (100.0, 100.0), payload=1e7), agent(2, (220.0, 100.0), payload=5e6),
              agent(3, (160.0, 300.0), payload=7e6)]
    rhos = {1: 0.2, 2: 0.8, 3: 0.5}
    W = build_weight_matrix(active, P, rhos)
    finite = np.isfinite(W.energy)
    assert np.all(W.augmented[finite] >= W.energy[finite])
    assert W.cost(1, 2, augmented=False) != W.cost(2, 1, augmented=False)
    assert W.cost(1, 2) != W.cost(2, 1)


@pytest.mark.parametrize("n,sizes", [(1, [1]), (2, [2, 1]), (3, [3, 2, 1]),
                                     (6, [6, 3, 2, 1]), (10, [10, 5, 3, 2, 1])])
def test_round_structure(n, sizes):
    p = SystemParams(num_agents=n, rng_seed=3)
    trace = run_aggregation(generate_scenario(p), p, solver=trivial_solver,
                            correlation=flat_correlation)
    assert len(trace.rounds) == len(sizes) - 1
    assert [len(r.active_before) for r in trace.rounds] + [1] == sizes
    for r in trace.rounds:
        assert r.pair_count == len(r.active_before) // 2
        assert len(r.idle) == len(r.active_before) % 2
    root = trace.final_states[trace.root]
    assert root.sources == frozenset(range(1, n + 1))
    if n == 1:
        assert trace.total_energy == 0.0


def test_idle_agent_unchanged():
    p = SystemParams(num_agents=3, rng_seed=5)
    agents = generate_scenario(p)
    trace = run_aggregation(agents, p, solver=trivial_solver, correlation=flat_correlation)
    first = trace.rounds[0]
    (idle,) = first.idle
    before = next(a for a in agents if a.id == idle)
    # the idle agent is the lone partner of the next round's pair
    second = trace.rounds[1]
    (s, r, _, plan) = second.pairs[0]
    side = "i" if s == idle else "j"
    assert getattr(plan, f"payload_{side}") == before.payload
    assert getattr(plan, f"p_start_{side}") == before.position


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_sources_and_payloads(seed):
    p = SystemParams(num_agents=6, rng_seed=seed)
    agents = generate_scenario(p)
    trace = run_aggregation(agents, p)
    holdings = {a.id: (a.sources, a.payload) for a in agents}
    for r in trace.rounds:
        for s, rcv, payload_after, plan in r.pairs:
            assert plan.payload_i == holdings[s][1] and plan.payload_j == holdings[rcv][1]
            expect = plan.eta_j * holdings[rcv][1] + plan.eta_i * holdings[s][1]
            assert payload_after == expect
            merged = holdings[s][0] | holdings[rcv][0]
            assert not (holdings[s][0] & holdings[rcv][0])
            del holdings[s]
            holdings[rcv] = (merged, payload_after)
        assert set(holdings) == set(r.active_after)
        union = [x for src, _ in holdings.values() for x in src]
        assert sorted(union) == list(range(1, 7))
    assert holdings[trace.root][0] == frozenset(range(1, 7))


def test_round_energy_resummed():
    p = SystemParams(num_agents=6, rng_seed=2)
    trace = run_aggregation(generate_scenario(p), p)
    total = []
    for r in trace.rounds:
        parts = [x for *_, plan in r.pairs for x in plan_energy(plan.to_dict(), p)]
        assert r.energy == pytest.approx(math.fsum(parts), rel=1e-12)
        total += parts
    assert trace.total_energy == pytest.approx(math.fsum(total), rel=1e-12)


def test_blossom_matches_oracle_per_round():
    p = SystemParams(num_agents=8, rng_seed=4, zeta=0.0)
    agents = generate_scenario(p)
    rhos = {a.id: 1.0 for a in agents}
    W = build_weight_matrix(agents, p, rhos)
    pairing = proposed_pairing(W)
    oracle = brute_force_mwpm(augment_virtual(symmetrize(W.ids, W.augmented)))
    assert pairing.matched_weight == oracle.total


def test_rho_first_round_is_one():
    p = SystemParams(num_agents=4, rng_seed=1)
    seen = []

    def spy(a, pred, regions, k):
        from hmap.engine import default_correlation
        rho = default_correlation(p)(a, pred, regions, k)
        seen.append((k, pred is None, rho))
        return rho

    run_aggregation(generate_scenario(p), p, solver=trivial_solver, correlation=spy)
    assert all(rho == 1.0 for k, _, rho in seen if k == 1)
    assert all(0.0 <= rho <= 1.0 for *_, rho in seen)
    assert any(not first for k, first, _ in seen if k == 2)


def test_trace_json_deterministic(tmp_path):
    p = SystemParams(num_agents=5, rng_seed=11)
    a = run_aggregation(generate_scenario(p), p).to_json(verbose=True)
    b = run_aggregation(generate_scenario(p), p).to_json(verbose=True)
    assert a == b
    doc = json.loads(a)
    assert doc["root"] is not None and len(doc["rounds"]) == 3
    assert "weights" in doc["rounds"][0]


def test_depth_exhaustive():
    for n in range(2, 65):
        p = SystemParams(num_agents=n, rng_seed=n)
        trace = run_aggregation(generate_scenario(p), p, solver=trivial_solver,
                                correlation=flat_correlation)
        assert len(trace.rounds) == math.ceil(math.log2(n))
        sizes = [len(r.active_before) for r in trace.rounds]
        for a, b in zip(sizes, sizes[1:] + [1]):
            assert b == math.ceil(a / 2)
        assert trace.final_states[trace.root].sources == frozenset(range(1, n + 1))
