import csv
import json
import math
from collections import defaultdict

import numpy as np
import pytest

import hmap.harness.sweep as sweep_mod
from hmap.engine import run_aggregation
from hmap.errors import ConfigError, NumericError
from hmap.harness import (PAIR_DEFAULTS, SweepSpec, cell_params, pair_agents, pairwise_bench,
                          run_single, run_sweep)
from hmap.harness.cli import main
from hmap.harness.sweep import RAW_COLUMNS, SUMMARY_COLUMNS
from hmap.scenario import SystemParams, save_params

from stubs import flat_correlation, trivial_solver


@pytest.fixture
def stub_physics(monkeypatch):
    def fake(agents, params, scheme=None, **kw):
        return run_aggregation(agents, params, scheme, solver=trivial_solver,
                               correlation=flat_correlation)
    monkeypatch.setattr(sweep_mod, "run_aggregation", fake)


def read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def strip_wall(rows):
    k = RAW_COLUMNS.index("wall_clock_s")
    return [r[:k] + r[k + 1:] for r in rows]


def test_run_defaults_four_rounds(tmp_path, capsys):
    assert main(["run", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "rounds=4" in out
    rows = read(tmp_path / "run_proposed_seed42.csv")
    assert tuple(rows[0]) == RAW_COLUMNS
    doc = json.loads((tmp_path / "trace_proposed_seed42.json").read_text())
    assert len(doc["rounds"]) == 4


def test_single_agent_run():
    trace, row = run_single(SystemParams(num_agents=1))
    assert trace.rounds == [] and row.total == 0.0 and row.rounds == 0


def test_exit_codes(tmp_path, monkeypatch, capsys):
    assert main(["run", "--config", str(tmp_path / "missing.cfg")]) == 2
    assert main(["run", "--scheme", "bogus"]) == 2
    bad = tmp_path / "bad.cfg"
    bad.write_text("delta = 1\n")
    assert main(["validate-config", "--config", str(bad)]) == 2
    far = tmp_path / "far.cfg"
    save_params(SystemParams(beta0_db=-90.0), far)
    assert main(["run", "--config", str(far)]) == 3
    report = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert report["status"] == "infeasible" and "unmatched" in report["report"]

    def boom(*a, **k):
        raise NumericError("stalled", {"residual": 1.0})
    monkeypatch.setattr(sweep_mod, "run_aggregation", boom)
    assert main(["run"]) == 4
    assert main(["sweep", "--param", "N", "--values", "4", "--seeds", "1"]) == 4


def test_validate_config_round_trip(tmp_path, capsys):
    cfg = tmp_path / "a.cfg"
    save_params(SystemParams(zeta=2e-14), cfg)
    assert main(["validate-config", "--config", str(cfg)]) == 0
    assert "zeta = 2e-14" in capsys.readouterr().out


def test_sweep_counts_and_schema(tmp_path, stub_physics):
    spec = SweepSpec("N", (4, 6, 8, 10), ("proposed", "distance_based", "random_topology"),
                     10, tmp_path)
    rows, summary = run_sweep(spec)
    assert len(rows) == 120 and len(summary) == 12
    raw = read(tmp_path / "N_raw.csv")
    summ = read(tmp_path / "N_summary.csv")
    assert tuple(raw[0]) == RAW_COLUMNS and tuple(summ[0]) == SUMMARY_COLUMNS
    assert len(raw) == 121 and len(summ) == 13
    order = [(float(r[2]), r[0], int(r[3])) for r in raw[1:]]
    assert order == [(v, s, seed) for v, s, seed in spec.cells()]


def test_summary_recomputed_independently(tmp_path, stub_physics):
    spec = SweepSpec("N", (3, 5), ("proposed", "pure_greedy"), 4, tmp_path)
    run_sweep(spec)
    groups = defaultdict(list)
    with open(tmp_path / "N_raw.csv", newline="") as fh:
        for r in csv.DictReader(fh):
            if r["feasible"] == "1":
                groups[(r["scheme"], float(r["value"]))].append(float(r["total_energy_J"]))
    with open(tmp_path / "N_summary.csv", newline="") as fh:
        for s in csv.DictReader(fh):
            vals = groups[(s["scheme"], float(s["value"]))]
            assert int(s["n_feasible"]) == len(vals)
            mean = sum(vals) / len(vals)
            se = np.std(vals, ddof=1) / math.sqrt(len(vals))
            assert float(s["mean_total_J"]) == pytest.approx(mean, rel=1e-12)
            assert float(s["stderr_total_J"]) == pytest.approx(se, rel=1e-12)


def test_row_total_is_phase_sum(stub_physics):
    spec = SweepSpec("N", (5,), ("proposed",), 3)
    rows, _ = run_sweep(spec)
    for r in rows:
        assert r.total == pytest.approx(r.mobility + r.computation + r.communication, rel=1e-12)


def test_base_not_mutated(stub_physics):
    base = SystemParams(beta0_db=-45.0)
    spec = SweepSpec("beta0_db", (-50, -40), ("proposed",), 2, base=base)
    run_sweep(spec)
    assert spec.base == SystemParams(beta0_db=-45.0)
    p = cell_params(base, "T_max", 9.0, 7)
    assert p.t_max == 9.0 and p.rng_seed == 7 and base.t_max == SystemParams().t_max


def test_seed_list():
    spec = SweepSpec("zeta", (1e-14,), seeds=3, base=SystemParams(rng_seed=100))
    assert spec.seed_list == [100, 101, 102]


@pytest.mark.parametrize("kwargs", [
    dict(param="nope", values=(1,)),
    dict(param="payload_sender", values=(1e6,)),
    dict(param="N", values=(4,), seeds=0),
    dict(param="N", values=()),
    dict(param="N", values=(4,), schemes=("bogus",)),
])
def test_sweep_spec_rejects(kwargs):
    with pytest.raises(ConfigError):
        SweepSpec(**kwargs)


def test_sweep_deterministic_files(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        run_sweep(SweepSpec("N", (3, 4), ("proposed", "random_topology"), 2, out))
    assert strip_wall(read(a / "N_raw.csv")) == strip_wall(read(b / "N_raw.csv"))
    assert (a / "N_summary.csv").read_bytes() == (b / "N_summary.csv").read_bytes()


def test_jobs_parity(tmp_path):
    spec = dict(param="N", values=(4,), schemes=("proposed",), seeds=2)
    one, s1 = run_sweep(SweepSpec(**spec, out_dir=tmp_path / "1"), jobs=1)
    two, s2 = run_sweep(SweepSpec(**spec, out_dir=tmp_path / "2"), jobs=2)
    assert [r.as_csv()[:-1] for r in one] == [r.as_csv()[:-1] for r in two]
    assert (tmp_path / "1" / "N_summary.csv").read_bytes() == \
        (tmp_path / "2" / "N_summary.csv").read_bytes()


def test_pair_layout():
    p = SystemParams()
    a, b = pair_agents(p, initial_distance=200.0)
    assert math.dist(a.position, b.position) == 200.0
    assert a.payload == PAIR_DEFAULTS["payload_sender"]
    with pytest.raises(ConfigError):
        pair_agents(p, initial_distance=-1.0)


def test_pairwise_bench_rows():
    p = SystemParams()
    ok = pairwise_bench(p, "initial_distance", 100.0, "proposed")
    assert ok.feasible and ok.rounds == 1
    far = pairwise_bench(p, "initial_distance", 600.0, "proposed")
    assert not far.feasible and math.isnan(far.total)
    with pytest.raises(ConfigError):
        pairwise_bench(p, "N", 4, "proposed")
    with pytest.raises(ConfigError):
        pairwise_bench(p, "delta", 3.0, "random_topology")


def test_pairbench_cli(tmp_path, capsys):
    rc = main(["pairbench", "--param", "beta0_db", "--values=-50,-40", "--scheme",
               "proposed,no_motion", "--out", str(tmp_path)])
    assert rc == 0
    rows = read(tmp_path / "pair_beta0_db_raw.csv")
    assert len(rows) == 5
    assert "proposed" in capsys.readouterr().out


def test_plot_subcommand(tmp_path, stub_physics):
    run_sweep(SweepSpec("N", (4, 6), ("proposed",), 2, tmp_path))
    png = tmp_path / "n.png"
    assert main(["plot", str(tmp_path / "N_summary.csv"), "--out", str(png)]) == 0
    assert png.read_bytes()[:4] == b"\x89PNG"
