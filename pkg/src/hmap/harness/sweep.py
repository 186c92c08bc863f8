"""Single runs, seed sweeps and single-pair benches with CSV output.

Raw CSV rows are written in (value, scheme, seed) order and summary rows in
(value, scheme) order, whatever order the cells actually finish in. Floats are
written with ``repr`` so a re-run reproduces the files byte for byte, apart
from the wall-clock column.
"""

from __future__ import annotations

import csv
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from hmap.benchmarks import INNER_VARIANTS, SCHEMES, inner_variant_solve
from hmap.engine import AggregationTrace, run_aggregation
from hmap.errors import ConfigError, InfeasibleRoundError, NumericError
from hmap.inner import PairContext
from hmap.scenario import AgentState, SystemParams, generate_scenario

log = logging.getLogger(__name__)

# sweep name -> SystemParams field; None marks a pair-scenario override
SWEEP_PARAMS = {
    "beta0_db": "beta0_db",
    "delta": "delta",
    "cpu_freq": "cpu_freq",
    "payload_sender": None,
    "initial_distance": None,
    "T_max": "t_max",
    "N": "num_agents",
    "zeta": "zeta",
}
PAIR_ONLY = tuple(k for k, v in SWEEP_PARAMS.items() if v is None)

# assumed single-pair layout for the bench (nothing published to copy)
PAIR_DEFAULTS = {
    "initial_distance": 150.0,  # m, centre to centre
    "payload_sender": 7.5e6,  # bits
    "payload_receiver": 7.5e6,  # bits
    "radius": 90.0,  # m, both patrol disks
    "rho": 0.5,  # correlation seen by both agents
}
PAIR_SCHEMES = tuple(INNER_VARIANTS)

RAW_COLUMNS = (
    "scheme", "param", "value", "seed", "status", "feasible", "rounds",
    "total_energy_J", "mobility_J", "computation_J", "communication_J", "wall_clock_s",
)
SUMMARY_COLUMNS = (
    "scheme", "param", "value", "n_seeds", "n_feasible", "mean_total_J",
    "stderr_total_J", "mean_mobility_J", "mean_computation_J", "mean_communication_J",
)
NONDETERMINISTIC = ("wall_clock_s",)


@dataclass
class ResultRow:
    scheme: str
    param: str
    value: float
    seed: int
    status: str = "ok"  # ok | infeasible | numeric
    rounds: int = 0
    total: float = math.nan  # J
    mobility: float = math.nan
    computation: float = math.nan
    communication: float = math.nan
    wall_clock: float = 0.0  # s

    @property
    def feasible(self):
        return self.status == "ok"

    def as_csv(self):
        return [self.scheme, self.param, _fmt(self.value), str(self.seed), self.status,
                str(int(self.feasible)), str(self.rounds), _fmt(self.total),
                _fmt(self.mobility), _fmt(self.computation), _fmt(self.communication),
                f"{self.wall_clock:.6f}"]


@dataclass
class SummaryRow:
    scheme: str
    param: str
    value: float
    n_seeds: int
    n_feasible: int
    mean_total: float
    stderr_total: float
    mean_mobility: float
    mean_computation: float
    mean_communication: float

    def as_csv(self):
        return [self.scheme, self.param, _fmt(self.value), str(self.n_seeds),
                str(self.n_feasible), _fmt(self.mean_total), _fmt(self.stderr_total),
                _fmt(self.mean_mobility), _fmt(self.mean_computation),
                _fmt(self.mean_communication)]


def _fmt(x):
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


@dataclass
class SweepSpec:
    param: str
    values: tuple
    schemes: tuple = ("proposed",)
    seeds: int = 10
    out_dir: Optional[Path] = None
    base: SystemParams = field(default_factory=SystemParams)
    pairwise: bool = False

    def __post_init__(self):
        if self.param not in SWEEP_PARAMS:
            raise ConfigError(self.param, f"not sweepable; choose from {', '.join(SWEEP_PARAMS)}")
        if not self.pairwise and self.param in PAIR_ONLY:
            raise ConfigError(self.param, "only sweepable in the single-pair bench")
        if self.seeds < 1:
            raise ConfigError("seeds", "need at least one seed")
        if not self.values:
            raise ConfigError("values", "empty value list")
        for s in self.schemes:
            if s not in SCHEMES:
                raise ConfigError("scheme", f"unknown scheme {s!r}")
        self.values = tuple(float(v) for v in self.values)
        self.schemes = tuple(self.schemes)

    @property
    def seed_list(self):
        return [self.base.rng_seed + k for k in range(self.seeds)]

    def cells(self):
        """(value, scheme, seed) in output order."""
        return [(v, s, seed) for v in self.values for s in self.schemes for seed in self.seed_list]


def cell_params(base: SystemParams, param, value, seed) -> SystemParams:
    """Parameter set for one cell; ``base`` is never modified."""
    key = SWEEP_PARAMS[param]
    overrides = {"rng_seed": seed}
    if key is not None:
        if key == "num_agents":
            if float(value) != int(value):
                raise ConfigError(param, f"agent count must be an integer, got {value}")
            value = int(value)
        overrides[key] = value
    return base.replace(**overrides)


def _row_from_trace(trace: AggregationTrace, param, value, wall):
    ph = trace.phase_energies()
    return ResultRow(trace.scheme, param, value, trace.seed, "ok", len(trace.rounds),
                     trace.total_energy, ph["mobility"], ph["computation"],
                     ph["communication"], wall)


def run_single(params: SystemParams, scheme="proposed", seed=None, trace_path=None,
               verbose=False, param="", value=math.nan, jobs=1):
    """One full aggregation. Returns (trace or None, ResultRow).

    Infeasible rounds give a row with status ``infeasible`` and the error
    attached as ``row.error``; numeric failures propagate.
    """
    if seed is not None:
        params = params.replace(rng_seed=seed)
    t0 = time.perf_counter()
    try:
        trace = run_aggregation(generate_scenario(params), params, scheme, jobs=jobs)
    except InfeasibleRoundError as exc:
        row = ResultRow(str(scheme), param, value, params.rng_seed, "infeasible",
                        wall_clock=time.perf_counter() - t0)
        row.error = exc
        return None, row
    row = _row_from_trace(trace, param, value, time.perf_counter() - t0)
    if trace_path is not None:
        Path(trace_path).write_text(trace.to_json(verbose))
    return trace, row


def pair_agents(params: SystemParams, initial_distance=None, payload_sender=None,
                payload_receiver=None, radius=None):
    """Sender (id 1) and receiver (id 2) on a horizontal line through the arena centre."""
    d = PAIR_DEFAULTS["initial_distance"] if initial_distance is None else float(initial_distance)
    ls = PAIR_DEFAULTS["payload_sender"] if payload_sender is None else float(payload_sender)
    lr = PAIR_DEFAULTS["payload_receiver"] if payload_receiver is None else float(payload_receiver)
    r = PAIR_DEFAULTS["radius"] if radius is None else float(radius)
    if d <= 0 or ls <= 0 or lr <= 0 or r <= 0:
        raise ConfigError("pair", "distance, payloads and radius must be > 0")
    mid = params.arena_side / 2.0
    a = (mid - d / 2.0, mid)
    b = (mid + d / 2.0, mid)
    return (AgentState(1, a, r, a, ls, frozenset({1})),
            AgentState(2, b, r, b, lr, frozenset({2})))


def pairwise_bench(params: SystemParams, param, value, scheme, rho=None) -> ResultRow:
    """One pair interaction under the assumed pair layout with one override."""
    if scheme not in INNER_VARIANTS:
        raise ConfigError("scheme", f"pair bench runs inner variants only, got {scheme!r}")
    overrides = {}
    if param in PAIR_ONLY:
        overrides[param] = value
        p = params
    else:
        p = cell_params(params, param, value, params.rng_seed)
        if p.num_agents != params.num_agents:
            raise ConfigError(param, "agent count is fixed at two in the pair bench")
    rho = PAIR_DEFAULTS["rho"] if rho is None else rho
    snd, rcv = pair_agents(p, **overrides)
    t0 = time.perf_counter()
    plan = inner_variant_solve(PairContext(snd, rcv, rho, rho, p), scheme)
    wall = time.perf_counter() - t0
    if not plan.feasible:
        return ResultRow(scheme, param, value, p.rng_seed, "infeasible", 1, wall_clock=wall)
    b = plan.breakdown
    return ResultRow(scheme, param, value, p.rng_seed, "ok", 1, b.total, b.mobility,
                     b.computation, b.e_comm, wall)


def _cell(job):
    spec_base, param, value, scheme, seed, pairwise = job
    try:
        if pairwise:
            return pairwise_bench(spec_base.replace(rng_seed=seed), param, value, scheme)
        _, row = run_single(cell_params(spec_base, param, value, seed), scheme,
                            param=param, value=value)
        row.__dict__.pop("error", None)
        return row
    except NumericError as exc:
        log.warning("numeric failure at %s=%s scheme=%s seed=%s: %s", param, value,
                    scheme, seed, exc)
        return ResultRow(scheme, param, value, seed, "numeric")


def summarize(rows, spec: SweepSpec):
    """Per (value, scheme) mean and standard error over the feasible seeds."""
    out = []
    for v in spec.values:
        for s in spec.schemes:
            group = [r for r in rows if r.value == v and r.scheme == s]
            ok = [r for r in group if r.feasible]
            tot = np.array([r.total for r in ok])
            if ok:
                mean = math.fsum(tot) / len(ok)
                se = float(np.std(tot, ddof=1) / math.sqrt(len(ok))) if len(ok) > 1 else math.nan
                phases = [math.fsum(getattr(r, k) for r in ok) / len(ok)
                          for k in ("mobility", "computation", "communication")]
            else:
                mean = se = math.nan
                phases = [math.nan] * 3
            out.append(SummaryRow(s, spec.param, v, len(group), len(ok), mean, se, *phases))
    return out


def write_csv(path, columns, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow(r.as_csv())


def run_sweep(spec: SweepSpec, jobs=1):
    """Execute every (value, scheme, seed) cell; write raw and summary CSVs.

    Returns (raw rows, summary rows). CSVs go to ``spec.out_dir`` when set.
    """
    cells = spec.cells()
    job_list = [(spec.base, spec.param, v, s, seed, spec.pairwise) for v, s, seed in cells]
    log.info("sweep %s: %d cells", spec.param, len(job_list))
    if jobs > 1 and len(job_list) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_cell, job_list))
    else:
        rows = [_cell(j) for j in job_list]
    summary = summarize(rows, spec)
    if spec.out_dir is not None:
        out = Path(spec.out_dir)
        stem = f"{'pair_' if spec.pairwise else ''}{spec.param}"
        write_csv(out / f"{stem}_raw.csv", RAW_COLUMNS, rows)
        write_csv(out / f"{stem}_summary.csv", SUMMARY_COLUMNS, summary)
    return rows, summary


def read_csv(path):
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))
