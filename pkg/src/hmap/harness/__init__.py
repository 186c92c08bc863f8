"""Experiment plumbing: single runs, sweeps over seeds, CSV output and the CLI."""

from hmap.harness.sweep import (PAIR_DEFAULTS, SWEEP_PARAMS, ResultRow, SummaryRow,
                                SweepSpec, cell_params, pair_agents, pairwise_bench,
                                run_single, run_sweep, summarize)

__all__ = ["PAIR_DEFAULTS", "SWEEP_PARAMS", "ResultRow", "SummaryRow", "SweepSpec",
           "cell_params", "pair_agents", "pairwise_bench", "run_single", "run_sweep",
           "summarize"]
