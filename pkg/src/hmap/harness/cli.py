"""Command line entry point: ``hmap {run,sweep,pairbench,validate-config,plot}``.

Exit codes: 0 success, 2 config error, 3 infeasible, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from hmap.benchmarks import SCHEMES
from hmap.errors import ConfigError, InfeasibleRoundError, NumericError
from hmap.harness.sweep import (PAIR_SCHEMES, RAW_COLUMNS, SWEEP_PARAMS, SweepSpec,
                                run_single, run_sweep, write_csv)
from hmap.scenario import SystemParams, format_params, load_params

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_NUMERIC = 0, 2, 3, 4

log = logging.getLogger("hmap")


def _params(args) -> SystemParams:
    params = load_params(args.config) if args.config else SystemParams()
    if getattr(args, "seed", None) is not None:
        params = params.replace(rng_seed=args.seed)
    return params


def _schemes(arg, default):
    if not arg:
        return tuple(default)
    out = []
    for chunk in arg:
        out.extend(s.strip() for s in chunk.split(",") if s.strip())
    return tuple(out)


def _values(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ConfigError("values", f"not a comma-separated number list: {text!r}") from None


def cmd_run(args):
    params = _params(args)
    scheme = (_schemes(args.scheme, ["proposed"]) or ("proposed",))[0]
    if scheme not in SCHEMES:
        raise ConfigError("scheme", f"unknown scheme {scheme!r}")
    trace_path = args.trace
    if trace_path is None and args.out:
        trace_path = Path(args.out) / f"trace_{scheme}_seed{params.rng_seed}.json"
    if trace_path is not None:
        Path(trace_path).parent.mkdir(parents=True, exist_ok=True)
    trace, row = run_single(params, scheme, trace_path=trace_path, verbose=args.verbose,
                            jobs=args.jobs)
    if args.out:
        write_csv(Path(args.out) / f"run_{scheme}_seed{params.rng_seed}.csv", RAW_COLUMNS, [row])
    if trace is None:
        print(json.dumps({"status": "infeasible", "scheme": scheme, "seed": params.rng_seed,
                          "error": str(row.error), "report": row.error.report},
                         sort_keys=True, default=str), file=sys.stderr)
        return EXIT_INFEASIBLE
    print(f"scheme={scheme} seed={params.rng_seed} rounds={len(trace.rounds)} "
          f"root={trace.root} total_energy_J={trace.total_energy:.9g}")
    return EXIT_OK


def _sweep(args, pairwise):
    default = PAIR_SCHEMES if pairwise else ["proposed"]
    spec = SweepSpec(args.param, _values(args.values), _schemes(args.scheme, default),
                     args.seeds, Path(args.out) if args.out else None, _params(args),
                     pairwise=pairwise)
    rows, summary = run_sweep(spec, jobs=args.jobs)
    for s in summary:
        print(f"{s.scheme:>16s} {s.param}={s.value:<12g} mean={s.mean_total:.6g} J "
              f"se={s.stderr_total:.3g} feasible={s.n_feasible}/{s.n_seeds}")
    if args.plot and spec.out_dir is not None:
        from hmap.harness.plotting import plot_summary
        stem = f"{'pair_' if pairwise else ''}{spec.param}"
        plot_summary(spec.out_dir / f"{stem}_summary.csv")
    if any(r.status == "numeric" for r in rows):
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_sweep(args):
    return _sweep(args, pairwise=False)


def cmd_pairbench(args):
    return _sweep(args, pairwise=True)


def cmd_validate(args):
    params = _params(args)
    sys.stdout.write(format_params(params))
    return EXIT_OK


def cmd_plot(args):
    from hmap.harness.plotting import plot_summary
    print(plot_summary(args.summary, args.out))
    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value parameter file")
    common.add_argument("--seed", type=int, help="scenario seed (sweeps: seed base)")
    common.add_argument("--verbose", action="store_true")
    common.add_argument("--jobs", type=int, default=1, help="worker processes")

    p = argparse.ArgumentParser(prog="hmap", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", parents=[common], help="one aggregation run")
    r.add_argument("--scheme", action="append", help=f"one of {', '.join(SCHEMES)}")
    r.add_argument("--out", help="directory for the result CSV (and trace)")
    r.add_argument("--trace", help="trace JSON path")
    r.set_defaults(func=cmd_run)

    for name, func, helptext in (("sweep", cmd_sweep, "seeded parameter sweep"),
                                 ("pairbench", cmd_pairbench, "single-pair sweep")):
        s = sub.add_parser(name, parents=[common], help=helptext)
        s.add_argument("--param", required=True, choices=list(SWEEP_PARAMS))
        s.add_argument("--values", required=True, help="comma-separated values")
        s.add_argument("--scheme", action="append", help="scheme(s), comma-separated or repeated")
        s.add_argument("--seeds", type=int, default=10 if name == "sweep" else 1)
        s.add_argument("--out", help="output directory for CSVs")
        s.add_argument("--plot", action="store_true", help="also write a PNG of the summary")
        s.set_defaults(func=func)

    v = sub.add_parser("validate-config", parents=[common], help="parse and echo a config")
    v.set_defaults(func=cmd_validate)

    pl = sub.add_parser("plot", help="PNG from a summary CSV")
    pl.add_argument("summary")
    pl.add_argument("--out")
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleRoundError as exc:
        print(json.dumps({"status": "infeasible", "error": str(exc), "report": exc.report},
                         sort_keys=True, default=str), file=sys.stderr)
        return EXIT_INFEASIBLE
    except NumericError as exc:
        print(json.dumps({"status": "numeric", "error": str(exc),
                          "diagnostics": exc.diagnostics}, sort_keys=True, default=str),
              file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
