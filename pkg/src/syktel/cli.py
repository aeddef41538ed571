"""Command line front end for the ensemble experiments.

Each subcommand maps one-to-one onto a runner in syktel.ensemble; flags
override the config file, which overrides the built-in defaults.  The
config file is a flat JSON object whose keys mirror ExperimentConfig (see
that dataclass for the full list), e.g.

    {"n": 12, "base_seed": 7, "eps_grid": [0.0, 0.5, 1.0]}

Exit status is 0 on success and 2 with a one-line diagnostic on stderr
when the run aborts on a numerical failure or bad configuration.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
import time

from .ensemble import (
    EXPERIMENTS,
    ExperimentConfig,
    load_config,
    persist,
    run_experiment,
)
from .errors import NumericalFailure, NoCrossingError

_SCHEMES = {"lt": "lie_trotter", "strang": "strang_midpoint"}

_HELP = {
    "amplitude-scan": "fidelity versus drive amplitude at fixed frequency",
    "freq-scan": "fidelity suppression versus drive frequency",
    "chirp": "paired readout-time curves with and without a chirp drive",
    "otoc": "scrambling curves and drive-induced scrambling delay",
    "reopt-map": "recoverable fidelity across the amplitude/frequency plane",
    "scaling": "peak fidelity versus system size with per-size calibration",
    "convergence": "integrator self-convergence on standard test points",
    "calibrate": "undriven (g, t) grid search for the working point",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="syktel",
        description="Ensemble experiments for the two-sided teleportation "
                    "protocol under boundary strain drives.",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for kind in EXPERIMENTS:
        p = sub.add_parser(kind, help=_HELP[kind])
        p.add_argument("--config", metavar="FILE",
                       help="JSON config file mirroring ExperimentConfig")
        p.add_argument("--seed", type=int, metavar="INT",
                       help="base seed of the realization batch")
        p.add_argument("--n-avg", type=int, metavar="INT",
                       help="number of disorder realizations")
        p.add_argument("--out", metavar="DIR",
                       help="output directory for the result tables")
        p.add_argument("--threads", type=int, metavar="INT",
                       help="worker threads (does not affect the numbers)")
        p.add_argument("--dt", type=float, metavar="FLOAT",
                       help="base integrator step")
        p.add_argument("--scheme", choices=sorted(_SCHEMES),
                       help="splitting scheme: lt or strang")
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    over = {"experiment": args.experiment}
    if args.seed is not None:
        over["base_seed"] = args.seed
    if args.n_avg is not None:
        over["n_avg"] = args.n_avg
    if args.out is not None:
        over["out_dir"] = args.out
    if args.threads is not None:
        over["threads"] = args.threads
    if args.dt is not None:
        over["dt"] = args.dt
    if args.scheme is not None:
        over["scheme"] = _SCHEMES[args.scheme]
    return dataclasses.replace(cfg, **over).resolved()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        start = time.perf_counter()
        records, stats = run_experiment(cfg)
        wall = time.perf_counter() - start
        path = persist(records, stats, cfg, wall_time=wall)
    except (NumericalFailure, NoCrossingError, ValueError, OSError) as exc:
        print(f"syktel: {args.experiment} failed: {exc}", file=sys.stderr)
        return 2
    print(f"{args.experiment}: {len(records)} raw records, "
          f"{len(stats)} summary rows -> {path}")
    for st in stats:
        if not st.coords:
            print(f"  {st.name} = {st.mean:.6g}"
                  + (f" +- {st.stderr:.2g}" if st.n_avg > 1 else ""))
    return 0


if __name__ == "__main__":
    sys.exit(main())
