"""Command-line entry point: run a sweep, or compare two curve files."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .harness import (DEFAULT_BUDGETS, ExperimentConfig, compare, compare_csv, read_curves,
                      run_experiments)
from .topology import ConfigurationError


def _branch(text: str):
    return text if text == "all" else int(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="holarchy",
        description="Decentralized plan selection over tree overlays with holarchic schemes.")
    p.add_argument("--dataset", default="synthetic",
                   help="'synthetic' or a directory of agent_<id>.plans files")
    p.add_argument("--scheme", nargs="+", default=["baseline"],
                   choices=["baseline", "h-init", "h-runtime", "h-term"])
    p.add_argument("--scale", nargs="+", default=None, choices=["full", "partial"])
    p.add_argument("--branch", type=_branch, default=None,
                   help="root branch for partial scale, or 'all' (default 0)")
    p.add_argument("--children", nargs="+", type=int, default=[2])
    p.add_argument("--lambda", dest="lambdas", nargs="+", type=float, default=[0.0])
    p.add_argument("--agents", type=int, default=127)
    p.add_argument("--plans", type=int, default=16, help="plans per agent (synthetic)")
    p.add_argument("--dim", type=int, default=100, help="plan dimension (synthetic)")
    p.add_argument("--iterations", type=int, default=40, help="maximum main iterations")
    p.add_argument("--tau", type=int, default=5, help="holarchic iterations per holon")
    p.add_argument("--conv-window", type=int, default=3)
    p.add_argument("--init-passes", type=int, default=1)
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--seed", type=int, default=0, help="base seed; repetition r uses seed+r")
    p.add_argument("--fail-node", type=int, nargs="+", default=[],
                   help="tree positions that crash (0 is the root)")
    p.add_argument("--fail-at", type=int, default=2,
                   help="main iterations completed before the crash")
    p.add_argument("--out", default="results")
    p.add_argument("--paper-grid", dest="full_grid", action="store_true",
                   help="sweep every scheme, c=2..5 and lambda=0..0.75 (all branches)")
    p.add_argument("--compare", nargs=2, metavar=("CURVES_A", "CURVES_B"),
                   help="compare two curves.csv files at equal message budgets")
    p.add_argument("--budgets", type=int, nargs="+", default=list(DEFAULT_BUDGETS))
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    if args.compare:
        rows = compare(read_curves(args.compare[0]), read_curves(args.compare[1]), args.budgets)
        text = compare_csv(rows)
        if args.out == "-":
            sys.stdout.write(text)
        else:
            Path(args.out).mkdir(parents=True, exist_ok=True)
            (Path(args.out) / "compare.csv").write_bytes(text.encode("utf-8"))
            print(f"compare: {Path(args.out) / 'compare.csv'}")
        return 0

    cfg = ExperimentConfig(
        dataset=args.dataset, schemes=tuple(args.scheme),
        scales=tuple(args.scale or ["full"]), branch=args.branch,
        children=tuple(args.children), lambdas=tuple(args.lambdas), agents=args.agents,
        plans=args.plans, dim=args.dim, T_max=args.iterations, tau=args.tau,
        reps=args.reps, base_seed=args.seed, conv_window=args.conv_window,
        init_passes=args.init_passes, fail_nodes=tuple(args.fail_node), fail_at=args.fail_at,
        out=args.out)
    if args.full_grid:
        cfg = cfg.with_full_grid()
        if args.scale is None:
            cfg = replace(cfg, scales=("full", "partial"))
    try:
        paths = run_experiments(cfg)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for name, path in paths.items():
        print(f"{name}: {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
