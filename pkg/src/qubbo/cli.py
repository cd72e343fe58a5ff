"""Command-line interface.

Subcommands
-----------
run               execute a sigma2 sweep from a JSON config, writing
                  traces, per-arm datasets, report CSVs and a manifest
report            regenerate report CSVs from existing trace files
validate-dataset  schema/duplicate/feasibility checks on a dataset CSV
solve             solve one QUBO text file, writing a sample-pool CSV

Exit codes: 0 success, 2 invalid input (config/schema/validation
findings), 3 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .acquisition import read_qubo
from .config import load_run_config
from .dataset import read_dataset_rows
from .driver import dataset_from_trace, read_trace, run_sweep, write_trace
from .exceptions import QubboError
from .report import build_report
from .solvers import SolverConfig, solve, write_pool_csv
from .space import DesignSpace

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_IO = 3


def cmd_run(args: argparse.Namespace) -> int:
    cfg, echo = load_run_config(args.config)
    if args.master_seed is not None:
        cfg.master_seed = args.master_seed
        echo.setdefault("run", {})["master_seed"] = args.master_seed
    out = Path(args.out)
    (out / "traces").mkdir(parents=True, exist_ok=True)
    (out / "datasets").mkdir(parents=True, exist_ok=True)

    logger.info("running sweep: %d arms, %d loops", len(cfg.sigma2_grid), cfg.n_loops)
    traces = run_sweep(cfg)
    for trace in traces:
        write_trace(trace, out / "traces" / f"trace_{trace.label}.jsonl")
        dataset_from_trace(trace).to_csv(out / "datasets" / f"dataset_{trace.label}.csv")
    bundle = build_report(traces, out / "report")

    manifest = {
        "schema": 1,
        "config": echo,
        "master_seed": cfg.master_seed,
        "labels": [t.label for t in traces],
        "artifacts": {
            "traces": [f"traces/trace_{t.label}.jsonl" for t in traces],
            "datasets": [f"datasets/dataset_{t.label}.csv" for t in traces],
            "report": [f"report/{name}" for name in bundle.files],
        },
        "versions": {
            "qubbo": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": ".".join(str(v) for v in sys.version_info[:3]),
        },
    }
    with (out / "manifest.json").open("w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for label, entry in bundle.summary.items():
        print(f"{label}: best_y={entry['best_y']!r} n_added={entry['n_added']}")
    print(f"wrote {out}/manifest.json")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    traces = [read_trace(p) for p in args.traces]
    bundle = build_report(traces, args.out, threshold=args.threshold)
    for name in bundle.files:
        print(f"wrote {Path(args.out) / name}")
    return EXIT_OK


def cmd_validate_dataset(args: argparse.Namespace) -> int:
    if (args.config is None) == (args.cardinalities is None):
        print("error: give exactly one of --config or --cardinalities", file=sys.stderr)
        return EXIT_INVALID
    if args.config is not None:
        cfg, _ = load_run_config(args.config)
        space = cfg.space
    else:
        try:
            cards = [int(v) for v in args.cardinalities.split(",")]
        except ValueError:
            print(f"error: bad --cardinalities {args.cardinalities!r}", file=sys.stderr)
            return EXIT_INVALID
        space = DesignSpace.from_cardinalities(cards)

    header, rows = read_dataset_rows(args.dataset)
    findings: list[str] = []
    n = len(header) - 2
    if n != space.total_bits:
        findings.append(
            f"header: {n} bit columns but the space needs {space.total_bits}"
        )
    else:
        seen: dict[bytes, int] = {}
        for idx, (bits, _y, _loop) in enumerate(rows):
            lineno = idx + 2
            arr = np.array(bits, dtype=np.uint8)
            key = arr.tobytes()
            if key in seen:
                findings.append(f"row {lineno}: duplicate of row {seen[key]}")
            else:
                seen[key] = lineno
            if not space.is_feasible(arr):
                codes = space.decode(arr)
                bad = [
                    f"{space.sites[s].name}={int(codes[s])}"
                    for s in range(len(space.sites))
                    if codes[s] >= space.sites[s].cardinality
                ]
                findings.append(f"row {lineno}: infeasible ({', '.join(bad)})")
    for line in findings:
        print(line)
    if findings:
        print(f"{len(findings)} problem(s) in {args.dataset}")
        return EXIT_INVALID
    print(f"{args.dataset}: OK ({len(rows)} rows)")
    return EXIT_OK


def cmd_solve(args: argparse.Namespace) -> int:
    problem = read_qubo(args.qubo)
    cfg = SolverConfig(
        backend=args.backend,
        reads=args.reads,
        sweeps=args.sweeps,
        beta_start=args.beta_start,
        beta_end=args.beta_end,
    )
    pool = solve(problem, cfg, seed=args.seed)
    write_pool_csv(pool, args.out)
    print(f"{len(pool)} states, best energy {float(pool.energies[0])!r} -> {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qubbo",
        description="Black-box optimization over categorical spaces via a QUBO surrogate.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "-v", "--verbose", action="store_true", help="log loop progress to stderr"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a sigma2 sweep from a JSON config")
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--master-seed", type=int, default=None, help="override the config seed")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="regenerate report CSVs from traces")
    p.add_argument("--traces", nargs="+", required=True, help="trace JSONL files")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--threshold", type=float, default=None,
                   help="override the traces' threshold")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("validate-dataset", help="check a dataset CSV against a space")
    p.add_argument("--dataset", required=True, help="dataset CSV (x1..xN,y,loop)")
    p.add_argument("--config", default=None, help="take the space from this config")
    p.add_argument("--cardinalities", default=None,
                   help="comma-separated site cardinalities, e.g. 6,29,64,64")
    p.set_defaults(func=cmd_validate_dataset)

    p = sub.add_parser("solve", help="solve a QUBO text file")
    p.add_argument("--qubo", required=True, help="QUBO in the text interchange format")
    p.add_argument("--out", required=True, help="sample-pool CSV to write")
    p.add_argument("--backend", default="simulated_annealing",
                   choices=["simulated_annealing", "exhaustive"])
    p.add_argument("--reads", type=int, default=300)
    p.add_argument("--sweeps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--beta-start", type=float, default=None)
    p.add_argument("--beta-end", type=float, default=None)
    p.set_defaults(func=cmd_solve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except QubboError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
