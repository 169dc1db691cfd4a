"""Command-line entry point: ``mallga {gen,run,report,oracle}``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .algorithms import VARIANT_NAMES, Variant, build_config
from .engine import run_ga
from .harness import (TRACE_KINDS, load_archive, load_instances, run_experiment, save_archive,
                      summarize, export_traces, write_summary)
from .instances import SET_IDS, generate_sets, tiny_instance
from .model import brute_force_optimum

log = logging.getLogger("mallga")


def parse_int_list(text: str) -> list[int]:
    """``"3-7"``, ``"3,5,7"`` or a mix such as ``"0-2,5"``."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError(f"empty list {text!r}")
    return out


def _variant(text: str) -> Variant:
    try:
        return Variant.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mallga", description="Shopping-mall layout GA experiments.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="write the seeded instance sets")
    gen.add_argument("--sets", type=parse_int_list, default=list(SET_IDS), help="e.g. 3-7 (default) or 4,7")
    gen.add_argument("--instances", type=parse_int_list, default=list(range(10)), help="indices, default 0-9")
    gen.add_argument("--seed", type=int, default=42)
    gen.add_argument("--out", type=Path, default=Path("data"))

    run = sub.add_parser("run", help="run variants over instance files")
    run.add_argument("--algo", type=_variant, action="append", required=True,
                     help=f"repeatable; one of {', '.join(VARIANT_NAMES)}, optionally with @LIMIT or :sN")
    run.add_argument("--data", type=Path, default=Path("data"))
    run.add_argument("--sets", type=parse_int_list, default=list(SET_IDS))
    run.add_argument("--instances", type=parse_int_list, default=list(range(10)))
    run.add_argument("--runs", type=int, default=20)
    run.add_argument("--seed", type=int, default=42)
    run.add_argument("--out", type=Path, default=Path("results"))
    run.add_argument("--workers", type=int, default=None, help="default: MALLGA_THREADS or all cores")
    run.add_argument("--timing", action="store_true", help="fill the seconds column (not reproducible)")

    report = sub.add_parser("report", help="summaries and trace CSVs from a run archive")
    report.add_argument("--archive", type=Path, required=True, help="runs.jsonl written by 'run'")
    report.add_argument("--kind", choices=("summary", *TRACE_KINDS), action="append",
                        help="repeatable; default: everything")
    report.add_argument("--out", type=Path, default=Path("results"))

    oracle = sub.add_parser("oracle", help="enumerate a tiny instance and compare the GAs with the optimum")
    oracle.add_argument("--seed", type=int, default=0)
    oracle.add_argument("--locations", type=int, default=6)
    oracle.add_argument("--types", type=int, default=3)
    oracle.add_argument("--areas", type=int, default=2)
    oracle.add_argument("--runs", type=int, default=20)
    oracle.add_argument("--algo", type=_variant, action="append",
                        help="default: direct (pop 50) and ind-auto (pop 30)")
    return parser


def cmd_gen(args) -> int:
    paths = generate_sets(args.out, sets=args.sets, master_seed=args.seed, indices=args.instances)
    print(f"wrote {len(paths)} instance files to {args.out}")
    return 0


def cmd_run(args) -> int:
    refs = load_instances(args.data, args.sets, args.instances)
    done = [0]

    def progress(rec):
        done[0] += 1
        log.info("%d: %s set %d instance %d run %d -> %s", done[0], rec.variant, rec.set_id,
                 rec.instance, rec.run, rec.best_feasible_rent)

    records, errors = run_experiment(args.algo, refs, runs=args.runs, master_seed=args.seed,
                                     workers=args.workers, progress=progress)
    for err in errors:
        print(f"error: {err}", file=sys.stderr)
    if not records:
        print("error: no instance could be run", file=sys.stderr)
        return 1
    summary = summarize(records, errors)
    args.out.mkdir(parents=True, exist_ok=True)
    write_summary(summary, args.out, with_timing=args.timing)
    save_archive(records, args.out / "runs.jsonl", with_timing=args.timing)
    for row in summary.aggregates:
        if row["set"] == "all":
            print(f"{row['variant']:<22} feasibility {row['feasibility']:.3f}  rent {row['rent']:.1f}"
                  f"  ratio {row['rent_ratio']:.3f}")
    print(f"wrote summary.csv, aggregate.csv and runs.jsonl to {args.out}")
    return 0


def cmd_report(args) -> int:
    records = load_archive(args.archive)
    args.out.mkdir(parents=True, exist_ok=True)
    kinds = args.kind or ["summary", *TRACE_KINDS]
    for kind in kinds:
        if kind == "summary":
            write_summary(summarize(records), args.out)
            print(f"summary: {args.out / 'summary.csv'}, {args.out / 'aggregate.csv'}")
        else:
            path = args.out / f"{kind}.csv"
            rows = export_traces(records, kind, path)
            print(f"{kind}: {rows} rows in {path}")
    return 0


def cmd_oracle(args) -> int:
    inst = tiny_instance(args.seed, num_locations=args.locations, num_types=args.types, num_areas=args.areas)
    optimum, layout = brute_force_optimum(inst)
    if optimum is None:
        print(f"instance {inst.name}: no feasible layout")
        return 0
    print(f"instance {inst.name}: optimum {optimum:.6f} at {layout.tolist()}")
    variants = args.algo or [Variant("direct"), Variant("ind-auto")]
    for v in variants:
        hits = 0
        for run in range(args.runs):
            config, problem = build_config(v, inst, population_size=50 if v.direct else 30)
            best = run_ga(config, problem, np.random.SeedSequence([args.seed, run])).best_feasible_rent
            hits += best is not None and np.isclose(best, optimum, rtol=0, atol=1e-9)
        print(f"{v.label:<22} found the optimum in {hits}/{args.runs} runs")
    return 0


COMMANDS = {"gen": cmd_gen, "run": cmd_run, "report": cmd_report, "oracle": cmd_oracle}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
