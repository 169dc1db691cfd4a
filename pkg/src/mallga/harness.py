"""Experiment protocol: variants x instances x seeded runs, metrics and CSV export.

Run seeds depend only on (master seed, set, instance, run), so every
variant starts a given run from the same initial chromosomes.  Rents are
reported in thousands of pounds.  An instance on which no run found a
feasible layout contributes a censored rent of zero.
"""
from __future__ import annotations

import csv
import json
import logging
import os
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .algorithms import Variant, build_config
from .engine import run_ga
from .instances import instance_path, read_instance
from .model import MallInstance, upper_bound
from .operators import CrossoverTag

log = logging.getLogger(__name__)

SUMMARY_FIELDS = ("variant", "set", "instance", "feasibility", "best_rent", "generations", "seconds")
AGGREGATE_FIELDS = ("variant", "set", "instances", "feasibility", "rent", "upper_bound", "rent_ratio")
TRACE_KINDS = ("weights-by-set", "crossover-shares", "convergence")


@dataclass
class RunRecord:
    """One persisted GA run."""

    variant: str
    set_id: int
    instance: int
    run: int
    upper_bound: float
    best_feasible_rent: float | None
    best_feasible_layout: list[int] | None
    generations: int
    best_fitness_trace: list[float]
    final_stats: dict
    stats_trace: list[dict]
    seconds: float = 0.0

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "RunRecord":
        return cls(**json.loads(line))


@dataclass
class InstanceRef:
    set_id: int
    index: int
    instance: MallInstance | None = None
    path: Path | None = None


@dataclass
class ExperimentSummary:
    rows: list[dict]  # one per (variant, set, instance)
    aggregates: list[dict]  # one per (variant, set), plus set "all"
    errors: list[str] = field(default_factory=list)

    def aggregate(self, variant: str, set_id="all") -> dict:
        for row in self.aggregates:
            if row["variant"] == variant and str(row["set"]) == str(set_id):
                return row
        raise KeyError((variant, set_id))


def run_seed(master_seed: int, set_id: int, index: int, run: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([master_seed, set_id, index, run])


def run_cell(variant: Variant | str, inst: MallInstance, set_id: int, index: int, run: int,
             master_seed: int, **config_overrides) -> RunRecord:
    """One seeded run of ``variant`` on one instance."""
    if isinstance(variant, str):
        variant = Variant.parse(variant)
    config, problem = build_config(variant, inst, **config_overrides)
    seed = run_seed(master_seed, set_id, index, run)
    alt = None
    if variant.stream_offset:
        alt = run_seed(master_seed + variant.stream_offset, set_id, index, run)
    result = run_ga(config, problem, seed, aux_seed=alt, evolve_seed=alt)
    return RunRecord(
        variant=variant.label, set_id=set_id, instance=index, run=run,
        upper_bound=upper_bound(inst),
        best_feasible_rent=result.best_feasible_rent,
        best_feasible_layout=result.best_feasible_layout,
        generations=result.generations,
        best_fitness_trace=result.best_fitness_trace,
        final_stats=result.final_stats,
        stats_trace=result.stats_trace,
        seconds=result.seconds,
    )


def _cell_job(args):
    variant, inst, set_id, index, run, seed, overrides = args
    return run_cell(variant, inst, set_id, index, run, seed, **overrides)


def worker_count() -> int:
    cap = os.environ.get("MALLGA_THREADS")
    n = os.cpu_count() or 1
    return max(1, min(n, int(cap))) if cap else n


def load_instances(data_dir, sets: Iterable[int], indices: Iterable[int] = range(10)) -> list[InstanceRef]:
    return [InstanceRef(s, i, path=instance_path(data_dir, s, i)) for s in sets for i in indices]


def run_experiment(variants: Sequence[Variant | str], instances: Sequence[InstanceRef], runs: int = 20,
                   master_seed: int = 42, workers: int | None = None, progress=None,
                   **config_overrides) -> tuple[list[RunRecord], list[str]]:
    """Run every (variant, instance, run) cell; returns the archive and per-instance errors.

    Instances that cannot be loaded are reported in the error list and skipped.
    """
    variants = [Variant.parse(v) if isinstance(v, str) else v for v in variants]
    errors: list[str] = []
    jobs = []
    for ref in instances:
        inst = ref.instance
        if inst is None:
            try:
                inst = read_instance(ref.path)
            except (OSError, ValueError) as exc:
                errors.append(f"set {ref.set_id} instance {ref.index}: {exc}")
                log.warning("skipping instance: %s", exc)
                continue
        for v in variants:
            for r in range(runs):
                jobs.append((v, inst, ref.set_id, ref.index, r, master_seed, config_overrides))

    workers = worker_count() if workers is None else workers
    records: list[RunRecord] = []
    if workers <= 1:
        for job in jobs:
            records.append(_cell_job(job))
            if progress:
                progress(records[-1])
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for rec in pool.map(_cell_job, jobs, chunksize=1):
                records.append(rec)
                if progress:
                    progress(rec)
    return records, errors


# ---------------------------------------------------------------- metrics


def summarize(records: Sequence[RunRecord], errors: Sequence[str] = ()) -> ExperimentSummary:
    """Per-instance rows and per-(variant, set) means, in archive order."""
    cells: dict[tuple, list[RunRecord]] = defaultdict(list)
    for rec in records:
        cells[(rec.variant, rec.set_id, rec.instance)].append(rec)

    rows = []
    for (variant, set_id, index), recs in cells.items():
        feasible = [r.best_feasible_rent for r in recs if r.best_feasible_rent is not None]
        rows.append({
            "variant": variant, "set": set_id, "instance": index,
            "feasibility": len(feasible) / len(recs),
            "best_rent": max(feasible) if feasible else 0.0,
            "generations": float(np.mean([r.generations for r in recs])),
            "seconds": float(sum(r.seconds for r in recs)),
            "upper_bound": recs[0].upper_bound,
        })

    groups: dict[tuple, list[dict]] = defaultdict(list)
    for row in rows:
        groups[(row["variant"], row["set"])].append(row)
        groups[(row["variant"], "all")].append(row)
    aggregates = []
    for (variant, set_id), members in groups.items():
        rent = float(np.mean([m["best_rent"] for m in members]))
        bound = float(np.mean([m["upper_bound"] for m in members]))
        aggregates.append({
            "variant": variant, "set": set_id, "instances": len(members),
            "feasibility": float(np.mean([m["feasibility"] for m in members])),
            "rent": rent, "upper_bound": bound,
            "rent_ratio": rent / bound if bound > 0 else 0.0,
        })
    order = {v: n for n, v in enumerate(dict.fromkeys(r["variant"] for r in rows))}
    aggregates.sort(key=lambda a: (order[a["variant"]], a["set"] == "all", str(a["set"])))
    return ExperimentSummary(rows, aggregates, list(errors))


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(round(value, 6))
    return str(value)


def _write_csv(path, fields, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(fields)
        for row in rows:
            writer.writerow([_fmt(row.get(f, "")) for f in fields])


def write_summary(summary: ExperimentSummary, out_dir, with_timing: bool = False) -> list[Path]:
    """Write summary.csv (per instance) and aggregate.csv; timing is left blank unless asked for."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = [dict(r, seconds=r["seconds"] if with_timing else "") for r in summary.rows]
    _write_csv(out / "summary.csv", SUMMARY_FIELDS, rows)
    _write_csv(out / "aggregate.csv", AGGREGATE_FIELDS, summary.aggregates)
    return [out / "summary.csv", out / "aggregate.csv"]


def save_archive(records: Sequence[RunRecord], path, with_timing: bool = False) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            if not with_timing:
                rec = RunRecord(**{**asdict(rec), "seconds": 0.0})
            fh.write(rec.to_json() + "\n")


def load_archive(path) -> list[RunRecord]:
    with open(path, encoding="utf-8") as fh:
        return [RunRecord.from_json(line) for line in fh if line.strip()]


# ---------------------------------------------------------------- traces


def _base_variant(label: str) -> Variant:
    return Variant.parse(label)


def final_weight_means(records: Sequence[RunRecord]) -> dict[tuple[int, float], np.ndarray]:
    """Mean final-generation decoder weights per (set, weight limit)."""
    acc: dict[tuple[int, float], list] = defaultdict(list)
    for rec in records:
        w = rec.final_stats.get("mean_weights")
        if w is not None:
            acc[(rec.set_id, _base_variant(rec.variant).weight_limit)].append(w)
    return {key: np.mean(ws, axis=0) for key, ws in sorted(acc.items())}


def export_traces(records: Sequence[RunRecord], kind: str, path) -> int:
    """Write one trace CSV; returns the number of data rows written."""
    if kind == "weights-by-set":
        means = final_weight_means(records)
        if not means:
            log.warning("no adaptive-weight runs in the archive; weights file is empty")
        rows = [dict(set=s, limit=lim, **{f"w{g + 1}": float(w[g]) for g in range(6)})
                for (s, lim), w in means.items()]
        _write_csv(path, ("set", "limit", "w1", "w2", "w3", "w4", "w5", "w6"), rows)
        return len(rows)
    if kind == "crossover-shares":
        tags = [t.name for t in CrossoverTag]
        rows = []
        for rec in records:
            for gen, stats in enumerate(rec.stats_trace):
                shares = stats.get("tag_shares")
                if shares:
                    rows.append(dict(variant=rec.variant, set=rec.set_id, instance=rec.instance,
                                     run=rec.run, generation=gen, **shares))
        if not rows:
            log.warning("no adaptive-crossover runs in the archive; shares file is empty")
        _write_csv(path, ("variant", "set", "instance", "run", "generation", *tags), rows)
        return len(rows)
    if kind == "convergence":
        rows = [dict(variant=rec.variant, set=rec.set_id, instance=rec.instance, run=rec.run,
                     generation=gen, best_fitness=f)
                for rec in records for gen, f in enumerate(rec.best_fitness_trace)]
        _write_csv(path, ("variant", "set", "instance", "run", "generation", "best_fitness"), rows)
        return len(rows)
    raise ValueError(f"unknown trace kind {kind!r}; choose from {', '.join(TRACE_KINDS)}")

