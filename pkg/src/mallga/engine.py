"""Generational GA loop with linear rank selection and elitist replacement."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

# spawn keys of the per-run random streams
INIT_STREAM, AUX_STREAM, EVOLVE_STREAM = 0, 1, 2


class HookError(RuntimeError):
    """A problem hook failed; ``index`` names the individual or mating involved."""

    def __init__(self, message: str, index: int):
        super().__init__(f"{message} (individual {index})")
        self.index = index


@dataclass(frozen=True)
class GAConfig:
    population_size: int
    elite_fraction: float = 0.10
    stall_generations: int = 30
    selection_pressure: float = 2.0
    penalty_weight: float = 20.0
    max_generations: int = 2000

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be at least 2")
        if not 0 < self.elite_fraction < 1:
            raise ValueError("elite_fraction must lie in (0, 1)")
        if not 1 <= self.selection_pressure <= 2:
            raise ValueError("linear ranking needs 1 <= selection_pressure <= 2")

    @property
    def elite_count(self) -> int:
        return min(self.population_size - 1, max(1, round(self.elite_fraction * self.population_size)))


@dataclass
class Evaluation:
    fitness: np.ndarray
    rent: np.ndarray
    feasible: np.ndarray

    def take(self, idx) -> "Evaluation":
        return Evaluation(self.fitness[idx], self.rent[idx], self.feasible[idx])

    @staticmethod
    def concat(parts: Sequence["Evaluation"]) -> "Evaluation":
        return Evaluation(*(np.concatenate([getattr(p, f) for p in parts])
                            for f in ("fitness", "rent", "feasible")))


class Problem:
    """Hooks the engine calls. Subclasses provide the encoding-specific parts."""

    def initial_population(self, size: int, init_rng: np.random.Generator,
                           aux_rng: np.random.Generator) -> list:
        raise NotImplementedError

    def evaluate(self, population: Sequence[Any]) -> Evaluation:
        raise NotImplementedError

    def mate(self, a, b, rank_a: int, rank_b: int, rng: np.random.Generator) -> tuple:
        raise NotImplementedError

    def breed(self, mothers: Sequence[Any], fathers: Sequence[Any], ranks_m: Sequence[int],
              ranks_f: Sequence[int], rng: np.random.Generator) -> list:
        """Children of every pair, two per pair; override to vectorise."""
        children = []
        for p, (a, b, ra, rb) in enumerate(zip(mothers, fathers, ranks_m, ranks_f)):
            try:
                children.extend(self.mate(a, b, int(ra), int(rb), rng))
            except HookError:
                raise
            except Exception as exc:  # noqa: BLE001 - re-raised with context
                raise HookError(f"mate failed: {exc}", p) from exc
        return children

    def describe(self, population: Sequence[Any]) -> dict:
        """Per-generation statistics worth tracing (auxiliary genes etc.)."""
        return {}

    def solution(self, individual) -> Any:
        """The layout an individual stands for."""
        return individual


@dataclass
class RunResult:
    best_feasible_rent: float | None
    best_feasible_layout: list[int] | None
    best_fitness_trace: list[float]
    generations: int
    final_stats: dict = field(default_factory=dict)
    stats_trace: list[dict] = field(default_factory=list)
    seconds: float = 0.0


def selection_probabilities(n: int, pressure: float = 2.0) -> np.ndarray:
    """Linear ranking probabilities, index r-1 for rank r (rank 1 = worst)."""
    if n == 1:
        return np.ones(1)
    w = 1.0 + (pressure - 1.0) * np.arange(n) / (n - 1)
    return w / w.sum()


def rank_order(fitness: np.ndarray) -> np.ndarray:
    """Population indices sorted worst to best (position r-1 holds rank r)."""
    return np.argsort(fitness, kind="stable")


def select_parent(ranked: Sequence[Any], rng: np.random.Generator, pressure: float = 2.0):
    """Pick one member of ``ranked`` (ordered worst to best) by linear ranking."""
    probs = selection_probabilities(len(ranked), pressure)
    return ranked[int(rng.choice(len(ranked), p=probs))]


def has_converged(trace: Sequence[float], stall_generations: int = 30) -> bool:
    """True when the best fitness has not strictly improved for ``stall_generations``."""
    if len(trace) <= stall_generations:
        return False
    return max(trace[-stall_generations:]) <= trace[-stall_generations - 1]


def _draw_pairs(n_pairs: int, probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    n = probs.size
    pairs = rng.choice(n, size=(n_pairs, 2), p=probs)
    if n > 1:
        same = np.flatnonzero(pairs[:, 0] == pairs[:, 1])
        while same.size:
            pairs[same, 1] = rng.choice(n, size=same.size, p=probs)
            same = same[pairs[same, 0] == pairs[same, 1]]
    return pairs


def evolve_generation(population: list, evaluation: Evaluation, config: GAConfig,
                      problem: Problem, rng: np.random.Generator) -> tuple[list, Evaluation]:
    """One generational step: keep the elite, refill with offspring of ranked parents."""
    n = len(population)
    order = rank_order(evaluation.fitness)
    ranked = [population[i] for i in order]
    n_elite = config.elite_count
    elite_idx = order[::-1][:n_elite]
    need = n - n_elite
    pairs = _draw_pairs(math.ceil(need / 2), selection_probabilities(n, config.selection_pressure), rng)

    try:
        children = problem.breed([ranked[i] for i in pairs[:, 0]], [ranked[i] for i in pairs[:, 1]],
                                 pairs[:, 0] + 1, pairs[:, 1] + 1, rng)
    except HookError as exc:
        # report the population index of the failing pair's first parent
        raise HookError(str(exc.args[0]).rsplit(" (", 1)[0], int(order[pairs[exc.index, 0]])) from exc
    if len(children) > need:
        del children[len(children) - 2 + int(rng.integers(2))]

    try:
        child_eval = problem.evaluate(children)
    except Exception as exc:  # noqa: BLE001
        raise HookError(f"evaluate failed: {exc}", -1) from exc
    next_pop = [population[i] for i in elite_idx] + children
    return next_pop, Evaluation.concat([evaluation.take(elite_idx), child_eval])


def run_streams(seed) -> tuple[np.random.Generator, np.random.Generator, np.random.Generator]:
    """Independent (init, aux, evolve) generators for one run."""
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return tuple(
        np.random.default_rng(np.random.SeedSequence(seed.entropy, spawn_key=seed.spawn_key + (s,)))
        for s in (INIT_STREAM, AUX_STREAM, EVOLVE_STREAM)
    )


def run_ga(config: GAConfig, problem: Problem, seed, *, aux_seed=None, evolve_seed=None) -> RunResult:
    """Evolve until the best fitness stalls; report the best feasible solution ever seen.

    ``seed`` fixes every stream; ``aux_seed``/``evolve_seed`` optionally replace
    the auxiliary-gene and evolution streams while keeping the initial
    chromosomes.
    """
    start = time.perf_counter()
    init_rng, aux_rng, evolve_rng = run_streams(seed)
    if aux_seed is not None:
        aux_rng = run_streams(aux_seed)[1]
    if evolve_seed is not None:
        evolve_rng = run_streams(evolve_seed)[2]

    population = problem.initial_population(config.population_size, init_rng, aux_rng)
    evaluation = problem.evaluate(population)
    best_rent, best_layout = None, None
    trace: list[float] = []
    stats_trace: list[dict] = []

    def record(new_pop, new_eval, offset):
        nonlocal best_rent, best_layout
        feas = np.flatnonzero(new_eval.feasible[offset:]) + offset
        if feas.size:
            i = feas[np.argmax(new_eval.rent[feas])]
            if best_rent is None or new_eval.rent[i] > best_rent:
                best_rent = float(new_eval.rent[i])
                best_layout = [int(x) for x in problem.solution(new_pop[i])]
        trace.append(float(new_eval.fitness.max()))
        stats_trace.append(problem.describe(new_pop))

    record(population, evaluation, 0)
    while not has_converged(trace, config.stall_generations) and len(trace) < config.max_generations:
        population, evaluation = evolve_generation(population, evaluation, config, problem, evolve_rng)
        # elites were already recorded when they were first evaluated
        record(population, evaluation, config.elite_count)

    return RunResult(
        best_feasible_rent=best_rent,
        best_feasible_layout=best_layout,
        best_fitness_trace=trace,
        generations=len(trace),
        final_stats=stats_trace[-1],
        stats_trace=stats_trace,
        seconds=time.perf_counter() - start,
    )
