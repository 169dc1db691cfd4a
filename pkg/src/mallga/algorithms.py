"""The direct and indirect GA configurations, packaged as engine hooks."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import operators as ops
from .decoder import WEIGHT_PRESETS, DecoderWeights, decode, decode_many
from .engine import Evaluation, GAConfig, Problem
from .model import InvalidInputError, MallInstance, evaluate_layouts
from .operators import AuxGenes, CrossoverTag, WeightStrategy

CROSSOVER_P = 0.66
MUTATION_RATE = 0.015
PENALTY_WEIGHT = 20.0
DEFAULT_WEIGHT_LIMIT = 10000.0
# Added to the aux/evolve seeds of runs whose weight limit is not the default.
ALT_STREAM_OFFSET = 1_000_003

VARIANT_NAMES = (
    "direct", "ind-low", "ind-med", "ind-high",
    "ind-auto", "ind-auto-cross", "ind-auto-cross-mut",
)
_PRESET_OF = {"ind-low": "low", "ind-med": "medium", "ind-high": "high"}


@dataclass(frozen=True)
class Variant:
    """An algorithm configuration; ``label`` round-trips through :meth:`parse`.

    Labels look like ``ind-auto``, ``ind-auto@50000`` (weight initialisation
    limit) or ``ind-auto:s3`` (weight recombination strategy).
    """

    name: str
    weight_limit: float = DEFAULT_WEIGHT_LIMIT
    weight_strategy: WeightStrategy = WeightStrategy.RANK_WEIGHTED

    def __post_init__(self):
        if self.name not in VARIANT_NAMES:
            raise InvalidInputError(f"unknown algorithm {self.name!r}; choose from {', '.join(VARIANT_NAMES)}")
        if self.weight_limit <= 0:
            raise InvalidInputError("weight limit must be positive")
        object.__setattr__(self, "weight_strategy", WeightStrategy(self.weight_strategy))

    @classmethod
    def parse(cls, text: str) -> "Variant":
        name, strategy, limit = text, WeightStrategy.RANK_WEIGHTED, DEFAULT_WEIGHT_LIMIT
        if ":s" in name:
            name, s = name.split(":s", 1)
            strategy = WeightStrategy(int(s))
        if "@" in name:
            name, lim = name.split("@", 1)
            limit = float(lim)
        return cls(name, limit, strategy)

    @property
    def label(self) -> str:
        text = self.name
        if self.weight_limit != DEFAULT_WEIGHT_LIMIT:
            text += f"@{self.weight_limit:g}"
        if self.weight_strategy is not WeightStrategy.RANK_WEIGHTED:
            text += f":s{int(self.weight_strategy)}"
        return text

    @property
    def direct(self) -> bool:
        return self.name == "direct"

    @property
    def adaptive_weights(self) -> bool:
        return self.name.startswith("ind-auto")

    @property
    def adaptive_crossover(self) -> bool:
        return self.name.startswith("ind-auto-cross")

    @property
    def adaptive_mutation(self) -> bool:
        return self.name == "ind-auto-cross-mut"

    @property
    def fixed_weights(self) -> DecoderWeights | None:
        preset = _PRESET_OF.get(self.name)
        return WEIGHT_PRESETS[preset] if preset else None

    @property
    def stream_offset(self) -> int:
        return 0 if self.weight_limit == DEFAULT_WEIGHT_LIMIT else ALT_STREAM_OFFSET


def initial_keys(size: int, num_locations: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform random keys shared by every encoding (row r seeds individual r)."""
    return rng.random((size, num_locations))


# ---------------------------------------------------------------- direct


class DirectProblem(Problem):
    """One gene per location holding its shop type; penalised fitness."""

    def __init__(self, inst: MallInstance, penalty_weight: float = PENALTY_WEIGHT,
                 crossover_p: float = CROSSOVER_P, mutation_rate: float = MUTATION_RATE):
        self.inst = inst
        self.penalty_weight = penalty_weight
        self.crossover_p = crossover_p
        self.mutation_rate = mutation_rate

    def initial_population(self, size, init_rng, aux_rng):
        keys = initial_keys(size, self.inst.num_locations, init_rng)
        layouts = np.minimum((keys * self.inst.num_types).astype(np.int64), self.inst.num_types - 1)
        return list(layouts)

    def evaluate(self, population):
        rent, violation = evaluate_layouts(np.stack(population), self.inst)
        return Evaluation(rent - self.penalty_weight * violation, rent, violation == 0)

    def mate(self, a, b, rank_a, rank_b, rng):
        if rank_b > rank_a:
            a, b = b, a
        kids = ops.uniform_crossover(self.crossover_p, a, b, rng)
        return tuple(ops.gene_mutation(self.mutation_rate, k, self.inst.num_types, rng) for k in kids)

    def breed(self, mothers, fathers, ranks_m, ranks_f, rng):
        # same operators as mate(), applied to all pairs at once
        a, b = np.stack(mothers), np.stack(fathers)
        swap = (np.asarray(ranks_f) > np.asarray(ranks_m))[:, None]
        fit, other = np.where(swap, b, a), np.where(swap, a, b)
        kids = np.stack(ops.uniform_crossover(self.crossover_p, fit, other, rng), axis=1)
        kids = ops.gene_mutation(self.mutation_rate, kids.reshape(-1, a.shape[1]), self.inst.num_types, rng)
        return list(kids)


# ---------------------------------------------------------------- indirect


@dataclass
class IndirectChromosome:
    perm: np.ndarray
    aux: AuxGenes


class IndirectProblem(Problem):
    """Permutation of locations decoded greedily; optional self-adaptive genes."""

    def __init__(self, inst: MallInstance, variant: Variant, penalty_weight: float = PENALTY_WEIGHT,
                 crossover_p: float = CROSSOVER_P, mutation_rate: float = MUTATION_RATE):
        if variant.direct:
            raise InvalidInputError("IndirectProblem needs an indirect variant")
        self.inst = inst
        self.variant = variant
        self.penalty_weight = penalty_weight
        self.crossover_p = crossover_p
        self.mutation_rate = mutation_rate
        fixed = variant.fixed_weights
        self._fixed = None if fixed is None else fixed.as_array()

    def weights_in_effect(self, chrom: IndirectChromosome) -> np.ndarray:
        return chrom.aux.weights if self.variant.adaptive_weights else self._fixed

    def initial_population(self, size, init_rng, aux_rng):
        perms = np.argsort(initial_keys(size, self.inst.num_locations, init_rng), axis=1)
        v = self.variant
        pop = []
        for perm in perms:
            aux = AuxGenes()
            if v.adaptive_weights:
                aux.weights = aux_rng.random(6) * v.weight_limit
            if v.adaptive_crossover:
                aux.crossover_tag = ops.random_tag(aux_rng)
            if v.adaptive_mutation:
                aux.mutation_rate = float(aux_rng.random() * ops.MAX_MUTATION_RATE)
            pop.append(IndirectChromosome(perm, aux))
        return pop

    def layouts(self, population: Sequence[IndirectChromosome]) -> np.ndarray:
        perms = np.stack([c.perm for c in population])
        weights = np.stack([self.weights_in_effect(c) for c in population])
        return decode_many(perms, weights, self.inst)

    def evaluate(self, population):
        rent, violation = evaluate_layouts(self.layouts(population), self.inst)
        return Evaluation(rent - self.penalty_weight * violation, rent, violation == 0)

    def solution(self, individual):
        return decode(individual.perm, self.weights_in_effect(individual), self.inst)

    def mate(self, a, b, rank_a, rank_b, rng):
        if rank_b > rank_a:
            a, b, rank_a, rank_b = b, a, rank_b, rank_a
        v = self.variant
        tag = CrossoverTag.PUX
        if v.adaptive_crossover:
            tag = ops.fitter_tag(a.aux.crossover_tag, b.aux.crossover_tag, rank_a, rank_b, rng)
        perms = ops.PERMUTATION_CROSSOVERS[tag](a.perm, b.perm, rng, self.crossover_p)

        kids = []
        for perm in perms:
            aux = AuxGenes()
            if v.adaptive_weights:
                w = ops.recombine_weights(v.weight_strategy, a.aux.weights, b.aux.weights, rank_a, rank_b, rng)
                aux.weights = ops.mutate_weights(w, v.weight_limit, rng)
            if v.adaptive_crossover:
                aux.crossover_tag = tag
                if rng.random() < ops.TAG_RERANDOMIZE_PROB:
                    aux.crossover_tag = ops.random_tag(rng)
            rate = self.mutation_rate
            if v.adaptive_mutation:
                rate = float(ops.rank_weighted(a.aux.mutation_rate, b.aux.mutation_rate, rank_a, rank_b))
                if rng.random() < ops.GENE_REDRAW_PROB:
                    rate = float(rng.random() * ops.MAX_MUTATION_RATE)
                aux.mutation_rate = rate
            kids.append(IndirectChromosome(ops.swap_mutation(rate, perm, rng), aux))
        return tuple(kids)

    def describe(self, population):
        v = self.variant
        stats = {}
        if v.adaptive_weights:
            stats["mean_weights"] = np.mean([c.aux.weights for c in population], axis=0).tolist()
        if v.adaptive_crossover:
            tags = np.array([int(c.aux.crossover_tag) for c in population])
            stats["tag_shares"] = {t.name: float(np.mean(tags == t)) for t in CrossoverTag}
        if v.adaptive_mutation:
            stats["mean_mutation_rate"] = float(np.mean([c.aux.mutation_rate for c in population]))
        return stats


# ---------------------------------------------------------------- assembly


def build_config(variant: Variant | str, inst: MallInstance,
                 population_size: int | None = None, **overrides) -> tuple[GAConfig, Problem]:
    """Engine settings and hooks for ``variant`` (population 1000 direct, 100 indirect)."""
    if isinstance(variant, str):
        variant = Variant.parse(variant)
    if population_size is None:
        population_size = 1000 if variant.direct else 100
    config = replace(GAConfig(population_size=population_size, penalty_weight=PENALTY_WEIGHT), **overrides)
    if variant.direct:
        problem: Problem = DirectProblem(inst, config.penalty_weight)
    else:
        problem = IndirectProblem(inst, variant, config.penalty_weight)
    return config, problem


def evaluate_chromosome(variant: Variant | str, chromosome, inst: MallInstance,
                        penalty_weight: float = PENALTY_WEIGHT) -> tuple[float, bool, float]:
    """(fitness, feasible, rent) of one chromosome under ``variant``."""
    if isinstance(variant, str):
        variant = Variant.parse(variant)
    if variant.direct:
        problem: Problem = DirectProblem(inst, penalty_weight)
    else:
        problem = IndirectProblem(inst, variant, penalty_weight)
    ev = problem.evaluate([chromosome])
    return float(ev.fitness[0]), bool(ev.feasible[0]), float(ev.rent[0])
