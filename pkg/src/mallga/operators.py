"""Variation operators for layouts, permutations and the adaptive genes.

Every operator takes an explicit ``numpy.random.Generator``; given the same
generator state the result is identical.  Where a crossover is biased, the
first parent is the fitter one.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .model import InvalidInputError

MAX_MUTATION_RATE = 0.05
TAG_RERANDOMIZE_PROB = 0.015
GENE_REDRAW_PROB = 0.015


class CrossoverTag(IntEnum):
    C1 = 1
    PMX = 2
    PUX = 3


class WeightStrategy(IntEnum):
    RANDOM_PARENT = 1
    RANK_WEIGHTED = 2
    UNIFORM_BETWEEN = 3


@dataclass
class AuxGenes:
    """Self-adaptive genes carried next to the permutation."""

    weights: np.ndarray | None = None  # six decoder weights
    crossover_tag: CrossoverTag | None = None
    mutation_rate: float | None = None


def _check_pair(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape or a.ndim != 1:
        raise InvalidInputError("parents must be 1-D and of equal length")


def is_permutation(p: np.ndarray) -> bool:
    p = np.asarray(p)
    if p.ndim != 1:
        return False
    seen = np.zeros(p.size, bool)
    if p.size and (p.min() < 0 or p.max() >= p.size):
        return False
    seen[p] = True
    return bool(seen.all())


def _check_perms(a: np.ndarray, b: np.ndarray) -> None:
    _check_pair(a, b)
    if not (is_permutation(a) and is_permutation(b)):
        raise InvalidInputError("parents must be permutations of the same range")


# ---------------------------------------------------------------- layouts


def uniform_crossover(p: float, a: np.ndarray, b: np.ndarray, rng: np.random.Generator):
    """Parameterised uniform crossover; child1 takes each gene of ``a`` with probability ``p``.

    ``a`` and ``b`` may also be equally shaped 2-D batches (one pair per row).
    """
    if a.shape != b.shape or a.ndim not in (1, 2):
        raise InvalidInputError("parents must be equally shaped 1-D (or batched 2-D) arrays")
    if not 0.0 <= p <= 1.0:
        raise InvalidInputError("p must lie in [0, 1]")
    mask = rng.random(a.shape) < p
    return np.where(mask, a, b), np.where(mask, b, a)


def gene_mutation(rate: float, layout: np.ndarray, num_types: int, rng: np.random.Generator) -> np.ndarray:
    """Resample each gene uniformly over the types with probability ``rate`` (1-D or batched)."""
    hit = rng.random(layout.shape) < rate
    out = layout.copy()
    out[hit] = rng.integers(num_types, size=int(np.count_nonzero(hit)))
    return out


# ---------------------------------------------------------------- permutations


def _order_fill(keep: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Keep ``a`` where ``keep`` is set; the other entries of ``a`` follow ``b``'s order."""
    child = a.copy()
    pos_in_b = np.empty(b.size, np.int64)
    pos_in_b[b] = np.arange(b.size)
    free = ~keep
    moved = a[free]
    child[free] = moved[np.argsort(pos_in_b[moved], kind="stable")]
    return child


def pux_with_template(template: np.ndarray, a: np.ndarray, b: np.ndarray):
    template = np.asarray(template, bool)
    return _order_fill(template, a, b), _order_fill(template, b, a)


def pux(p: float, a: np.ndarray, b: np.ndarray, rng: np.random.Generator, check: bool = True):
    """Parameterised uniform order-based crossover (template bit set with probability ``p``)."""
    if check:
        _check_perms(a, b)
    return pux_with_template(rng.random(a.size) < p, a, b)


def c1_at(cut: int, a: np.ndarray, b: np.ndarray):
    if not 0 <= cut <= a.size:
        raise InvalidInputError("cut point out of range")
    keep = np.arange(a.size) < cut
    return _order_fill(keep, a, b), _order_fill(keep, b, a)


def c1(a: np.ndarray, b: np.ndarray, rng: np.random.Generator, check: bool = True):
    """One-point crossover: prefix of one parent, the rest in the other's order."""
    if check:
        _check_perms(a, b)
    cut = int(rng.integers(1, a.size)) if a.size > 1 else a.size
    return c1_at(cut, a, b)


def _pmx_child(seg_from: np.ndarray, rest_from: np.ndarray, lo: int, hi: int) -> np.ndarray:
    child = rest_from.copy()
    child[lo:hi] = seg_from[lo:hi]
    # value v from the segment displaced rest_from[pos]; follow the chain outward
    where_in_seg = np.full(child.size, -1, np.int64)
    where_in_seg[seg_from[lo:hi]] = np.arange(lo, hi)
    for pos in list(range(lo)) + list(range(hi, child.size)):
        v = rest_from[pos]
        while where_in_seg[v] >= 0:
            v = rest_from[where_in_seg[v]]
        child[pos] = v
    return child


def pmx_at(lo: int, hi: int, a: np.ndarray, b: np.ndarray):
    """PMX with the segment ``a[lo:hi]`` / ``b[lo:hi]`` exchanged."""
    if not 0 <= lo <= hi <= a.size:
        raise InvalidInputError("invalid PMX segment")
    return _pmx_child(a, b, lo, hi), _pmx_child(b, a, lo, hi)


def pmx(a: np.ndarray, b: np.ndarray, rng: np.random.Generator, check: bool = True):
    if check:
        _check_perms(a, b)
    lo, hi = np.sort(rng.choice(a.size + 1, size=2, replace=False))
    return pmx_at(int(lo), int(hi), a, b)


def swap_mutation(rate: float, perm: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Each position, with probability ``rate``, swaps with another random position."""
    out = perm.copy()
    n = out.size
    if n < 2:
        return out
    # a Binomial(n, rate) sized uniform subset of positions, taken in order, is
    # distributed exactly like independent per-position coin flips
    count = rng.binomial(n, rate)
    if count:
        hits = np.sort(rng.choice(n, size=count, replace=False))
        # partner drawn from the other n-1 positions
        partners = rng.integers(n - 1, size=count)
        partners += partners >= hits
        for i, j in zip(hits.tolist(), partners.tolist()):
            out[i], out[j] = out[j], out[i]
    return out


# ---------------------------------------------------------------- adaptive genes


def rank_weighted(x_a, x_b, rank_a: float, rank_b: float):
    """Rank-proportional convex combination; higher rank means fitter."""
    if rank_a <= 0 or rank_b <= 0:
        raise InvalidInputError("ranks must be positive")
    return (rank_a * np.asarray(x_a, float) + rank_b * np.asarray(x_b, float)) / (rank_a + rank_b)


def recombine_weights(strategy: WeightStrategy | int, wa: np.ndarray, wb: np.ndarray,
                      rank_a: float, rank_b: float, rng: np.random.Generator) -> np.ndarray:
    strategy = WeightStrategy(strategy)
    wa = np.asarray(wa, float)
    wb = np.asarray(wb, float)
    if strategy is WeightStrategy.RANDOM_PARENT:
        return (wa if rng.random() < 0.5 else wb).copy()
    if strategy is WeightStrategy.RANK_WEIGHTED:
        return rank_weighted(wa, wb, rank_a, rank_b)
    lo, hi = np.minimum(wa, wb), np.maximum(wa, wb)
    return lo + rng.random(lo.size) * (hi - lo)


def mutate_weights(weights: np.ndarray, limit: float, rng: np.random.Generator,
                   prob: float = GENE_REDRAW_PROB) -> np.ndarray:
    """Redraw each weight uniformly in ``[0, limit]`` with probability ``prob``."""
    hit = rng.random(weights.size) < prob
    out = weights.copy()
    out[hit] = rng.random(int(hit.sum())) * limit
    return out


def fitter_tag(tag_a: CrossoverTag, tag_b: CrossoverTag, rank_a: float, rank_b: float,
               rng: np.random.Generator) -> CrossoverTag:
    if rank_a == rank_b:
        return tag_a if rng.random() < 0.5 else tag_b
    return tag_a if rank_a > rank_b else tag_b


def inherit_tag_and_rate(tag_a: CrossoverTag, tag_b: CrossoverTag, rate_a: float, rate_b: float,
                         rank_a: float, rank_b: float, rng: np.random.Generator,
                         rerandomize: float = TAG_RERANDOMIZE_PROB) -> tuple[CrossoverTag, float]:
    """Child takes the fitter parent's tag and the rank-weighted mutation rate.

    With probability ``rerandomize`` the tag is then redrawn uniformly so
    that operators lost from the population can come back.
    """
    tag = fitter_tag(tag_a, tag_b, rank_a, rank_b, rng)
    if rng.random() < rerandomize:
        tag = random_tag(rng)
    return tag, float(rank_weighted(rate_a, rate_b, rank_a, rank_b))


def random_tag(rng: np.random.Generator) -> CrossoverTag:
    return CrossoverTag(int(rng.integers(1, 4)))


# unchecked entry points for the GA loop, keyed by tag
PERMUTATION_CROSSOVERS = {
    CrossoverTag.C1: lambda a, b, rng, p: c1(a, b, rng, check=False),
    CrossoverTag.PMX: lambda a, b, rng, p: pmx(a, b, rng, check=False),
    CrossoverTag.PUX: lambda a, b, rng, p: pux(p, a, b, rng, check=False),
}
