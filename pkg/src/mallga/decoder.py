"""Greedy decoder turning a permutation of locations into a layout.

Locations are filled in permutation order.  For each one, every shop type
that has not yet reached its maximum shop count is scored as

    w1*B_m + w2*B_l + w3*S + w4*I + w5*M + w6*G + fixed_rent[i, k]

and the first type with the highest score is placed.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numba
import numpy as np

from .model import LARGE, MAX_GROUP_SIZE, MEDIUM, SMALL, InvalidInputError, MallInstance


class DecoderWeights(NamedTuple):
    medium_bonus: float
    large_bonus: float
    size_slack: float
    ideal_count: float
    new_member: float
    group_complete: float

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=np.float64)


WEIGHT_PRESETS = {
    "low": DecoderWeights(500, 1000, 100, 200, 200, 2000),
    "medium": DecoderWeights(500, 1000, 250, 500, 200, 2000),
    "high": DecoderWeights(500, 1000, 1000, 2000, 200, 2000),
}


class ScoreTerms(NamedTuple):
    medium_bonus: int  # B_m
    large_bonus: int  # B_l
    size_slack: int  # S
    ideal_gap: int  # I
    new_member: int  # M
    complete_groups: int  # G
    fixed_rent: float

    def score(self, w: Sequence[float]) -> float:
        return (
            w[0] * self.medium_bonus + w[1] * self.large_bonus + w[2] * self.size_slack
            + w[3] * self.ideal_gap + w[4] * self.new_member + w[5] * self.complete_groups
            + self.fixed_rent
        )


@dataclass
class DecoderState:
    """Partial layout plus the running tallies the score needs."""

    layout: np.ndarray  # -1 where still empty
    locations_per_type_area: np.ndarray
    shops_per_type: np.ndarray
    size_tally: np.ndarray
    present_members: np.ndarray  # per (group, area): member types present

    @classmethod
    def empty(cls, inst: MallInstance) -> "DecoderState":
        return cls(
            layout=np.full(inst.num_locations, -1, np.int64),
            locations_per_type_area=np.zeros((inst.num_types, inst.num_areas), np.int64),
            shops_per_type=np.zeros(inst.num_types, np.int64),
            size_tally=np.zeros(3, np.int64),
            present_members=np.zeros((len(inst.group_size), inst.num_areas), np.int64),
        )

    def admissible(self, type_index: int, inst: MallInstance) -> bool:
        return bool(self.shops_per_type[type_index] < inst.type_max[type_index])

    def place(self, type_index: int, location: int, inst: MallInstance) -> None:
        if self.layout[location] != -1:
            raise InvalidInputError(f"location {location} is already filled")
        k = inst.area_of_location[location]
        n = self.locations_per_type_area[type_index, k]
        _apply(type_index, k, n, self.locations_per_type_area, self.shops_per_type,
               self.size_tally, self.present_members, inst.groups_of_type)
        self.layout[location] = type_index


def score_terms(type_index: int, location: int, state: DecoderState, inst: MallInstance) -> ScoreTerms:
    i = type_index
    k = inst.area_of_location[location]
    n = state.locations_per_type_area[i, k]
    created = (SMALL, MEDIUM, LARGE)[n % 3]
    new_shop = created == SMALL
    slack = inst.size_caps[created] - state.size_tally[created] - 1
    ideal_gap = inst.type_ideal[i] - (state.shops_per_type[i] + new_shop)
    new_member = 0
    complete = 0
    for g in inst.groups_of_type[i]:
        if g < 0:
            continue
        size = inst.group_size[g]
        here = state.present_members[g, k]
        if n == 0:
            new_member = max(new_member, MAX_GROUP_SIZE - size + here)
            here += 1
        complete += here == size
    return ScoreTerms(
        medium_bonus=int(created == MEDIUM),
        large_bonus=int(created == LARGE),
        size_slack=int(slack),
        ideal_gap=int(ideal_gap),
        new_member=int(new_member),
        complete_groups=int(complete),
        fixed_rent=float(inst.fixed_rent[i, k]),
    )


def score_candidate(type_index: int, location: int, state: DecoderState,
                    weights: Sequence[float], inst: MallInstance) -> float:
    if not state.admissible(type_index, inst):
        raise InvalidInputError(f"type {type_index} is already at its maximum shop count")
    return score_terms(type_index, location, state, inst).score(weights)


# ---------------------------------------------------------------- kernel


@numba.njit(cache=True, inline="always")
def _apply(i, k, n, counts, shops, tally, present, groups_of_type):
    r = n % 3
    if r == 0:
        tally[SMALL] += 1
        shops[i] += 1
    elif r == 1:
        tally[SMALL] -= 1
        tally[MEDIUM] += 1
    else:
        tally[MEDIUM] -= 1
        tally[LARGE] += 1
    if n == 0:
        for m in range(groups_of_type.shape[1]):
            g = groups_of_type[i, m]
            if g >= 0:
                present[g, k] += 1
    counts[i, k] = n + 1


@numba.njit(cache=True)
def _decode(perm, w, area_of, fixed, ideal, tmax, caps, group_size, groups_of_type):
    T, K = fixed.shape
    W = groups_of_type.shape[1]
    counts = np.zeros((T, K), np.int64)
    shops = np.zeros(T, np.int64)
    tally = np.zeros(3, np.int64)
    present = np.zeros((group_size.shape[0], K), np.int64)
    layout = np.empty(perm.shape[0], np.int64)
    for j in perm:
        k = area_of[j]
        choice = -1
        # second pass only when every type is at its maximum: then ignore the skip rule
        for attempt in range(2):
            ignore_max = attempt == 1
            best = -np.inf
            for i in range(T):
                if shops[i] >= tmax[i] and not ignore_max:
                    continue
                n = counts[i, k]
                r = n % 3
                s = fixed[i, k]
                if r == 0:
                    s += w[2] * (caps[SMALL] - tally[SMALL] - 1) + w[3] * (ideal[i] - shops[i] - 1)
                elif r == 1:
                    s += w[0] + w[2] * (caps[MEDIUM] - tally[MEDIUM] - 1) + w[3] * (ideal[i] - shops[i])
                else:
                    s += w[1] + w[2] * (caps[LARGE] - tally[LARGE] - 1) + w[3] * (ideal[i] - shops[i])
                best_m = 0
                complete = 0
                for slot in range(W):
                    g = groups_of_type[i, slot]
                    if g < 0:
                        continue
                    here = present[g, k]
                    if n == 0:
                        m = MAX_GROUP_SIZE - group_size[g] + here
                        if m > best_m:
                            best_m = m
                        here += 1
                    if here == group_size[g]:
                        complete += 1
                s += w[4] * best_m + w[5] * complete
                if s > best:
                    best = s
                    choice = i
            if choice >= 0:
                break
        _apply(choice, k, counts[choice, k], counts, shops, tally, present, groups_of_type)
        layout[j] = choice
    return layout, counts, shops, tally, present


@numba.njit(cache=True)
def _decode_many(perms, weights, area_of, fixed, ideal, tmax, caps, group_size, groups_of_type):
    out = np.empty(perms.shape, np.int64)
    for r in range(perms.shape[0]):
        out[r] = _decode(perms[r], weights[r], area_of, fixed, ideal, tmax, caps,
                         group_size, groups_of_type)[0]
    return out


def _kernel_args(inst: MallInstance) -> tuple:
    return (inst.area_of_location, inst.fixed_rent, inst.type_ideal, inst.type_max,
            inst.size_caps, inst.group_size, inst.groups_of_type)


def _check_perm(perm, n: int) -> np.ndarray:
    arr = np.asarray(perm, dtype=np.int64)
    if arr.shape != (n,) or not np.array_equal(np.sort(arr), np.arange(n)):
        raise InvalidInputError(f"expected a permutation of range({n})")
    return arr


def _check_weights(weights) -> np.ndarray:
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (6,) or not np.all(np.isfinite(w)):
        raise InvalidInputError("decoder needs six finite weights")
    return w


def decode_with_state(perm: Sequence[int], weights: Sequence[float],
                      inst: MallInstance) -> tuple[np.ndarray, DecoderState]:
    perm = _check_perm(perm, inst.num_locations)
    layout, counts, shops, tally, present = _decode(perm, _check_weights(weights), *_kernel_args(inst))
    return layout, DecoderState(layout.copy(), counts, shops, tally, present)


def decode(perm: Sequence[int], weights: Sequence[float], inst: MallInstance) -> np.ndarray:
    """Layout built by filling locations in ``perm`` order with the best-scoring type."""
    return decode_with_state(perm, weights, inst)[0]


def decode_many(perms: np.ndarray, weights: np.ndarray, inst: MallInstance) -> np.ndarray:
    """Decode a batch; ``weights`` is one row of six per permutation. Inputs are trusted."""
    perms = np.ascontiguousarray(perms, dtype=np.int64)
    weights = np.ascontiguousarray(np.broadcast_to(weights, (perms.shape[0], 6)), dtype=np.float64)
    return _decode_many(perms, weights, *_kernel_args(inst))
