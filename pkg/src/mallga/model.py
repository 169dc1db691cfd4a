"""Mall layout problem data, rent objective, constraints and fitness.

Index convention: ``i`` is a shop type, ``j`` a location, ``k`` an area.
A layout is a 1-D integer array holding the shop type of every location.
Shops are formed per (type, area): ``n`` locations of one type inside one
area become ``n // 3`` large shops plus one medium (remainder 2) or one
small (remainder 1) shop.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numba
import numpy as np

SMALL, MEDIUM, LARGE = 0, 1, 2
SIZE_NAMES = ("small", "medium", "large")
# Rent multiplier per shop size; per-location yield must grow with size.
SIZE_FACTOR = np.array([1.0, 2.25, 3.6])
# Count factor applied when a type's shop count lies outside [min, max].
OUTSIDE_COUNT_FACTOR = 0.25
MAX_GROUP_SIZE = 10


class InvalidInputError(ValueError):
    """Raised when data handed to the model is inconsistent."""


def _frozen(a, dtype) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class MallInstance:
    """Immutable problem data for one mall instance."""

    area_of_location: np.ndarray
    area_attractiveness: np.ndarray
    type_min: np.ndarray
    type_ideal: np.ndarray
    type_max: np.ndarray
    type_sales_rate: np.ndarray
    fixed_rent: np.ndarray
    groups: tuple[tuple[int, ...], ...]
    max_small: int
    max_medium: int
    max_large: int
    synergy_multiplier: float = 0.2
    count_factor_floor: float = 0.8
    name: str = ""
    # derived, padded tables for the compiled kernels
    group_members: np.ndarray = field(init=False, repr=False)
    group_size: np.ndarray = field(init=False, repr=False)
    groups_of_type: np.ndarray = field(init=False, repr=False)
    size_caps: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)
        set_("area_of_location", _frozen(self.area_of_location, np.int64))
        set_("area_attractiveness", _frozen(self.area_attractiveness, np.float64))
        for name in ("type_min", "type_ideal", "type_max"):
            set_(name, _frozen(getattr(self, name), np.int64))
        set_("type_sales_rate", _frozen(self.type_sales_rate, np.float64))
        set_("fixed_rent", _frozen(self.fixed_rent, np.float64))
        set_("groups", tuple(tuple(int(t) for t in g) for g in self.groups))
        for name in ("max_small", "max_medium", "max_large"):
            set_(name, int(getattr(self, name)))
        set_("synergy_multiplier", float(self.synergy_multiplier))
        set_("count_factor_floor", float(self.count_factor_floor))
        self._validate()

        T = self.num_types
        members = np.full((max(1, len(self.groups)), MAX_GROUP_SIZE), -1, np.int64)
        sizes = np.zeros(max(1, len(self.groups)), np.int64)
        memberships: list[list[int]] = [[] for _ in range(T)]
        for g, grp in enumerate(self.groups):
            members[g, : len(grp)] = grp
            sizes[g] = len(grp)
            for t in grp:
                memberships[t].append(g)
        width = max(1, max((len(m) for m in memberships), default=1))
        got = np.full((T, width), -1, np.int64)
        for t, m in enumerate(memberships):
            got[t, : len(m)] = m
        set_("group_members", _frozen(members, np.int64))
        set_("group_size", _frozen(sizes, np.int64))
        set_("groups_of_type", _frozen(got, np.int64))
        set_("size_caps", _frozen([self.max_small, self.max_medium, self.max_large], np.int64))

    def _validate(self) -> None:
        T = len(self.type_min)
        K = len(self.area_attractiveness)
        if len(self.area_of_location) == 0 or T == 0 or K == 0:
            raise InvalidInputError("instance needs at least one location, type and area")
        if np.any(self.area_of_location < 0) or np.any(self.area_of_location >= K):
            raise InvalidInputError("area_of_location refers to an unknown area")
        for name in ("type_ideal", "type_max", "type_sales_rate"):
            if len(getattr(self, name)) != T:
                raise InvalidInputError(f"{name} must have one entry per type")
        if self.fixed_rent.shape != (T, K):
            raise InvalidInputError(f"fixed_rent must have shape ({T}, {K})")
        bad = np.flatnonzero(
            (self.type_min < 1) | (self.type_min > self.type_ideal) | (self.type_ideal > self.type_max)
        )
        if bad.size:
            raise InvalidInputError(f"type {bad[0]} violates 1 <= min <= ideal <= max")
        for arr, name in (
            (self.area_attractiveness, "area_attractiveness"),
            (self.type_sales_rate, "type_sales_rate"),
            (self.fixed_rent, "fixed_rent"),
        ):
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise InvalidInputError(f"{name} must be finite and non-negative")
        for g, grp in enumerate(self.groups):
            if not 1 <= len(grp) <= MAX_GROUP_SIZE:
                raise InvalidInputError(f"group {g} has {len(grp)} members (allowed 1..{MAX_GROUP_SIZE})")
            if len(set(grp)) != len(grp) or min(grp) < 0 or max(grp) >= T:
                raise InvalidInputError(f"group {g} has invalid members")
        if 3 * int(self.type_max.sum()) < self.num_locations:
            raise InvalidInputError("sum of 3*max over types is below the number of locations")
        if min(self.max_small, self.max_medium, self.max_large) < 0:
            raise InvalidInputError("size caps must be non-negative")
        if self.synergy_multiplier < 0:
            raise InvalidInputError("synergy multiplier must be >= 0")
        if not 0 < self.count_factor_floor <= 1:
            raise InvalidInputError("count factor floor must lie in (0, 1]")

    @property
    def num_locations(self) -> int:
        return len(self.area_of_location)

    @property
    def num_areas(self) -> int:
        return len(self.area_attractiveness)

    @property
    def num_types(self) -> int:
        return len(self.type_min)

    def area_sizes(self) -> np.ndarray:
        return np.bincount(self.area_of_location, minlength=self.num_areas)

    def __eq__(self, other):
        if not isinstance(other, MallInstance):
            return NotImplemented
        arrays = (
            "area_of_location", "area_attractiveness", "type_min", "type_ideal",
            "type_max", "type_sales_rate", "fixed_rent",
        )
        scalars = (
            "groups", "max_small", "max_medium", "max_large",
            "synergy_multiplier", "count_factor_floor", "name",
        )
        return all(np.array_equal(getattr(self, a), getattr(other, a)) for a in arrays) and all(
            getattr(self, s) == getattr(other, s) for s in scalars
        )

    __hash__ = None


class SizeCounts(NamedTuple):
    small: int
    medium: int
    large: int


class DerivedCounts(NamedTuple):
    locations_per_type_area: np.ndarray  # n_ik, shape (T, K)
    shops_per_type: np.ndarray  # N_i
    size_tally: np.ndarray  # (small, medium, large) mall-wide


class ViolationReport(NamedTuple):
    per_type_violation: np.ndarray
    size_violation: np.ndarray  # excess over (max_small, max_medium, max_large)
    total: int

    @property
    def feasible(self) -> bool:
        return self.total == 0


def decompose_sizes(n: int) -> SizeCounts:
    """Split ``n`` same-type locations of one area into shops, largest first.

    >>> decompose_sizes(5)
    SizeCounts(small=0, medium=1, large=1)
    """
    if n < 0:
        raise InvalidInputError("location count must be non-negative")
    large, rest = divmod(int(n), 3)
    return SizeCounts(small=int(rest == 1), medium=int(rest == 2), large=large)


def as_layout(layout: Sequence[int], inst: MallInstance) -> np.ndarray:
    arr = np.asarray(layout)
    if arr.ndim != 1 or arr.shape[0] != inst.num_locations:
        raise InvalidInputError(
            f"layout must have {inst.num_locations} entries, got shape {arr.shape}"
        )
    if arr.size and (arr.min() < 0 or arr.max() >= inst.num_types):
        raise InvalidInputError("layout contains an unknown shop type")
    return arr.astype(np.int64, copy=False)


# ---------------------------------------------------------------- kernels


@numba.njit(cache=True)
def _count_factor(N, lo, ideal, hi, floor):
    if N < lo or N > hi:
        return OUTSIDE_COUNT_FACTOR
    if N <= ideal:
        if ideal == lo:
            return 1.0
        return floor + (1.0 - floor) * (N - lo) / (ideal - lo)
    if hi == ideal:
        return 1.0
    return floor + (1.0 - floor) * (hi - N) / (hi - ideal)


@numba.njit(cache=True)
def _tally(layout, area_of, T, K):
    n = np.zeros((T, K), np.int64)
    for j in range(layout.shape[0]):
        n[layout[j], area_of[j]] += 1
    shops = np.zeros(T, np.int64)
    sizes = np.zeros(3, np.int64)
    for i in range(T):
        for k in range(K):
            large = n[i, k] // 3
            rest = n[i, k] - 3 * large
            sizes[LARGE] += large
            shops[i] += large
            if rest == 1:
                sizes[SMALL] += 1
                shops[i] += 1
            elif rest == 2:
                sizes[MEDIUM] += 1
                shops[i] += 1
    return n, shops, sizes


@numba.njit(cache=True)
def _complete_in_area(n, group_members, group_size, T, K):
    """complete[i, k] = 1 if some group containing i has every member in area k."""
    complete = np.zeros((T, K), np.int64)
    for g in range(group_size.shape[0]):
        size = group_size[g]
        if size == 0:
            continue
        for k in range(K):
            ok = True
            for m in range(size):
                if n[group_members[g, m], k] == 0:
                    ok = False
                    break
            if ok:
                for m in range(size):
                    complete[group_members[g, m], k] = 1
    return complete


@numba.njit(cache=True)
def _evaluate(layout, area_of, attract, tmin, tideal, tmax, rate, fixed,
              group_members, group_size, caps, delta, floor, size_factor):
    T = tmin.shape[0]
    K = attract.shape[0]
    n, shops, sizes = _tally(layout, area_of, T, K)
    complete = _complete_in_area(n, group_members, group_size, T, K)
    rent = 0.0
    for i in range(T):
        gamma = _count_factor(shops[i], tmin[i], tideal[i], tmax[i], floor)
        for k in range(K):
            if n[i, k] == 0:
                continue
            large = n[i, k] // 3
            rest = n[i, k] - 3 * large
            sales = rate[i] * attract[k] * gamma * (1.0 + delta * complete[i, k])
            rent += large * (fixed[i, k] + sales * size_factor[LARGE])
            if rest == 1:
                rent += fixed[i, k] + sales * size_factor[SMALL]
            elif rest == 2:
                rent += fixed[i, k] + sales * size_factor[MEDIUM]
    violation = 0
    for i in range(T):
        if shops[i] < tmin[i]:
            violation += tmin[i] - shops[i]
        if shops[i] > tmax[i]:
            violation += shops[i] - tmax[i]
    for s in range(3):
        if sizes[s] > caps[s]:
            violation += sizes[s] - caps[s]
    return rent, violation


@numba.njit(cache=True)
def _evaluate_many(layouts, area_of, attract, tmin, tideal, tmax, rate, fixed,
                   group_members, group_size, caps, delta, floor, size_factor):
    m = layouts.shape[0]
    rents = np.empty(m)
    violations = np.empty(m, np.int64)
    for r in range(m):
        rents[r], violations[r] = _evaluate(
            layouts[r], area_of, attract, tmin, tideal, tmax, rate, fixed,
            group_members, group_size, caps, delta, floor, size_factor,
        )
    return rents, violations


def _kernel_args(inst: MallInstance) -> tuple:
    return (
        inst.area_of_location, inst.area_attractiveness, inst.type_min, inst.type_ideal,
        inst.type_max, inst.type_sales_rate, inst.fixed_rent, inst.group_members,
        inst.group_size, inst.size_caps, inst.synergy_multiplier, inst.count_factor_floor,
        SIZE_FACTOR,
    )


# ---------------------------------------------------------------- public API


def derive_counts(layout: Sequence[int], inst: MallInstance) -> DerivedCounts:
    arr = as_layout(layout, inst)
    n, shops, sizes = _tally(arr, inst.area_of_location, inst.num_types, inst.num_areas)
    return DerivedCounts(n, shops, sizes)


def count_factor(inst: MallInstance, type_index: int, shops: int) -> float:
    """Rent multiplier for a type given its mall-wide shop count (1.0 at ideal)."""
    i = type_index
    return float(_count_factor(shops, inst.type_min[i], inst.type_ideal[i],
                               inst.type_max[i], inst.count_factor_floor))


def compute_rent(layout: Sequence[int], inst: MallInstance) -> float:
    """Total rent of a layout, in thousands of pounds.

    Each shop pays ``f_ik + rate_i * attract_k * size_factor * count_factor_i *
    (1 + synergy)``, where the synergy bonus applies when some group of the
    type has every member present in the shop's area.
    """
    arr = as_layout(layout, inst)
    return float(_evaluate(arr, *_kernel_args(inst))[0])


def assess_constraints(layout: Sequence[int], inst: MallInstance) -> ViolationReport:
    counts = derive_counts(layout, inst)
    N = counts.shops_per_type
    per_type = np.maximum(0, inst.type_min - N) + np.maximum(0, N - inst.type_max)
    size = np.maximum(0, counts.size_tally - inst.size_caps)
    return ViolationReport(per_type, size, int(per_type.sum() + size.sum()))


def fitness(layout: Sequence[int], inst: MallInstance, penalty_weight: float) -> float:
    """Raw fitness: rent minus ``penalty_weight`` times the summed violations."""
    if penalty_weight < 0:
        raise InvalidInputError("penalty weight must be non-negative")
    arr = as_layout(layout, inst)
    rent, violation = _evaluate(arr, *_kernel_args(inst))
    return float(rent - penalty_weight * violation)


def evaluate_layouts(layouts: np.ndarray, inst: MallInstance) -> tuple[np.ndarray, np.ndarray]:
    """Rent and total violation for every row of a 2-D layout array."""
    layouts = np.ascontiguousarray(layouts, dtype=np.int64)
    if layouts.ndim != 2 or layouts.shape[1] != inst.num_locations:
        raise InvalidInputError("expected a (count, num_locations) layout array")
    return _evaluate_many(layouts, *_kernel_args(inst))


def best_shop_values(inst: MallInstance) -> np.ndarray:
    """Highest rent any single shop of each size could earn (ideal count, group complete)."""
    sales = inst.type_sales_rate[:, None] * inst.area_attractiveness[None, :]
    boost = 1.0 + inst.synergy_multiplier
    return np.array([(inst.fixed_rent + sales * f * boost).max() for f in SIZE_FACTOR])


def upper_bound(inst: MallInstance) -> float:
    """Optimistic rent bound: every shop priced at the best (type, area) for its size.

    The locations are split into large, medium and small shops in whichever
    proportion maximises the bound; when a large shop earns the most per
    location this is ``n // 3`` large shops plus the remainder.
    """
    v_small, v_medium, v_large = best_shop_values(inst)
    n = inst.num_locations
    best = 0.0
    for large in range(n // 3 + 1):
        for medium in range((n - 3 * large) // 2 + 1):
            small = n - 3 * large - 2 * medium
            best = max(best, large * v_large + medium * v_medium + small * v_small)
    return float(best)


def enumerate_layouts(inst: MallInstance, max_layouts: int = 100_000) -> np.ndarray:
    """Every layout of a small instance, one per row, in lexicographic order."""
    total = inst.num_types ** inst.num_locations
    if total > max_layouts:
        raise InvalidInputError(f"{total} layouts exceed the enumeration limit of {max_layouts}")
    grids = np.indices((inst.num_types,) * inst.num_locations)
    return grids.reshape(inst.num_locations, -1).T.astype(np.int64)


def brute_force_optimum(inst: MallInstance) -> tuple[float | None, np.ndarray | None]:
    """Best feasible rent and a layout attaining it; (None, None) if nothing is feasible."""
    layouts = enumerate_layouts(inst)
    rent, violation = evaluate_layouts(layouts, inst)
    feasible = np.flatnonzero(violation == 0)
    if feasible.size == 0:
        return None, None
    best = feasible[np.argmax(rent[feasible])]
    return float(rent[best]), layouts[best]
