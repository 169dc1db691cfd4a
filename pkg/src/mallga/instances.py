"""Seeded generation of the five instance sets and the instance file format.

Sets 4-7 share all base data for a given instance index (types, rates,
fixed rents, groups, ideal counts) and differ only in constraint tightness.
A tight type has a narrow shop-count window (min raised to ideal), and the
mall-wide size caps shrink from set 4 to set 7.  Set 3 has 50 shop types.
The distributions below are invented stand-ins, tuned so the upper bound
sits near 2640 on 100 locations and every set stays solvable.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .decoder import WEIGHT_PRESETS, DecoderWeights, decode_many
from .model import MAX_GROUP_SIZE, InvalidInputError, MallInstance, evaluate_layouts

SET_IDS = (3, 4, 5, 6, 7)
NUM_LOCATIONS = 100
NUM_AREAS = 5
TYPES_PER_SET = {3: 50, 4: 20, 5: 20, 6: 20, 7: 20}
# (small, medium, large) shop caps
SIZE_CAPS = {3: (100, 60, 40), 4: (100, 60, 40), 5: (60, 35, 28), 6: (50, 30, 24), 7: (42, 26, 20)}
# share of shop types with a tight count window
TIGHT_SHARE = {3: 0.0, 4: 0.0, 5: 0.5, 6: 0.75, 7: 1.0}
# max_i - ideal_i: fixed for tight types, drawn from a range (keyed by type count) for slack ones
TIGHT_MAX_EXTRA = 2
SLACK_MAX_EXTRA = {20: (0, 2), 50: (1, 3)}
# ideal_i - min_i, before clipping min_i at 1
TIGHT_MIN_GAP = 0
SLACK_MIN_GAP = 2

ATTRACT_RANGE = (0.98, 1.02)
SALES_RATE_RANGE = (16.8, 17.7)
FIXED_RENT_SHARE = 0.1  # fixed rent ~ share * rate * attractiveness
FIXED_RENT_JITTER = (0.8, 1.2)
IDEAL_RANGE = {20: (1, 3), 50: (1, 2)}
# share of types left out of every group
UNGROUPED_SHARE = {20: 0.0, 50: 0.0}
GROUP_SIZE_CHOICES = {20: (6, 7, 8), 50: (5,)}
# chance that a grouped type also joins a second group
OVERLAP_PROB = {20: 0.2, 50: 0.0}
SYNERGY = 0.2
COUNT_FACTOR_FLOOR = 0.8
FEASIBILITY_PROBES = 60


@dataclass(frozen=True)
class GeneratorSpec:
    set_id: int
    instance_index: int
    master_seed: int = 42

    def __post_init__(self):
        if self.set_id not in SET_IDS:
            raise InvalidInputError(f"set_id must be one of {SET_IDS}, got {self.set_id}")
        if not 0 <= self.instance_index <= 9:
            raise InvalidInputError("instance_index must lie in 0..9")

    @property
    def name(self) -> str:
        return f"set{self.set_id}_{self.instance_index:02d}"


def _rng(*key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([k & (2**64 - 1) for k in key]))


def _groups(num_types: int, rng: np.random.Generator) -> list[list[int]]:
    """Small overlapping groups of 3-10 types; every type sits in at most two."""
    order = rng.permutation(num_types)
    ungrouped = round(UNGROUPED_SHARE[num_types] * num_types)
    pool = list(order[ungrouped:])
    groups: list[list[int]] = []
    while len(pool) >= 3:
        size = min(len(pool), int(rng.choice(GROUP_SIZE_CHOICES[num_types])))
        if len(pool) - size < 3:
            size = len(pool) if len(pool) <= MAX_GROUP_SIZE else size
        groups.append(sorted(int(t) for t in pool[:size]))
        pool = pool[size:]
    if pool:
        rest = [int(t) for t in pool]
        if len(groups[-1]) + len(rest) <= MAX_GROUP_SIZE:
            groups[-1] = sorted(groups[-1] + rest)
        else:
            # too many to merge: borrow from the last group to reach three members
            need = 3 - len(rest)
            groups.append(sorted(rest + groups[-1][-need:]))
            groups[-2] = groups[-2][:-need]
    # overlap: some grouped types also join a second group
    memberships = {t: sum(t in g for g in groups) for g in groups for t in g}
    for t in rng.permutation(sorted(memberships)):
        if rng.random() < OVERLAP_PROB[num_types] and len(groups) > 1 and memberships[t] < 2:
            g = int(rng.integers(len(groups)))
            if t not in groups[g] and len(groups[g]) < MAX_GROUP_SIZE:
                groups[g] = sorted(groups[g] + [int(t)])
                memberships[t] += 1
    return groups


def _base(num_types: int, rng: np.random.Generator) -> dict:
    attract = rng.uniform(*ATTRACT_RANGE, size=NUM_AREAS)
    rate = rng.uniform(*SALES_RATE_RANGE, size=num_types)
    fixed = FIXED_RENT_SHARE * rate[:, None] * attract[None, :] * rng.uniform(
        *FIXED_RENT_JITTER, size=(num_types, NUM_AREAS))
    lo, hi = IDEAL_RANGE[num_types]
    ideal = rng.integers(lo, hi + 1, size=num_types)
    return dict(attract=attract, rate=rate, fixed=np.round(fixed, 3), ideal=ideal,
                groups=_groups(num_types, rng))


def _bounds(ideal: np.ndarray, tight_share: float, rng: np.random.Generator):
    T = ideal.size
    tight = np.zeros(T, bool)
    tight[rng.permutation(T)[: round(tight_share * T)]] = True
    lo = np.maximum(1, ideal - np.where(tight, TIGHT_MIN_GAP, SLACK_MIN_GAP))
    extra_lo, extra_hi = SLACK_MAX_EXTRA[T]
    hi = np.where(tight, ideal + TIGHT_MAX_EXTRA, ideal + rng.integers(extra_lo, extra_hi + 1, size=T))
    return lo, hi


def _probe_feasible(inst: MallInstance, rng: np.random.Generator) -> bool:
    perms = np.argsort(rng.random((FEASIBILITY_PROBES, inst.num_locations)), axis=1)
    presets = [WEIGHT_PRESETS["high"], WEIGHT_PRESETS["medium"], DecoderWeights(500, 1000, 2000, 4000, 200, 500)]
    for w in presets:
        layouts = decode_many(perms, w.as_array(), inst)
        if np.any(evaluate_layouts(layouts, inst)[1] == 0):
            return True
    return False


def generate_instance(spec: GeneratorSpec) -> MallInstance:
    """Deterministic instance for (set, index, seed); bounds are relaxed until a probe finds a feasible layout."""
    T = TYPES_PER_SET[spec.set_id]
    base_key = (spec.master_seed, 3 if T == 50 else 4, spec.instance_index)
    base = _base(T, _rng(*base_key, 0))
    lo, hi = _bounds(base["ideal"], TIGHT_SHARE[spec.set_id], _rng(*base_key, spec.set_id, 1))
    caps = list(SIZE_CAPS[spec.set_id])
    relax = _rng(*base_key, spec.set_id, 2)
    area = np.repeat(np.arange(NUM_AREAS), NUM_LOCATIONS // NUM_AREAS)

    while True:
        if 3 * hi.sum() < NUM_LOCATIONS:
            hi[relax.integers(T)] += 1
            continue
        inst = MallInstance(
            area_of_location=area,
            area_attractiveness=base["attract"],
            type_min=lo, type_ideal=base["ideal"], type_max=hi,
            type_sales_rate=base["rate"], fixed_rent=base["fixed"],
            groups=base["groups"],
            max_small=caps[0], max_medium=caps[1], max_large=caps[2],
            synergy_multiplier=SYNERGY, count_factor_floor=COUNT_FACTOR_FLOOR,
            name=spec.name,
        )
        if _probe_feasible(inst, _rng(*base_key, spec.set_id, 3)):
            return inst
        # loosen one random type bound
        t = int(relax.integers(T))
        if relax.random() < 0.5 and lo[t] > 1:
            lo[t] -= 1
        else:
            hi[t] += 1


def tiny_instance(seed: int, num_locations: int = 6, num_types: int = 3, num_areas: int = 2,
                  caps: tuple[int, int, int] | None = None) -> MallInstance:
    """Small random instance (<= 8 locations) for exhaustive oracle checks."""
    if num_locations > 8 or num_types > 3:
        raise InvalidInputError("tiny instances have at most 8 locations and 3 types")
    rng = _rng(seed, 77)
    area = np.sort(np.arange(num_locations) % num_areas)
    ideal = rng.integers(1, 3, size=num_types)
    lo = np.maximum(1, ideal - rng.integers(0, 2, size=num_types))
    hi = ideal + rng.integers(0, 2, size=num_types)
    while 3 * hi.sum() < num_locations:
        hi += 1
    attract = rng.uniform(0.8, 1.2, size=num_areas)
    rate = rng.uniform(5, 15, size=num_types)
    fixed = np.round(0.3 * rate[:, None] * attract[None, :] * rng.uniform(0.8, 1.2, (num_types, num_areas)), 3)
    groups = [sorted(rng.choice(num_types, size=min(2, num_types), replace=False).tolist())] if num_types > 1 else []
    if caps is None:
        caps = tuple(int(c) for c in rng.integers(1, num_locations // 2 + 2, size=3))
    return MallInstance(
        area_of_location=area, area_attractiveness=attract,
        type_min=lo, type_ideal=ideal, type_max=hi, type_sales_rate=rate, fixed_rent=fixed,
        groups=groups, max_small=caps[0], max_medium=caps[1], max_large=caps[2],
        synergy_multiplier=SYNERGY, count_factor_floor=COUNT_FACTOR_FLOOR, name=f"tiny{seed}",
    )


# ---------------------------------------------------------------- file format


class InstanceParseError(ValueError):
    def __init__(self, path, line: int, field: str, message: str):
        super().__init__(f"{path}:{line}: {field}: {message}")
        self.line = line
        self.field = field


def format_instance(inst: MallInstance) -> str:
    r = repr
    lines = ["mall 1"]
    if inst.name:
        lines.append(f"name {inst.name}")
    lines += [
        f"locations {inst.num_locations}",
        f"areas {inst.num_areas}",
        "areasize " + " ".join(str(int(s)) for s in inst.area_sizes()),
        "attract " + " ".join(r(float(a)) for a in inst.area_attractiveness),
        f"types {inst.num_types}",
        f"sizecaps {inst.max_small} {inst.max_medium} {inst.max_large}",
        f"synergy {r(inst.synergy_multiplier)}",
        f"countfloor {r(inst.count_factor_floor)}",
    ]
    for i in range(inst.num_types):
        lines.append(f"type {i} {inst.type_min[i]} {inst.type_ideal[i]} {inst.type_max[i]} "
                     f"{r(float(inst.type_sales_rate[i]))}")
    for g, grp in enumerate(inst.groups):
        lines.append(f"group {g} " + " ".join(str(t) for t in grp))
    lines.append("fixedrent")
    for row in inst.fixed_rent:
        lines.append(" ".join(r(float(x)) for x in row))
    return "\n".join(lines) + "\n"


def write_instance(inst: MallInstance, path) -> None:
    Path(path).write_text(format_instance(inst), encoding="utf-8")


def parse_instance(text: str, path="<string>") -> MallInstance:
    lines = text.splitlines()
    pos = 0

    def fail(field, msg, line=None):
        raise InstanceParseError(path, pos if line is None else line, field, msg)

    def take(keyword, count=None, cast=int):
        nonlocal pos
        while pos < len(lines) and not lines[pos].strip():
            pos += 1
        if pos >= len(lines):
            fail(keyword, "unexpected end of file", len(lines))
        parts = lines[pos].split()
        pos += 1
        if parts[0] != keyword:
            fail(keyword, f"expected '{keyword}', found '{parts[0]}'")
        values = parts[1:]
        if count is not None and len(values) != count:
            fail(keyword, f"expected {count} values, found {len(values)}")
        try:
            return [cast(v) for v in values]
        except ValueError:
            fail(keyword, f"cannot parse values {values}")

    def peek() -> str | None:
        p = pos
        while p < len(lines) and not lines[p].strip():
            p += 1
        return lines[p].split()[0] if p < len(lines) else None

    if take("mall", 1) != [1]:
        fail("mall", "unsupported format version")
    name = ""
    if peek() == "name":
        name = " ".join(take("name", cast=str))
    (n_loc,) = take("locations", 1)
    (K,) = take("areas", 1)
    sizes = take("areasize", K)
    if sum(sizes) != n_loc:
        fail("areasize", f"area sizes sum to {sum(sizes)}, expected {n_loc}")
    attract = take("attract", K, float)
    (T,) = take("types", 1)
    caps = take("sizecaps", 3)
    (synergy,) = take("synergy", 1, float)
    floor = COUNT_FACTOR_FLOOR
    if peek() == "countfloor":
        (floor,) = take("countfloor", 1, float)
    tmin, tideal, tmax, rate = [], [], [], []
    for i in range(T):
        line = pos + 1
        idx, lo, ideal, hi, rho = take("type", 5, float)
        if int(idx) != i:
            fail("type", f"expected type index {i}, found {int(idx)}", line)
        if not (1 <= lo <= ideal <= hi):
            fail("type", f"type {i} bounds violate 1 <= min <= ideal <= max", line)
        tmin.append(int(lo)); tideal.append(int(ideal)); tmax.append(int(hi)); rate.append(rho)
    groups = []
    while peek() == "group":
        line = pos + 1
        vals = take("group")
        if not vals or vals[0] != len(groups):
            fail("group", f"expected group index {len(groups)}", line)
        groups.append(vals[1:])
    take("fixedrent", 0)
    fixed = []
    for i in range(T):
        if pos >= len(lines):
            fail("fixedrent", f"missing row {i}", len(lines))
        row = lines[pos].split()
        pos += 1
        if len(row) != K:
            fail("fixedrent", f"row {i} has {len(row)} values, expected {K}")
        try:
            fixed.append([float(x) for x in row])
        except ValueError:
            fail("fixedrent", f"cannot parse row {i}")
    try:
        return MallInstance(
            area_of_location=np.repeat(np.arange(K), sizes), area_attractiveness=attract,
            type_min=tmin, type_ideal=tideal, type_max=tmax, type_sales_rate=rate,
            fixed_rent=np.array(fixed), groups=groups,
            max_small=caps[0], max_medium=caps[1], max_large=caps[2],
            synergy_multiplier=synergy, count_factor_floor=floor, name=name,
        )
    except InvalidInputError as exc:
        raise InstanceParseError(path, pos, "instance", str(exc)) from exc


def read_instance(path) -> MallInstance:
    return parse_instance(Path(path).read_text(encoding="utf-8"), path)


def instance_path(directory, set_id: int, index: int) -> Path:
    return Path(directory) / f"set{set_id}_{index:02d}.mall"


def generate_sets(directory, sets=SET_IDS, master_seed: int = 42, indices=range(10)) -> list[Path]:
    Path(directory).mkdir(parents=True, exist_ok=True)
    paths = []
    for s in sets:
        for i in indices:
            p = instance_path(directory, s, i)
            write_instance(generate_instance(GeneratorSpec(s, i, master_seed)), p)
            paths.append(p)
    return paths
