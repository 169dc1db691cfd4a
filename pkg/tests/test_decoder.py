from __future__ import annotations

import numpy as np
import pytest
from conftest import make_instance

from mallga.decoder import (
    WEIGHT_PRESETS, DecoderState, DecoderWeights, ScoreTerms, decode, decode_many, decode_with_state,
    score_candidate, score_terms,
)
from mallga.instances import GeneratorSpec, generate_instance, tiny_instance
from mallga.model import InvalidInputError, derive_counts


def _sizes(n):
    return [int(n % 3 == 1), int(n % 3 == 2), n // 3]


def oracle_decode(perm, w, inst, trace=None):
    """Step-by-step simulation that recomputes every tally from the partial layout."""
    T, K = inst.num_types, inst.num_areas
    layout = [-1] * inst.num_locations
    caps = [inst.max_small, inst.max_medium, inst.max_large]

    def count(i, k):
        return sum(1 for j, t in enumerate(layout) if t == i and inst.area_of_location[j] == k)

    def shops(i):
        return sum(sum(_sizes(count(i, k))) for k in range(K))

    def tally():
        out = [0, 0, 0]
        for i in range(T):
            for k in range(K):
                for s, c in enumerate(_sizes(count(i, k))):
                    out[s] += c
        return out

    for j in perm:
        k = inst.area_of_location[j]
        candidates = [i for i in range(T) if shops(i) < inst.type_max[i]] or list(range(T))
        best, best_score = None, None
        for i in candidates:
            n = count(i, k)
            before, after = _sizes(n), _sizes(n + 1)
            created = next(s for s in range(3) if after[s] > before[s])
            S = caps[created] - tally()[created] - 1
            I = inst.type_ideal[i] - (shops(i) + sum(after) - sum(before))
            M = 0
            G = 0
            for grp in inst.groups:
                if i not in grp:
                    continue
                present = sum(1 for t in grp if count(t, k) > 0)
                if n == 0:
                    M = max(M, 10 - len(grp) + present)
                    present += 1
                G += present == len(grp)
            score = (w[0] * (created == 1) + w[1] * (created == 2) + w[2] * S + w[3] * I
                     + w[4] * M + w[5] * G + inst.fixed_rent[i, k])
            if best_score is None or score > best_score:
                best, best_score = i, score
        layout[j] = best
        if trace is not None:
            trace.append((int(j), best))
    return layout


def ten_location_instance(seed):
    rng = np.random.default_rng(seed)
    area = np.repeat([0, 1, 2], [4, 3, 3])
    return make_instance(
        area, num_types=4, tmin=[1, 1, 1, 1], ideal=[1, 2, 1, 2], tmax=[2, 2, 3, 2],
        rate=rng.uniform(5, 15, 4), fixed=np.round(rng.uniform(0, 50, (4, 3)), 3),
        groups=[(0, 1, 2), (1, 3)], caps=(3, 2, 2),
    )


# ---------------------------------------------------------------- score terms


def test_size_slack_example():
    # five small shops allowed, three already present, a fourth small would be created
    inst = make_instance([0, 1, 2, 3], num_types=2, caps=(5, 5, 5))
    state = DecoderState.empty(inst)
    for loc in (0, 1, 2):
        state.place(0, loc, inst)
    assert state.size_tally.tolist() == [3, 0, 0]
    terms = score_terms(1, 3, state, inst)
    assert terms.size_slack == 5 - 3 - 1 == 1
    assert (terms.medium_bonus, terms.large_bonus) == (0, 0)


def test_new_member_example():
    # group of four; two members already in the area; candidate type not yet present
    inst = make_instance([0] * 4, num_types=5, groups=[(0, 1, 2, 3)])
    state = DecoderState.empty(inst)
    state.place(0, 0, inst)
    state.place(1, 1, inst)
    terms = score_terms(2, 2, state, inst)
    assert terms.new_member == 10 - 4 + 2 == 8
    assert terms.complete_groups == 0
    # an ungrouped type scores neither term
    terms = score_terms(4, 2, state, inst)
    assert terms.new_member == 0 and terms.complete_groups == 0


def test_complete_group_and_extension_terms():
    inst = make_instance([0] * 6, num_types=3, groups=[(0, 1)], ideal=[2, 1, 1])
    state = DecoderState.empty(inst)
    state.place(0, 0, inst)
    t = score_terms(1, 1, state, inst)
    assert t.complete_groups == 1 and t.new_member == 10 - 2 + 1
    state.place(1, 1, inst)
    # a second type-0 location merges into a medium shop: no new member, shop count unchanged
    t = score_terms(0, 2, state, inst)
    assert (t.medium_bonus, t.large_bonus, t.new_member, t.complete_groups) == (1, 0, 0, 1)
    assert t.ideal_gap == 2 - 1
    state.place(0, 2, inst)
    t = score_terms(0, 3, state, inst)
    assert (t.medium_bonus, t.large_bonus) == (0, 1)


def test_zero_weights_score_is_fixed_rent():
    inst = tiny_instance(4)
    state = DecoderState.empty(inst)
    for i in range(inst.num_types):
        for j in range(inst.num_locations):
            k = inst.area_of_location[j]
            assert score_candidate(i, j, state, [0] * 6, inst) == inst.fixed_rent[i, k]


def test_score_candidate_rejects_types_at_max():
    inst = make_instance([0, 1], num_types=2, tmax=[1, 1])
    state = DecoderState.empty(inst)
    state.place(0, 0, inst)
    with pytest.raises(InvalidInputError):
        score_candidate(0, 1, state, [1] * 6, inst)
    with pytest.raises(InvalidInputError):
        state.place(1, 0, inst)


def test_score_terms_weighting():
    terms = ScoreTerms(1, 0, 2, -1, 3, 1, 7.5)
    w = DecoderWeights(1, 2, 3, 4, 5, 6)
    assert terms.score(w) == 1 + 6 - 4 + 15 + 6 + 7.5


# ---------------------------------------------------------------- decode


def test_low_weight_string_decides_location_3_first():
    inst = ten_location_instance(0)
    perm = np.array([3, 5, 6, 1, 10, 9, 2, 4, 8, 7]) - 1
    w = WEIGHT_PRESETS["low"]
    assert tuple(w) == (500, 1000, 100, 200, 200, 2000)
    trace = []
    layout = decode(perm, w, inst)
    assert layout.tolist() == oracle_decode(perm, w, inst, trace)
    assert [j for j, _ in trace][:2] == [2, 4]
    # the first choice is the best-scoring type for location 3 on an empty mall
    empty = DecoderState.empty(inst)
    scores = [score_candidate(i, 2, empty, w, inst) for i in range(inst.num_types)]
    assert layout[2] == int(np.argmax(scores))


@pytest.mark.parametrize("seed", range(5))
def test_decode_matches_step_oracle(seed):
    inst = ten_location_instance(seed)
    rng = np.random.default_rng(seed)
    for _ in range(10):
        perm = rng.permutation(10)
        w = rng.random(6) * 10 ** rng.uniform(0, 4)
        assert decode(perm, w, inst).tolist() == oracle_decode(perm, w, inst)


def test_only_admissible_type_is_placed():
    inst = make_instance([0, 1], num_types=2, tmax=[1, 1], fixed=[[100.0, 100.0], [0.0, 0.0]])
    layout = decode([0, 1], [0] * 6, inst)
    assert layout.tolist() == [0, 1]


def test_all_types_at_max_falls_back_to_best_score():
    inst = make_instance([0, 1, 2, 3], num_types=2, tmax=[1, 1], fixed=np.array([[5.0] * 4, [1.0] * 4]))
    layout = decode([0, 1, 2, 3], [0] * 6, inst)
    assert layout.tolist() == [0, 1, 0, 0]
    assert layout.tolist() == oracle_decode([0, 1, 2, 3], [0] * 6, inst)


def test_ties_go_to_the_lowest_type():
    inst = make_instance([0, 0, 0], num_types=3)
    assert decode([0, 1, 2], [0] * 6, inst).tolist() == [0, 0, 0]


def test_positive_scaling_keeps_layout_without_fixed_rent(rng):
    inst = make_instance(np.repeat([0, 1], 5), num_types=4, groups=[(0, 1, 2)], tmax=[3, 3, 3, 3],
                         ideal=[1, 2, 1, 2], caps=(4, 3, 2))
    for _ in range(20):
        perm, w = rng.permutation(10), rng.random(6) * 100
        assert np.array_equal(decode(perm, w, inst), decode(perm, 37.5 * w, inst))


def test_state_matches_derived_counts(rng):
    inst = generate_instance(GeneratorSpec(5, 1))
    for _ in range(5):
        layout, state = decode_with_state(rng.permutation(100), rng.random(6) * 1000, inst)
        c = derive_counts(layout, inst)
        assert np.array_equal(state.locations_per_type_area, c.locations_per_type_area)
        assert np.array_equal(state.shops_per_type, c.shops_per_type)
        assert np.array_equal(state.size_tally, c.size_tally)
        present = c.locations_per_type_area > 0
        for g, grp in enumerate(inst.groups):
            assert state.present_members[g].tolist() == present[list(grp)].sum(axis=0).tolist()


def test_decode_many_matches_single(rng):
    inst = generate_instance(GeneratorSpec(6, 2))
    perms = np.argsort(rng.random((8, 100)), axis=1)
    weights = rng.random((8, 6)) * 10000
    batch = decode_many(perms, weights, inst)
    for p, w, row in zip(perms, weights, batch):
        assert np.array_equal(decode(p, w, inst), row)
    shared = decode_many(perms, WEIGHT_PRESETS["medium"].as_array(), inst)
    assert np.array_equal(shared[3], decode(perms[3], WEIGHT_PRESETS["medium"], inst))


def test_decode_validates_inputs():
    inst = tiny_instance(1)
    with pytest.raises(InvalidInputError):
        decode([0, 1, 2, 3, 4, 4], [1] * 6, inst)
    with pytest.raises(InvalidInputError):
        decode(range(6), [1] * 5, inst)
    with pytest.raises(InvalidInputError):
        decode(range(6), [1, 1, 1, 1, 1, np.inf], inst)


def test_skip_rule_bounds_shop_counts(rng):
    # shop counts never fall, so a type still below its maximum at the end means the
    # all-at-max fallback never fired and every count respects its maximum
    inst = generate_instance(GeneratorSpec(7, 0))
    checked = 0
    for _ in range(20):
        layout, state = decode_with_state(rng.permutation(100), rng.random(6) * 10000, inst)
        if np.any(state.shops_per_type < inst.type_max):
            checked += 1
            assert np.all(state.shops_per_type <= inst.type_max)
    assert checked
