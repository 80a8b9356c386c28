import itertools
import math

import numpy as np
import pytest

from compound_fsc import (
    CodeTree,
    Codebook,
    CompoundFamily,
    MLDecoder,
    RankingFunction,
    UniversalDecoder,
    ValidationError,
    bsc,
    build_ranking,
    identity_feedback,
    make_memoryless,
    merge_rankings,
    ml_decode,
    no_feedback,
    sample_codebook,
    separability_check,
    tree_likelihood,
    tree_log_likelihood,
    uniform_policy,
    universal_decode,
)
from compound_fsc.verify import random_family, random_fsc


def leaf_tree(symbols, depth):
    return CodeTree(depth=depth, x_card=2, z_card=2, symbols=np.array(symbols))


def all_depth2_trees():
    return [leaf_tree(list(sym), 2) for sym in itertools.product(range(2), repeat=3)]


def test_tree_likelihood_noiseless():
    fsc = make_memoryless(np.eye(2))
    fb = identity_feedback((0, 1))
    tree = leaf_tree([1, 0, 1], 2)
    # feedback after y1=1 steers to the right child, which emits 1
    assert tree_likelihood(fsc, tree, [1, 1], fb) == pytest.approx(1.0)
    assert tree_likelihood(fsc, tree, [1, 0], fb) == 0.0
    assert tree_log_likelihood(fsc, tree, [1, 0], fb) == -math.inf


def test_tree_likelihood_memoryless_product():
    fsc = bsc(0.2)
    fb = identity_feedback((0, 1))
    tree = leaf_tree([0, 1, 0], 2)
    # y = (0, 0): path is (0, 1), so the second symbol flips
    assert tree_likelihood(fsc, tree, [0, 0], fb) == pytest.approx(0.8 * 0.2)
    # y = (1, 1): path is (0, 0): flip then flip
    assert tree_likelihood(fsc, tree, [1, 1], fb) == pytest.approx(0.2 * 0.2)


def test_tree_likelihood_state_enumeration_oracle():
    rng = np.random.default_rng(179)
    fsc = random_fsc(rng, 2, 2, 2)
    fb = identity_feedback((0, 1))
    tree = leaf_tree([1, 1, 0], 2)
    for y in itertools.product(range(2), repeat=2):
        xs = [tree.symbols[0], tree.symbols[1 + y[0]]]
        want = 0.0
        for s0 in range(2):
            acc = 0.0
            for s1 in range(2):
                for s2 in range(2):
                    acc += fsc.kernel[s0, xs[0], y[0], s1] * fsc.kernel[s1, xs[1], y[1], s2]
            want += 0.5 * acc
        got = tree_likelihood(fsc, tree, y, fb)  # uniform prior by default
        assert got == pytest.approx(want, abs=1e-13)


def test_build_ranking_orders_by_likelihood():
    fsc = bsc(0.1)
    fb = identity_feedback((0, 1))
    trees = all_depth2_trees()
    y = [1, 1]
    ranking = build_ranking(fsc, trees, y, fb)
    lls = {t.key: tree_log_likelihood(fsc, t, y, fb) for t in trees}
    ordered = ranking.ordered_keys
    for a, b in zip(ordered, ordered[1:]):
        assert (lls[a], -a) >= (lls[b], -b)  # descending ll, ascending key on ties
    assert len(ranking) == 8
    assert sorted(ordered) == list(range(8))


def test_build_ranking_tie_canonical_order():
    fsc = bsc(0.5)  # every tree equally likely
    fb = identity_feedback((0, 1))
    ranking = build_ranking(fsc, all_depth2_trees(), [0, 1], fb)
    assert ranking.ordered_keys == tuple(range(8))


def test_ranking_function_validation():
    with pytest.raises(ValidationError):
        RankingFunction(ordered_keys=(1, 1, 2))
    r = RankingFunction(ordered_keys=(5, 3, 1))
    assert r.rank(5) == 1
    assert r.rank(1) == 3
    with pytest.raises(ValidationError):
        r.rank(2)


def test_merge_single_ranking_is_identity():
    r = RankingFunction(ordered_keys=(4, 2, 7))
    merged = merge_rankings([r])
    assert merged.ordered_keys == r.ordered_keys


def test_merge_two_reversed_rankings():
    r1 = RankingFunction(ordered_keys=(0, 1, 2))
    r2 = RankingFunction(ordered_keys=(2, 1, 0))
    merged = merge_rankings([r1, r2])
    # round robin: 0 (r1,1), 2 (r2,1), 1 (r1,2); r2's later picks all dupes
    assert merged.ordered_keys == (0, 2, 1)


def test_merge_rank_bounds():
    rng = np.random.default_rng(181)
    keys = list(range(8))
    for _ in range(50):
        k_members = int(rng.integers(1, 4))
        rankings = []
        for _ in range(k_members):
            perm = rng.permutation(keys)
            rankings.append(RankingFunction(ordered_keys=tuple(int(v) for v in perm)))
        merged = merge_rankings(rankings)
        for key in keys:
            m_rank = merged.rank(key)
            best = min(r.rank(key) for r in rankings)
            for k_idx, r in enumerate(rankings, start=1):
                assert m_rank <= (r.rank(key) - 1) * k_members + k_idx
            assert m_rank <= k_members * best


def test_merge_is_bijection():
    r1 = RankingFunction(ordered_keys=(3, 1, 0, 2))
    r2 = RankingFunction(ordered_keys=(2, 3, 1, 0))
    merged = merge_rankings([r1, r2])
    assert sorted(merged.ordered_keys) == [0, 1, 2, 3]


def test_merge_requires_shared_domain():
    r1 = RankingFunction(ordered_keys=(0, 1))
    r2 = RankingFunction(ordered_keys=(1, 2))
    with pytest.raises(ValidationError):
        merge_rankings([r1, r2])
    with pytest.raises(ValidationError):
        merge_rankings([])


def test_ml_decode_unique_winner_and_duplicates():
    fsc = bsc(0.05)
    fb = identity_feedback((0, 1))
    t_zero = leaf_tree([0, 0, 0], 2)
    t_one = leaf_tree([1, 1, 1], 2)
    cb = Codebook(trees=(t_zero, t_one))
    assert ml_decode(cb, [0, 0], fsc, fb) == 0
    assert ml_decode(cb, [1, 1], fsc, fb) == 1
    # duplicate winning tree: smallest message index wins
    cb_dup = Codebook(trees=(t_one, t_zero, t_zero))
    assert ml_decode(cb_dup, [0, 0], fsc, fb) == 1


def test_ml_decode_matches_argmax_oracle():
    rng = np.random.default_rng(191)
    fb = identity_feedback((0, 1))
    for _ in range(10):
        fsc = random_fsc(rng, 2, 2, 2)
        cb = sample_codebook(uniform_policy(2, 2, 2), 4, rng)
        for y in itertools.product(range(2), repeat=2):
            got = ml_decode(cb, y, fsc, fb)
            scored = []
            for idx, tree in enumerate(cb.trees):
                ll = tree_log_likelihood(fsc, tree, y, fb)
                scored.append((-ll, tree.key, idx))
            want = min(scored)[2]
            assert got == want


def test_universal_single_member_equals_ml():
    rng = np.random.default_rng(193)
    fsc = random_fsc(rng, 2, 2, 2)
    fam = CompoundFamily(members=(fsc,), labels=("only",))
    fb = identity_feedback((0, 1))
    cb = sample_codebook(uniform_policy(3, 2, 2), 5, rng)
    for y in itertools.product(range(2), repeat=3):
        assert universal_decode(cb, y, fam, fb) == ml_decode(cb, y, fsc, fb)


def test_batch_decoders_match_scalar_paths():
    rng = np.random.default_rng(197)
    fam = random_family(rng, 3, n_states=2)
    fb = identity_feedback((0, 1))
    cb = sample_codebook(uniform_policy(3, 2, 2), 4, rng)
    y_rows = rng.integers(0, 2, size=(64, 3))
    uni = UniversalDecoder(fam, fb)
    got_u = uni.decode_rows(cb, y_rows)
    want_u = [uni.decode(cb, y) for y in y_rows]
    assert got_u.tolist() == want_u
    ml = MLDecoder(fam.members[1], fb)
    got_m = ml.decode_rows(cb, y_rows)
    want_m = [ml.decode(cb, y) for y in y_rows]
    assert got_m.tolist() == want_m


def test_separability_family_covers_itself():
    fam = CompoundFamily(members=(bsc(0.1), bsc(0.3)), labels=("a", "b"))
    rep = separability_check(fam, fam, n=3, eps_nats=1e-6)
    assert rep.passed
    assert rep.violation_count == 0
    assert rep.best_rep["a"] == "a"
    assert rep.best_rep["b"] == "b"


def test_separability_close_representative_passes():
    fam = CompoundFamily(members=(bsc(0.3),), labels=("true",))
    reps = CompoundFamily(members=(bsc(0.3 + 1e-4),), labels=("rep",))
    rep = separability_check(fam, reps, n=2, eps_nats=0.01)
    assert rep.passed
    assert rep.mu_nats == pytest.approx(1.0 + math.log(2.0))
    assert rep.threshold == pytest.approx(math.exp(-2 * (1 + 2 * math.log(2.0))))


def test_separability_far_representative_fails():
    fam = CompoundFamily(members=(bsc(0.45),), labels=("true",))
    reps = CompoundFamily(members=(bsc(0.3),), labels=("rep",))
    rep = separability_check(fam, reps, n=2, eps_nats=0.001)
    assert not rep.passed
    assert rep.violation_count > 0
    assert rep.violations
    v = rep.violations[0]
    assert v.member == "true"
    assert v.side in ("upper", "lower")
    assert v.log_excess > 0
