import math
import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from debias.bias_stats import (
    BiasTable,
    UserBias,
    UserStats,
    fit_product_stats,
    fit_user_net_bias,
    fit_user_stats,
    ubr1_denormalize,
    ubr1_normalize,
    ubr2_denormalize,
    ubr2_normalize,
)
from debias.corpus import Dataset, ReviewRecord


def _ds(triples):
    return Dataset(tuple(ReviewRecord(str(i), u, p, s) for i, (u, p, s) in enumerate(triples)))


@pytest.mark.parametrize(
    "scores, mean, std",
    [
        ([5, 5, 5], 5.0, 0.0),
        ([2, 4], 3.0, 1.0),
        ([5, 3, 4], 4.0, math.sqrt(2 / 3)),
    ],
)
def test_user_stats_population_std(scores, mean, std):
    st_ = fit_user_stats(_ds([("u", f"p{i}", s) for i, s in enumerate(scores)]))["u"]
    assert st_.mean == pytest.approx(mean, abs=1e-12)
    assert st_.std == pytest.approx(std, abs=1e-12)
    assert st_.count == len(scores)


def test_singleton_user_has_zero_std():
    assert fit_user_stats(_ds([("u", "p", 3)]))["u"] == UserStats(3.0, 0.0, 1)


@pytest.mark.parametrize(
    "score, stats, expected",
    [
        (5, UserStats(5, 0, 3), 0.0),
        (4, UserStats(3, 1, 2), 1.0),
        (3, UserStats(3, 1, 2), 0.0),
    ],
)
def test_ubr1_normalize(score, stats, expected):
    assert ubr1_normalize(score, stats) == expected


def test_ubr1_denormalize():
    assert ubr1_denormalize(1.0, UserStats(3, 1, 2)) == 4.0
    assert ubr1_denormalize(0.0, UserStats(4.2, 0.7, 5)) == 4.2


@pytest.mark.parametrize("scores, mean", [([4, 4], 4.0), ([1, 5], 3.0), ([2], 2.0)])
def test_product_stats(scores, mean):
    ps = fit_product_stats(_ds([(f"u{i}", "p", s) for i, s in enumerate(scores)]))["p"]
    assert ps.mean == mean
    assert ps.count == len(scores)


def test_net_bias_hand_example():
    # product A: mean 4 (5 from u, 3 from v); product B: mean 3 (3 from u)
    train = _ds([("u", "A", 5), ("v", "A", 3), ("u", "B", 3)])
    ps = fit_product_stats(train)
    assert ps["A"].mean == 4 and ps["B"].mean == 3
    b = fit_user_net_bias(train, ps)
    assert b["u"].net_bias == pytest.approx(0.5)
    assert b["u"].count == 2


def test_net_bias_unbiased_and_singleton():
    train = _ds([("u", "A", 4), ("v", "A", 4), ("w", "C", 2)])
    b = fit_user_net_bias(train, fit_product_stats(train))
    assert b["u"].net_bias == 0 and b["v"].net_bias == 0
    assert b["w"].net_bias == 0


@pytest.mark.parametrize("score, bias, nr", [(5, 0.5, 4.5), (3, 0.0, 3.0), (1, -1.0, 2.0)])
def test_ubr2_pair(score, bias, nr):
    ub = UserBias(bias, 1)
    assert ubr2_normalize(score, ub) == nr
    assert ubr2_denormalize(nr, ub) == score


def test_ubr2_denormalize_examples():
    assert ubr2_denormalize(4.5, UserBias(0.5, 2)) == 5.0
    assert ubr2_denormalize(2.7, UserBias(0.0, 2)) == 2.7


triples = st.lists(
    st.tuples(st.sampled_from([f"u{i}" for i in range(6)]), st.sampled_from([f"p{i}" for i in range(6)]), st.integers(1, 5)),
    min_size=1,
    max_size=60,
)


@given(triples)
def test_table_invariants(rows):
    train = _ds(rows)
    t = BiasTable.fit(train)
    for uid, s in t.user_stats.items():
        assert 1 <= s.mean <= 5 and s.std >= 0 and s.count >= 1
        if s.count == 1:
            assert s.std == 0
        assert -4 <= t.user_bias[uid].net_bias <= 4
    for rec in train:
        for method in ("ubr1", "ubr2"):
            nr = t.normalize(method, rec.user_id, rec.score)
            back, cold = t.denormalize(method, rec.user_id, nr)
            assert not cold
            assert back == pytest.approx(rec.score, abs=1e-9)


@given(triples)
def test_ubr1_targets_are_standardized(rows):
    train = _ds(rows)
    t = BiasTable.fit(train)
    by_user = {}
    for rec in train:
        by_user.setdefault(rec.user_id, []).append(t.normalize("ubr1", rec.user_id, rec.score))
    for uid, z in by_user.items():
        if t.user_stats[uid].std > 0:
            assert np.mean(z) == pytest.approx(0, abs=1e-9)
            assert np.std(z) == pytest.approx(1, abs=1e-9)


@given(triples)
def test_total_bias_conserved(rows):
    train = _ds(rows)
    t = BiasTable.fit(train)
    lhs = math.fsum(b.count * b.net_bias for b in t.user_bias.values())
    rhs = math.fsum(r.score - t.product_stats[r.product_id].mean for r in train)
    assert lhs == pytest.approx(rhs, abs=1e-6)


@given(triples, st.randoms(use_true_random=False))
def test_order_independent(rows, rnd):
    a = BiasTable.fit(_ds(rows))
    shuffled = list(rows)
    rnd.shuffle(shuffled)
    b = BiasTable.fit(_ds(shuffled))
    assert a.to_json() == b.to_json()


def test_cold_start_fallbacks():
    t = BiasTable.fit(_ds([("u", "A", 5), ("u", "B", 1), ("v", "A", 3)]))
    val, cold = t.denormalize("ubr1", "stranger", 1.0)
    assert cold
    assert val == pytest.approx(t.global_std + t.global_mean)
    val, cold = t.denormalize("ubr2", "stranger", 3.3)
    assert cold and val == 3.3


def test_json_roundtrip():
    rnd = random.Random(0)
    rows = [(f"u{rnd.randrange(20)}", f"p{rnd.randrange(30)}", rnd.randint(1, 5)) for _ in range(300)]
    t = BiasTable.fit(_ds(rows))
    text = t.to_json()
    back = BiasTable.from_json(text)
    assert back == t
    assert back.to_json() == text
    assert '"format_version":1' in text


def test_empty_training_rejected():
    with pytest.raises(ValueError):
        BiasTable.fit(Dataset(()))
