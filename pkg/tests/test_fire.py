import math

import pytest

from catrust import fire
from catrust.fire import (
    ABSENT,
    CertifiedStore,
    Component,
    FireParams,
    RatingDb,
    RatingRecord,
    RoleRule,
    TrustReport,
)
from catrust.rng import SplitMix64


def rec(rater, ratee, round_, value):
    return RatingRecord(rater, ratee, round_, value)


def test_normalize():
    assert fire.normalize_ug(10.0) == 1.0
    assert fire.normalize_ug(-2.5) == -0.25


def test_default_params():
    p = FireParams()
    assert math.exp(-5 / p.recency_scale) == pytest.approx(0.5)
    assert p.gamma_i == pytest.approx(-math.log(0.5))
    assert [p.coefficient(c) for c in Component] == [2.0, 2.0, 1.0, 0.5]


class TestRatingDb:
    def test_bounded_history(self):
        db = RatingDb(capacity=3)
        for t in range(5):
            db.add(rec("c", "p", t, 0.1 * t))
        assert [r.round for r in db.ratings("c", "p")] == [2, 3, 4]

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            RatingDb().add(rec("c", "p", 0, 1.5))

    def test_about_collects_raters(self):
        db = RatingDb()
        db.add(rec("a", "p", 0, 0.1))
        db.add(rec("b", "p", 1, 0.2))
        db.add(rec("a", "q", 1, 0.2))
        assert {r.rater for r in db.about("p")} == {"a", "b"}


def test_certified_store_keeps_best():
    store = CertifiedStore(capacity=2)
    assert store.offer(rec("a", "p", 0, 0.1))
    assert store.offer(rec("b", "p", 1, -0.5))
    assert store.offer(rec("c", "p", 2, 0.3))
    assert not store.offer(rec("d", "p", 3, 0.1))
    assert sorted(r.value for r in store.records) == [0.1, 0.3]


class TestComponentTrust:
    def test_empty(self):
        assert fire.component_trust([], 10, 1.0, 5.0) == ABSENT
        assert not ABSENT.present

    def test_hand_computed(self):
        scale = -5 / math.log(0.5)
        gamma = -math.log(0.5)
        out = fire.component_trust([rec("c", "p", 10, 1.0), rec("c", "p", 5, 0.0)], 10, gamma, scale)
        assert out.value == pytest.approx(2 / 3)
        assert out.reliability == pytest.approx((1 - 0.5 ** 1.5) * (7 / 9))

    def test_single_rating(self):
        out = fire.component_trust([rec("c", "p", 3, -0.4)], 3, -math.log(0.5), 7.2)
        assert out.value == pytest.approx(-0.4)
        assert out.reliability == pytest.approx(0.5)


def test_composite_weights_by_coefficient_and_reliability():
    params = FireParams()
    reports = {
        Component.IT: TrustReport(1.0, 0.5),
        Component.WR: TrustReport(-1.0, 1.0),
        Component.CR: ABSENT,
    }
    out = fire.composite_trust(reports, params)
    assert out.value == pytest.approx((2 * 0.5 - 1) / (2 * 0.5 + 1))
    assert out.reliability == pytest.approx(2.0 / 3.0)
    assert fire.composite_trust({}, params) == ABSENT


def test_role_based_trust():
    rules = [RoleRule(0.8, 0.5), RoleRule(0.2, 1.0), RoleRule(-1, 1.0, lambda c, p: p == "x")]
    out = fire.role_based_trust("c", "p", rules)
    assert out.value == pytest.approx((0.4 + 0.2) / 1.5)
    assert out.reliability == pytest.approx(0.75)
    assert fire.role_based_trust("c", "p") == ABSENT


class TestWitnessSearch:
    def chain(self, n):
        return {i: [j for j in (i - 1, i + 1) if 0 <= j < n] for i in range(n)}

    def test_depth_limit(self):
        params = FireParams(referral_length=3)
        acq = self.chain(10)
        for holder, expect in ((3, True), (4, False)):
            db = RatingDb()
            db.add(rec(holder, "p", 0, 0.5))
            found = fire.find_witnesses(0, "p", acq, {holder: db}, params, SplitMix64(1))
            assert bool(found) is expect

    def test_witness_stops_referral(self):
        acq = self.chain(6)
        dbs = {}
        for node in (2, 4):
            dbs[node] = RatingDb()
            dbs[node].add(rec(node, "p", 0, 0.5))
        found = fire.find_witnesses(0, "p", acq, dbs, FireParams(), SplitMix64(1))
        assert [w for w, _ in found] == [2]

    def test_branching_factor(self):
        acq = {0: [1, 2, 3, 4, 5]}
        dbs = {}
        for node in range(1, 6):
            dbs[node] = RatingDb()
            dbs[node].add(rec(node, "p", 0, 0.5))
        found = fire.find_witnesses(0, "p", acq, dbs, FireParams(branching_factor=2), SplitMix64(3))
        assert len(found) == 2

    def test_consumer_own_ratings_excluded(self):
        db = RatingDb()
        db.add(rec(0, "p", 0, 0.5))
        assert fire.find_witnesses(0, "p", {0: [1], 1: [0]}, {0: db}, FireParams(), SplitMix64(1)) == []


class TestSelect:
    def test_empty(self):
        assert fire.select_provider([], lambda c: ABSENT, SplitMix64(0)) is None

    def test_argmax_with_tie_to_lowest(self):
        values = {3: 0.2, 1: 0.9, 2: 0.9}
        pick = fire.select_provider([3, 1, 2], lambda c: TrustReport(values[c], 1.0), SplitMix64(0))
        assert pick == 1

    def test_nothing_rated_is_uniform(self):
        rng = SplitMix64(5)
        picks = {fire.select_provider([1, 2, 3], lambda c: ABSENT, rng) for _ in range(200)}
        assert picks == {1, 2, 3}

    def test_exploration_rate(self):
        rng = SplitMix64(11)
        ev = lambda c: TrustReport(0.5, 1.0) if c == 0 else ABSENT
        n = 4000
        explored = sum(fire.select_provider([0, 1, 2], ev, rng, 0.1) != 0 for _ in range(n))
        assert abs(explored / n - 0.1) < 0.02

    def test_no_exploration_when_everyone_rated(self):
        rng = SplitMix64(2)
        ev = lambda c: TrustReport(float(c), 1.0)
        assert {fire.select_provider([0, 1], ev, rng, 1.0) for _ in range(50)} == {1}
