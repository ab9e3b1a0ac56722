import pytest

from catrust import ca
from catrust.ca import (
    CaParams,
    CaTrustState,
    CaVariant,
    PerformanceLevel as P,
    RequestMessage,
    TaskSpec,
)


def task(level):
    return TaskSpec(ca.SERVICE, level)


def test_update_rules():
    assert ca.strengthen(0.5, 0.1) == pytest.approx(0.55, abs=1e-12)
    assert ca.weaken(0.5, 0.1) == pytest.approx(0.45, abs=1e-12)
    assert ca.strengthen(1.0, 0.1) == 1.0
    assert ca.weaken(1.0, 0.1) == 1.0
    assert ca.weaken(0.0, 0.5) == 0.0


def test_min_successful_performance_and_success():
    assert [ca.min_successful_performance(lv) for lv in ca.LEVELS_DESCENDING] == [10, 5, 0, -5, -10]
    assert ca.is_success(P.OK, 0.0)
    assert not ca.is_success(P.OK, -1e-9)
    assert ca.is_success(P.WORST, -10.0)


def test_params_validated():
    with pytest.raises(ValueError):
        CaParams(threshold=1.5)
    with pytest.raises(ValueError):
        CaParams(alpha=0.0)


class TestInit:
    def test_cold_start_default(self):
        st = CaTrustState("p")
        assert ca.init_connection_v2(st, "c1", task(P.GOOD)).weight == 0.5

    def test_cold_start_average(self):
        st = CaTrustState("p")
        ca.init_connection_v2(st, "c1", task(P.OK)).weight = 0.55
        ca.init_connection_v2(st, "c2", task(P.OK)).weight = 0.505
        assert ca.init_connection_v2(st, "c3", task(P.OK)).weight == pytest.approx(0.5275)

    def test_average_only_over_same_task(self):
        st = CaTrustState("p")
        ca.init_connection_v2(st, "c1", task(P.GOOD)).weight = 0.1
        assert ca.init_connection_v2(st, "c2", task(P.OK)).weight == 0.5

    def test_existing_connection_untouched(self):
        st = CaTrustState("p")
        ca.init_connection_v2(st, "c1", task(P.OK)).weight = 0.7
        assert ca.init_connection_v2(st, "c1", task(P.OK)) is None
        assert st.get("c1", task(P.OK)).weight == 0.7

    @pytest.mark.parametrize("level", [P.PERFECT, P.GOOD, P.OK])
    def test_v3_bad_flag_pins_nonnegative_levels(self, level):
        st = CaTrustState("p", bad_flag=True)
        assert ca.init_connection_v3(st, "c", task(level)).weight == ca.BAD_PROVIDER_WEIGHT

    @pytest.mark.parametrize("level", [P.BAD, P.WORST])
    def test_v3_bad_flag_ignores_low_levels(self, level):
        st = CaTrustState("p", bad_flag=True)
        assert ca.init_connection_v3(st, "c", task(level)).weight == 0.5

    def test_v3_refresh(self):
        st = CaTrustState("p")
        ca.init_connection_v3(st, "c", task(P.GOOD)).weight = 0.9
        assert ca.refresh_connection_v3(st, "c", task(P.GOOD)).weight == 0.9
        st.bad_flag = True
        assert ca.refresh_connection_v3(st, "c", task(P.GOOD)).weight == 0.45

    def test_v3_refresh_missing(self):
        with pytest.raises(KeyError):
            ca.refresh_connection_v3(CaTrustState("p"), "c", task(P.GOOD))


class TestSelectAndDecide:
    def test_order_and_threshold(self):
        st = CaTrustState("p")
        for cid, w in (("a", 0.4), ("b", 0.8), ("c", 0.6)):
            ca.receive(st, RequestMessage(cid, task(P.OK)), CaVariant.V2)
            st.get(cid, task(P.OK)).weight = w
        out = ca.select_and_decide(st, CaParams())
        assert [(m.consumer_id, a) for m, a in out] == [("b", True), ("c", True), ("a", False)]
        assert st.pending == []

    def test_threshold_is_inclusive(self):
        st = CaTrustState("p")
        ca.receive(st, RequestMessage("a", task(P.OK)), CaVariant.V2)
        [(_, accept)] = ca.select_and_decide(st, CaParams())
        assert accept

    def test_availability_is_consulted_lazily(self):
        st = CaTrustState("p")
        for cid in ("a", "b"):
            ca.receive(st, RequestMessage(cid, task(P.OK)), CaVariant.V2)
        taken = []

        def available(msg):
            ok = not taken
            taken.append(msg.consumer_id)
            return ok

        out = ca.select_and_decide(st, CaParams(), available)
        assert [a for _, a in out] == [True, False]


class TestProvide:
    def test_generalization_reopens_stricter_levels(self):
        st = CaTrustState("p")
        params = CaParams()
        ca.init_connection_v2(st, "c", task(P.GOOD)).weight = 0.3
        ca.init_connection_v2(st, "c", task(P.PERFECT)).weight = 0.3
        ca.init_connection_v2(st, "c", task(P.OK))
        assert ca.provide(st, "c", task(P.OK), 6.0, params, CaVariant.V2)
        assert st.get("c", task(P.OK)).weight == pytest.approx(0.55)
        assert st.get("c", task(P.GOOD)).weight == 0.5
        assert st.get("c", task(P.PERFECT)).weight == 0.3

    def test_generalization_only_same_consumer(self):
        st = CaTrustState("p")
        ca.init_connection_v2(st, "other", task(P.GOOD)).weight = 0.3
        ca.init_connection_v2(st, "c", task(P.OK))
        ca.provide(st, "c", task(P.OK), 10.0, CaParams(), CaVariant.V2)
        assert st.get("other", task(P.GOOD)).weight == 0.3

    def test_v3_flag_follows_last_performance(self):
        st = CaTrustState("p")
        ca.init_connection_v3(st, "c", task(P.WORST))
        ca.provide(st, "c", task(P.WORST), 0.0, CaParams(), CaVariant.V3)
        assert st.bad_flag
        ca.provide(st, "c", task(P.WORST), 0.1, CaParams(), CaVariant.V3)
        assert not st.bad_flag

    def test_v2_never_sets_flag(self):
        st = CaTrustState("p")
        ca.init_connection_v2(st, "c", task(P.WORST))
        ca.provide(st, "c", task(P.WORST), -10.0, CaParams(), CaVariant.V2)
        assert not st.bad_flag


def test_bad_provider_declines_after_one_failure():
    st = CaTrustState("bp")
    params = CaParams()
    accepted = []
    for i in range(10):
        ca.receive(st, RequestMessage(i, task(P.PERFECT)), CaVariant.V2)
        for msg, ok in ca.select_and_decide(st, params):
            if ok:
                ca.provide(st, msg.consumer_id, msg.task, -8.0, params, CaVariant.V2)
            accepted.append(ok)
    assert accepted == [True] + [False] * 9
    assert st.get(9, task(P.PERFECT)).weight == pytest.approx(0.45)
