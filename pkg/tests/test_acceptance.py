"""Acceptance gate: one line per criterion, printed in the terminal summary.

The simulation criteria run the full default world (500 consumers, 100
providers, 500 rounds) with 30 independent runs per experiment; each
experiment is simulated once per session and shared between criteria.
"""
import math
import random

import numpy as np
import pytest

from catrust import ca, harness, verify
from catrust.cli import main as cli_main
from catrust.stats import welch_t_test

from _reference import reference_welch
from conftest import ACCEPTANCE_LINES

NSIR = 30
BASE_SEED = 0


def report(n, ok, detail):
    ACCEPTANCE_LINES.append(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def check(n, fn):
    r = fn()
    report(n, r.passed, f"{r.name}: {r.detail}")


# analytical ---------------------------------------------------------------

def test_criterion_01_update_rules():
    check(1, verify.check_update_rules)


def test_criterion_02_ok_task_replay():
    check(2, verify.check_ok_task_replay)


def test_criterion_03_perfect_average_fixed():
    check(3, verify.check_perfect_average_fixed)


def test_criterion_04_single_trial_learning():
    check(4, verify.check_single_trial_learning)


def test_criterion_05_worst_always_executed():
    check(5, verify.check_always_worst)


def test_criterion_06_v3_early_detection():
    check(6, verify.check_v3_early_detection)


def test_criterion_07_welch_against_reference():
    rng = random.Random(7)
    worst = 0.0
    for _ in range(20):
        a = [rng.uniform(-10, 10) for _ in range(rng.randint(2, 8))]
        b = [rng.uniform(-10, 10) + rng.uniform(-4, 4) for _ in range(rng.randint(2, 8))]
        worst = max(worst, abs(welch_t_test(a, b)[0] - reference_welch(a, b)[2]))
    report(7, worst <= 1e-6, f"max |p - p_ref| over 20 pairs = {worst:.2e}")


# simulation ---------------------------------------------------------------

class Result:
    def __init__(self, exp_id):
        spec = harness.experiment(exp_id, nsir=NSIR, base_seed=BASE_SEED)
        agg = harness.aggregate(harness.run_experiment(spec), exp_id)
        self.cap = harness.index_cap(agg)
        self.agg = [r for r in agg if r.interaction_index <= self.cap]
        self.ranks = harness.rank(self.agg)

    def means(self, group):
        return {r.interaction_index: r.mean_ug for r in self.agg if r.group == group}

    def rank_rows(self, group_a):
        return {r.interaction_index: r for r in self.ranks if r.group_a == group_a}

    def steady(self, group, cap=None):
        cap = cap or self.cap
        m = self.means(group)
        return float(np.mean([m[i] for i in range(cap // 2 + 1, cap + 1)]))


@pytest.fixture(scope="session")
def experiments():
    cache = {}

    def get(exp_id):
        if exp_id not in cache:
            cache[exp_id] = Result(exp_id)
        return cache[exp_id]

    return get


def test_criterion_08_profile_switch(experiments):
    e = experiments("2")
    new, old = e.means("CA_NEW"), e.means("CA_OLD")
    gap = float(np.mean([new[i] - old[i] for i in range(2, 18)]))
    fire_rows = e.rank_rows("FIRE")
    idx = [i for i in fire_rows if i >= 2]
    frac = sum(fire_rows[i].rank_b >= fire_rows[i].rank_a for i in idx) / len(idx)
    report(8, gap >= 1.0 and frac >= 0.8,
           f"E2 mean(CA_NEW - CA_OLD) over indices 2-17 = {gap:.3f} (need >= 1.0); "
           f"CA_NEW >= FIRE at {frac:.1%} of indices 2-{e.cap} (need >= 80%)")


def test_criterion_09_static(experiments):
    e = experiments("3")
    rows = e.rank_rows("FIRE")
    idx = [i for i in rows if i >= 2]
    bad = [i for i in idx if rows[i].rank_b < rows[i].rank_a]
    report(9, not bad,
           f"E3 CA_NEW rank below FIRE at {len(bad)}/{len(idx)} indices "
           f"(first: {bad[:5]}); final-half means FIRE {e.steady('FIRE'):.3f}, "
           f"CA_NEW {e.steady('CA_NEW'):.3f}")


def test_criterion_10_provider_churn_drop(experiments):
    lo, hi = experiments("4"), experiments("6")
    cap = min(lo.cap, hi.cap)
    drop_old = lo.steady("CA_OLD", cap) - hi.steady("CA_OLD", cap)
    drop_new = lo.steady("CA_NEW", cap) - hi.steady("CA_NEW", cap)
    report(10, drop_old >= 1.5 * drop_new,
           f"E4->E6 steady-state drop CA_OLD {drop_old:.3f}, CA_NEW {drop_new:.3f} "
           f"(need CA_OLD >= 1.5 x CA_NEW)")


def test_criterion_11_heavy_provider_churn(experiments):
    e = experiments("8")
    f, n = e.steady("FIRE"), e.steady("CA_NEW")
    report(11, f > n, f"E8 final-half mean FIRE {f:.3f} vs CA_NEW {n:.3f} (need FIRE > CA_NEW)")


def test_criterion_12_all_factors(experiments):
    e = experiments("14")
    vs_old, vs_fire = e.rank_rows("CA_OLD"), e.rank_rows("FIRE")
    idx = sorted(set(vs_old) & set(vs_fire))
    wins = [i for i in idx if vs_old[i].rank_b > vs_old[i].rank_a and vs_fire[i].rank_b > vs_fire[i].rank_a]
    frac = len(wins) / len(idx)
    beat_old = sum(vs_old[i].rank_b > vs_old[i].rank_a for i in idx) / len(idx)
    beat_fire = sum(vs_fire[i].rank_b > vs_fire[i].rank_a for i in idx) / len(idx)
    report(12, frac >= 0.9,
           f"E14 CA_NEW outranks both at {frac:.1%} of indices 1-{e.cap} (need >= 90%); "
           f"vs CA_OLD {beat_old:.1%}, vs FIRE {beat_fire:.1%}")


def test_criterion_13_cli_determinism(tmp_path):
    outs = []
    for name in ("first", "second"):
        out = tmp_path / name
        assert cli_main(["run", "--experiment", "1", "--nsir", "5", "--seed", "7", "--out", str(out)]) == 0
        outs.append(out)
    same = all((outs[0] / f).read_bytes() == (outs[1] / f).read_bytes()
               for f in ("aggregate.csv", "ranks.csv"))
    report(13, same, "two CLI runs of experiment 1 (nsir 5, seed 7) byte-identical: "
           f"{same}")
