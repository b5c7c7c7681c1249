import random

import pytest
from hypothesis import given, settings, strategies as st

from fairaudit.fairness import (
    GroupRate,
    GroupRates,
    dpd_class,
    eod_class,
    fairness_summary,
    fpd_class,
    group_rates,
    tpd_class,
)
from fairaudit.ingest import GroupingScheme, Roster, SubjectProfile, apply_grouping
from fairaudit.metrics import ConfusionTable, Rate, recall, ratio
from fairaudit.simulator import paper_roster

from conftest import make_log, perfect_log, random_case
import oracle


def rates(**groups):
    return GroupRates("c", {
        g: GroupRate(Rate(sel), Rate(tpr), Rate(fpr)) for g, (sel, tpr, fpr) in groups.items()
    })


def test_group_rates_perfect_selection(r4):
    r = group_rates(perfect_log(r4), r4, apply_grouping(r4, "gender"), "s1")
    assert r.rates["Male"].selection_rate == Rate(0.5)
    assert r.rates["Female"].selection_rate == Rate(0.0)


def test_group_rates_perfect_tpr_zero_fill(r4):
    r = group_rates(perfect_log(r4), r4, apply_grouping(r4, "gender"), "s1")
    assert r.rates["Male"].tpr == Rate(1.0)
    assert r.rates["Female"].tpr == Rate(0.0, defined=False)
    assert r.rates["Female"].fpr == Rate(0.0)


def test_group_rates_order_independent(r4):
    rng = random.Random(3)
    pairs = [(rng.choice(r4.ids), rng.choice(r4.ids)) for _ in range(80)]
    g = apply_grouping(r4, "ethnicity")
    a = group_rates(make_log(pairs), r4, g, "s2")
    rng.shuffle(pairs)
    b = group_rates(make_log(pairs), r4, g, "s2")
    assert a == b


def test_group_rates_needs_two_groups():
    roster = Roster([SubjectProfile("a", 30, "Male", "A"), SubjectProfile("b", 31, "Male", "A")])
    with pytest.raises(ValueError):
        group_rates(make_log([("a", "a")]), roster, apply_grouping(roster, "gender"), "a")


def test_empty_group_zero_fills():
    roster = Roster([SubjectProfile("a", 30, "M", "A"), SubjectProfile("b", 31, "F", "A")])
    r = group_rates(make_log([("a", "a")]), roster, apply_grouping(roster, "gender"), "a")
    assert r.rates["F"].selection_rate == Rate(0.0, defined=False)
    assert r.rates["F"].fpr == Rate(0.0, defined=False)


def test_dpd_equal_rates_is_zero():
    assert dpd_class(rates(x=(0.2, 0, 0), y=(0.2, 0, 0), z=(0.2, 0, 0))) == 0


def test_dpd_from_counts():
    r = GroupRates("c", {
        "X": GroupRate(ratio(4, 10), Rate(0), Rate(0)),
        "Y": GroupRate(ratio(2, 20), Rate(0), Rate(0)),
    })
    assert dpd_class(r) == pytest.approx(0.3, abs=1e-15)


def test_dpd_r4_perfect(r4):
    assert dpd_class(group_rates(perfect_log(r4), r4, apply_grouping(r4, "gender"), "s1")) == 0.5


@pytest.mark.parametrize("attribute", ["gender", "ethnicity", "age"])
@pytest.mark.parametrize("cls", ["s1", "s2", "s3", "s4"])
def test_perfect_log_tpd_fpd_eod(r4, attribute, cls):
    r = group_rates(perfect_log(r4), r4, apply_grouping(r4, attribute), cls)
    assert tpd_class(r) == 1.0
    assert fpd_class(r) == 0.0
    assert eod_class(r) == 1.0


def test_tpd_equals_own_group_recall(r4):
    # s1's positives all sit in Male with recall 0.6
    pairs = [("s1", "s1")] * 6 + [("s1", "s3")] * 4 + [("s2", "s2")] * 10
    log = make_log(pairs)
    r = group_rates(log, r4, apply_grouping(r4, "gender"), "s1")
    assert tpd_class(r) == pytest.approx(0.6, abs=1e-15)
    assert tpd_class(r) == recall(ConfusionTable.from_log(log).for_class("s1")).value


def test_eod_is_max():
    assert eod_class(rates(a=(0, 0.6, 0.1), b=(0, 0.0, 0.0))) == pytest.approx(0.6)
    assert eod_class(rates(a=(0, 0, 0), b=(0, 0, 0))) == 0


def test_gap_needs_two_groups():
    with pytest.raises(ValueError):
        dpd_class(rates(a=(0.1, 0, 0)))


def test_summary_r4_gender(r4):
    s = fairness_summary(perfect_log(r4), r4, apply_grouping(r4, "gender"))
    assert s.dpd == 50.0
    assert s.eod == 100.0 and s.tpd == 100.0 and s.fpd == 0.0
    assert s.class_count == 4 and s.group_count == 2


@pytest.mark.parametrize("attribute", ["gender", "ethnicity", "age"])
def test_summary_r4_eod_any_grouping(r4, attribute):
    assert fairness_summary(perfect_log(r4), r4, apply_grouping(r4, attribute)).eod == 100.0


@pytest.mark.parametrize("attribute, expected", [("age", 5.0), ("gender", 2.5), ("ethnicity", 3.75)])
def test_summary_paper_roster_perfect(attribute, expected):
    roster = paper_roster()
    s = fairness_summary(perfect_log(roster, 3), roster, apply_grouping(roster, attribute))
    assert s.dpd == pytest.approx(expected, abs=1e-9)


def test_summary_empty_roster():
    with pytest.raises(ValueError):
        fairness_summary((), Roster(), GroupingScheme("gender", {}))


def test_summary_empty_log_is_zero_and_undefined(r4):
    s = fairness_summary((), r4, apply_grouping(r4, "gender"))
    assert (s.dpd, s.tpd, s.fpd, s.eod) == (0, 0, 0, 0)
    assert not s.defined


def test_summary_rejects_subject_outside_grouping(r4):
    g = GroupingScheme("gender", {"s1": "M", "s2": "F"})
    with pytest.raises(ValueError):
        fairness_summary(perfect_log(r4), r4, g)


def test_workers_do_not_change_result():
    rng = random.Random(11)
    roster = paper_roster()
    log = make_log((s, rng.choice(roster.ids)) for s in roster.ids for _ in range(20))
    g = apply_grouping(roster, "age")
    assert fairness_summary(log, roster, g) == fairness_summary(log, roster, g, workers=4)


@settings(max_examples=200, deadline=None)
@given(st.randoms(use_true_random=False))
def test_summary_matches_brute_force(rnd):
    roster, log = random_case(rnd)
    g = apply_grouping(roster, "gender")
    s = fairness_summary(log, roster, g)
    attr = lambda p: p.gender
    for cf in s.per_class:
        assert (cf.dpd, cf.tpd, cf.fpd, cf.eod) == oracle.class_gaps(log, roster, attr, cf.target)
    exact = oracle.exact_summary(log, roster, attr)
    for got, want in zip((s.dpd, s.tpd, s.fpd, s.eod), exact):
        assert got == pytest.approx(float(want), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.randoms(use_true_random=False))
def test_group_label_permutation_invariance(rnd):
    roster, log = random_case(rnd)
    g = apply_grouping(roster, "gender")
    labels = g.labels
    renamed = dict(zip(labels, rnd.sample(labels, len(labels))))
    g2 = GroupingScheme("gender", {sid: renamed[l] for sid, l in g.assignment.items()})
    for sid in roster.ids:
        a, b = group_rates(log, roster, g, sid), group_rates(log, roster, g2, sid)
        assert (dpd_class(a), tpd_class(a), fpd_class(a)) == (dpd_class(b), tpd_class(b), fpd_class(b))


@settings(max_examples=100, deadline=None)
@given(st.randoms(use_true_random=False))
def test_summary_invariant_under_reorder_and_relabel(rnd):
    roster, log = random_case(rnd)
    ids = list(roster.ids)
    perm = dict(zip(ids, rnd.sample(ids, len(ids))))
    roster2 = Roster(
        SubjectProfile(perm[s.subject_id], s.age_years, s.gender, s.ethnicity) for s in roster
    )
    records = [(perm[r.true_subject], perm[r.predicted_subject]) for r in log]
    rnd.shuffle(records)
    a = fairness_summary(log, roster, apply_grouping(roster, "gender"))
    b = fairness_summary(make_log(records), roster2, apply_grouping(roster2, "gender"))
    for field in ("dpd", "tpd", "fpd", "eod"):
        assert getattr(a, field) == pytest.approx(getattr(b, field), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.randoms(use_true_random=False))
def test_k_over_n_law(rnd):
    n = rnd.randint(2, 25)
    k = rnd.randint(2, min(5, n))
    labels = [f"g{j}" for j in range(k)] + [f"g{rnd.randrange(k)}" for _ in range(n - k)]
    roster = Roster(SubjectProfile(f"p{i}", 30, labels[i], "A") for i in range(n))
    log = make_log((sid, sid) for sid in roster.ids for _ in range(rnd.randint(1, 7)))
    s = fairness_summary(log, roster, apply_grouping(roster, "gender"))
    assert s.dpd == pytest.approx(100 * k / n, abs=1e-9)
    assert 0 <= s.dpd <= 100 and 0 <= s.eod <= 100
