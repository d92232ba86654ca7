import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from roadreq.admissibility import (
    CorpusMetrics,
    EmptyCorpus,
    MetricsAccumulator,
    Prediction,
    ScoreVector,
    check,
    corpus_metrics,
    metrics_sweep,
    threshold,
)
from roadreq.labels import ROAD_LABELS
from roadreq.requirements import Clause, LabelTable, RequirementSet, parse_requirements

N = 41
scores41 = st.lists(st.floats(0, 1), min_size=N, max_size=N)


def sv(values, box_id=None):
    return ScoreVector(np.asarray(values, dtype=float), box_id)


def test_threshold_basic():
    s = np.full(N, 0.1)
    s[0], s[1] = 0.6, 0.4
    p = threshold(sv(s), 0.5)
    assert p[0] and not p[1]


def test_threshold_zero_makes_positive_scores_positive():
    p = threshold(sv(np.linspace(0.01, 1, N)), 0.0)
    assert all(p.assignment)
    assert not threshold(sv(np.zeros(N)), 0.0)[0]


def test_threshold_ties_are_negative():
    assert not threshold(sv(np.full(N, 0.5)), 0.5)[0]


@pytest.mark.parametrize("theta", [-0.1, 1.1])
def test_threshold_out_of_range(theta):
    with pytest.raises(ValueError):
        threshold(sv(np.zeros(N)), theta)


def test_score_vector_rejects_out_of_range():
    with pytest.raises(ValueError):
        sv([0.5, 1.2])


def test_red_and_green_is_violation():
    rs = parse_requirements("{not Red, not Green}")
    p = Prediction.from_positive([ROAD_LABELS.index_of("Red"), ROAD_LABELS.index_of("Green")], N)
    assert check(rs, p).violated == (0,)
    assert not check(rs, p).is_admissible


def test_all_negative_violates_the_two_positive_clauses(road):
    report = check(road, Prediction((False,) * N))
    assert len(report.violated) == 2
    assert all(road[j].n_negative() == 0 for j in report.violated)


def test_all_positive_violates_the_mutual_exclusions(road):
    report = check(road, Prediction((True,) * N))
    assert len(report.violated) == 214
    assert all(road[j].n_positive() == 0 for j in report.violated)


def test_corpus_metrics_extremes(road):
    zeros = [sv(np.zeros(N)) for _ in range(3)]
    ones = [sv(np.ones(N)) for _ in range(3)]
    m0 = corpus_metrics(road, zeros, 0.5)
    m1 = corpus_metrics(road, ones, 0.5)
    assert (m0.pct_nonadmissible, m0.avg_violations_per_prediction) == (100.0, 2.0)
    assert m0.pct_constraints_violated_once == pytest.approx(2 / 243 * 100)
    assert (m1.pct_nonadmissible, m1.avg_violations_per_prediction) == (100.0, 214.0)
    assert m1.pct_constraints_violated_once == pytest.approx(214 / 243 * 100)


def test_corpus_metrics_single_admissible():
    rs = RequirementSet([Clause.of(-1, -2)], LabelTable.generic(2))
    m = corpus_metrics(rs, [sv([0.9, 0.1])], 0.5)
    assert (m.pct_nonadmissible, m.avg_violations_per_prediction, m.pct_constraints_violated_once) == (0.0, 0.0, 0.0)


def test_corpus_metrics_empty(road):
    with pytest.raises(EmptyCorpus):
        corpus_metrics(road, [], 0.5)


def test_sweep_single_theta_matches_corpus_metrics(road):
    rng = np.random.default_rng(3)
    svs = [sv(rng.random(N)) for _ in range(20)]
    assert metrics_sweep(road, svs, [0.5]) == [(0.5, corpus_metrics(road, svs, 0.5))]


def _oracle_metrics(rs, svs, theta):
    # plain per-clause evaluation, no bitmasks
    n_bad = n_viol = 0
    ever = set()
    for s in svs:
        pos = [x > theta for x in s.scores]
        viol = [j for j, c in enumerate(rs) if not any(pos[l.label] == l.positive for l in c)]
        n_bad += bool(viol)
        n_viol += len(viol)
        ever.update(viol)
    k = len(svs)
    return 100 * n_bad / k, n_viol / k, 100 * len(ever) / len(rs)


def test_sweep_against_independent_recompute(road):
    rng = np.random.default_rng(11)
    svs = [sv(rng.random(N)) for _ in range(40)]
    thetas = [round(0.1 * k, 1) for k in range(1, 10)]
    rows = metrics_sweep(road, svs, thetas)
    assert [t for t, _ in rows] == thetas
    for t, m in rows:
        expect = _oracle_metrics(road, svs, t)
        got = (m.pct_nonadmissible, m.avg_violations_per_prediction, m.pct_constraints_violated_once)
        assert got == pytest.approx(expect, abs=1e-12)


def test_accumulator_merge_is_order_independent():
    a, b = MetricsAccumulator(5), MetricsAccumulator(5)
    a.add([0, 1])
    a.add([])
    b.add([3])
    assert a.merge(b).result() == b.merge(a).result()
    assert a.merge(b).result() == CorpusMetrics(200 / 3, 1.0, 60.0, 3)


@given(scores41, st.floats(0, 1), st.floats(0, 1))
def test_threshold_antitone(scores, t1, t2):
    lo, hi = sorted((t1, t2))
    p_lo, p_hi = threshold(sv(scores), lo), threshold(sv(scores), hi)
    assert all(a or not b for a, b in zip(p_lo.assignment, p_hi.assignment))


@settings(max_examples=60)
@given(st.lists(st.booleans(), min_size=N, max_size=N), st.data())
def test_check_monotone_in_satisfied_literals(bits, data):
    from roadreq.requirements import road_requirements

    rs = road_requirements()
    p = Prediction(tuple(bits))
    before = set(check(rs, p).violated)
    j = data.draw(st.integers(0, len(rs) - 1))
    lit = data.draw(st.sampled_from(rs[j].literals))
    # make this literal true: clause j is then satisfied
    q = list(bits)
    q[lit.label] = lit.positive
    after = set(check(rs, Prediction(tuple(q))).violated)
    assert j not in after
    # new violations can only come from clauses holding the opposite literal
    opposite = {k for k, c in enumerate(rs) if -lit in c.literals}
    assert after - before <= opposite


@settings(max_examples=40)
@given(st.lists(scores41, min_size=1, max_size=5), st.floats(0, 1))
def test_pct_nonadmissible_is_exact_fraction(rows, theta):
    from roadreq.requirements import road_requirements

    rs = road_requirements()
    svs = [sv(r) for r in rows]
    m = corpus_metrics(rs, svs, theta)
    bad = sum(1 for s in svs if not check(rs, threshold(s, theta)).is_admissible)
    assert m.pct_nonadmissible == 100.0 * bad / len(svs)
    assert 0 <= m.pct_constraints_violated_once <= 100
    assert m.avg_violations_per_prediction <= len(rs)
