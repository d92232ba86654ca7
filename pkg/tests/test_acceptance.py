"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import json
import random
import statistics
import time

import numpy as np
import pytest

import conftest
from oracles import brute_correct_np, brute_count_np, random_clauses
from roadreq.admissibility import Prediction, ScoreVector, check
from roadreq.cli import main
from roadreq.fuzzy import LossConfig, finite_difference_gradient, loss, saturation_margin
from roadreq.maxsat import Infeasible, correct, correct_item
from roadreq.requirements import build, road_requirements
from roadreq.sat import count_models

N = 41


def test_1_model_count(capsys, verdict):
    t0 = time.perf_counter()
    code = main(["count"])
    elapsed = time.perf_counter() - t0
    got = int(capsys.readouterr().out.strip())
    verdict(1, code == 0 and got == 4_985_868 and elapsed <= 60,
            f"count={got:,} expected 4,985,868 ({elapsed:.2f}s)")


STATS_EXPECTED = {
    "n_clauses": 243,
    "avg_len": 2.86,
    "n_labels_pos": 41,
    "n_labels_neg": 38,
    "min_occurrences": 2,
    "avg_occurrences": 16.95,
    "max_occurrences": 31,
    "avg_negative": 1.87,
    "avg_positive": 0.96,
}
BUCKETS_EXPECTED = {
    2: (215, 1.995, 0.005),
    3: (5, 1, 2),
    7: (1, 1, 6),
    8: (6, 1, 7),
    9: (6, 1, 8),
    10: (1, 0, 10),
    12: (1, 1, 11),
    14: (1, 0, 14),
    15: (7, 1, 14),
}


def _cell_ok(expected, got):
    if isinstance(expected, int) and not isinstance(expected, bool) and isinstance(got, int):
        return got == expected
    return abs(got - expected) <= 0.005 + 1e-12


def test_2_corpus_statistics(capsys, verdict):
    assert main(["stats"]) == 0
    got = json.loads(capsys.readouterr().out)
    failed = []
    n_cells = 0
    for key, want in STATS_EXPECTED.items():
        n_cells += 1
        if not _cell_ok(want, got[key]):
            failed.append(f"{key}={got[key]:.4g} (want {want})")
    buckets = {b["length"]: b for b in got["histogram"]}
    if set(buckets) != set(BUCKETS_EXPECTED):
        failed.append(f"bucket lengths {sorted(buckets)}")
    for length, (count, neg, pos) in BUCKETS_EXPECTED.items():
        b = buckets.get(length, {"count": 0, "avg_negative": float("nan"), "avg_positive": float("nan")})
        for name, want, have in (("count", count, b["count"]), ("neg", neg, b["avg_negative"]), ("pos", pos, b["avg_positive"])):
            n_cells += 1
            if not _cell_ok(want, have):
                failed.append(f"n={length} {name}={have} (want {want})")
    detail = f"{n_cells - len(failed)}/{n_cells} cells match" + (f"; mismatches: {', '.join(failed)}" if failed else "")
    verdict(2, not failed, detail)


def test_3_theta_limits(verdict):
    rs = road_requirements()
    all_pos = len(check(rs, Prediction((True,) * N)).violated)
    all_neg = len(check(rs, Prediction((False,) * N)).violated)
    verdict(3, (all_pos, all_neg) == (214, 2), f"all-positive violates {all_pos}, all-negative violates {all_neg}")


def test_4_maxsat_optimality(verdict):
    rng = random.Random(2024)
    t0 = time.perf_counter()
    n_inst = n_feasible = 0
    bad = []
    while n_feasible < 1000:
        n = rng.randint(2, 16)
        cls = random_clauses(rng, n, rng.randint(1, 40))
        p = tuple(rng.random() < 0.5 for _ in range(n))
        if rng.random() < 0.3:
            w = [float(rng.randint(1, 3)) for _ in range(n)]
        else:
            w = [rng.uniform(1e-3, 1.0) for _ in range(n)]
        expect = brute_correct_np(n, cls, p, w)
        n_inst += 1
        try:
            r = correct(build(cls, n), Prediction(p), w)
        except Infeasible:
            if expect is not None:
                bad.append((n, cls))
            continue
        n_feasible += 1
        if expect is None or abs(r.cost - expect[0]) > 1e-12:
            bad.append((n, cls))
    elapsed = time.perf_counter() - t0
    verdict(4, not bad and elapsed <= 60,
            f"{n_feasible} feasible instances ({n_inst - n_feasible} infeasible also checked), {len(bad)} cost mismatches, {elapsed:.1f}s")


@pytest.mark.slow
def test_5_correction_soundness_at_scale(verdict):
    rs = road_requirements()
    rng = np.random.default_rng(5)
    ap = rng.uniform(0.2, 0.9, N)
    thetas = [round(0.1 * k, 1) for k in range(1, 10)]
    policies = ["md", "ap", "apo"]
    times = []
    n_bad = 0
    for k in range(10_000):
        sv = ScoreVector(rng.random(N), str(k))
        theta = thetas[k % len(thetas)]
        t0 = time.perf_counter()
        r = correct_item(rs, sv, theta, policies[k % 3], ap)
        times.append(time.perf_counter() - t0)
        if not check(rs, r.corrected).is_admissible:
            n_bad += 1
    med = statistics.median(times) * 1000
    verdict(5, n_bad == 0 and med <= 10,
            f"{10_000 - n_bad}/10000 admissible, median {med:.2f} ms, max {max(times) * 1000:.1f} ms")


def test_6_no_redundant_clauses(capsys, verdict):
    code = main(["check-redundant"])
    lines = capsys.readouterr().out.splitlines()
    verdict(6, code == 0 and not lines, f"{len(lines)} redundant clause(s) reported")


def _sample_away_from_kinks(rs, tnorm, rng, margin=1e-3):
    while True:
        sv = ScoreVector(rng.uniform(0.0, 1.0, N))
        if saturation_margin(rs, sv, tnorm) >= margin:
            return sv


@pytest.mark.slow
def test_7_gradient_checks(verdict):
    rs = road_requirements()
    rng = np.random.default_rng(7)
    worst = {}
    for tnorm in ("product", "lukasiewicz", "goedel"):
        cfg = LossConfig(tnorm)
        err = 0.0
        for _ in range(100):
            sv = _sample_away_from_kinks(rs, tnorm, rng)
            fd = finite_difference_gradient(rs, sv, cfg, h=1e-6)
            err = max(err, float(np.max(np.abs(loss(rs, sv, cfg).gradient - fd))))
        worst[tnorm] = err
    ok = all(e <= 1e-4 for e in worst.values())
    verdict(7, ok, "max |analytic - fd| over 100 vectors: " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))


def test_8_counting_oracle(verdict):
    rng = random.Random(8)
    bad = 0
    for i in range(500):
        n = rng.randint(1, 20)
        cls = random_clauses(rng, n, rng.randint(0, 3 * n))
        if count_models(build(cls, n)) != brute_count_np(n, cls):
            bad += 1
    verdict(8, bad == 0, f"500 instances up to 20 labels, {bad} mismatches")


def test_9_excluded():
    line = ("[acceptance 9] EXCLUDED: detection f-mAP and per-model violation curves need the video dataset "
            "and trained detectors; covered instead by criteria 3-5")
    conftest.ACCEPTANCE.append(line)
    pytest.skip(line)
