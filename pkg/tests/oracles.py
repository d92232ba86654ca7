"""Brute-force references, written independently of the package internals."""

import itertools
import math


def satisfies(assignment, clauses):
    """assignment: tuple of bools; clauses: signed 1-based ints."""
    return all(any(assignment[abs(x) - 1] == (x > 0) for x in c) for c in clauses)


def all_assignments(n):
    return itertools.product((False, True), repeat=n)


def brute_count(n, clauses):
    return sum(1 for a in all_assignments(n) if satisfies(a, clauses))


def brute_entails(n, clauses, clause):
    return all(satisfies(a, [clause]) for a in all_assignments(n) if satisfies(a, clauses))


def brute_correct(n, clauses, p, weights):
    """(cost, flipped) of the cheapest admissible assignment; ties by sorted flipped tuple."""
    best = None
    for a in all_assignments(n):
        if not satisfies(a, clauses):
            continue
        flipped = tuple(i for i in range(n) if a[i] != p[i])
        cost = sum(weights[i] for i in flipped)
        if best is None or cost < best[0] - 1e-12 or (abs(cost - best[0]) <= 1e-12 and flipped < best[1]):
            best = (cost, flipped)
    return best


def min_hamming(n, clauses, p):
    return min(
        (sum(x != y for x, y in zip(a, p)) for a in all_assignments(n) if satisfies(a, clauses)),
        default=None,
    )


def random_clauses(rng, n, m, max_len=4):
    out = []
    for _ in range(m):
        k = rng.randint(1, min(max_len, n))
        vs = rng.sample(range(1, n + 1), k)
        out.append(tuple(v if rng.random() < 0.5 else -v for v in vs))
    return out


# Vectorised enumeration for the larger acceptance instances (up to ~20 labels).
# Assignment k sets label i true iff bit i of k is set.


def _masks(clause):
    pos = sum(1 << (x - 1) for x in clause if x > 0)
    neg = sum(1 << (-x - 1) for x in clause if x < 0)
    return pos, neg


def satisfying_np(n, clauses):
    import numpy as np

    a = np.arange(1 << n, dtype=np.int64)
    ok = np.ones(1 << n, dtype=bool)
    for c in clauses:
        pos, neg = _masks(c)
        ok &= ((a & pos) != 0) | ((a & neg) != neg)
    return a[ok]


def brute_count_np(n, clauses):
    return int(satisfying_np(n, clauses).size)


def brute_correct_np(n, clauses, p, weights, tol=1e-12):
    import numpy as np

    models = satisfying_np(n, clauses)
    if models.size == 0:
        return None
    pmask = sum(1 << i for i in range(n) if p[i])
    diff = models ^ pmask
    cost = np.zeros(models.size)
    for i in range(n):
        cost += np.where((diff >> i) & 1, float(weights[i]), 0.0)
    best = cost.min()
    ties = diff[cost <= best + tol]
    flips = min(tuple(i for i in range(n) if (int(d) >> i) & 1) for d in ties)
    return math.fsum(float(weights[i]) for i in flips), flips
