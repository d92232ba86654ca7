"""Minimum-cost correction of predictions into admissible ones.

Correcting a prediction ``p`` is a weighted partial MaxSAT instance: every
requirement is a hard clause and every label's predicted polarity is a soft
unit clause whose weight is the cost of flipping that label. The solver here
is an exact branch and bound over keep/flip decisions.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .admissibility import Prediction, ScoreVector, threshold, violated_by_mask
from .requirements import RequirementSet

COST_TOL = 1e-12
WEIGHT_FLOOR = 1e-9
FLIP_EPSILON = 1e-3


class Infeasible(Exception):
    """No admissible prediction exists (within the budget, if one was given)."""


class NonPositiveWeight(ValueError):
    pass


class CorrectionPolicy(str, enum.Enum):
    MD = "md"
    AP = "ap"
    APO = "apo"


def compute_weights(
    policy: CorrectionPolicy | str,
    sv: ScoreVector | None,
    ap: Sequence[float] | None,
    theta: float,
    n_labels: int | None = None,
    clamp: bool = True,
) -> np.ndarray:
    """Per-label flip costs.

    MD gives every label weight 1. AP uses the label's average precision.
    APO scales it by the model's confidence in its current decision: the score
    when the label is positive (score > theta), one minus the score otherwise.
    """
    policy = CorrectionPolicy(policy)
    if policy is CorrectionPolicy.MD:
        n = n_labels if n_labels is not None else (len(sv) if sv is not None else len(ap))
        return np.ones(n)
    if ap is None:
        raise ValueError(f"policy {policy.value} needs average precision values")
    w = np.asarray(ap, dtype=float).copy()
    if np.any((w < 0) | (w > 1)):
        raise ValueError("average precision values must lie in [0, 1]")
    if policy is CorrectionPolicy.APO:
        if sv is None:
            raise ValueError("policy apo needs the score vector")
        o = sv.scores
        if len(o) != len(w):
            raise ValueError("score vector and AP vector differ in length")
        w = w * np.where(o > theta, o, 1.0 - o)
    if clamp:
        w = np.maximum(w, WEIGHT_FLOOR)
    elif np.any(w <= 0):
        raise NonPositiveWeight(f"non-positive weight at labels {np.flatnonzero(w <= 0).tolist()}")
    return w


def apply_flips(sv: ScoreVector, flipped: Iterable[int], theta: float, epsilon: float = FLIP_EPSILON) -> ScoreVector:
    """Move each flipped score just across the threshold.

    A score at or below theta goes to theta + epsilon, anything above goes to
    theta - epsilon. Results are clamped into [0, 1].
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    out = np.array(sv.scores, dtype=float)
    up = min(theta + epsilon, 1.0)
    down = max(theta - epsilon, 0.0)
    for i in flipped:
        out[i] = up if out[i] <= theta else down
    return ScoreVector(out, sv.id)


@dataclass(frozen=True)
class CorrectionResult:
    corrected: Prediction
    flipped: tuple[int, ...]
    cost: float
    adjusted_scores: ScoreVector | None = None
    id: str | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "flipped": list(self.flipped),
            "cost": self.cost,
            "adjusted_scores": None if self.adjusted_scores is None else self.adjusted_scores.scores.tolist(),
        }


def _bits(x: int) -> Iterator[int]:
    while x:
        low = x & -x
        yield low.bit_length() - 1
        x ^= low


class _BranchAndBound:
    """Exact min-cost repair of an assignment against hard clauses.

    Search state is (fixed, q, cost): ``fixed`` marks decided labels, ``q`` is the
    current assignment (undecided labels sit at their original value) and
    ``cost`` the weight of decided flips. Pairwise all-negative clauses are kept
    as an adjacency structure so that mutually exclusive positives can be
    bounded as cliques.
    """

    def __init__(self, n: int, pos_masks: Sequence[int], neg_masks: Sequence[int], weights: Sequence[float], p: int):
        self.n = n
        self.w = [float(x) for x in weights]
        self.p = p
        self.clauses = [(pm, nm, pm | nm) for pm, nm in zip(pos_masks, neg_masks)]
        self.occ: list[list[int]] = [[] for _ in range(n)]
        self.adj = [0] * n
        self.other: list[int] = []
        for j, (pm, nm, vm) in enumerate(self.clauses):
            for i in _bits(vm):
                self.occ[i].append(j)
            if pm == 0 and nm.bit_count() == 2:
                a, b = _bits(nm)
                self.adj[a] |= 1 << b
                self.adj[b] |= 1 << a
            else:
                self.other.append(j)
        self.nodes = 0

    # -- propagation -------------------------------------------------------

    def fix(self, fixed: int, q: int, cost: float, var: int, value: bool):
        """Decide ``var`` and unit-propagate; None on conflict."""
        clauses, occ, w, p = self.clauses, self.occ, self.w, self.p
        bit = 1 << var
        if bool(q & bit) != value:
            q ^= bit
            cost += w[var]
        fixed |= bit
        queue = [var]
        while queue:
            v = queue.pop()
            for j in occ[v]:
                pm, nm, vm = clauses[j]
                if (pm & q & fixed) or (nm & ~q & fixed):
                    continue
                free = vm & ~fixed
                if not free:
                    return None
                if free & (free - 1):
                    continue
                u = free.bit_length() - 1
                fixed |= free
                if bool(pm & free) != bool(q & free):
                    q ^= free
                    cost += w[u]
                queue.append(u)
        return fixed, q, cost

    def root(self):
        """Propagate hard unit clauses; None if they conflict."""
        fixed, q, cost = 0, self.p, 0.0
        for pm, nm, vm in self.clauses:
            if vm & (vm - 1) == 0:
                var = vm.bit_length() - 1
                if fixed >> var & 1:
                    if bool(q >> var & 1) != bool(pm):
                        return None
                    continue
                r = self.fix(fixed, q, cost, var, bool(pm))
                if r is None:
                    return None
                fixed, q, cost = r
        return fixed, q, cost

    # -- bounding ----------------------------------------------------------

    def bound(self, fixed: int, q: int) -> tuple[float, int | None]:
        """Lower bound on additional cost, and a branching label (None if q is admissible)."""
        w, adj = self.w, self.adj
        used = 0
        lb = 0.0
        degree: dict[int, int] = {}
        for v in _bits(q):
            conf = adj[v] & q
            if not conf:
                continue
            degree[v] = degree.get(v, 0) + conf.bit_count()
            if used >> v & 1:
                continue
            clique = 1 << v
            cand = conf & ~used
            while cand:
                low = cand & -cand
                clique |= low
                cand &= adj[low.bit_length() - 1]
            if clique == 1 << v:
                continue
            used |= clique
            ws = [w[i] for i in _bits(clique & ~fixed)]
            if clique & fixed:
                lb += sum(ws)
            else:
                lb += sum(ws) - max(ws)
        nq = ~q
        for j in self.other:
            pm, nm, vm = self.clauses[j]
            if pm & q or nm & nq:
                continue
            cand = vm & ~fixed
            for i in _bits(cand):
                degree[i] = degree.get(i, 0) + 1
            if not cand & used:
                used |= cand
                lb += min(w[i] for i in _bits(cand))
        if not degree:
            return lb, None
        free_deg = [(d, v) for v, d in degree.items() if not fixed >> v & 1]
        var = min(free_deg, key=lambda t: (-t[0], t[1]))[1]
        return lb, var

    # -- search ------------------------------------------------------------

    def minimize(self, state, upper: float):
        """Best (cost, q) with cost < upper - tol, searched depth-first; None if none."""
        self.best_cost = upper
        self.best_q = None
        self._min(*state)
        return None if self.best_q is None else (self.best_cost, self.best_q)

    def _min(self, fixed: int, q: int, cost: float) -> None:
        self.nodes += 1
        lb, var = self.bound(fixed, q)
        if cost + lb >= self.best_cost - COST_TOL:
            return
        if var is None:
            self.best_cost, self.best_q = cost, q
            return
        for value in (not (q >> var & 1), bool(q >> var & 1)):
            r = self.fix(fixed, q, cost, var, value)
            if r is not None:
                self._min(*r)

    def exists(self, fixed: int, q: int, cost: float, limit: float) -> int | None:
        """Any completion with cost <= limit + tol; returns its assignment."""
        self.nodes += 1
        lb, var = self.bound(fixed, q)
        if cost + lb > limit + COST_TOL:
            return None
        if var is None:
            return q
        for value in (not (q >> var & 1), bool(q >> var & 1)):
            r = self.fix(fixed, q, cost, var, value)
            if r is not None:
                found = self.exists(*r, limit)
                if found is not None:
                    return found
        return None

    def greedy(self, state) -> tuple[float, int] | None:
        """Repeatedly flip the cheapest undecided label of the first falsified clause."""
        fixed, q, cost = state
        while True:
            viol = violated_by_mask_bits(self.clauses, q)
            if viol is None:
                return cost, q
            cand = viol & ~fixed
            if not cand:
                return None
            var = min(_bits(cand), key=lambda i: (self.w[i], i))
            r = self.fix(fixed, q, cost, var, not (q >> var & 1))
            if r is None:
                return None
            fixed, q, cost = r

    def lexmin(self, state, target: float, witness: int) -> int:
        """Among completions of cost <= target, the one whose flipped set is lexicographically smallest."""
        fixed, q, cost = state
        for i in range(self.n):
            if fixed >> i & 1:
                continue
            bit = 1 << i
            flip_value = not (q & bit)
            if (witness ^ self.p) & bit:
                fixed, q, cost = self.fix(fixed, q, cost, i, flip_value)
                continue
            r = self.fix(fixed, q, cost, i, flip_value)
            if r is not None:
                found = self.exists(*r, target)
                if found is not None:
                    witness = found
                    fixed, q, cost = r
                    continue
            r = self.fix(fixed, q, cost, i, not flip_value)
            assert r is not None, "witness became inconsistent"
            fixed, q, cost = r
        return q


def violated_by_mask_bits(clauses, q: int) -> int | None:
    for pm, nm, vm in clauses:
        if not (pm & q) and (nm & q) == nm:
            return vm
    return None


def _exact_cost(weights: Sequence[float], flipped: Sequence[int]) -> float:
    return math.fsum(float(weights[i]) for i in sorted(flipped))


def correct(
    rs: RequirementSet,
    p: Prediction,
    w: Sequence[float],
    budget: float | None = None,
    *,
    sv: ScoreVector | None = None,
    theta: float | None = None,
    epsilon: float = FLIP_EPSILON,
) -> CorrectionResult:
    """Admissible prediction of minimum total flip cost.

    Among optima, the flipped index set that is smallest in sorted-tuple order
    wins. With ``budget``, raises Infeasible when the optimum exceeds it. When
    ``sv`` and ``theta`` are given the result carries flip-adjusted scores.
    """
    n = rs.n_labels
    if len(p) != n or len(w) != n:
        raise ValueError(f"prediction/weights must have {n} entries")
    if any(x <= 0 for x in w):
        raise NonPositiveWeight("weights must be positive")
    pmask = p.mask
    if not violated_by_mask(rs, pmask):
        flipped: tuple[int, ...] = ()
        q = pmask
    else:
        bb = _BranchAndBound(n, rs.pos_masks, rs.neg_masks, w, pmask)
        state = bb.root()
        if state is None:
            raise Infeasible("requirements are unsatisfiable")
        greedy = bb.greedy(state)
        upper = math.inf if greedy is None else greedy[0] + 2 * COST_TOL
        if budget is not None:
            upper = min(upper, budget + 2 * COST_TOL)
        found = bb.minimize(state, upper)
        if found is None:
            if greedy is not None and (budget is None or greedy[0] <= budget + COST_TOL):
                found = greedy
            else:
                raise Infeasible("no admissible prediction" + ("" if budget is None else f" within budget {budget}"))
        best_cost, witness = found
        q = bb.lexmin(state, best_cost, witness)
        flipped = tuple(_bits(q ^ pmask))
    cost = _exact_cost(w, flipped)
    if budget is not None and cost > budget + COST_TOL:
        raise Infeasible(f"optimal cost {cost} exceeds budget {budget}")
    adjusted = None
    if sv is not None and theta is not None:
        adjusted = apply_flips(sv, flipped, theta, epsilon)
    return CorrectionResult(Prediction.from_mask(q, n), flipped, cost, adjusted, None if sv is None else sv.id)


@dataclass(frozen=True)
class CorpusCorrection:
    results: list[CorrectionResult | Infeasible]

    @property
    def n_items(self) -> int:
        return len(self.results)

    @property
    def n_corrected(self) -> int:
        return sum(1 for r in self.results if isinstance(r, CorrectionResult) and r.flipped)

    @property
    def n_infeasible(self) -> int:
        return sum(1 for r in self.results if isinstance(r, Infeasible))

    @property
    def total_flips(self) -> int:
        return sum(len(r.flipped) for r in self.results if isinstance(r, CorrectionResult))

    def summary(self) -> dict:
        ok = [r for r in self.results if isinstance(r, CorrectionResult)]
        return {
            "n_items": self.n_items,
            "n_corrected": self.n_corrected,
            "n_infeasible": self.n_infeasible,
            "total_flips": self.total_flips,
            "mean_cost": float(np.mean([r.cost for r in ok])) if ok else 0.0,
            "mean_flips": float(np.mean([len(r.flipped) for r in ok])) if ok else 0.0,
        }


def correct_item(
    rs: RequirementSet,
    sv: ScoreVector,
    theta: float,
    policy: CorrectionPolicy | str = CorrectionPolicy.MD,
    ap: Sequence[float] | None = None,
    epsilon: float = FLIP_EPSILON,
) -> CorrectionResult:
    p = threshold(sv, theta)
    w = compute_weights(policy, sv, ap, theta, n_labels=rs.n_labels)
    return correct(rs, p, w, sv=sv, theta=theta, epsilon=epsilon)


def correct_corpus(
    rs: RequirementSet,
    svs: Iterable[ScoreVector],
    theta: float,
    policy: CorrectionPolicy | str = CorrectionPolicy.MD,
    ap: Sequence[float] | None = None,
    epsilon: float = FLIP_EPSILON,
) -> CorpusCorrection:
    """Threshold, weight, correct and re-score every box; infeasible items are kept as errors."""
    results: list[CorrectionResult | Infeasible] = []
    for sv in svs:
        try:
            results.append(correct_item(rs, sv, theta, policy, ap, epsilon))
        except Infeasible as exc:
            results.append(exc)
    return CorpusCorrection(results)


def export_wcnf(rs: RequirementSet, p: Prediction, w: Sequence[float], top: float | None = None) -> str:
    """Weighted DIMACS (``p wcnf``) for the correction instance.

    Hard clauses get weight ``top``; each label contributes a soft unit clause
    asserting its predicted polarity.
    """
    if top is None:
        top = math.fsum(float(x) for x in w) + 1.0
    fmt = repr if any(float(x) != int(x) for x in list(w) + [top]) else (lambda x: str(int(x)))
    n = rs.n_labels
    lines = [f"p wcnf {n} {len(rs) + n} {fmt(float(top))}"]
    for c in rs:
        lines.append(f"{fmt(float(top))} " + " ".join(str(x) for x in c.to_ints()) + " 0")
    for i in range(n):
        lit = i + 1 if p[i] else -(i + 1)
        lines.append(f"{fmt(float(w[i]))} {lit} 0")
    return "\n".join(lines) + "\n"
