"""Fuzzy relaxation of the requirements as a differentiable penalty.

Each clause is relaxed with the s-norm dual to a t-norm, literals with the
standard negation ``1 - x``. The penalty summed over clauses is

    loss = alpha * sum_i (1 - t(r_i))

and its gradient with respect to the label scores is computed analytically.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import IO, Iterable

import numpy as np

from .admissibility import EmptyCorpus, ScoreVector
from .requirements import Clause, Literal, RequirementSet

ALPHA_GRID = (1.0, 10.0, 100.0)


class TNorm(str, enum.Enum):
    PRODUCT = "product"
    GOEDEL = "goedel"
    LUKASIEWICZ = "lukasiewicz"


@dataclass(frozen=True)
class LossConfig:
    tnorm: TNorm = TNorm.PRODUCT
    alpha: float = 1.0
    subgradient_rule: str = "first-argmax"
    log_space: bool = False
    reduction: str = "sum"

    def __post_init__(self):
        object.__setattr__(self, "tnorm", TNorm(self.tnorm))
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.subgradient_rule != "first-argmax":
            raise ValueError(f"unknown subgradient rule {self.subgradient_rule!r}")
        if self.reduction not in ("sum", "mean"):
            raise ValueError("reduction must be 'sum' or 'mean'")


@dataclass(frozen=True)
class LossResult:
    total: float
    per_clause: np.ndarray
    gradient: np.ndarray
    id: str | None = None

    def to_dict(self) -> dict:
        return {"id": self.id, "loss": self.total, "grad": self.gradient.tolist()}


def literal_value(lit: Literal, sv: ScoreVector) -> float:
    o = float(sv.scores[lit.label])
    return o if lit.positive else 1.0 - o


def _snorm(tnorm: TNorm, a: float, b: float) -> float:
    if tnorm is TNorm.PRODUCT:
        return a + b - a * b
    if tnorm is TNorm.GOEDEL:
        return max(a, b)
    return min(1.0, a + b)


def clause_eval(tnorm: TNorm | str, c: Clause, sv: ScoreVector) -> float:
    """Degree to which ``c`` holds: the s-norm folded left over its literal values."""
    tnorm = TNorm(tnorm)
    vals = [literal_value(lit, sv) for lit in c]
    acc = vals[0]
    for v in vals[1:]:
        acc = _snorm(tnorm, acc, v)
    return acc


def _clause_and_grad(tnorm: TNorm, c: Clause, o: np.ndarray, log_space: bool) -> tuple[float, list[tuple[int, float]]]:
    """Clause degree plus d(degree)/d(score) for each label in the clause."""
    idx = [lit.label for lit in c]
    sign = [1.0 if lit.positive else -1.0 for lit in c]
    vals = [o[i] if lit.positive else 1.0 - o[i] for i, lit in zip(idx, c)]
    k = len(vals)
    if tnorm is TNorm.PRODUCT:
        comp = [1.0 - v for v in vals]
        if log_space:
            with np.errstate(divide="ignore"):
                logs = np.log(comp)
            degree = 1.0 - float(np.exp(logs.sum()))
        else:
            acc = vals[0]
            for v in vals[1:]:
                acc = acc + v - acc * v
            degree = acc
        # d/dv_k of 1 - prod(1 - v) is the product of the other complements
        prefix = [1.0] * (k + 1)
        for m in range(k):
            prefix[m + 1] = prefix[m] * comp[m]
        suffix = 1.0
        grads = [0.0] * k
        for m in range(k - 1, -1, -1):
            grads[m] = prefix[m] * suffix
            suffix *= comp[m]
        return degree, [(i, s * g) for i, s, g in zip(idx, sign, grads)]
    if tnorm is TNorm.GOEDEL:
        best = max(range(k), key=lambda m: (vals[m], -m))
        return vals[best], [(idx[best], sign[best])]
    total = sum(vals)
    if total < 1.0:
        return total, [(i, s) for i, s in zip(idx, sign)]
    return 1.0, []


def loss(rs: RequirementSet, sv: ScoreVector, cfg: LossConfig = LossConfig()) -> LossResult:
    o = np.asarray(sv.scores, dtype=float)
    if len(o) != rs.n_labels:
        raise ValueError(f"score vector has {len(o)} entries, expected {rs.n_labels}")
    per_clause = np.empty(len(rs))
    grad = np.zeros(rs.n_labels)
    for j, c in enumerate(rs):
        degree, parts = _clause_and_grad(cfg.tnorm, c, o, cfg.log_space)
        per_clause[j] = degree
        for i, g in parts:
            grad[i] -= g
    total = cfg.alpha * float(np.sum(1.0 - per_clause))
    return LossResult(total, per_clause, cfg.alpha * grad, sv.id)


def loss_corpus(rs: RequirementSet, svs: Iterable[ScoreVector], cfg: LossConfig = LossConfig(), sink: IO[str] | None = None) -> LossResult:
    """Aggregate loss and gradient over a corpus (sum, or mean with ``cfg.reduction='mean'``).

    ``per_clause`` of the result holds the aggregated clause penalties
    ``alpha * (1 - t(r_i))``. When ``sink`` is given, one JSON line per item is written to it.
    """
    n = 0
    total = 0.0
    penalty = np.zeros(len(rs))
    grad = np.zeros(rs.n_labels)
    for sv in svs:
        r = loss(rs, sv, cfg)
        n += 1
        total += r.total
        penalty += cfg.alpha * (1.0 - r.per_clause)
        grad += r.gradient
        if sink is not None:
            sink.write(json.dumps(r.to_dict()) + "\n")
    if n == 0:
        raise EmptyCorpus("no score vectors")
    if cfg.reduction == "mean":
        total, penalty, grad = total / n, penalty / n, grad / n
    return LossResult(total, penalty, grad)


def finite_difference_gradient(rs: RequirementSet, sv: ScoreVector, cfg: LossConfig, h: float = 1e-6) -> np.ndarray:
    """Central differences of the total loss, one label at a time."""
    o = np.asarray(sv.scores, dtype=float)
    out = np.empty(len(o))
    for i in range(len(o)):
        hi, lo = o.copy(), o.copy()
        hi[i] = min(o[i] + h, 1.0)
        lo[i] = max(o[i] - h, 0.0)
        f_hi = loss(rs, ScoreVector(hi), cfg).total
        f_lo = loss(rs, ScoreVector(lo), cfg).total
        out[i] = (f_hi - f_lo) / (hi[i] - lo[i])
    return out


def saturation_margin(rs: RequirementSet, sv: ScoreVector, tnorm: TNorm | str) -> float:
    """Distance to the nearest point where the loss is not differentiable.

    Lukasiewicz: how far each clause's literal sum is from 1. Goedel: the gap
    between the largest and second-largest literal value in each clause.
    Product is smooth, so the margin is infinite.
    """
    tnorm = TNorm(tnorm)
    if tnorm is TNorm.PRODUCT:
        return float("inf")
    margin = float("inf")
    for c in rs:
        vals = sorted((literal_value(lit, sv) for lit in c), reverse=True)
        if tnorm is TNorm.LUKASIEWICZ:
            margin = min(margin, abs(sum(vals) - 1.0))
        elif len(vals) > 1:
            margin = min(margin, vals[0] - vals[1])
    return margin
