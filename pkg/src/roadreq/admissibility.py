"""Thresholding score vectors into predictions and measuring constraint violations."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .requirements import RequirementSet


class EmptyCorpus(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ScoreVector:
    """Model outputs for one bounding box, one score in [0, 1] per label."""

    scores: np.ndarray
    id: str | None = None

    def __post_init__(self):
        arr = np.asarray(self.scores, dtype=float)
        if arr.ndim != 1:
            raise ValueError("scores must be one-dimensional")
        if not np.all((arr >= 0.0) & (arr <= 1.0)):
            raise ValueError(f"scores outside [0, 1] for box {self.id!r}")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "scores", arr)

    def __len__(self) -> int:
        return len(self.scores)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ScoreVector) and self.id == other.id and np.array_equal(self.scores, other.scores)


@dataclass(frozen=True)
class Prediction:
    """A total assignment: ``assignment[i]`` is True when label i is predicted positive."""

    assignment: tuple[bool, ...]

    def __post_init__(self):
        object.__setattr__(self, "assignment", tuple(bool(x) for x in self.assignment))

    @classmethod
    def from_mask(cls, mask: int, n: int) -> "Prediction":
        return cls(tuple(bool((mask >> i) & 1) for i in range(n)))

    @classmethod
    def from_positive(cls, positives: Iterable[int], n: int) -> "Prediction":
        pos = set(positives)
        return cls(tuple(i in pos for i in range(n)))

    @property
    def mask(self) -> int:
        m = 0
        for i, v in enumerate(self.assignment):
            if v:
                m |= 1 << i
        return m

    def __len__(self) -> int:
        return len(self.assignment)

    def __getitem__(self, i: int) -> bool:
        return self.assignment[i]

    def positives(self) -> list[int]:
        return [i for i, v in enumerate(self.assignment) if v]

    def flip(self, indices: Iterable[int]) -> "Prediction":
        a = list(self.assignment)
        for i in indices:
            a[i] = not a[i]
        return Prediction(tuple(a))


@dataclass(frozen=True)
class ViolationReport:
    violated: tuple[int, ...]

    @property
    def is_admissible(self) -> bool:
        return not self.violated


def _check_theta(theta: float) -> None:
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"threshold {theta} outside [0, 1]")


def threshold(sv: ScoreVector, theta: float) -> Prediction:
    """Positive iff score > theta; a score equal to theta is negative."""
    _check_theta(theta)
    return Prediction(tuple((sv.scores > theta).tolist()))


def violated_by_mask(rs: RequirementSet, mask: int) -> list[int]:
    # clause falsified iff no positive literal is true and no negative literal is false
    return [
        j
        for j, (pm, nm) in enumerate(zip(rs.pos_masks, rs.neg_masks))
        if not (pm & mask) and (nm & mask) == nm
    ]


def check(rs: RequirementSet, p: Prediction) -> ViolationReport:
    if len(p) != rs.n_labels:
        raise ValueError(f"prediction has {len(p)} labels, requirement set has {rs.n_labels}")
    return ViolationReport(tuple(violated_by_mask(rs, p.mask)))


def is_admissible(rs: RequirementSet, p: Prediction) -> bool:
    return check(rs, p).is_admissible


@dataclass(frozen=True)
class CorpusMetrics:
    pct_nonadmissible: float
    avg_violations_per_prediction: float
    pct_constraints_violated_once: float
    n_predictions: int = 0

    def to_dict(self) -> dict:
        return {
            "pct_nonadmissible": self.pct_nonadmissible,
            "avg_violations_per_prediction": self.avg_violations_per_prediction,
            "pct_constraints_violated_once": self.pct_constraints_violated_once,
            "n_predictions": self.n_predictions,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CorpusMetrics":
        return cls(**d)


@dataclass
class MetricsAccumulator:
    """Additive violation counts; accumulators merge in any order."""

    n_clauses: int
    n_predictions: int = 0
    n_nonadmissible: int = 0
    n_violations: int = 0
    ever_violated: set[int] = field(default_factory=set)

    def add(self, violated: Sequence[int]) -> None:
        self.n_predictions += 1
        if violated:
            self.n_nonadmissible += 1
            self.n_violations += len(violated)
            self.ever_violated.update(violated)

    def merge(self, other: "MetricsAccumulator") -> "MetricsAccumulator":
        return MetricsAccumulator(
            self.n_clauses,
            self.n_predictions + other.n_predictions,
            self.n_nonadmissible + other.n_nonadmissible,
            self.n_violations + other.n_violations,
            self.ever_violated | other.ever_violated,
        )

    def result(self) -> CorpusMetrics:
        if self.n_predictions == 0:
            raise EmptyCorpus("no predictions in corpus")
        n = self.n_predictions
        pct_once = 100.0 * len(self.ever_violated) / self.n_clauses if self.n_clauses else 0.0
        return CorpusMetrics(100.0 * self.n_nonadmissible / n, self.n_violations / n, pct_once, n)


def metrics_sweep(
    rs: RequirementSet, svs: Iterable[ScoreVector], thetas: Sequence[float]
) -> list[tuple[float, CorpusMetrics]]:
    """Violation metrics at each threshold, in a single pass over ``svs``."""
    for t in thetas:
        _check_theta(t)
    accs = [MetricsAccumulator(len(rs)) for _ in thetas]
    for sv in svs:
        if len(sv) != rs.n_labels:
            raise ValueError(f"box {sv.id!r} has {len(sv)} scores, expected {rs.n_labels}")
        for t, acc in zip(thetas, accs):
            acc.add(violated_by_mask(rs, threshold(sv, t).mask))
    return [(t, acc.result()) for t, acc in zip(thetas, accs)]


def corpus_metrics(rs: RequirementSet, svs: Iterable[ScoreVector], theta: float) -> CorpusMetrics:
    return metrics_sweep(rs, svs, [theta])[0][1]


DEFAULT_THETAS = tuple(round(0.1 * k, 1) for k in range(1, 10))
