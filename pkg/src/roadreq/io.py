"""File formats: prediction JSON Lines, AP vectors and report files."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Iterable, Iterator, TextIO

from .admissibility import CorpusMetrics, Prediction, ScoreVector


class InputError(ValueError):
    """Malformed input file; message names the file position."""


@dataclass(frozen=True)
class Box:
    sv: ScoreVector
    gt: Prediction | None = None

    @property
    def id(self) -> str | None:
        return self.sv.id


def iter_boxes(stream: TextIO, n_labels: int, name: str = "<predictions>") -> Iterator[Box]:
    """Stream boxes from JSON Lines: ``{"id": ..., "scores": [...], "gt": [...]}``."""
    for lineno, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            scores = obj["scores"]
            if len(scores) != n_labels:
                raise InputError(f"{name}:{lineno}: expected {n_labels} scores, got {len(scores)}")
            box_id = obj.get("id", str(lineno))
            sv = ScoreVector(scores, None if box_id is None else str(box_id))
            gt = obj.get("gt")
            if gt is not None:
                if len(gt) != n_labels:
                    raise InputError(f"{name}:{lineno}: expected {n_labels} gt values, got {len(gt)}")
                if not all(isinstance(x, (bool, int)) and x in (0, 1) for x in gt):
                    raise InputError(f"{name}:{lineno}: gt values must be booleans")
                gt = Prediction(tuple(bool(x) for x in gt))
        except InputError:
            raise
        except (ValueError, KeyError, TypeError) as exc:
            raise InputError(f"{name}:{lineno}: {exc}") from None
        yield Box(sv, gt)


def read_boxes(path: str, n_labels: int) -> Iterator[Box]:
    with open(path, encoding="utf-8") as fh:
        yield from iter_boxes(fh, n_labels, path)


def box_to_json(sv: ScoreVector, gt: Prediction | None = None) -> str:
    obj: dict = {"id": sv.id, "scores": sv.scores.tolist()}
    if gt is not None:
        obj["gt"] = list(gt.assignment)
    return json.dumps(obj)


def read_ap(path: str, n_labels: int) -> list[float]:
    with open(path, encoding="utf-8") as fh:
        try:
            ap = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: {exc}") from None
    if not isinstance(ap, list) or len(ap) != n_labels:
        raise InputError(f"{path}: expected a JSON array of {n_labels} numbers")
    try:
        values = [float(x) for x in ap]
    except (TypeError, ValueError):
        raise InputError(f"{path}: AP values must be numbers") from None
    if any(not 0.0 <= x <= 1.0 for x in values):
        raise InputError(f"{path}: AP values must lie in [0, 1]")
    return values


SWEEP_COLUMNS = ("theta", "pct_nonadmissible", "avg_violations", "pct_constraints_violated")


def write_sweep_csv(rows: Iterable[tuple[float, CorpusMetrics]], out: TextIO) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for theta, m in rows:
        w.writerow([repr(theta), repr(m.pct_nonadmissible), repr(m.avg_violations_per_prediction),
                    repr(m.pct_constraints_violated_once)])


def read_sweep_csv(text: str) -> list[tuple[float, CorpusMetrics]]:
    reader = csv.DictReader(io.StringIO(text))
    return [
        (
            float(r["theta"]),
            CorpusMetrics(float(r["pct_nonadmissible"]), float(r["avg_violations"]), float(r["pct_constraints_violated"])),
        )
        for r in reader
    ]


def sweep_to_json(rows: Iterable[tuple[float, CorpusMetrics]]) -> str:
    return json.dumps([{"theta": t, **m.to_dict()} for t, m in rows], indent=2)


def sweep_from_json(text: str) -> list[tuple[float, CorpusMetrics]]:
    out = []
    for obj in json.loads(text):
        obj = dict(obj)
        theta = obj.pop("theta")
        out.append((theta, CorpusMetrics.from_dict(obj)))
    return out
