"""CNF requirement sets over a label table: parsing, statistics and export.

A requirements file holds one clause per line in set notation::

    # comment
    {Ped, not PushObj}
    {not Red, not Green}

Each item is a label abbreviation, optionally preceded by ``not``.
Abbreviations are matched exactly (case-sensitive).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from statistics import fmean
from typing import Iterable, Iterator, Sequence

from .labels import ROAD_LABELS, LabelTable


class RequirementsError(ValueError):
    """Base class for requirement parsing errors; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class MalformedLine(RequirementsError):
    pass


class UnknownAbbrev(RequirementsError):
    def __init__(self, line: int, token: str):
        self.token = token
        super().__init__(line, f"unknown label abbreviation {token!r}")


class DuplicateLiteral(RequirementsError):
    pass


class TautologicalClause(RequirementsError):
    pass


class EmptyClause(RequirementsError):
    pass


@dataclass(frozen=True, order=True)
class Literal:
    label: int
    positive: bool = True

    def __neg__(self) -> "Literal":
        return Literal(self.label, not self.positive)

    def to_int(self) -> int:
        """DIMACS encoding: label i becomes variable i + 1."""
        return self.label + 1 if self.positive else -(self.label + 1)

    @classmethod
    def from_int(cls, lit: int) -> "Literal":
        return cls(abs(lit) - 1, lit > 0)


@dataclass(frozen=True)
class Clause:
    """A disjunction of literals stored in canonical (index, polarity) order."""

    literals: tuple[Literal, ...]
    source_line: str | None = field(default=None, compare=False)

    def __post_init__(self):
        lits = tuple(sorted(self.literals))
        if not lits:
            raise ValueError("empty clause")
        labels = [lit.label for lit in lits]
        if len(set(lits)) != len(lits):
            raise ValueError("duplicate literal in clause")
        if len(set(labels)) != len(labels):
            raise ValueError("complementary literals in clause")
        if labels[0] < 0:
            raise ValueError("negative label index")
        object.__setattr__(self, "literals", lits)

    @classmethod
    def of(cls, *lits: int | Literal) -> "Clause":
        """Build from ``Literal`` objects or signed DIMACS-style integers."""
        return cls(tuple(x if isinstance(x, Literal) else Literal.from_int(x) for x in lits))

    def __len__(self) -> int:
        return len(self.literals)

    def __iter__(self) -> Iterator[Literal]:
        return iter(self.literals)

    @property
    def pos_mask(self) -> int:
        m = 0
        for lit in self.literals:
            if lit.positive:
                m |= 1 << lit.label
        return m

    @property
    def neg_mask(self) -> int:
        m = 0
        for lit in self.literals:
            if not lit.positive:
                m |= 1 << lit.label
        return m

    @property
    def var_mask(self) -> int:
        m = 0
        for lit in self.literals:
            m |= 1 << lit.label
        return m

    def to_ints(self) -> tuple[int, ...]:
        return tuple(lit.to_int() for lit in self.literals)

    def n_negative(self) -> int:
        return sum(not lit.positive for lit in self.literals)

    def n_positive(self) -> int:
        return sum(lit.positive for lit in self.literals)

    def format(self, table: LabelTable) -> str:
        items = [("" if lit.positive else "not ") + table[lit.label].abbrev for lit in self.literals]
        return "{" + ", ".join(items) + "}"


class RequirementSet:
    """An ordered list of clauses over a label table (immutable)."""

    def __init__(self, clauses: Iterable[Clause], label_table: LabelTable = ROAD_LABELS):
        self.clauses: tuple[Clause, ...] = tuple(clauses)
        self.label_table = label_table
        n = len(label_table)
        for i, c in enumerate(self.clauses):
            for lit in c:
                if not 0 <= lit.label < n:
                    raise ValueError(f"clause {i}: label index {lit.label} outside table of {n}")
        self.pos_masks = tuple(c.pos_mask for c in self.clauses)
        self.neg_masks = tuple(c.neg_mask for c in self.clauses)

    @property
    def n_labels(self) -> int:
        return len(self.label_table)

    def __len__(self) -> int:
        return len(self.clauses)

    def __iter__(self) -> Iterator[Clause]:
        return iter(self.clauses)

    def __getitem__(self, i: int) -> Clause:
        return self.clauses[i]

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, RequirementSet)
            and self.clauses == other.clauses
            and self.label_table == other.label_table
        )

    def __repr__(self) -> str:
        return f"RequirementSet({len(self.clauses)} clauses, {self.n_labels} labels)"

    def without(self, index: int) -> "RequirementSet":
        return RequirementSet(self.clauses[:index] + self.clauses[index + 1 :], self.label_table)

    def with_clauses(self, extra: Iterable[Clause]) -> "RequirementSet":
        return RequirementSet(self.clauses + tuple(extra), self.label_table)

    def to_ints(self) -> list[tuple[int, ...]]:
        return [c.to_ints() for c in self.clauses]

    def to_text(self) -> str:
        return "".join(c.format(self.label_table) + "\n" for c in self.clauses)


_ITEM = re.compile(r"^(not\s+)?(\S+)$")


def _parse_line(lineno: int, text: str, table: LabelTable) -> Clause:
    if not (text.startswith("{") and text.endswith("}")):
        raise MalformedLine(lineno, f"expected '{{ ... }}', got {text!r}")
    body = text[1:-1].strip()
    if not body:
        raise EmptyClause(lineno, "clause has no literals")
    lits: list[Literal] = []
    for raw in body.split(","):
        item = raw.strip()
        m = _ITEM.match(item)
        if m is None:
            raise MalformedLine(lineno, f"cannot parse item {item!r}")
        abbrev = m.group(2)
        if abbrev not in table:
            raise UnknownAbbrev(lineno, abbrev)
        lits.append(Literal(table.index_of(abbrev), m.group(1) is None))
    if len(set(lits)) != len(lits):
        raise DuplicateLiteral(lineno, "duplicate literal")
    if len({lit.label for lit in lits}) != len(lits):
        raise TautologicalClause(lineno, "clause contains a label and its negation")
    return Clause(tuple(lits), source_line=text)


def parse_requirements(text: str, table: LabelTable = ROAD_LABELS) -> RequirementSet:
    clauses = []
    for lineno, line in enumerate(text.lstrip("﻿").splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        clauses.append(_parse_line(lineno, stripped, table))
    return RequirementSet(clauses, table)


def load_requirements(path: str | None = None, table: LabelTable = ROAD_LABELS) -> RequirementSet:
    """Read a requirements file; with no path, the shipped ROAD-R corpus."""
    if path is None:
        text = resources.files("roadreq").joinpath("data/road_r.txt").read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8", newline="") as fh:
            text = fh.read()
    return parse_requirements(text, table)


def road_requirements() -> RequirementSet:
    return load_requirements(None)


# --- statistics -----------------------------------------------------------


@dataclass(frozen=True)
class LengthBucket:
    length: int
    count: int
    avg_negative: float
    avg_positive: float


@dataclass(frozen=True)
class RequirementStats:
    n_labels: int
    n_clauses: int
    avg_len: float
    n_labels_pos: int
    n_labels_neg: int
    min_occurrences: int
    avg_occurrences: float
    max_occurrences: int
    histogram: tuple[LengthBucket, ...]
    avg_negative: float
    avg_positive: float

    def to_dict(self) -> dict:
        return {
            "n_labels": self.n_labels,
            "n_clauses": self.n_clauses,
            "avg_len": self.avg_len,
            "n_labels_pos": self.n_labels_pos,
            "n_labels_neg": self.n_labels_neg,
            "min_occurrences": self.min_occurrences,
            "avg_occurrences": self.avg_occurrences,
            "max_occurrences": self.max_occurrences,
            "histogram": [
                {"length": b.length, "count": b.count, "avg_negative": b.avg_negative, "avg_positive": b.avg_positive}
                for b in self.histogram
            ],
            "avg_negative": self.avg_negative,
            "avg_positive": self.avg_positive,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RequirementStats":
        d = dict(d)
        d["histogram"] = tuple(LengthBucket(**b) for b in d["histogram"])
        return cls(**d)


def stats(rs: RequirementSet) -> RequirementStats:
    n = rs.n_labels
    occ = [0] * n
    pos_seen: set[int] = set()
    neg_seen: set[int] = set()
    by_len: dict[int, list[Clause]] = {}
    for c in rs:
        by_len.setdefault(len(c), []).append(c)
        for lit in c:
            occ[lit.label] += 1
            (pos_seen if lit.positive else neg_seen).add(lit.label)
    buckets = tuple(
        LengthBucket(
            length,
            len(cs),
            fmean(c.n_negative() for c in cs),
            fmean(c.n_positive() for c in cs),
        )
        for length, cs in sorted(by_len.items())
    )
    m = len(rs)
    return RequirementStats(
        n_labels=n,
        n_clauses=m,
        avg_len=fmean(len(c) for c in rs) if m else 0.0,
        n_labels_pos=len(pos_seen),
        n_labels_neg=len(neg_seen),
        min_occurrences=min(occ) if n else 0,
        avg_occurrences=fmean(occ) if n else 0.0,
        max_occurrences=max(occ) if n else 0,
        histogram=buckets,
        avg_negative=fmean(c.n_negative() for c in rs) if m else 0.0,
        avg_positive=fmean(c.n_positive() for c in rs) if m else 0.0,
    )


# --- DIMACS ---------------------------------------------------------------


def export_dimacs(rs: RequirementSet) -> str:
    lines = [f"c {lab.index + 1} {lab.abbrev}" for lab in rs.label_table]
    lines.append(f"p cnf {rs.n_labels} {len(rs)}")
    lines.extend(" ".join(str(x) for x in c.to_ints()) + " 0" for c in rs)
    return "\n".join(lines) + "\n"


def parse_dimacs(text: str, table: LabelTable | None = None) -> RequirementSet:
    """Read DIMACS CNF. Without a table, a generic one sized from the header is used."""
    n_vars = None
    clauses: list[Clause] = []
    pending: list[int] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith("c") or s.startswith("%"):
            continue
        if s.startswith("p"):
            parts = s.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise MalformedLine(lineno, f"bad problem line {s!r}")
            n_vars = int(parts[2])
            continue
        for tok in s.split():
            x = int(tok)
            if x == 0:
                if not pending:
                    raise EmptyClause(lineno, "empty clause")
                try:
                    clauses.append(Clause.of(*pending))
                except ValueError as exc:
                    raise TautologicalClause(lineno, str(exc)) from None
                pending = []
            else:
                pending.append(x)
    if pending:
        raise MalformedLine(len(text.splitlines()), "unterminated clause")
    if n_vars is None:
        raise MalformedLine(1, "missing 'p cnf' header")
    if table is None:
        table = ROAD_LABELS if n_vars == len(ROAD_LABELS) else LabelTable.generic(n_vars)
    return RequirementSet(clauses, table)


def build(clauses: Sequence[Sequence[int]], n_labels: int) -> RequirementSet:
    """Convenience constructor from signed 1-based integer clauses over a generic table."""
    table = ROAD_LABELS if n_labels == len(ROAD_LABELS) else LabelTable.generic(n_labels)
    return RequirementSet((Clause.of(*c) for c in clauses), table)
