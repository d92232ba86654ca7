"""Propositional reasoning over requirement sets.

Literals use the DIMACS convention internally: label ``i`` is variable ``i + 1``,
negated as ``-(i + 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .requirements import Clause, Literal, RequirementSet


@dataclass(frozen=True)
class SolveResult:
    satisfiable: bool
    model: tuple[bool, ...] | None = None

    def __bool__(self) -> bool:
        return self.satisfiable


class Solver:
    """DPLL with two-watched-literal unit propagation.

    The clause database is an append-only list of literal lists, each watched
    on its first two positions. Branching picks the variable with the most
    occurrences in the shortest not-yet-satisfied clauses (lowest index on ties)
    and tries ``False`` first.
    """

    def __init__(self, n_vars: int, clauses: Iterable[Sequence[int]] = ()):
        self.n_vars = n_vars
        self.clauses: list[list[int]] = []
        self.watches: dict[int, list[int]] = {}
        self.units: list[int] = []
        self.has_empty = False
        for c in clauses:
            self.add_clause(c)

    def add_clause(self, lits: Sequence[int]) -> None:
        lits = list(dict.fromkeys(lits))
        if not lits:
            self.has_empty = True
            return
        if len(lits) == 1:
            self.units.append(lits[0])
            return
        idx = len(self.clauses)
        self.clauses.append(lits)
        self.watches.setdefault(lits[0], []).append(idx)
        self.watches.setdefault(lits[1], []).append(idx)

    # value of a literal under the assignment: True, False, or None
    def _value(self, lit: int) -> bool | None:
        v = self.assign[abs(lit)]
        if v is None:
            return None
        return v if lit > 0 else not v

    def _enqueue(self, lit: int) -> bool:
        v = self._value(lit)
        if v is not None:
            return v
        self.assign[abs(lit)] = lit > 0
        self.trail.append(lit)
        return True

    def _propagate(self) -> bool:
        while self.qhead < len(self.trail):
            false_lit = -self.trail[self.qhead]
            self.qhead += 1
            watchers = self.watches.get(false_lit)
            if not watchers:
                continue
            kept = []
            i = 0
            conflict = False
            while i < len(watchers):
                ci = watchers[i]
                i += 1
                c = self.clauses[ci]
                if c[0] == false_lit:
                    c[0], c[1] = c[1], c[0]
                if self._value(c[0]) is True:
                    kept.append(ci)
                    continue
                for k in range(2, len(c)):
                    if self._value(c[k]) is not False:
                        c[1], c[k] = c[k], c[1]
                        self.watches.setdefault(c[1], []).append(ci)
                        break
                else:
                    kept.append(ci)
                    if not self._enqueue(c[0]):
                        conflict = True
                        kept.extend(watchers[i:])
                        break
            self.watches[false_lit] = kept
            if conflict:
                return False
        return True

    def _backtrack(self, size: int) -> None:
        while len(self.trail) > size:
            self.assign[abs(self.trail.pop())] = None
        self.qhead = min(self.qhead, size)

    def _pick_branch(self) -> int | None:
        best_len = None
        counts: dict[int, int] = {}
        for c in self.clauses:
            if any(self._value(x) is True for x in c):
                continue
            free = [abs(x) for x in c if self.assign[abs(x)] is None]
            if best_len is None or len(free) < best_len:
                best_len = len(free)
                counts = {}
            if len(free) == best_len:
                for v in free:
                    counts[v] = counts.get(v, 0) + 1
        if counts:
            return min(counts, key=lambda v: (-counts[v], v))
        for v in range(1, self.n_vars + 1):
            if self.assign[v] is None:
                return v
        return None

    def solve(self, assumptions: Sequence[int] = ()) -> SolveResult:
        if self.has_empty:
            return SolveResult(False)
        self.assign: list[bool | None] = [None] * (self.n_vars + 1)
        self.trail: list[int] = []
        self.qhead = 0
        for lit in list(self.units) + list(assumptions):
            if not self._enqueue(lit):
                return SolveResult(False)
        if not self._propagate():
            return SolveResult(False)
        # explicit stack of (trail size before decision, decision literal)
        stack: list[tuple[int, int]] = []
        while True:
            var = self._pick_branch()
            if var is None:
                model = tuple(bool(self.assign[v]) for v in range(1, self.n_vars + 1))
                return SolveResult(True, model)
            stack.append((len(self.trail), -var))
            self._enqueue(-var)
            while not self._propagate():
                # flip the most recent decision still on its first polarity
                while stack and stack[-1][1] > 0:
                    stack.pop()
                if not stack:
                    return SolveResult(False)
                size, lit = stack.pop()
                self._backtrack(size)
                stack.append((size, -lit))
                self._enqueue(-lit)


def solve(rs: RequirementSet, assumptions: Sequence[Literal] = ()) -> SolveResult:
    """Satisfiability of ``rs`` under unit assumptions; returns a total model when SAT."""
    lits = [a.to_int() for a in assumptions]
    if len({abs(x) for x in lits}) != len(set(lits)):
        raise ValueError("inconsistent assumptions")
    return Solver(rs.n_labels, rs.to_ints()).solve(lits)


def entails(rs: RequirementSet, c: Clause) -> bool:
    """True iff every model of ``rs`` satisfies ``c``."""
    return not solve(rs, [-lit for lit in c])


def find_redundant(rs: RequirementSet) -> list[int]:
    """Indices of clauses entailed by the remaining clauses."""
    return [i for i, c in enumerate(rs) if entails(rs.without(i), c)]


# --- exact model counting -------------------------------------------------


def _simplify(clauses: frozenset, lit: int) -> frozenset | None:
    """Assign ``lit`` true; None signals an empty (falsified) clause."""
    out = []
    for c in clauses:
        if lit in c:
            continue
        if -lit in c:
            r = tuple(x for x in c if x != -lit)
            if not r:
                return None
            out.append(r)
        else:
            out.append(c)
    return frozenset(out)


def _vars_of(clauses: Iterable[tuple[int, ...]]) -> set[int]:
    return {abs(x) for c in clauses for x in c}


def _components(clauses: frozenset) -> list[frozenset]:
    parent: dict[int, int] = {}

    def find(x: int) -> int:
        while parent.setdefault(x, x) != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for c in clauses:
        r0 = find(abs(c[0]))
        for x in c[1:]:
            r = find(abs(x))
            if r != r0:
                parent[r] = r0
    groups: dict[int, list] = {}
    for c in clauses:
        groups.setdefault(find(abs(c[0])), []).append(c)
    return [frozenset(g) for g in groups.values()]


class ModelCounter:
    """Exact #SAT by DPLL with unit propagation, component decomposition and caching.

    Counts are Python ints, so there is no overflow. The cache maps a component
    (its clause set) to the number of models over the component's variables.
    """

    def __init__(self):
        self.cache: dict[frozenset, int] = {}

    def _propagate(self, clauses: frozenset) -> tuple[frozenset | None, set[int]]:
        fixed: set[int] = set()
        while True:
            unit = next((c[0] for c in clauses if len(c) == 1), None)
            if unit is None:
                return clauses, fixed
            fixed.add(abs(unit))
            clauses = _simplify(clauses, unit)
            if clauses is None:
                return None, fixed

    def count_component(self, clauses: frozenset) -> int:
        """Models of a connected clause set over exactly its own variables."""
        hit = self.cache.get(clauses)
        if hit is not None:
            return hit
        comp_vars = _vars_of(clauses)
        occ: dict[int, int] = {}
        shortest = min(len(c) for c in clauses)
        for c in clauses:
            if len(c) == shortest:
                for x in c:
                    occ[abs(x)] = occ.get(abs(x), 0) + 1
        var = min(occ, key=lambda v: (-occ[v], v))
        total = 0
        for lit in (var, -var):
            sub = _simplify(clauses, lit)
            if sub is None:
                continue
            sub, fixed = self._propagate(sub)
            if sub is None:
                continue
            remaining = _vars_of(sub)
            free = len(comp_vars) - 1 - len(fixed - {var}) - len(remaining)
            n = 1 << free
            for comp in _components(sub):
                n *= self.count_component(comp)
                if n == 0:
                    break
            total += n
        self.cache[clauses] = total
        return total

    def count(self, n_vars: int, clauses: Iterable[Sequence[int]]) -> int:
        cls = []
        for c in clauses:
            c = tuple(dict.fromkeys(c))
            if not c:
                return 0
            if any(-x in c for x in c):
                continue
            cls.append(c)
        root, fixed = self._propagate(frozenset(cls))
        if root is None:
            return 0
        free = n_vars - len(fixed) - len(_vars_of(root))
        n = 1 << free
        for comp in _components(root):
            n *= self.count_component(comp)
        return n


def count_models(rs: RequirementSet) -> int:
    """Exact number of total label assignments satisfying every clause."""
    return ModelCounter().count(rs.n_labels, rs.to_ints())
