"""Exact Fourier-Motzkin elimination over rate inequalities.

Rows are kept in the canonical form ``sum_v c_v * v  <=  bound`` (``<`` when
``strict``) with ``Fraction`` coefficients, so elimination itself never
rounds. Each row carries the sorted multiset of source constraint ids it was
combined from.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, NamedTuple, Sequence

RATIONAL_DENOM = 10**12
FEAS_MARGIN = Fraction(1, 10**12)

# compression rates first; R is what survives
ELIMINATION_ORDER = ("Rh1", "Rh2", "R_s1", "R_s2", "R_011", "R_012", "R_021", "R_022")


def _source_key(s: str):
    # "(7)" < "(11)" < "R>=0"
    head = s.strip("()")
    return (0, int(head), s) if head.isdigit() else (1, 0, s)


def rationalize(x: float, denom: int = RATIONAL_DENOM) -> Fraction:
    return Fraction(round(x * denom), denom)


@dataclass(frozen=True)
class LinearInequality:
    coeffs: Mapping[str, Fraction]
    bound: Fraction
    strict: bool = False
    sources: tuple[str, ...] = ()

    def __post_init__(self):
        coeffs = {v: Fraction(c) for v, c in self.coeffs.items() if c != 0}
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "bound", Fraction(self.bound))
        object.__setattr__(self, "sources", tuple(sorted(self.sources, key=_source_key)))

    @classmethod
    def leq(cls, coeffs, bound, strict=False, source=None):
        return cls(coeffs, bound, strict, (source,) if source else ())

    @classmethod
    def geq(cls, coeffs, bound, strict=False, source=None):
        """``coeffs . x >= bound``, stored negated."""
        return cls({v: -Fraction(c) for v, c in coeffs.items()}, -Fraction(bound),
                   strict, (source,) if source else ())

    @property
    def is_constant(self) -> bool:
        return not self.coeffs

    @property
    def key(self) -> tuple:
        return tuple(sorted(self.coeffs.items()))

    def lhs(self, point: Mapping[str, float]):
        return sum(c * point[v] for v, c in self.coeffs.items())

    def slack(self, point: Mapping[str, float]):
        """bound - lhs; nonnegative when the row holds (ignoring strictness)."""
        return self.bound - self.lhs(point)

    def holds(self, point, margin=0) -> bool:
        return self.slack(point) >= -margin

    def scaled(self, k: Fraction) -> "LinearInequality":
        return LinearInequality({v: c * k for v, c in self.coeffs.items()},
                                self.bound * k, self.strict, self.sources)

    def normalized(self) -> "LinearInequality":
        if not self.coeffs:
            return self
        lead = self.coeffs[min(self.coeffs)]
        return self.scaled(1 / abs(lead))

    def is_nonnegativity(self) -> bool:
        """``-c*x <= b`` with c > 0, b <= 0: implies x >= 0."""
        if len(self.coeffs) != 1:
            return False
        (c,) = self.coeffs.values()
        return c < 0 and self.bound <= 0

    def __str__(self):
        parts = []
        for v, c in sorted(self.coeffs.items()):
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            parts.append(f"{sign} {'' if mag == 1 else str(mag) + '*'}{v}")
        lhs = " ".join(parts).lstrip("+ ") or "0"
        rel = "<" if self.strict else "<="
        src = f"  [{','.join(self.sources)}]" if self.sources else ""
        return f"{lhs} {rel} {float(self.bound):.12g}{src}"


@dataclass(frozen=True)
class InequalitySystem:
    variables: tuple[str, ...]
    rows: tuple[LinearInequality, ...]
    notes: tuple[str, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "rows", tuple(self.rows))
        object.__setattr__(self, "notes", tuple(self.notes))
        extra = {v for r in self.rows for v in r.coeffs}.difference(self.variables)
        if extra:
            raise ValueError(f"rows mention unlisted variables {sorted(extra)}")

    def by_source(self, source: str) -> list[LinearInequality]:
        return [r for r in self.rows if source in r.sources]

    def holds(self, point, margin=0) -> bool:
        return all(r.holds(point, margin) for r in self.rows)

    def violated(self, point, margin=0) -> list[LinearInequality]:
        return [r for r in self.rows if not r.holds(point, margin)]

    def extend(self, rows: Iterable[LinearInequality], notes=()) -> "InequalitySystem":
        return InequalitySystem(self.variables, self.rows + tuple(rows),
                                self.notes + tuple(notes))

    def without_sources(self, sources: Iterable[str]) -> "InequalitySystem":
        drop = set(sources)
        rows = [r for r in self.rows if not drop.intersection(r.sources)]
        return InequalitySystem(self.variables, rows, self.notes)

    def __str__(self):
        return "\n".join(str(r) for r in self.rows)


def _trivially_true(row: LinearInequality) -> bool:
    return row.is_constant and (row.bound > 0 or (row.bound == 0 and not row.strict))


def _combine(up: LinearInequality, lo: LinearInequality, var: str) -> LinearInequality:
    a, b = up.coeffs[var], -lo.coeffs[var]  # both > 0
    coeffs = Counter()
    for v, c in up.coeffs.items():
        coeffs[v] += c * b
    for v, c in lo.coeffs.items():
        coeffs[v] += c * a
    del coeffs[var]
    return LinearInequality(dict(coeffs), up.bound * b + lo.bound * a,
                            up.strict or lo.strict, up.sources + lo.sources)


def _tighter(a: LinearInequality, b: LinearInequality) -> bool:
    """True when row ``a`` (same coefficients) implies row ``b``."""
    return a.bound < b.bound or (a.bound == b.bound and (a.strict or not b.strict))


def prune(rows: Sequence[LinearInequality]) -> list[LinearInequality]:
    """Drop trivially true rows, duplicates and dominated rows.

    Domination uses nonnegativity: with every involved variable carrying an
    ``x >= 0`` row, ``c.x <= d`` is implied by ``c'.x <= d'`` whenever
    ``c <= c'`` entrywise and ``d' <= d``. Nonnegativity rows themselves are
    never removed this way.
    """
    best: dict[tuple, LinearInequality] = {}
    order = []
    for r in rows:
        r = r.normalized()
        if _trivially_true(r):
            continue
        k = r.key
        if k not in best:
            order.append(k)
            best[k] = r
        elif _tighter(r, best[k]):
            best[k] = r
    kept = [best[k] for k in order]

    nonneg = {next(iter(r.coeffs)) for r in kept if r.is_nonnegativity()}
    out = []
    for i, a in enumerate(kept):
        if a.is_constant or a.is_nonnegativity() or not set(a.coeffs) <= nonneg:
            out.append(a)
            continue
        dominated = False
        for j, b in enumerate(kept):
            if i == j or b.is_constant or not set(b.coeffs) <= nonneg:
                continue
            if b.key == a.key:
                continue
            vars_ = set(a.coeffs) | set(b.coeffs)
            if all(a.coeffs.get(v, 0) <= b.coeffs.get(v, 0) for v in vars_) \
                    and _tighter(b, a):
                dominated = True
                break
        if not dominated:
            out.append(a)
    return out


def eliminate(system: InequalitySystem, var: str) -> InequalitySystem:
    if var not in system.variables:
        raise KeyError(f"{var} is not a variable of the system")
    upper, lower, rest = [], [], []
    for r in system.rows:
        c = r.coeffs.get(var, 0)
        (upper if c > 0 else lower if c < 0 else rest).append(r)
    combined = [_combine(u, lo, var) for u in upper for lo in lower]
    variables = tuple(v for v in system.variables if v != var)
    return InequalitySystem(variables, prune(rest + combined), system.notes)


def project(system: InequalitySystem, order: Iterable[str]) -> InequalitySystem:
    for v in order:
        system = eliminate(system, v)
    return system


def contradictions(system: InequalitySystem, margin=FEAS_MARGIN) -> list[LinearInequality]:
    return [r for r in system.rows if r.is_constant and r.bound < -margin]


class Projection(NamedTuple):
    feasible: bool
    max_rate: Fraction | float  # math.inf when unbounded


def rate_interval(system: InequalitySystem, var="R"):
    """(lower, upper) on ``var`` from a system that mentions only ``var``."""
    lo, hi = Fraction(-10**30), math.inf
    for r in system.rows:
        c = r.coeffs.get(var, 0)
        if c > 0:
            hi = min(hi, r.bound / c)
        elif c < 0:
            lo = max(lo, r.bound / c)
    return lo, hi


def project_max_rate(system: InequalitySystem, order=ELIMINATION_ORDER,
                     margin=FEAS_MARGIN) -> Projection:
    """Eliminate everything but R and read off the largest admissible R."""
    if "R" not in system.variables:
        raise KeyError("system has no R variable")
    todo = [v for v in order if v in system.variables]
    leftover = set(system.variables) - set(todo) - {"R"}
    if leftover:
        raise ValueError(f"variables {sorted(leftover)} are not in the elimination order")
    reduced = project(system, todo)
    if contradictions(reduced, margin):
        return Projection(False, Fraction(0))
    lo, hi = rate_interval(reduced)
    if hi != math.inf and lo > hi + margin:
        return Projection(False, Fraction(0))
    return Projection(True, hi)


@dataclass
class Agreement:
    """Outcome of projecting the stepwise system and comparing to the closed form."""

    theorem_feasible: bool
    theorem_rate: float
    fme_feasible: bool
    fme_rate: float
    contradictions: list[LinearInequality]
    theorem_violations: list
    min_theorem_slack: float

    @property
    def feasibility_agrees(self) -> bool:
        return self.theorem_feasible == self.fme_feasible

    @property
    def rate_gap(self) -> float:
        if not (self.theorem_feasible and self.fme_feasible):
            return 0.0
        return abs(self.fme_rate - self.theorem_rate)

    @property
    def agree(self) -> bool:
        return self.feasibility_agrees and self.rate_gap <= 1e-9

    @property
    def boundary(self) -> bool:
        """Disagreement explained by a constraint sitting within 1e-9 of equality."""
        if self.agree:
            return False
        tol = 1e-9 + 1e-11
        if self.theorem_feasible and not self.fme_feasible:
            return bool(self.contradictions) and all(
                float(r.bound) >= -tol for r in self.contradictions)
        if self.fme_feasible and not self.theorem_feasible:
            return all(v.lhs - v.rhs <= tol for v in self.theorem_violations)
        return self.rate_gap <= tol

    def describe(self) -> str:
        if self.agree:
            return (f"agreement: true (feasible={self.fme_feasible}, "
                    f"rate={self.fme_rate:.12g})")
        lines = [f"agreement: false (closed form feasible={self.theorem_feasible}, "
                 f"elimination feasible={self.fme_feasible}, boundary={self.boundary})"]
        lines += [f"  contradiction: {r}" for r in self.contradictions]
        lines += [f"  violated: {v.id} lhs={v.lhs:.12g} rhs={v.rhs:.12g}"
                  for v in self.theorem_violations]
        return "\n".join(lines)


def check_against_theorem1(dist, delta: float = 1e-9) -> Agreement:
    from . import region

    info = region.info_vector(dist)
    verdict = region.theorem1_verdict(dist, delta, info)
    system = region.stepwise_system(dist, info)
    reduced = project(system, ELIMINATION_ORDER)
    bad = [r for r in reduced.rows if r.is_constant and r.bound < 0]
    proj = project_max_rate(system)
    if proj.feasible:
        rate = float(proj.max_rate)
    else:
        rate = float("nan")
        if not contradictions(reduced):
            # interval collapse on R itself
            bad = [r for r in reduced.rows if "R" in r.coeffs]
    return Agreement(verdict.feasible, verdict.achieved_rate, proj.feasible, rate,
                     bad, list(verdict.violations), verdict.min_slack)
