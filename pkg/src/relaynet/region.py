"""Rate, constraint families and inequality systems for one distribution.

Two independent readings live here:

* ``theorem1_verdict`` evaluates the closed-form rate and the three derived
  constraint families directly, term by term.
* ``stepwise_system`` / ``joint_decoding_system`` build the per-decoding-step
  linear inequalities over the nine rate variables; ``relaynet.fme`` projects
  them so the two readings can be compared.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from . import fme
from .fme import InequalitySystem, LinearInequality, rationalize
from .info import Entropies
from .pmf import DISPLAY, LABELS, FactoredNetworkDistribution, build_joint

DELTA = 1e-9

RATE_VARS = ("R", "R_s1", "R_s2", "R_011", "R_012", "R_021", "R_022", "Rh1", "Rh2")
_ORDER = {lab: i for i, lab in enumerate(LABELS)}


def _norm(g) -> tuple[str, ...]:
    if isinstance(g, str):
        g = g.split(",") if g else ()
    return tuple(sorted(set(g), key=_ORDER.__getitem__))


def term_name(a, b, given=()) -> str:
    """Canonical, order-normalized name such as ``I(X1;V2,X0,X2,Y0|V1)``."""
    a, b, c = _norm(a), _norm(b), _norm(given)
    if [_ORDER[x] for x in b] < [_ORDER[x] for x in a]:
        a, b = b, a
    show = lambda g: ",".join(DISPLAY[x] for x in g)
    name = f"I({show(a)};{show(b)}"
    return name + (f"|{show(c)})" if c else ")")


# (a, b, given) for every information term used by the rate, (2)-(19),
# (26)-(31) and (34)-(39).
TERM_SPECS = (
    ("x0", "y0,yh1,yh2,x1,x2", "v1,v2"),
    ("v1,x1", "v2,x2", ""),
    ("x1", "x0,y0,v2,x2", "v1"),
    ("v1", "v2,x2", ""),
    ("x2", "x0,y0,v1,x1", "v2"),
    ("v2", "v1,x1", ""),
    ("x1,x2", "x0,y0", "v1,v2"),
    ("v1", "v2", ""),
    ("yh1", "x0,y0", "v1,x1"),
    ("yh2", "x0,y0", "v2,x2"),
    ("v1", "y0,v2", ""),
    ("v2", "y0,v1", ""),
    ("v1,v2", "y0", ""),
    ("x1", "y0,v2,x2", "v1"),
    ("x2", "y0,v1,x1", "v2"),
    ("x1,x2", "y0", "v1,v2"),
    ("yh1", "y0", "v1,x1"),
    ("yh2", "y0", "v2,x2"),
    ("yh1", "y1", "v1,x1"),
    ("yh2", "y2", "v2,x2"),
    ("yh1", "x0,y0,v2,x2", "v1,x1"),
    ("yh2", "x0,y0,v1,x1,yh1", "v2,x2"),
    ("yh1,yh2", "x0,y0", "v1,v2,x1,x2"),
    ("yh1", "y0,v2,x2,yh2", "v1,x1"),
    ("yh2", "y0,v1,x1,yh1", "v2,x2"),
    ("yh1,yh2", "y0", "v1,x1,v2,x2"),
)


class InfoTermValues(dict):
    """term name -> bits, for every term in ``TERM_SPECS``."""

    def I(self, a, b, given=()) -> float:  # noqa: E743
        return self[term_name(a, b, given)]

    def Q(self, a, b, given=()) -> Fraction:
        """The same term rationalized for exact elimination."""
        return rationalize(self.I(a, b, given))


def info_vector(dist: FactoredNetworkDistribution) -> InfoTermValues:
    ent = Entropies(build_joint(dist))
    out = InfoTermValues()
    for a, b, c in TERM_SPECS:
        out[term_name(a, b, c)] = ent.mi(_norm(a), _norm(b), _norm(c))
    return out


class Check(NamedTuple):
    id: str
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs


@dataclass
class RegionVerdict:
    feasible: bool
    achieved_rate: float
    violations: list[Check]
    checks: list[Check] = field(default_factory=list)

    @property
    def min_slack(self) -> float:
        return min(c.slack for c in self.checks) if self.checks else np.inf


def achieved_rate(info: InfoTermValues) -> float:
    I = info.I
    return I("x0", "y0,yh1,yh2,x1,x2", "v1,v2") + I("v1,x1", "v2,x2")


def theorem1_checks(info: InfoTermValues) -> list[Check]:
    """Each min-term of (2)-(4) as its own check; ids like ``(4).3``."""
    I = info.I
    lhs1 = I("yh1", "y1", "v1,x1")
    lhs2 = I("yh2", "y2", "v2,x2")
    c2 = [
        I("x1", "x0,y0,v2,x2", "v1") + I("v1", "v2,x2") + I("yh1", "x0,y0", "v1,x1"),
        I("v1", "y0,v2") + I("x1", "y0,v2,x2", "v1") + I("v1", "v2,x2")
        + I("yh1", "y0", "v1,x1"),
    ]
    c3 = [
        I("x2", "x0,y0,v1,x1", "v2") + I("v2", "v1,x1") + I("yh2", "x0,y0", "v2,x2"),
        I("v2", "y0,v1") + I("x2", "y0,v1,x1", "v2") + I("v2", "v1,x1")
        + I("yh2", "y0", "v2,x2"),
    ]
    c4 = [
        I("x1,x2", "x0,y0", "v1,v2") + I("v1", "v2")
        + I("yh1", "x0,y0", "v1,x1") + I("yh2", "x0,y0", "v2,x2"),
        I("v1", "y0,v2") + I("v2", "y0,v1") + I("x1,x2", "y0", "v1,v2")
        + I("v1", "v2") + I("yh1", "y0", "v1,x1") + I("yh2", "y0", "v2,x2"),
        I("v1,v2", "y0") + I("x1,x2", "y0", "v1,v2") + I("v1", "v2")
        + I("yh1", "y0", "v1,x1") + I("yh2", "y0", "v2,x2"),
        I("v1,v2", "y0") + I("x1", "y0,v2,x2", "v1") + I("v1", "v2,x2")
        + I("x2", "y0,v1,x1", "v2") + I("v2", "v1,x1")
        + I("yh1", "y0", "v1,x1") + I("yh2", "y0", "v2,x2"),
    ]
    checks = [Check(f"(2).{k}", lhs1, r) for k, r in enumerate(c2, 1)]
    checks += [Check(f"(3).{k}", lhs2, r) for k, r in enumerate(c3, 1)]
    checks += [Check(f"(4).{k}", lhs1 + lhs2, r) for k, r in enumerate(c4, 1)]
    return checks


def theorem1_verdict(dist: FactoredNetworkDistribution, delta: float = DELTA,
                     info: InfoTermValues | None = None) -> RegionVerdict:
    """Closed-form rate plus the (2)-(4) feasibility test.

    A strict ``lhs < rhs`` is accepted when ``lhs <= rhs + delta``.
    """
    info = info_vector(dist) if info is None else info
    checks = theorem1_checks(info)
    violations = [c for c in checks if c.lhs > c.rhs + delta]
    return RegionVerdict(not violations, achieved_rate(info), violations, checks)


def _le(coeffs, bound, source, strict=True):
    return LinearInequality.leq(coeffs, bound, strict, source)


def _ge(coeffs, bound, source, strict=True):
    return LinearInequality.geq(coeffs, bound, strict, source)


def nonnegativity_rows(variables=RATE_VARS) -> list[LinearInequality]:
    return [_ge({v: 1}, 0, f"{v}>=0", strict=False) for v in variables]


def rate_row(info: InfoTermValues) -> LinearInequality:
    Q = info.Q
    return _le({"R": 1}, Q("x0", "y0,yh1,yh2,x1,x2", "v1,v2") + Q("v1,x1", "v2,x2"),
               "rate")


def stepwise_rows(info: InfoTermValues) -> list[LinearInequality]:
    """The fifteen decoding-step constraints, ids ``(5)`` .. ``(19)``."""
    Q = info.Q
    return [
        _le({"R_s1": 1}, Q("x1", "x0,y0,v2,x2", "v1") + Q("v1", "v2,x2"), "(5)"),
        _le({"R_s2": 1}, Q("x2", "x0,y0,v1,x1", "v2") + Q("v2", "v1,x1"), "(6)"),
        _le({"R_s1": 1, "R_s2": 1}, Q("x1,x2", "x0,y0", "v1,v2") + Q("v1", "v2"), "(7)"),
        _le({"Rh1": 1, "R_s1": -1}, Q("yh1", "x0,y0", "v1,x1"), "(8)"),
        _le({"Rh2": 1, "R_s2": -1}, Q("yh2", "x0,y0", "v2,x2"), "(9)"),
        _le({"R_011": 1, "R_012": 1}, Q("v1", "y0,v2"), "(10)"),
        _le({"R_021": 1, "R_022": 1}, Q("v2", "y0,v1"), "(11)"),
        _le({"R_011": 1, "R_012": 1, "R_021": 1, "R_022": 1}, Q("v1,v2", "y0"), "(12)"),
        _le({"R_s1": 1, "R_011": -1}, Q("x1", "y0,v2,x2", "v1") + Q("v1", "v2,x2"), "(13)"),
        _le({"R_s2": 1, "R_021": -1}, Q("x2", "y0,v1,x1", "v2") + Q("v2", "v1,x1"), "(14)"),
        _le({"R_s1": 1, "R_s2": 1, "R_011": -1, "R_021": -1},
            Q("x1,x2", "y0", "v1,v2") + Q("v1", "v2"), "(15)"),
        _le({"Rh1": 1, "R_s1": -1, "R_012": -1}, Q("yh1", "y0", "v1,x1"), "(16)"),
        _le({"Rh2": 1, "R_s2": -1, "R_022": -1}, Q("yh2", "y0", "v2,x2"), "(17)"),
        _ge({"Rh1": 1}, Q("yh1", "y1", "v1,x1"), "(18)"),
        _ge({"Rh2": 1}, Q("yh2", "y2", "v2,x2"), "(19)"),
    ]


def stepwise_system(dist: FactoredNetworkDistribution,
                    info: InfoTermValues | None = None) -> InequalitySystem:
    """(5)-(19), the final message-decoding bound on R, and nonnegativity."""
    info = info_vector(dist) if info is None else info
    rows = stepwise_rows(info) + [rate_row(info)] + nonnegativity_rows()
    notes = ("constants rationalized at denominator 10^12",
             "row 'rate' is the message-decoding bound that closes the chain")
    return InequalitySystem(RATE_VARS, rows, notes)


READINGS = ("literal", "symmetric")

# individual-decoding row -> matched joint-decoding row
MATCHED = {"(8)": "(26)", "(9)": "(30)", "(16)": "(34)", "(17)": "(38)"}
COMPRESSION_ROWS = ("(8)", "(9)", "(16)", "(17)")


def joint_decoding_rows(info: InfoTermValues, reading: str = "literal"):
    """Joint-decoding rows (26)-(31), (34)-(39) with (18), (19), plus reading notes."""
    if reading not in READINGS:
        raise ValueError(f"reading must be one of {READINGS}")
    Q = info.Q
    coop = Q("v1,x1", "v2,x2")
    e1 = Q("yh1", "x0,y0,v2,x2", "v1,x1") + coop
    e2 = Q("yh2", "x0,y0,v1,x1,yh1", "v2,x2") + coop
    e12 = Q("yh1,yh2", "x0,y0", "v1,v2,x1,x2") + coop
    d1 = Q("yh1", "y0,v2,x2,yh2", "v1,x1") + coop
    d2 = Q("yh2", "y0,v1,x1,yh1", "v2,x2") + coop
    d12 = Q("yh1,yh2", "y0", "v1,x1,v2,x2") + coop

    h1, h2, h12 = {"Rh1": 1}, {"Rh2": 1}, {"Rh1": 1, "Rh2": 1}
    b1, b2 = {"R_s1": 1}, {"R_s2": 1}
    c1, c2 = {"R_s1": 1, "R_012": 1}, {"R_s2": 1, "R_022": 1}

    def minus(lhs, *bins):
        out = dict(lhs)
        for b in bins:
            for v, c in b.items():
                out[v] = out.get(v, 0) - c
        return out

    notes = ["(28),(31): 'R_hat_11' read as Rh1",
             "(34): conditioning 'V1, X' read as V1, X1"]
    if reading == "literal":
        sender = [(h1, e1, b1, "(26)"), (h2, e2, b1, "(27)"), (h12, e12, b1, "(28)"),
                  (h1, e1, b2, "(29)"), (h2, e2, b2, "(30)"), (h12, e12, b2, "(31)")]
        receiver = [(h1, d1, c1, "(34)"), (h2, d2, c1, "(35)"), (h12, d12, c1, "(36)"),
                    (h1, d1, c2, "(37)"), (h2, d2, c2, "(38)"), (h12, d12, c2, "(39)")]
        rows = [_le(minus(h, *([b] if b else [])), k, src) for h, k, b, src in sender]
        rows += [_le(minus(h, c), k, src) for h, k, c, src in receiver]
        notes.append("bin-rate terms taken literally: (26)-(28) +R_s1, (29)-(31) +R_s2, "
                     "(34)-(36) +R_s1+R_012, (37)-(39) +R_s2+R_022")
    else:
        # each relay's own bin rate; pair rows carry both
        rows = [
            _le(minus(h1, b1), e1, "(26)"), _le(minus(h2, b2), e2, "(27)"),
            _le(minus(h12, b1, b2), e12, "(28)"),
            _le(minus(h1, b1), e1, "(29)"), _le(minus(h2, b2), e2, "(30)"),
            _le(minus(h12, b1, b2), e12, "(31)"),
            _le(minus(h1, c1), d1, "(34)"), _le(minus(h2, c2), d2, "(35)"),
            _le(minus(h12, c1, c2), d12, "(36)"),
            _le(minus(h1, c1), d1, "(37)"), _le(minus(h2, c2), d2, "(38)"),
            _le(minus(h12, c1, c2), d12, "(39)"),
        ]
        notes.append("symmetric reading: single-relay rows use that relay's own "
                     "bin rates, pair rows use both")
    rows += [r for r in stepwise_rows(info) if r.sources[0] in ("(18)", "(19)")]
    return rows, tuple(notes)


def joint_decoding_system(dist: FactoredNetworkDistribution, reading: str = "literal",
                          info: InfoTermValues | None = None) -> InequalitySystem:
    info = info_vector(dist) if info is None else info
    rows, notes = joint_decoding_rows(info, reading)
    return InequalitySystem(RATE_VARS, rows, notes)


def joint_mode_system(dist: FactoredNetworkDistribution, reading: str = "literal",
                      info: InfoTermValues | None = None) -> InequalitySystem:
    """Full system with the compression steps decoded jointly."""
    info = info_vector(dist) if info is None else info
    keep = [r for r in stepwise_rows(info)
            if r.sources[0] not in COMPRESSION_ROWS + ("(18)", "(19)")]
    joint, notes = joint_decoding_rows(info, reading)
    rows = keep + joint + [rate_row(info)] + nonnegativity_rows()
    return InequalitySystem(RATE_VARS, rows, notes)


def joint_verdict(dist: FactoredNetworkDistribution, reading: str = "literal",
                  info: InfoTermValues | None = None) -> fme.Projection:
    return fme.project_max_rate(joint_mode_system(dist, reading, info))


# ---------------------------------------------------------------------------
# dominance of joint over individual decoding


class Gap(NamedTuple):
    individual: str
    joint: str
    rhs_individual: float
    rhs_joint: float

    @property
    def gap(self) -> float:
        return self.rhs_joint - self.rhs_individual


class Witness(NamedTuple):
    rh1: float
    rh2: float
    blocking: tuple[LinearInequality, ...]


@dataclass
class DominanceReport:
    reading: str
    gaps: list[Gap]
    grid: tuple[np.ndarray, np.ndarray]
    individual_feasible: np.ndarray
    joint_feasible: np.ndarray
    witnesses: list[Witness]

    @property
    def min_gap(self) -> float:
        return min(g.gap for g in self.gaps)

    @property
    def contains(self) -> bool:
        return not np.any(self.individual_feasible & ~self.joint_feasible)

    @property
    def consistent(self) -> bool:
        """Non-containment must trace back to an unmatched joint row or a negative gap."""
        if self.contains:
            return len(self.witnesses) == 0
        if self.min_gap < -1e-10:
            return True
        unmatched = {f"({k})" for k in (27, 28, 29, 31, 35, 36, 37, 39)}
        return all(any(unmatched.intersection(r.sources) for r in w.blocking)
                   for w in self.witnesses)


def _rhs_constant(rows, source) -> Fraction:
    (row,) = [r for r in rows if r.sources == (source,)]
    return row.bound


def compare_modes(dist: FactoredNetworkDistribution, grid: int = 32,
                  reading: str = "literal",
                  info: InfoTermValues | None = None) -> DominanceReport:
    info = info_vector(dist) if info is None else info
    ind_rows = stepwise_rows(info)
    joint_rows, _ = joint_decoding_rows(info, reading)
    gaps = [Gap(i, j, float(_rhs_constant(ind_rows, i)), float(_rhs_constant(joint_rows, j)))
            for i, j in MATCHED.items()]

    others = [v for v in RATE_VARS if v not in ("Rh1", "Rh2")]
    ind = fme.project(stepwise_system(dist, info), others)
    jnt = fme.project(joint_mode_system(dist, reading, info), others)

    I = info.I
    top1 = 1.1 * max(I("yh1", "y1", "v1,x1"),
                     I("x1", "x0,y0,v2,x2", "v1") + I("yh1", "x0,y0,v2,x2", "v1,x1")) + 0.01
    top2 = 1.1 * max(I("yh2", "y2", "v2,x2"),
                     I("x2", "x0,y0,v1,x1", "v2") + I("yh2", "x0,y0,v1,x1,yh1", "v2,x2")) + 0.01
    g1, g2 = np.linspace(0, top1, grid), np.linspace(0, top2, grid)
    ind_rows_ok = _grid_rows_hold(ind, g1, g2)
    jnt_rows_ok = _grid_rows_hold(jnt, g1, g2)
    ind_ok = ind_rows_ok.all(axis=0)
    jnt_ok = jnt_rows_ok.all(axis=0)
    witnesses = []
    for i, j in zip(*np.nonzero(ind_ok & ~jnt_ok)):
        blocking = tuple(r for r, ok in zip(jnt.rows, jnt_rows_ok[:, i, j]) if not ok)
        witnesses.append(Witness(float(g1[i]), float(g2[j]), blocking))
    return DominanceReport(reading, gaps, (g1, g2), ind_ok, jnt_ok, witnesses)


def _grid_rows_hold(system: InequalitySystem, g1, g2, margin=fme.FEAS_MARGIN) -> np.ndarray:
    """Per-row verdicts over the (Rh1, Rh2) grid, shape (rows, len(g1), len(g2)).

    Evaluated in floats; cells within 1e-9 of the margin are redone in exact
    arithmetic so the result matches ``LinearInequality.holds``.
    """
    rows = system.rows
    out = np.ones((len(rows), len(g1), len(g2)), bool)
    a1, a2 = np.meshgrid(g1, g2, indexing="ij")
    m = float(margin)
    for k, r in enumerate(rows):
        slack = (float(r.bound) - float(r.coeffs.get("Rh1", 0)) * a1
                 - float(r.coeffs.get("Rh2", 0)) * a2)
        out[k] = slack >= -m
        for i, j in zip(*np.nonzero(np.abs(slack + m) < 1e-9)):
            out[k, i, j] = r.holds({"Rh1": Fraction(g1[i]), "Rh2": Fraction(g2[j])}, margin)
    return out


def system_slacks(system: InequalitySystem, point: dict) -> dict[str, float]:
    """bound - lhs for every row at a rate point (missing variables count as 0)."""
    pt = {v: Fraction(point.get(v, 0)) for v in system.variables}
    return {",".join(r.sources): float(r.slack(pt)) for r in system.rows}
