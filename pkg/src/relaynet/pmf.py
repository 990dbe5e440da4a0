"""Finite alphabets, conditional tables and the ten-variable network joint.

The joint distribution of the two-relay network factorizes as

    p(v1) p(v2) p(x1|v1) p(x2|v2) p(x0|v1,v2)
        * p(y0,y1,y2|x0,x1,x2) p(yh1|y1,x1,v1) p(yh2|y2,x2,v2)

and is stored densely, row-major in the fixed label order ``LABELS``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple

import numpy as np

LABELS = ("v1", "v2", "x0", "x1", "x2", "y1", "y2", "yh1", "yh2", "y0")

ROW_TOL = 1e-9

# label -> printable name used in term strings
DISPLAY = {
    "v1": "V1", "v2": "V2", "x0": "X0", "x1": "X1", "x2": "X2",
    "y0": "Y0", "y1": "Y1", "y2": "Y2", "yh1": "Yh1", "yh2": "Yh2",
}


class ShapeError(ValueError):
    """Table dimensions disagree with the declared alphabets."""


class ValidationError(ValueError):
    """A table is not a valid (conditional) probability mass function."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class Alphabet(NamedTuple):
    name: str
    size: int


@dataclass(frozen=True)
class ConditionalTable:
    """p(output | given...) with axes ``given + (output,)``."""

    output: str
    given: tuple[str, ...]
    probs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.probs, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "probs", arr)
        object.__setattr__(self, "given", tuple(self.given))

    @property
    def name(self) -> str:
        if not self.given:
            return f"p({self.output})"
        return f"p({self.output}|{','.join(self.given)})"

    @property
    def labels(self) -> tuple[str, ...]:
        return self.given + (self.output,)


@dataclass(frozen=True)
class Channel:
    """p(y0,y1,y2 | x0,x1,x2) as an array indexed [x0,x1,x2,y0,y1,y2]."""

    probs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.probs, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "probs", arr)

    name = "p(y0,y1,y2|x0,x1,x2)"
    labels = ("x0", "x1", "x2", "y0", "y1", "y2")

    @classmethod
    def from_receiver_only(cls, p_y0_x0, x1=1, x2=1, y1=1, y2=1):
        """Channel where only X0 -> Y0 matters; relay outputs are singletons."""
        p = np.asarray(p_y0_x0, dtype=float)
        nx0, ny0 = p.shape
        arr = np.zeros((nx0, x1, x2, ny0, y1, y2))
        arr[...] = (p[:, None, None, :, None, None]
                    / (y1 * y2))
        return cls(arr)

    @classmethod
    def from_components(cls, p_y0, p_y1, p_y2):
        """Product channel p(y0|x0,x1,x2) p(y1|x0,x1,x2) p(y2|x0,x1,x2).

        Each component is indexed [x0,x1,x2,y].
        """
        arr = np.einsum("abcj,abcf,abcg->abcjfg", p_y0, p_y1, p_y2)
        return cls(arr)


@dataclass(frozen=True)
class FactoredNetworkDistribution:
    p_v1: ConditionalTable
    p_v2: ConditionalTable
    p_x1: ConditionalTable  # x1 | v1
    p_x2: ConditionalTable  # x2 | v2
    p_x0: ConditionalTable  # x0 | v1, v2
    channel: Channel
    q1: ConditionalTable  # yh1 | y1, x1, v1
    q2: ConditionalTable  # yh2 | y2, x2, v2

    @classmethod
    def from_arrays(cls, p_v1, p_v2, p_x1_v1, p_x2_v2, p_x0_v1v2, channel,
                    q1, q2):
        if not isinstance(channel, Channel):
            channel = Channel(channel)
        return cls(
            ConditionalTable("v1", (), p_v1),
            ConditionalTable("v2", (), p_v2),
            ConditionalTable("x1", ("v1",), p_x1_v1),
            ConditionalTable("x2", ("v2",), p_x2_v2),
            ConditionalTable("x0", ("v1", "v2"), p_x0_v1v2),
            channel,
            ConditionalTable("yh1", ("y1", "x1", "v1"), q1),
            ConditionalTable("yh2", ("y2", "x2", "v2"), q2),
        )

    def tables(self):
        """The seven free factors, in a fixed order."""
        return (self.p_v1, self.p_v2, self.p_x1, self.p_x2, self.p_x0,
                self.q1, self.q2)

    def replace(self, **changes) -> "FactoredNetworkDistribution":
        fields_ = {k: getattr(self, k) for k in
                   ("p_v1", "p_v2", "p_x1", "p_x2", "p_x0", "channel", "q1", "q2")}
        fields_.update(changes)
        return FactoredNetworkDistribution(**fields_)

    @property
    def alphabets(self) -> dict[str, int]:
        """Alphabet sizes read off the tables (first occurrence wins)."""
        sizes: dict[str, int] = {}
        for table in self._all_tables():
            for label, n in zip(table.labels, table.probs.shape):
                sizes.setdefault(label, n)
        return sizes

    def _all_tables(self):
        return (self.p_v1, self.p_v2, self.p_x1, self.p_x2, self.p_x0,
                self.channel, self.q1, self.q2)


@dataclass(frozen=True)
class Violation:
    table: str
    kind: str  # "shape" | "row-sum" | "negative"
    index: tuple = ()
    value: float = float("nan")

    def __str__(self):
        loc = f" at row {self.index}" if self.index else ""
        if self.kind == "shape":
            return f"{self.table}: shape mismatch ({self.value})"
        if self.kind == "row-sum":
            return f"{self.table}{loc}: row sums to {self.value!r}"
        return f"{self.table}{loc}: negative entry {self.value!r}"


def _row_violations(name, probs, n_out_axes):
    out = []
    probs = np.asarray(probs, dtype=float)
    neg = np.argwhere(probs < 0)
    for idx in neg:
        out.append(Violation(name, "negative", tuple(int(i) for i in idx),
                             float(probs[tuple(idx)])))
    axes = tuple(range(probs.ndim - n_out_axes, probs.ndim))
    sums = probs.sum(axis=axes)
    bad = np.argwhere(np.abs(np.atleast_1d(sums) - 1.0) > ROW_TOL)
    for idx in bad:
        idx = tuple(int(i) for i in idx) if np.ndim(sums) else ()
        out.append(Violation(name, "row-sum", idx,
                             float(np.asarray(sums)[idx] if idx else sums)))
    return out


def validate(dist: FactoredNetworkDistribution) -> list[Violation]:
    """Every shape, row-sum and negativity defect; empty iff ``dist`` is valid."""
    report: list[Violation] = []
    sizes: dict[str, tuple[int, str]] = {}
    for table in dist._all_tables():
        if table.probs.ndim != len(table.labels):
            report.append(Violation(table.name, "shape",
                                    value=f"expected {len(table.labels)} axes, "
                                          f"got {table.probs.ndim}"))
            continue
        for label, n in zip(table.labels, table.probs.shape):
            if n < 1:
                report.append(Violation(table.name, "shape",
                                        value=f"|{label}| = {n}"))
            seen = sizes.setdefault(label, (n, table.name))
            if seen[0] != n:
                report.append(Violation(
                    table.name, "shape",
                    value=f"|{label}| = {n} but {seen[1]} has {seen[0]}"))
    for table in dist.tables():
        if table.probs.ndim == len(table.labels):
            report.extend(_row_violations(table.name, table.probs, 1))
    ch = dist.channel
    if ch.probs.ndim == 6:
        report.extend(_row_violations(ch.name, ch.probs, 3))
    return report


@dataclass(frozen=True)
class JointPmf:
    labels: tuple[str, ...]
    table: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.table, dtype=float)
        labels = tuple(self.labels)
        if arr.ndim != len(labels):
            raise ShapeError(f"{len(labels)} labels for a {arr.ndim}-d table")
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate labels in {labels}")
        arr.setflags(write=False)
        object.__setattr__(self, "table", arr)
        object.__setattr__(self, "labels", labels)

    @property
    def sizes(self) -> dict[str, int]:
        return dict(zip(self.labels, self.table.shape))

    def reorder(self, labels: Iterable[str]) -> "JointPmf":
        """Marginal over ``labels`` with axes in exactly that order."""
        labels = tuple(labels)
        marg = marginalize(self, labels)
        perm = [marg.labels.index(lab) for lab in labels]
        return JointPmf(labels, np.transpose(marg.table, perm))


def marginalize(joint: JointPmf, keep: Iterable[str]) -> JointPmf:
    """Sum out every variable not in ``keep``; kept axes stay in joint order."""
    keep = set(keep)
    if not keep:
        raise ValueError("keep must be nonempty")
    unknown = keep.difference(joint.labels)
    if unknown:
        raise KeyError(f"unknown labels {sorted(unknown)}; joint has {joint.labels}")
    drop = tuple(i for i, lab in enumerate(joint.labels) if lab not in keep)
    labels = tuple(lab for lab in joint.labels if lab in keep)
    return JointPmf(labels, joint.table.sum(axis=drop) if drop else joint.table)


def build_joint(dist: FactoredNetworkDistribution) -> JointPmf:
    """The full network joint over ``LABELS``."""
    report = validate(dist)
    shape_errors = [v for v in report if v.kind == "shape"]
    if shape_errors:
        raise ShapeError("; ".join(map(str, shape_errors)))
    if report:
        raise ValidationError(report)
    # v1=a v2=b x0=c x1=d x2=e y1=f y2=g yh1=h yh2=i y0=j
    table = np.einsum(
        "a,b,ad,be,abc,cdejfg,fdah,gebi->abcdefghij",
        dist.p_v1.probs, dist.p_v2.probs, dist.p_x1.probs, dist.p_x2.probs,
        dist.p_x0.probs, dist.channel.probs, dist.q1.probs, dist.q2.probs,
        optimize=True,
    )
    return JointPmf(LABELS, table)


def conditional(joint: JointPmf, output: Iterable[str],
                given: Iterable[str]) -> np.ndarray:
    """p(output | given) as an array with axes ``given + output``.

    Rows whose conditioning event has zero probability are filled uniformly.
    """
    output, given = tuple(output), tuple(given)
    marg = joint.reorder(given + output).table
    n_out = int(np.prod([joint.sizes[o] for o in output]))
    flat = marg.reshape(-1, n_out)
    tot = flat.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        cond = np.where(tot > 0, flat / np.where(tot > 0, tot, 1.0), 1.0 / n_out)
    return cond.reshape(marg.shape)


def degenerate_alphabets(**sizes: int) -> dict[str, int]:
    """All ten labels at size 1, overridden by ``sizes``."""
    out = {lab: 1 for lab in LABELS}
    for k, v in sizes.items():
        if k not in out:
            raise KeyError(k)
        out[k] = int(v)
    return out


def alphabets_of(sizes: Mapping[str, int]) -> list[Alphabet]:
    return [Alphabet(lab, int(sizes[lab])) for lab in LABELS]
