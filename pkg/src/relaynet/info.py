"""Entropies and conditional mutual informations of a ``JointPmf``, in bits."""
from __future__ import annotations

from typing import Iterable

import numpy as np

from .pmf import JointPmf, marginalize

CLAMP_TOL = 1e-12


class InformationError(ArithmeticError):
    """A mutual information came out clearly negative."""


def _group(joint: JointPmf, g: Iterable[str]) -> frozenset:
    g = frozenset((g,) if isinstance(g, str) else g)
    unknown = g.difference(joint.labels)
    if unknown:
        raise KeyError(f"unknown labels {sorted(unknown)}")
    return g


def _h(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


class Entropies:
    """Memoized marginal entropies of one joint.

    Evaluating many information terms against the same joint repeats the
    same marginalizations; this keeps one entropy per variable subset.
    """

    def __init__(self, joint: JointPmf):
        self.joint = joint
        self._cache: dict[frozenset, float] = {frozenset(): 0.0}

    def __call__(self, g: Iterable[str]) -> float:
        g = _group(self.joint, g)
        if g not in self._cache:
            self._cache[g] = _h(marginalize(self.joint, g).table.ravel())
        return self._cache[g]

    def raw_mi(self, a, b, given=()) -> float:
        a, b, c = (_group(self.joint, x) for x in (a, b, given))
        if not a or not b:
            raise ValueError("mutual information needs two nonempty groups")
        if a & b or a & c or b & c:
            raise ValueError("groups must be pairwise disjoint")
        return self(a | c) + self(b | c) - self(a | b | c) - self(c)

    def mi(self, a, b, given=()) -> float:
        return _clamp(self.raw_mi(a, b, given))


def _clamp(v: float) -> float:
    if v < 0:
        if v < -CLAMP_TOL:
            raise InformationError(f"mutual information {v!r} < 0")
        return 0.0
    return v


def entropy(joint: JointPmf, g: Iterable[str]) -> float:
    """H(g) in bits, with 0 log 0 = 0."""
    g = _group(joint, g)
    if not g:
        raise ValueError("empty group")
    return _h(marginalize(joint, g).table.ravel())


def conditional_entropy(joint: JointPmf, g, given=()) -> float:
    ent = Entropies(joint)
    return ent(_group(joint, g) | _group(joint, given)) - ent(given)


def mutual_info(joint: JointPmf, a, b, given=()) -> float:
    """I(a; b | given) in bits; tiny negative round-off is clamped to zero."""
    return Entropies(joint).mi(a, b, given)
