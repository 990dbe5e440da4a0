"""Reference computations written without the package's own machinery.

Everything here uses explicit loops or an unrelated library so that a
shared bug cannot hide in both the code under test and its check.
"""
from __future__ import annotations

import itertools
import math
from collections import defaultdict

import numpy as np

LABELS = ("v1", "v2", "x0", "x1", "x2", "y1", "y2", "yh1", "yh2", "y0")


def binary_entropy(p: float) -> float:
    return -sum(q * math.log2(q) for q in (p, 1 - p) if q > 0)


def loop_joint(dist) -> dict[tuple, float]:
    """The network joint as {symbol tuple in LABELS order: prob}, one product per entry."""
    pv1, pv2 = dist.p_v1.probs, dist.p_v2.probs
    px1, px2, px0 = dist.p_x1.probs, dist.p_x2.probs, dist.p_x0.probs
    ch, q1, q2 = dist.channel.probs, dist.q1.probs, dist.q2.probs
    sizes = {"v1": len(pv1), "v2": len(pv2), "x0": px0.shape[2], "x1": px1.shape[1],
             "x2": px2.shape[1], "y0": ch.shape[3], "y1": ch.shape[4], "y2": ch.shape[5],
             "yh1": q1.shape[3], "yh2": q2.shape[3]}
    out = {}
    for sym in itertools.product(*(range(sizes[lab]) for lab in LABELS)):
        v1, v2, x0, x1, x2, y1, y2, yh1, yh2, y0 = sym
        out[sym] = (pv1[v1] * pv2[v2] * px1[v1, x1] * px2[v2, x2] * px0[v1, v2, x0]
                    * ch[x0, x1, x2, y0, y1, y2] * q1[y1, x1, v1, yh1]
                    * q2[y2, x2, v2, yh2])
    return out


def table_to_dict(labels, table) -> dict[tuple, float]:
    return {idx: float(table[idx]) for idx in np.ndindex(*table.shape)}


def _marg(joint: dict, labels, keep) -> dict:
    pos = [labels.index(k) for k in keep]
    out: dict = defaultdict(float)
    for sym, p in joint.items():
        out[tuple(sym[i] for i in pos)] += p
    return out


def entropy(joint: dict, labels, group) -> float:
    return -sum(p * math.log2(p) for p in _marg(joint, labels, group).values() if p > 0)


def mutual_info(joint: dict, labels, a, b, given=()) -> float:
    """Sum over symbols of p(abc) log p(abc)p(c) / (p(ac)p(bc))."""
    a, b, c = list(a), list(b), list(given)
    pabc = _marg(joint, labels, a + b + c)
    pac = _marg(joint, labels, a + c)
    pbc = _marg(joint, labels, b + c)
    pc = _marg(joint, labels, c) if c else {(): 1.0}
    na, nb = len(a), len(b)
    total = 0.0
    for sym, p in pabc.items():
        if p <= 0:
            continue
        sa, sb, sc = sym[:na], sym[na:na + nb], sym[na + nb:]
        total += p * math.log2(p * pc[sc] / (pac[sa + sc] * pbc[sb + sc]))
    return total


def blahut_arimoto(p_y_x, tol: float = 1e-12, max_iter: int = 100000) -> float:
    """Capacity in bits of the DMC ``p_y_x[x, y]`` by alternating maximization."""
    P = np.asarray(p_y_x, dtype=float)
    r = np.full(P.shape[0], 1.0 / P.shape[0])
    for _ in range(max_iter):
        q = r[:, None] * P
        q = q / np.where(q.sum(axis=0) > 0, q.sum(axis=0), 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            logq = np.where(P > 0, np.log(np.where(q > 0, q, 1.0)), 0.0)
        w = np.exp((P * logq).sum(axis=1))
        new = w / w.sum()
        if np.max(np.abs(new - r)) < tol:
            r = new
            break
        r = new
    py = r @ P
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(P > 0, P * np.log2(P / py[None, :]), 0.0)
    return float((r[:, None] * terms).sum())


def lp_max_rate(system, margin: float = 0.0):
    """(feasible, max R) of an inequality system via scipy's LP solver.

    Strictness is ignored, like the closed-row reading used by the
    elimination; ``margin`` loosens every bound.
    """
    from scipy.optimize import linprog

    names = list(system.variables)
    A = np.array([[float(r.coeffs.get(v, 0)) for v in names] for r in system.rows])
    bnd = np.array([float(r.bound) + margin for r in system.rows])
    c = np.zeros(len(names))
    c[names.index("R")] = -1.0
    res = linprog(c, A_ub=A, b_ub=bnd, bounds=[(None, None)] * len(names),
                  method="highs")
    if res.status == 2:
        return False, 0.0
    if res.status == 3:
        return True, math.inf
    assert res.status == 0, res.message
    return True, -res.fun
