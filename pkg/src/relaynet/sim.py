"""Monte-Carlo simulation of the block-Markov compress-and-forward scheme.

Rates are integer bit budgets: a budget ``k`` gives ``2**k`` indices and the
realized rate ``k / n``. One code (codebooks plus partitions) is drawn from
``SimParams.seed``; each trial draws messages and channel noise from its own
seed, so error estimates are for that fixed code.

Block bookkeeping (blocks ``1 .. B+1``, messages in blocks ``1 .. B-1``)::

    relay k, block b:  s_k(b)   = cell_k(z_k(b-1))
                       w0k1(b)  = coarse_k(s_k(b-1))      (deterministic cells)
                       w0k2(b)  = subcell_k(z_k(b-2))
    sender, block b:   same maps applied to its own estimates of s_k, z_k

Indices before block 1 are 0 (0-based), and so are the dummy messages of
blocks ``B`` and ``B+1``.
"""
from __future__ import annotations

import logging
import copy
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .pmf import FactoredNetworkDistribution, JointPmf, build_joint, conditional

log = logging.getLogger(__name__)

TYPICALITY_KINDS = ("robust", "strong")
# "fixed": one code from params.seed for every trial; "ensemble": a fresh code per trial
CODE_MODES = ("ensemble", "fixed")

OK, TRIVIAL = "ok", "trivial"
WRONG, NONE, MANY = "wrong", "no_candidate", "not_unique"
FAILED = (WRONG, NONE, MANY)


class SimParamsError(ValueError):
    pass


BUDGETS = ("k_R", "k_s1", "k_s2", "k_011", "k_012", "k_021", "k_022", "kh1", "kh2")


@dataclass(frozen=True)
class SimParams:
    n: int
    blocks: int = 3
    k_R: int = 0
    k_s1: int = 0
    k_s2: int = 0
    k_011: int = 0
    k_012: int = 0
    k_021: int = 0
    k_022: int = 0
    kh1: int = 0
    kh2: int = 0
    epsilon: float = 0.5
    trials: int = 100
    seed: int = 0
    joint_decoding: bool = False
    typicality: str = "strong"
    code: str = "ensemble"
    memory_cap: int = 10**8

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise SimParamsError("; ".join(problems))

    def problems(self) -> list[str]:
        out = []
        if self.n < 1:
            out.append("n >= 1")
        if self.blocks < 2:
            out.append("blocks >= 2 (B-1 >= 1 messages)")
        for k in BUDGETS:
            if getattr(self, k) < 0:
                out.append(f"{k} >= 0")
        if self.k_011 > self.k_s1:
            out.append("k_011 <= k_s1 (deterministic partition of the s1 indices)")
        if self.k_021 > self.k_s2:
            out.append("k_021 <= k_s2 (deterministic partition of the s2 indices)")
        if self.k_s1 > self.kh1:
            out.append("k_s1 <= kh1 (no more cells than compression indices)")
        if self.k_s2 > self.kh2:
            out.append("k_s2 <= kh2 (no more cells than compression indices)")
        if self.k_012 > self.kh1 - self.k_s1:
            out.append("k_012 <= kh1 - k_s1 (subcells per cell)")
        if self.k_022 > self.kh2 - self.k_s2:
            out.append("k_022 <= kh2 - k_s2 (subcells per cell)")
        if not 0 < self.epsilon < 1:
            out.append("0 < epsilon < 1")
        if self.trials < 1:
            out.append("trials >= 1")
        if self.code not in CODE_MODES:
            out.append(f"code in {CODE_MODES}")
        if self.typicality not in TYPICALITY_KINDS:
            out.append(f"typicality in {TYPICALITY_KINDS}")
        return out

    @property
    def rates(self) -> dict[str, float]:
        names = ("R", "R_s1", "R_s2", "R_011", "R_012", "R_021", "R_022", "Rh1", "Rh2")
        return {nm: getattr(self, k) / self.n for nm, k in zip(names, BUDGETS)}

    def replace(self, **kw) -> "SimParams":
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d.update(kw)
        return SimParams(**d)


# ---------------------------------------------------------------------------
# typicality


def _flat_index(seqs: Sequence[np.ndarray], sizes: Sequence[int]) -> np.ndarray:
    idx = np.zeros(np.broadcast_shapes(*(np.shape(s) for s in seqs)), dtype=np.int64)
    for s, k in zip(seqs, sizes):
        idx = idx * k + s
    return idx


def typical_mask(idx: np.ndarray, p_flat: np.ndarray, epsilon: float,
                 kind: str = "robust") -> np.ndarray:
    """Row-wise typicality of flattened joint-symbol sequences ``idx`` (C, n)."""
    idx = np.atleast_2d(idx)
    C, n = idx.shape
    K = p_flat.size
    counts = np.bincount((idx + K * np.arange(C)[:, None]).ravel(),
                         minlength=C * K).reshape(C, K)
    pi = counts / n
    dev = np.abs(pi - p_flat)
    if kind == "robust":
        ok = dev <= epsilon * p_flat + 1e-12
    elif kind == "strong":
        ok = (dev <= epsilon + 1e-12) & ~((counts > 0) & (p_flat <= 0))
    else:
        raise ValueError(f"typicality kind must be one of {TYPICALITY_KINDS}")
    return ok.all(axis=1)


def is_jointly_typical(sequences: Mapping[str, Sequence[int]], joint: JointPmf,
                       epsilon: float, kind: str = "robust") -> bool:
    """Whether the labeled sequences have a joint type close to ``joint``.

    ``robust``: ``|pi(a) - p(a)| <= epsilon * p(a)`` for every symbol ``a``
    (zero-probability symbols may not occur at all).
    ``strong``: ``|pi(a) - p(a)| <= epsilon`` and no zero-probability symbol.
    """
    labels = tuple(sequences)
    unknown = set(labels).difference(joint.labels)
    if unknown or not labels:
        raise KeyError(f"labels {sorted(unknown)} not in joint {joint.labels}")
    seqs = [np.asarray(sequences[k], dtype=np.int64) for k in labels]
    lengths = {s.shape[-1] for s in seqs}
    if len(lengths) != 1:
        raise ValueError(f"sequences of unequal length {sorted(lengths)}")
    marg = joint.reorder(labels)
    idx = _flat_index(seqs, marg.table.shape)
    return bool(typical_mask(idx[None, :], marg.table.ravel(), epsilon, kind)[0])


# ---------------------------------------------------------------------------
# code construction


def _draw(rng, cond: np.ndarray, parent: np.ndarray) -> np.ndarray:
    """Sample outputs of ``cond`` (P, K) for every parent index in ``parent``."""
    P, K = cond.shape
    cdf = np.cumsum(cond, axis=-1)
    cdf[:, -1] = 1.0
    # one sorted search over all rows: row p occupies the interval [p, p + 1)
    cdf = (cdf + np.arange(P)[:, None]).ravel()
    u = rng.random(parent.shape) + parent
    out = np.searchsorted(cdf, u, side="right") - parent * K
    return np.minimum(out, K - 1).astype(np.int64)


class CompressionCodebook:
    """Compression codewords ``[z, s, w, t]`` drawn one ``(s, w)`` column at a time.

    Each column gets its own seed derived from the code seed and ``(s, w)``,
    so a column is the same whether or not other columns were ever drawn.
    Trials touch only a handful of columns, which keeps large ``kh + k_s``
    budgets cheap.
    """

    def __init__(self, seed: np.random.SeedSequence, family: int, cond: np.ndarray,
                 parents: np.ndarray, count: int):
        self._seed, self._family = seed, family
        self._cond, self._parents = cond, parents  # parents: [s, w, t]
        self.shape = (count,) + parents.shape
        self._columns: dict[tuple[int, int], np.ndarray] = {}

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def column(self, s: int, w: int) -> np.ndarray:
        key = (int(s), int(w))
        if key not in self._columns:
            ss = np.random.SeedSequence(self._seed.entropy,
                                        spawn_key=self._seed.spawn_key + (self._family,) + key)
            par = np.broadcast_to(self._parents[key], (self.shape[0], self.shape[-1]))
            self._columns[key] = _draw(np.random.default_rng(ss), self._cond, par)
        return self._columns[key]

    def __getitem__(self, key):
        z, s, w = key
        return self.column(s, w)[z]

    def __array__(self, dtype=None, copy=None):
        out = np.stack([np.stack([self.column(s, w) for w in range(self.shape[2])], axis=1)
                        for s in range(self.shape[1])], axis=1)
        return out if dtype is None else out.astype(dtype)


@dataclass(frozen=True)
class Codebooks:
    v1: np.ndarray   # [w01, t]
    v2: np.ndarray   # [w02, t]
    x1: np.ndarray   # [s1, w01, t]
    x2: np.ndarray   # [s2, w02, t]
    x0: np.ndarray   # [w, w01, w02, t]
    yh1: CompressionCodebook  # [z1, s1, w01, t]
    yh2: CompressionCodebook  # [z2, s2, w02, t]

    @property
    def total_symbols(self) -> int:
        return sum(a.size for a in (self.v1, self.v2, self.x1, self.x2, self.x0,
                                    self.yh1, self.yh2))


def codebook_size(params: SimParams) -> int:
    p = params
    w01, w02 = 2 ** (p.k_011 + p.k_012), 2 ** (p.k_021 + p.k_022)
    s1, s2 = 2 ** p.k_s1, 2 ** p.k_s2
    return p.n * (w01 + w02 + s1 * w01 + s2 * w02 + 2 ** p.k_R * w01 * w02
                  + 2 ** p.kh1 * s1 * w01 + 2 ** p.kh2 * s2 * w02)


def code_seed(params: SimParams, trial: int | None = None) -> np.random.SeedSequence:
    """Seed of the code: one per parameter set, or one per trial in ensemble mode."""
    key = [params.seed, 0xC0DE] if trial is None else [params.seed, 0xC0DE, trial]
    return np.random.SeedSequence(key)


def _code_rngs(seed: np.random.SeedSequence):
    books, parts = seed.spawn(2)
    return np.random.default_rng(books), np.random.default_rng(parts)


def generate_codebooks(dist: FactoredNetworkDistribution, params: SimParams,
                       joint: JointPmf | None = None,
                       seed: np.random.SeedSequence | None = None) -> Codebooks:
    size = codebook_size(params)
    if size > params.memory_cap:
        raise MemoryError(f"codebooks need {size} symbols > cap {params.memory_cap}")
    joint = build_joint(dist) if joint is None else joint
    seed = code_seed(params) if seed is None else seed
    rng, _ = _code_rngs(seed)
    p, n = params, params.n
    a = joint.sizes
    W01, W02 = 2 ** (p.k_011 + p.k_012), 2 ** (p.k_021 + p.k_022)
    S1, S2 = 2 ** p.k_s1, 2 ** p.k_s2

    v1 = _draw(rng, dist.p_v1.probs[None, :], np.zeros((W01, n), np.int64))
    v2 = _draw(rng, dist.p_v2.probs[None, :], np.zeros((W02, n), np.int64))
    x1 = _draw(rng, dist.p_x1.probs, np.broadcast_to(v1, (S1, W01, n)))
    x2 = _draw(rng, dist.p_x2.probs, np.broadcast_to(v2, (S2, W02, n)))
    px0 = dist.p_x0.probs.reshape(a["v1"] * a["v2"], a["x0"])
    par0 = v1[:, None, :] * a["v2"] + v2[None, :, :]
    x0 = _draw(rng, px0, np.broadcast_to(par0, (2 ** p.k_R, W01, W02, n)))
    # compression codewords follow the marginal test channel p(yh|x, v)
    q1 = conditional(joint, ("yh1",), ("v1", "x1")).reshape(-1, a["yh1"])
    q2 = conditional(joint, ("yh2",), ("v2", "x2")).reshape(-1, a["yh2"])
    par1 = v1[None, :, :] * a["x1"] + x1
    par2 = v2[None, :, :] * a["x2"] + x2
    yh1 = CompressionCodebook(seed, 1, q1, par1, 2 ** p.kh1)
    yh2 = CompressionCodebook(seed, 2, q2, par2, 2 ** p.kh2)
    return Codebooks(v1, v2, x1, x2, x0, yh1, yh2)


@dataclass(frozen=True)
class Partitions:
    cell1: np.ndarray  # z1 -> s1
    cell2: np.ndarray
    sub1: np.ndarray   # z1 -> w012
    sub2: np.ndarray
    shift1: int        # s1 -> w011 is s1 >> shift1
    shift2: int

    def coarse1(self, s1: int) -> int:
        return int(s1) >> self.shift1

    def coarse2(self, s2: int) -> int:
        return int(s2) >> self.shift2

    def coarse_cell1(self, w011: int) -> range:
        size = 1 << self.shift1
        return range(w011 * size, (w011 + 1) * size)

    def coarse_cell2(self, w021: int) -> range:
        size = 1 << self.shift2
        return range(w021 * size, (w021 + 1) * size)


def make_partitions(params: SimParams,
                    seed: np.random.SeedSequence | None = None) -> Partitions:
    """Random cells and subcells for compression indices, contiguous blocks for s."""
    _, rng = _code_rngs(code_seed(params) if seed is None else seed)
    p = params
    return Partitions(
        rng.integers(0, 2 ** p.k_s1, 2 ** p.kh1),
        rng.integers(0, 2 ** p.k_s2, 2 ** p.kh2),
        rng.integers(0, 2 ** p.k_012, 2 ** p.kh1),
        rng.integers(0, 2 ** p.k_022, 2 ** p.kh2),
        p.k_s1 - p.k_011,
        p.k_s2 - p.k_021,
    )


# ---------------------------------------------------------------------------
# one trial


@dataclass(frozen=True)
class StepOutcome:
    block: int       # block whose index is being decoded
    node: str
    step: str
    status: str
    decoded: object
    truth: object

    @property
    def stage(self) -> str:
        return f"{self.node}:{self.step}:{self.status}"


@dataclass
class TrialResult:
    messages: tuple[int, ...]
    decoded: tuple[int | None, ...]
    outcomes: list[StepOutcome]
    relay_choices: dict[str, tuple[int, ...]]
    consistent: bool = True

    @property
    def error(self) -> bool:
        return any(d != w for d, w in zip(self.decoded, self.messages))

    @property
    def failure_stage(self) -> str | None:
        if not self.error:
            return None
        for o in self.outcomes:
            if o.status in FAILED:
                return o.stage
        return "receiver:message:wrong"

    def outcomes_at(self, node: str, step: str | None = None) -> list[StepOutcome]:
        return [o for o in self.outcomes if o.node == node and (step is None or o.step == step)]


_STEP_LABELS = {
    "relay1": ("yh1", "y1", "v1", "x1"),
    "relay2": ("yh2", "y2", "v2", "x2"),
    "sender_cells": ("v1", "v2", "x1", "x2", "x0", "y0"),
    "sender_z1": ("v1", "x1", "y0", "x0", "yh1"),
    "sender_z2": ("v2", "x2", "y0", "x0", "yh2"),
    "sender_zz": ("v1", "v2", "x1", "x2", "y0", "x0", "yh1", "yh2"),
    "recv_coop": ("v1", "v2", "y0"),
    "recv_cells": ("v1", "v2", "x1", "x2", "y0"),
    "recv_z1": ("v1", "x1", "y0", "yh1"),
    "recv_z2": ("v2", "x2", "y0", "yh2"),
    "recv_zz": ("v1", "v2", "x1", "x2", "y0", "yh1", "yh2"),
    "recv_msg": ("v1", "v2", "x1", "x2", "x0", "y0", "yh1", "yh2"),
}


def _pick(cands: np.ndarray, truth, space: int):
    """Unique-candidate rule; a one-element search space needs no test."""
    if space == 1:
        return 0, TRIVIAL
    if len(cands) == 0:
        return 0, NONE
    if len(cands) > 1:
        return int(cands[0]), MANY
    val = int(cands[0])
    return val, (OK if val == truth else WRONG)


def _pick_pair(cands: Sequence[tuple[int, int]], truth, space: int):
    if space == 1:
        return (0, 0), TRIVIAL
    if not cands:
        return (0, 0), NONE
    if len(cands) > 1:
        return tuple(cands[0]), MANY
    val = tuple(int(c) for c in cands[0])
    return val, (OK if val == tuple(truth) else WRONG)


class Scheme:
    """A drawn code for one distribution, ready to run trials."""

    def __init__(self, dist: FactoredNetworkDistribution, params: SimParams,
                 seed: np.random.SeedSequence | None = None):
        self.dist, self.params = dist, params
        self.joint = build_joint(dist)
        self.books = generate_codebooks(dist, params, self.joint, seed)
        self.parts = make_partitions(params, seed)
        self.sizes = self.joint.sizes
        self.pmfs = {k: self.joint.reorder(v) for k, v in _STEP_LABELS.items()}
        ch = dist.channel.probs
        self._ch_shape = ch.shape
        self._ch_cdf = np.cumsum(ch.reshape(int(np.prod(ch.shape[:3])), -1), axis=1)
        self._ch_cdf[:, -1] = 1.0
        p = params
        self._supports: dict[tuple, np.ndarray] = {}
        self.k012 = p.k_012
        self.k022 = p.k_022

    def redraw(self, seed: np.random.SeedSequence) -> "Scheme":
        """Same distribution and parameters, fresh codebooks and partitions."""
        other = copy.copy(self)
        other.books = generate_codebooks(self.dist, self.params, self.joint, seed)
        other.parts = make_partitions(self.params, seed)
        return other

    # -- helpers ---------------------------------------------------------
    def _typical(self, step: str, seqs: Sequence[np.ndarray]) -> np.ndarray:
        pmf = self.pmfs[step]
        idx = _flat_index([np.asarray(s, np.int64) for s in seqs], pmf.table.shape)
        idx = np.atleast_2d(idx)
        return typical_mask(idx, pmf.table.ravel(), self.params.epsilon,
                            self.params.typicality)

    def _w01(self, w011, w012):
        return (int(w011) << self.k012) | int(w012)

    def _w02(self, w021, w022):
        return (int(w021) << self.k022) | int(w022)

    def _split01(self, w01):
        return int(w01) >> self.k012, int(w01) & ((1 << self.k012) - 1)

    def _split02(self, w02):
        return int(w02) >> self.k022, int(w02) & ((1 << self.k022) - 1)

    def _channel(self, rng, x0, x1, x2):
        X0, X1, X2, Y0, Y1, Y2 = self._ch_shape
        par = (x0 * X1 + x1) * X2 + x2
        u = rng.random(par.shape)
        out = (u[:, None] > self._ch_cdf[par]).sum(axis=1)
        y0, rest = np.divmod(out, Y1 * Y2)
        y1, y2 = np.divmod(rest, Y2)
        return y0, y1, y2

    # -- the trial -------------------------------------------------------
    def run(self, messages: Sequence[int], seed) -> TrialResult:
        p, cb, pt = self.params, self.books, self.parts
        B = p.blocks
        messages = tuple(int(m) for m in messages)
        if len(messages) != B - 1:
            raise ValueError(f"need {B - 1} messages, got {len(messages)}")
        if any(not 0 <= m < 2 ** p.k_R for m in messages):
            raise ValueError("message out of range")
        rng = np.random.default_rng(seed)
        w = {b: messages[b - 1] for b in range(1, B)}
        w.update({B: 0, B + 1: 0})

        g = lambda d, b: d.get(b, 0)  # noqa: E731 -- index before block 1 is 0
        z1, z2, s1, s2, w01, w02 = {}, {}, {}, {}, {}, {}
        sE1, sE2, zE1, zE2, w01E, w02E = {}, {}, {}, {}, {}, {}
        sD1, sD2, zD1, zD2, w01D, w02D = {}, {}, {}, {}, {}, {}
        x0s, y0s = {}, {}
        decoded: dict[int, int | None] = {}
        out: list[StepOutcome] = []
        nS1, nS2 = 2 ** p.k_s1, 2 ** p.k_s2
        nZ1, nZ2 = 2 ** p.kh1, 2 ** p.kh2

        for b in range(1, B + 2):
            # ---- relays encode
            s1[b] = int(pt.cell1[g(z1, b - 1)])
            s2[b] = int(pt.cell2[g(z2, b - 1)])
            w01[b] = self._w01(pt.coarse1(g(s1, b - 1)), pt.sub1[g(z1, b - 2)])
            w02[b] = self._w02(pt.coarse2(g(s2, b - 1)), pt.sub2[g(z2, b - 2)])
            x1 = cb.x1[s1[b], w01[b]]
            x2 = cb.x2[s2[b], w02[b]]
            # ---- sender encodes with its own estimates
            w01E[b] = self._w01(pt.coarse1(g(sE1, b - 1)), pt.sub1[g(zE1, b - 2)])
            w02E[b] = self._w02(pt.coarse2(g(sE2, b - 1)), pt.sub2[g(zE2, b - 2)])
            x0 = cb.x0[w[b], w01E[b], w02E[b]]
            x0s[b] = x0
            y0, y1, y2 = self._channel(rng, x0, x1, x2)
            y0s[b] = y0

            # ---- relays pick compression indices: first typical index
            for k, (zk, yk, yh, sk, wk, v, x, step, nZ) in enumerate((
                    (z1, y1, cb.yh1, s1, w01, cb.v1, x1, "relay1", nZ1),
                    (z2, y2, cb.yh2, s2, w02, cb.v2, x2, "relay2", nZ2)), 1):
                if nZ == 1:
                    zk[b] = 0
                    continue
                mask = self._typical(step, (yh[:, sk[b], wk[b]], yk, v[wk[b]], x))
                hits = np.flatnonzero(mask)
                zk[b] = int(hits[0]) if hits.size else 0
                if not hits.size:
                    out.append(StepOutcome(b, f"relay{k}", "covering", NONE, 0, None))

            # ---- sender, end of block b
            if b <= B:
                self._sender_cells(b, sE1, sE2, s1, s2, w01E, w02E, x0, y0, out, nS1, nS2)
                if b >= 2:
                    self._sender_compression(b, sE1, sE2, zE1, zE2, z1, z2, w01E, w02E,
                                             x0s[b - 1], y0s[b - 1], out, nZ1, nZ2)

            # ---- receiver, end of block b
            coop, st = self._receiver_coop(b, w01, w02, y0, out)
            w01D[b], w02D[b] = coop
            if b >= 2:
                self._receiver_cells(b - 1, sD1, sD2, s1, s2, w01D, w02D, y0s[b - 1],
                                     out, nS1, nS2)
            if b >= 3:
                self._receiver_compression(b - 2, sD1, sD2, zD1, zD2, z1, z2, w01D, w02D,
                                           y0s[b - 2], out, nZ1, nZ2)
                decoded[b - 2] = self._receiver_message(b - 2, w, sD1, sD2, zD1, zD2,
                                                        w01D, w02D, y0s[b - 2], out)

        result = TrialResult(messages, tuple(decoded[b] for b in range(1, B)), out,
                             {"relay1": tuple(z1[b] for b in range(1, B + 2)),
                              "relay2": tuple(z2[b] for b in range(1, B + 2))})
        result.consistent = self._self_consistent(result, sD1, sD2, zD1, zD2, w01D, w02D)
        return result

    # -- decoding steps --------------------------------------------------
    def _sender_cells(self, b, sE1, sE2, s1, s2, w01E, w02E, x0, y0, out, nS1, nS2):
        cb = self.books
        a, c = w01E[b], w02E[b]
        if nS1 * nS2 == 1:
            sE1[b], sE2[b] = 0, 0
            return
        hits = self._scan_pairs("sender_cells",
                                {"v1": cb.v1[a], "v2": cb.v2[c], "x0": x0, "y0": y0},
                                {"x1": cb.x1[:, a]}, {"x2": cb.x2[:, c]},
                                np.arange(nS1), np.arange(nS2))
        (sE1[b], sE2[b]), st = _pick_pair(hits, (s1[b], s2[b]), nS1 * nS2)
        out.append(StepOutcome(b, "sender", "cells", st, (sE1[b], sE2[b]), (s1[b], s2[b])))

    def _compression_candidates(self, step, seqs_fixed, yh_book, s, w, cell, target,
                                extra=None):
        """Indices z in cell ``target`` (and subcell ``extra``) that are typical."""
        z = np.arange(yh_book.shape[0])
        keep = cell[z] == target
        if extra is not None:
            sub, wsub = extra
            keep &= sub[z] == wsub
        z = z[keep]
        if z.size == 0:
            return z
        mask = self._typical(step, tuple(seqs_fixed) + (yh_book[z, s, w],))
        return z[mask]

    def _sender_compression(self, b, sE1, sE2, zE1, zE2, z1, z2, w01E, w02E, x0p, y0p,
                            out, nZ1, nZ2):
        """Resolve block b-1 compression indices inside the cells decoded in block b."""
        cb, pt = self.books, self.parts
        a, c = w01E[b - 1], w02E[b - 1]
        sa, sc = sE1.get(b - 1, 0), sE2.get(b - 1, 0)
        if self.params.joint_decoding:
            pairs = self._pairs(
                "sender_zz",
                {"v1": cb.v1[a], "v2": cb.v2[c], "x1": cb.x1[sa, a], "x2": cb.x2[sc, c],
                 "y0": y0p, "x0": x0p},
                (sa, a, sc, c),
                (pt.cell1 == sE1[b]), (pt.cell2 == sE2[b]))
            (zE1[b - 1], zE2[b - 1]), st = _pick_pair(pairs, (z1[b - 1], z2[b - 1]),
                                                      nZ1 * nZ2)
            out.append(StepOutcome(b - 1, "sender", "compression", st,
                                   (zE1[b - 1], zE2[b - 1]), (z1[b - 1], z2[b - 1])))
            return
        for k, (zE, z, sE, book, cell, v, x, wi, si, step, nZ) in enumerate((
                (zE1, z1, sE1, cb.yh1, pt.cell1, cb.v1, cb.x1, a, sa, "sender_z1", nZ1),
                (zE2, z2, sE2, cb.yh2, pt.cell2, cb.v2, cb.x2, c, sc, "sender_z2", nZ2)), 1):
            if nZ == 1:
                zE[b - 1] = 0
                continue
            cands = self._compression_candidates(step, (v[wi], x[si, wi], y0p, x0p),
                                                 book, si, wi, cell, sE[b])
            zE[b - 1], st = _pick(cands, z[b - 1], nZ)
            out.append(StepOutcome(b - 1, "sender", f"compression{k}", st, zE[b - 1],
                                   z[b - 1]))

    def _pairs(self, step, fixed, idx, allowed1, allowed2):
        """All (z1, z2) with both indices allowed and the full tuple typical."""
        cb = self.books
        sa, a, sc, c = idx
        za, zb = np.flatnonzero(allowed1), np.flatnonzero(allowed2)
        return self._scan_pairs(step, fixed, {"yh1": cb.yh1[za, sa, a]},
                                {"yh2": cb.yh2[zb, sc, c]}, za, zb)

    def _support_mask(self, seqs: Mapping[str, np.ndarray]) -> np.ndarray:
        """Rows whose joint symbols all have positive probability."""
        labels = tuple(seqs)
        if labels not in self._supports:
            self._supports[labels] = self.joint.reorder(labels).table.ravel() > 0
        idx = _flat_index([np.asarray(seqs[k], np.int64) for k in labels],
                          [self.sizes[k] for k in labels])
        return self._supports[labels][np.atleast_2d(idx)].all(axis=1)

    def _scan_pairs(self, step, fixed, first, second, ids1, ids2):
        """Typical (i, j) pairs over a product of two candidate lists.

        A pair can only be typical if each half avoids zero-probability
        symbols on its own marginal, so each list is screened first; the
        screen never drops a pair the full test would accept.
        """
        ids1, ids2 = np.asarray(ids1), np.asarray(ids2)
        if ids1.size == 0 or ids2.size == 0:
            return []
        keep1 = self._support_mask({**fixed, **first})
        keep2 = self._support_mask({**fixed, **second})
        i1, i2 = np.flatnonzero(keep1), np.flatnonzero(keep2)
        if i1.size == 0 or i2.size == 0:
            return []
        I1, I2 = np.meshgrid(i1, i2, indexing="ij")
        I1, I2 = I1.ravel(), I2.ravel()
        seqs = {**fixed, **{k: v[I1] for k, v in first.items()},
                **{k: v[I2] for k, v in second.items()}}
        mask = self._typical(step, tuple(seqs[k] for k in _STEP_LABELS[step]))
        return [(int(ids1[i]), int(ids2[j])) for i, j in zip(I1[mask], I2[mask])]

    def _receiver_coop(self, b, w01, w02, y0, out):
        cb = self.books
        n1, n2 = cb.v1.shape[0], cb.v2.shape[0]
        if n1 * n2 == 1:
            return (0, 0), TRIVIAL
        hits = self._scan_pairs("recv_coop", {"y0": y0}, {"v1": cb.v1}, {"v2": cb.v2},
                                np.arange(n1), np.arange(n2))
        val, st = _pick_pair(hits, (w01[b], w02[b]), n1 * n2)
        out.append(StepOutcome(b, "receiver", "cooperation", st, val, (w01[b], w02[b])))
        return val, st

    def _receiver_cells(self, b, sD1, sD2, s1, s2, w01D, w02D, y0, out, nS1, nS2):
        """Restricted decoding of block-b cell indices inside the coarse cells of b+1."""
        cb, pt = self.books, self.parts
        a, c = w01D[b], w02D[b]
        w011n, _ = self._split01(w01D[b + 1])
        w021n, _ = self._split02(w02D[b + 1])
        r1, r2 = pt.coarse_cell1(w011n), pt.coarse_cell2(w021n)
        space = len(r1) * len(r2)
        if space == 1:
            sD1[b], sD2[b] = r1[0], r2[0]
            st = OK if (sD1[b], sD2[b]) == (s1[b], s2[b]) else WRONG
            if nS1 * nS2 > 1:
                out.append(StepOutcome(b, "receiver", "cells", st, (sD1[b], sD2[b]),
                                       (s1[b], s2[b])))
            return
        r1, r2 = np.asarray(r1), np.asarray(r2)
        hits = self._scan_pairs("recv_cells", {"v1": cb.v1[a], "v2": cb.v2[c], "y0": y0},
                                {"x1": cb.x1[r1, a]}, {"x2": cb.x2[r2, c]}, r1, r2)
        (sD1[b], sD2[b]), st = _pick_pair(hits, (s1[b], s2[b]), space)
        out.append(StepOutcome(b, "receiver", "cells", st, (sD1[b], sD2[b]), (s1[b], s2[b])))

    def _receiver_compression(self, b, sD1, sD2, zD1, zD2, z1, z2, w01D, w02D, y0, out,
                              nZ1, nZ2):
        """Block-b compression indices: cell from block b+1, subcell from block b+2."""
        cb, pt = self.books, self.parts
        a, c = w01D[b], w02D[b]
        sa, sc = sD1[b], sD2[b]
        _, w012 = self._split01(w01D[b + 2])
        _, w022 = self._split02(w02D[b + 2])
        if self.params.joint_decoding:
            pairs = self._pairs(
                "recv_zz", {"v1": cb.v1[a], "v2": cb.v2[c], "x1": cb.x1[sa, a],
                            "x2": cb.x2[sc, c], "y0": y0},
                (sa, a, sc, c),
                (pt.cell1 == sD1[b + 1]) & (pt.sub1 == w012),
                (pt.cell2 == sD2[b + 1]) & (pt.sub2 == w022))
            (zD1[b], zD2[b]), st = _pick_pair(pairs, (z1[b], z2[b]), nZ1 * nZ2)
            out.append(StepOutcome(b, "receiver", "compression", st, (zD1[b], zD2[b]),
                                   (z1[b], z2[b])))
            return
        for k, (zD, z, sD, book, cell, sub, wsub, v, x, wi, si, step, nZ) in enumerate((
                (zD1, z1, sD1, cb.yh1, pt.cell1, pt.sub1, w012, cb.v1, cb.x1, a, sa,
                 "recv_z1", nZ1),
                (zD2, z2, sD2, cb.yh2, pt.cell2, pt.sub2, w022, cb.v2, cb.x2, c, sc,
                 "recv_z2", nZ2)), 1):
            if nZ == 1:
                zD[b] = 0
                continue
            cands = self._compression_candidates(step, (v[wi], x[si, wi], y0), book, si,
                                                 wi, cell, sD[b + 1], (sub, wsub))
            zD[b], st = _pick(cands, z[b], nZ)
            out.append(StepOutcome(b, "receiver", f"compression{k}", st, zD[b], z[b]))

    def _receiver_message(self, b, w, sD1, sD2, zD1, zD2, w01D, w02D, y0, out):
        cb = self.books
        a, c = w01D[b], w02D[b]
        sa, sc = sD1[b], sD2[b]
        nW = cb.x0.shape[0]
        if nW == 1:
            return 0
        ww = np.arange(nW)
        mask = self._typical("recv_msg", (cb.v1[a], cb.v2[c], cb.x1[sa, a], cb.x2[sc, c],
                                          cb.x0[ww, a, c], y0, cb.yh1[zD1[b], sa, a],
                                          cb.yh2[zD2[b], sc, c]))
        val, st = _pick(np.flatnonzero(mask), w[b], nW)
        out.append(StepOutcome(b, "receiver", "message", st, val, w[b]))
        return val if st in (OK, WRONG) else None

    def _self_consistent(self, result, sD1, sD2, zD1, zD2, w01D, w02D) -> bool:
        """When every step resolved uniquely, decoded indices obey the encoding maps."""
        if any(o.status in (NONE, MANY) for o in result.outcomes):
            return True
        pt = self.parts
        for b in sorted(zD1):
            if b + 2 not in w01D or b + 1 not in sD1:
                continue
            w011, w012 = self._split01(w01D[b + 2])
            w021, w022 = self._split02(w02D[b + 2])
            if pt.cell1[zD1[b]] != sD1[b + 1] or pt.cell2[zD2[b]] != sD2[b + 1]:
                return False
            if pt.sub1[zD1[b]] != w012 or pt.sub2[zD2[b]] != w022:
                return False
            if pt.coarse1(sD1[b + 1]) != w011 or pt.coarse2(sD2[b + 1]) != w021:
                return False
        return True


def run_trial(dist: FactoredNetworkDistribution, params: SimParams,
              messages: Sequence[int], seed, scheme: Scheme | None = None) -> TrialResult:
    scheme = Scheme(dist, params) if scheme is None else scheme
    return scheme.run(messages, seed)


@dataclass
class ErrorEstimate:
    error: float
    ci: tuple[float, float]
    stages: Counter
    trials: int
    failures: int
    inconsistent: int = 0
    step_failures: Counter = field(default_factory=Counter)


def wald_ci(failures: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    """Normal-approximation interval; with no failures, the rule-of-three bound."""
    p = failures / trials
    if failures == 0:
        return 0.0, min(1.0, 3.0 / trials * 1.2)
    if failures == trials:
        return max(0.0, 1.0 - 3.0 / trials * 1.2), 1.0
    half = z * math.sqrt(p * (1 - p) / trials)
    return max(0.0, p - half), min(1.0, p + half)


def trial_seed(params: SimParams, trial: int) -> int:
    """Noise seed for trial ``trial``; messages use a sibling stream."""
    return int(np.random.SeedSequence([params.seed, 0x7A1, trial]).generate_state(1)[0])


def trial_messages(params: SimParams, trial: int) -> np.ndarray:
    rng = np.random.default_rng([params.seed, 0x3E5, trial])
    return rng.integers(0, 2 ** params.k_R, params.blocks - 1)


def estimate_error(dist: FactoredNetworkDistribution, params: SimParams) -> ErrorEstimate:
    """Empirical block-error rate over ``params.trials`` seeded trials.

    In ``ensemble`` mode every trial also draws its own code, so the estimate
    is the error averaged over the random code ensemble; in ``fixed`` mode it
    is the error of the single code drawn from ``params.seed``.
    """
    scheme = Scheme(dist, params)
    stages: Counter = Counter()
    steps: Counter = Counter()
    failures = inconsistent = 0
    for t in range(params.trials):
        if params.code == "ensemble":
            scheme = scheme.redraw(code_seed(params, t))
        res = scheme.run(trial_messages(params, t), trial_seed(params, t))
        inconsistent += not res.consistent
        for o in res.outcomes:
            if o.status in FAILED:
                steps[f"{o.node}:{o.step}"] += 1
        if res.error:
            failures += 1
            stages[res.failure_stage] += 1
    return ErrorEstimate(failures / params.trials, wald_ci(failures, params.trials),
                         stages, params.trials, failures, inconsistent, steps)
