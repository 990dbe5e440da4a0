"""Local search for the supremum of the achievable rate over input distributions.

The channel is data; the search moves only the seven free factors
p(v1), p(v2), p(x1|v1), p(x2|v2), p(x0|v1,v2), p(yh1|y1,x1,v1), p(yh2|y2,x2,v2).
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .pmf import Channel, ConditionalTable, FactoredNetworkDistribution, validate
from .region import RegionVerdict, theorem1_verdict

log = logging.getLogger(__name__)

IMPROVE_TOL = 1e-12

FREE_FACTORS = ("p_v1", "p_v2", "p_x1", "p_x2", "p_x0", "q1", "q2")


def _dirichlet_table(rng, shape):
    return rng.dirichlet(np.ones(shape[-1]), size=shape[:-1]) if len(shape) > 1 \
        else rng.dirichlet(np.ones(shape[-1]))


def default_alphabets(channel: Channel, v1=2, v2=2, yh1=None, yh2=None) -> dict[str, int]:
    x0, x1, x2, y0, y1, y2 = channel.probs.shape
    return {"v1": v1, "v2": v2, "x0": x0, "x1": x1, "x2": x2, "y0": y0, "y1": y1,
            "y2": y2, "yh1": y1 if yh1 is None else yh1, "yh2": y2 if yh2 is None else yh2}


def random_channel(alphabets: Mapping[str, int], seed) -> Channel:
    rng = np.random.default_rng(seed)
    a = alphabets
    shape = (a["x0"], a["x1"], a["x2"], a["y0"] * a["y1"] * a["y2"])
    flat = _dirichlet_table(rng, shape)
    return Channel(flat.reshape(a["x0"], a["x1"], a["x2"], a["y0"], a["y1"], a["y2"]))


def random_dist(alphabets: Mapping[str, int], channel: Channel, seed) -> FactoredNetworkDistribution:
    """Every free row drawn from a flat Dirichlet; deterministic per seed."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    a = alphabets
    return FactoredNetworkDistribution.from_arrays(
        _dirichlet_table(rng, (a["v1"],)),
        _dirichlet_table(rng, (a["v2"],)),
        _dirichlet_table(rng, (a["v1"], a["x1"])),
        _dirichlet_table(rng, (a["v2"], a["x2"])),
        _dirichlet_table(rng, (a["v1"], a["v2"], a["x0"])),
        channel,
        _dirichlet_table(rng, (a["y1"], a["x1"], a["v1"], a["yh1"])),
        _dirichlet_table(rng, (a["y2"], a["x2"], a["v2"], a["yh2"])),
    )


def random_network(alphabets: Mapping[str, int], seed) -> FactoredNetworkDistribution:
    """Random channel and random free factors from one seed."""
    rng = np.random.default_rng(seed)
    ch = random_channel(alphabets, rng)
    return random_dist(alphabets, ch, rng)


def degenerate_dist(alphabets: Mapping[str, int], channel: Channel,
                    p_x0=None) -> FactoredNetworkDistribution:
    """Point-mass auxiliaries, relay inputs and compressions.

    Relays idle, so every compression constraint is vacuous and the rate
    reduces to I(X0; Y0) under ``p_x0`` (uniform by default).
    """
    a = alphabets

    def point(shape):
        t = np.zeros(shape)
        t[..., 0] = 1.0
        return t

    px0 = np.full(a["x0"], 1.0 / a["x0"]) if p_x0 is None else np.asarray(p_x0, float)
    return FactoredNetworkDistribution.from_arrays(
        point((a["v1"],)), point((a["v2"],)),
        point((a["v1"], a["x1"])), point((a["v2"], a["x2"])),
        np.broadcast_to(px0, (a["v1"], a["v2"], a["x0"])).copy(),
        channel,
        point((a["y1"], a["x1"], a["v1"], a["yh1"])),
        point((a["y2"], a["x2"], a["v2"], a["yh2"])),
    )


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 4
    iterations: int = 400
    schedule: tuple[float, ...] = (0.5, 0.2, 0.08, 0.03, 0.01, 0.003)
    seed: int = 0
    delta: float = 1e-9
    feasibility_steps: int = 60

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        s = self.schedule
        if not s or any(x <= 0 for x in s) or any(b > a for a, b in zip(s, s[1:])):
            raise ValueError("schedule must be strictly positive and nonincreasing")

    def scale_at(self, it: int) -> float:
        k = min(len(self.schedule) - 1, it * len(self.schedule) // max(self.iterations, 1))
        return self.schedule[k]


@dataclass
class SearchResult:
    dist: FactoredNetworkDistribution | None
    verdict: RegionVerdict | None
    restart_rates: list[float] = field(default_factory=list)
    histories: list[list[float]] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return self.dist is not None

    @property
    def rate(self) -> float:
        return self.verdict.achieved_rate if self.verdict else float("nan")


def _free_rows(dist: FactoredNetworkDistribution):
    """(factor name, row index) for every row with more than one symbol."""
    out = []
    for name in FREE_FACTORS:
        t = getattr(dist, name).probs
        if t.shape[-1] < 2:
            continue
        for idx in itertools.product(*(range(n) for n in t.shape[:-1])):
            out.append((name, idx))
    return out


def _with_row(dist, name, idx, row):
    table: ConditionalTable = getattr(dist, name)
    arr = np.array(table.probs)
    arr[idx] = row
    return dist.replace(**{name: ConditionalTable(table.output, table.given, arr)})


def _perturb(rng, row, scale):
    if rng.random() < 0.5:
        step = rng.dirichlet(np.ones(row.shape[-1]))
        new = (1.0 - scale) * row + scale * step
    else:
        # shift mass between two symbols; can walk along edges and reach faces
        i, j = rng.choice(row.shape[-1], size=2, replace=False)
        amount = min(row[i], scale * rng.random())
        new = row.copy()
        new[i] -= amount
        new[j] += amount
    return new / new.sum()


def _blend(dist, anchor, t):
    """Convex blend of every free factor toward ``anchor``."""
    changes = {}
    for name in FREE_FACTORS:
        a, b = getattr(dist, name), getattr(anchor, name)
        changes[name] = ConditionalTable(a.output, a.given, (1 - t) * a.probs + t * b.probs)
    return dist.replace(**changes)


def _feasible_start(dist, anchor, config):
    verdict = theorem1_verdict(dist, config.delta)
    if verdict.feasible:
        return dist, verdict
    # geometric approach to the always-feasible degenerate anchor
    for k in range(1, config.feasibility_steps + 1):
        t = 1.0 - 0.5 ** (k / 4)
        cand = _blend(dist, anchor, t)
        verdict = theorem1_verdict(cand, config.delta)
        if verdict.feasible:
            return cand, verdict
    verdict = theorem1_verdict(anchor, config.delta)
    return (anchor, verdict) if verdict.feasible else (None, None)


def local_search(start, config: OptimizerConfig, rng, anchor=None):
    """One restart. Returns (dist, verdict, accepted rate history)."""
    anchor = anchor if anchor is not None else start
    dist, verdict = _feasible_start(start, anchor, config)
    if dist is None:
        return None, None, []
    history = [verdict.achieved_rate]
    rows = _free_rows(dist)
    if not rows:
        return dist, verdict, history
    for it in range(config.iterations):
        scale = config.scale_at(it)
        name, idx = rows[rng.integers(len(rows))]
        row = getattr(dist, name).probs[idx]
        cand = _with_row(dist, name, idx, _perturb(rng, row, scale))
        v = theorem1_verdict(cand, config.delta)
        if v.feasible and v.achieved_rate > verdict.achieved_rate + IMPROVE_TOL:
            dist, verdict = cand, v
            history.append(v.achieved_rate)
    return dist, verdict, history


def maximize_rate(channel: Channel, alphabets: Mapping[str, int],
                  config: OptimizerConfig = OptimizerConfig()) -> SearchResult:
    """Multi-restart local search; ties go to the lowest restart index."""
    anchor = degenerate_dist(alphabets, channel)
    seeds = np.random.SeedSequence(config.seed).spawn(config.restarts)
    best = SearchResult(None, None)
    for r, ss in enumerate(seeds):
        rng = np.random.default_rng(ss)
        start = random_dist(alphabets, channel, rng)
        dist, verdict, hist = local_search(start, config, rng, anchor)
        best.histories.append(hist)
        rate = verdict.achieved_rate if verdict else float("nan")
        best.restart_rates.append(rate)
        log.debug("restart %d: rate %.6f after %d accepted moves", r, rate, len(hist))
        if verdict is not None and (best.verdict is None
                                    or rate > best.verdict.achieved_rate):
            best.dist, best.verdict = dist, verdict
    if best.dist is not None:
        assert not validate(best.dist)
    return best


def grid_search(channel: Channel, alphabets: Mapping[str, int], step: float = 1 / 8,
                delta: float = 1e-9, factors: Sequence[str] = FREE_FACTORS) -> SearchResult:
    """Exhaustive simplex grid over all-binary free rows.

    Only practical for tiny instances: every binary free row takes values on
    ``{0, step, ..., 1}``.
    """
    base = degenerate_dist(alphabets, channel)
    slots = [(n, idx) for n, idx in _free_rows(base) if n in factors]
    for n, _ in slots:
        if getattr(base, n).probs.shape[-1] != 2:
            raise ValueError("grid mode needs binary free alphabets")
    levels = np.arange(0.0, 1.0 + step / 2, step)
    best = SearchResult(None, None)
    for combo in itertools.product(levels, repeat=len(slots)):
        dist = base
        for (name, idx), p in zip(slots, combo):
            dist = _with_row(dist, name, idx, np.array([p, 1.0 - p]))
        v = theorem1_verdict(dist, delta)
        if v.feasible and (best.verdict is None or v.achieved_rate > best.verdict.achieved_rate):
            best.dist, best.verdict = dist, v
    return best
