"""JSON network specs: alphabets, channel, optional distribution and simulation defaults.

Layout::

    {
      "name": "...", "description": "...",
      "alphabets": {"v1": 1, "v2": 1, "x0": 2, ...},        # all ten labels
      "channel": [[[[[[...]]]]]],                            # p[x0][x1][x2][y0][y1][y2]
      "dist": {                                              # optional
        "p_v1": [...], "p_v2": [...],
        "p_x1": [v1][x1], "p_x2": [v2][x2], "p_x0": [v1][v2][x0],
        "q1": [y1][x1][v1][yh1], "q2": [y2][x2][v2][yh2]
      },
      "simulation": {...}                                    # optional defaults
    }

Errors carry a JSON-path-like location such as ``channel[1][0][0]``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from .pmf import LABELS, ROW_TOL, Channel, FactoredNetworkDistribution

CHANNEL_AXES = ("x0", "x1", "x2", "y0", "y1", "y2")

# factor name -> axis labels, output last
DIST_AXES = {
    "p_v1": ("v1",),
    "p_v2": ("v2",),
    "p_x1": ("v1", "x1"),
    "p_x2": ("v2", "x2"),
    "p_x0": ("v1", "v2", "x0"),
    "q1": ("y1", "x1", "v1", "yh1"),
    "q2": ("y2", "x2", "v2", "yh2"),
}

BUNDLED = ("noiseless_p2p", "symmetric_two_relay", "useless_receiver")


class SpecParseError(ValueError):
    """The file is not readable JSON."""


class SpecError(ValueError):
    """The JSON is well formed but describes an invalid network."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass
class NetworkSpec:
    name: str
    alphabets: dict[str, int]
    channel: Channel
    dist: FactoredNetworkDistribution | None = None
    description: str = ""
    simulation: dict[str, Any] = field(default_factory=dict)
    metadata: dict[str, Any] = field(default_factory=dict)

    def with_dist(self, dist: FactoredNetworkDistribution, **metadata) -> "NetworkSpec":
        return NetworkSpec(self.name, dict(self.alphabets), self.channel, dist,
                           self.description, dict(self.simulation),
                           {**self.metadata, **metadata})

    def with_channel(self, channel: Channel) -> "NetworkSpec":
        dist = None if self.dist is None else self.dist.replace(channel=channel)
        return NetworkSpec(self.name, dict(self.alphabets), channel, dist,
                           self.description, dict(self.simulation), dict(self.metadata))

    def to_json(self) -> dict:
        out: dict[str, Any] = {"name": self.name}
        if self.description:
            out["description"] = self.description
        out["alphabets"] = {k: int(self.alphabets[k]) for k in LABELS}
        out["channel"] = self.channel.probs.tolist()
        if self.dist is not None:
            out["dist"] = {k: np.asarray(getattr(self.dist, k).probs).tolist()
                           for k in DIST_AXES}
        if self.simulation:
            out["simulation"] = self.simulation
        if self.metadata:
            out["metadata"] = self.metadata
        return out

    def dumps(self) -> str:
        return _render(self.to_json(), 0) + "\n"


def _render(obj, depth: int) -> str:
    """JSON with innermost number lists kept on one line."""
    pad, inner = " " * depth, " " * (depth + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(k)}: {_render(v, depth + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, list) and any(isinstance(x, (list, dict)) for x in obj):
        items = [f"{inner}{_render(v, depth + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    return json.dumps(obj)


def _array(obj, shape: tuple[int, ...], path: str, problems: list[str]):
    """Nested lists of numbers with exactly ``shape``; problems get a path each."""
    if not shape:
        if isinstance(obj, bool) or not isinstance(obj, (int, float)):
            problems.append(f"{path}: expected a number, got {type(obj).__name__}")
            return None
        if not np.isfinite(obj):
            problems.append(f"{path}: non-finite entry {obj!r}")
            return None
        return float(obj)
    if not isinstance(obj, list):
        problems.append(f"{path}: expected a list of length {shape[0]}")
        return None
    if len(obj) != shape[0]:
        problems.append(f"{path}: length {len(obj)}, expected {shape[0]}")
        return None
    items = [_array(x, shape[1:], f"{path}[{i}]", problems) for i, x in enumerate(obj)]
    if any(x is None for x in items):
        return None
    return np.array(items, dtype=float).reshape(shape)


def _check_rows(arr: np.ndarray, n_out: int, path: str, problems: list[str]) -> None:
    for idx in np.argwhere(arr < 0):
        problems.append(f"{path}{''.join(f'[{i}]' for i in idx)}: negative entry "
                        f"{arr[tuple(idx)]!r}")
    sums = arr.sum(axis=tuple(range(arr.ndim - n_out, arr.ndim)))
    for idx in np.argwhere(np.abs(np.atleast_1d(sums) - 1.0) > ROW_TOL):
        loc = "".join(f"[{i}]" for i in idx) if np.ndim(sums) else ""
        val = np.asarray(sums)[tuple(idx)] if np.ndim(sums) else float(sums)
        problems.append(f"{path}{loc}: row sums to {float(val)!r}, expected 1")


def spec_from_json(data: Any) -> NetworkSpec:
    problems: list[str] = []
    if not isinstance(data, dict):
        raise SpecError(["<root>: expected an object"])
    raw = data.get("alphabets")
    sizes: dict[str, int] = {}
    if not isinstance(raw, dict):
        problems.append("alphabets: missing or not an object")
    else:
        for lab in LABELS:
            v = raw.get(lab)
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                problems.append(f"alphabets.{lab}: expected a positive integer, got {v!r}")
            else:
                sizes[lab] = v
        for extra in sorted(set(raw) - set(LABELS)):
            problems.append(f"alphabets.{extra}: unknown label")
    if problems:
        raise SpecError(problems)

    if "channel" not in data:
        raise SpecError(["channel: missing"])
    ch = _array(data["channel"], tuple(sizes[k] for k in CHANNEL_AXES), "channel", problems)
    if ch is not None:
        _check_rows(ch, 3, "channel", problems)

    dist_arrays = {}
    raw_dist = data.get("dist")
    if raw_dist is not None:
        if not isinstance(raw_dist, dict):
            problems.append("dist: expected an object")
        else:
            for key, axes in DIST_AXES.items():
                if key not in raw_dist:
                    problems.append(f"dist.{key}: missing")
                    continue
                arr = _array(raw_dist[key], tuple(sizes[a] for a in axes), f"dist.{key}",
                             problems)
                if arr is not None:
                    _check_rows(arr, 1, f"dist.{key}", problems)
                    dist_arrays[key] = arr
            for extra in sorted(set(raw_dist) - set(DIST_AXES)):
                problems.append(f"dist.{extra}: unknown factor")
    sim = data.get("simulation", {})
    if not isinstance(sim, dict):
        problems.append("simulation: expected an object")
    if problems:
        raise SpecError(problems)

    channel = Channel(ch)
    dist = None
    if raw_dist is not None:
        d = dist_arrays
        dist = FactoredNetworkDistribution.from_arrays(
            d["p_v1"], d["p_v2"], d["p_x1"], d["p_x2"], d["p_x0"], channel, d["q1"], d["q2"])
    return NetworkSpec(str(data.get("name", "unnamed")), sizes, channel, dist,
                       str(data.get("description", "")), dict(sim),
                       dict(data.get("metadata", {})))


def parse_spec(text: str, source: str = "<string>") -> NetworkSpec:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecParseError(f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}") \
            from exc
    return spec_from_json(data)


def load_spec(path: str | Path) -> NetworkSpec:
    """Read a spec from disk, or a bundled spec by name (``bundled:NAME``)."""
    path = str(path)
    if path.startswith("bundled:"):
        return parse_spec(bundled_text(path.split(":", 1)[1]), path)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise SpecParseError(f"{path}: not UTF-8 text") from exc
    return parse_spec(text, path)


def save_spec(spec: NetworkSpec, path: str | Path) -> None:
    Path(path).write_text(spec.dumps(), encoding="utf-8")


def bundled_text(name: str) -> str:
    if name not in BUNDLED:
        raise FileNotFoundError(f"no bundled spec {name!r}; choose from {BUNDLED}")
    return resources.files("relaynet.data").joinpath(f"{name}.json").read_text("utf-8")


def bundled_path(name: str) -> Path:
    if name not in BUNDLED:
        raise FileNotFoundError(f"no bundled spec {name!r}; choose from {BUNDLED}")
    return Path(str(resources.files("relaynet.data").joinpath(f"{name}.json")))
