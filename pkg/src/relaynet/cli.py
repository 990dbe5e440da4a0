"""Command-line front end.

Exit codes: 0 success, 1 user or spec error, 2 parse error, 3 nothing feasible.
Randomized commands take ``--seed``; the default comes from ``RELAYNET_SEED``
(or 0) and is echoed in every output.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__, fme, networks, region
from .optimizer import OptimizerConfig, grid_search, maximize_rate
from .pmf import ValidationError, validate
from .sim import BUDGETS, SimParams, SimParamsError, estimate_error
from .specfile import (NetworkSpec, SpecError, SpecParseError, load_spec, save_spec)

EXIT_OK, EXIT_USER, EXIT_PARSE, EXIT_INFEASIBLE = 0, 1, 2, 3
SEED_ENV = "RELAYNET_SEED"

SIM_COLUMNS = ("repeat", "seed", "n", "blocks") + BUDGETS + (
    "R", "R_s1", "R_s2", "R_011", "R_012", "R_021", "R_022", "Rh1", "Rh2",
    "epsilon", "typicality", "code", "joint_decoding", "trials", "failures", "error",
    "ci_low", "ci_high", "stages")
SWEEP_COLUMNS = ("point", "mix", "feasible", "rate", "min_slack", "fme_rate")


class UsageError(Exception):
    """Bad flags or an unusable spec; maps to exit code 1."""


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV, "0")
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={raw!r} is not an integer") from None


def _header(command: str, spec: NetworkSpec, seed: int | None = None) -> dict:
    out = {"tool": "relaynet", "version": __version__, "command": command,
           "spec": spec.name}
    if seed is not None:
        out["seed"] = seed
    return out


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _csv_text(header: dict, columns: Sequence[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    buf.write("# " + " ".join(f"{k}={v}" for k, v in header.items()) + "\n")
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def _fmt(x) -> str:
    if isinstance(x, float):
        return "inf" if math.isinf(x) else f"{x:.12g}"
    return str(x)


def _finite(obj):
    """Strict JSON: non-finite floats become strings."""
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_finite(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def _need_dist(spec: NetworkSpec):
    if spec.dist is None:
        raise UsageError(f"spec {spec.name!r} has no 'dist' section; "
                         "run `relaynet optimize SPEC --out FILE` to create one")
    return spec.dist


# ---------------------------------------------------------------------------
# validate


def cmd_validate(args) -> int:
    spec = load_spec(args.spec)
    lines = [f"spec {spec.name}: ok",
             "alphabets: " + ", ".join(f"{k}={v}" for k, v in spec.alphabets.items())]
    if spec.dist is None:
        lines.append("dist: absent (region and simulate need one)")
    else:
        problems = validate(spec.dist)
        if problems:
            raise SpecError([str(p) for p in problems])
        lines.append("dist: ok")
    print("\n".join(lines))
    return EXIT_OK


# ---------------------------------------------------------------------------
# region


def region_report(spec: NetworkSpec, mode: str = "individual", fme_check: bool = False,
                  reading: str = "literal", grid: int = 32) -> tuple[str, dict]:
    dist = _need_dist(spec)
    info = region.info_vector(dist)
    verdict = region.theorem1_verdict(dist, info=info)
    text = [f"spec: {spec.name}", "", "information terms (bits):"]
    text += [f"  {name:<32} {val:.12f}" for name, val in sorted(info.items())]
    data: dict = {"run": _header("region", spec), "terms": dict(sorted(info.items()))}

    text += ["", f"closed form: feasible={verdict.feasible} "
                 f"rate={verdict.achieved_rate:.12f} min_slack={verdict.min_slack:.12g}"]
    text += [f"  {c.id:<6} lhs={c.lhs:.12f} rhs={c.rhs:.12f} slack={c.slack:.12g}"
             for c in verdict.checks]
    text += [f"  violated: {c.id}" for c in verdict.violations]
    data["closed_form"] = {
        "feasible": verdict.feasible, "rate": verdict.achieved_rate,
        "min_slack": verdict.min_slack,
        "checks": [{"id": c.id, "lhs": c.lhs, "rhs": c.rhs, "slack": c.slack}
                   for c in verdict.checks],
        "violations": [c.id for c in verdict.violations]}

    if mode in ("individual", "both"):
        proj = fme.project_max_rate(region.stepwise_system(dist, info))
        text.append(f"individual decoding (eliminated): feasible={proj.feasible} "
                    f"max_R={_fmt(float(proj.max_rate))}")
        data["individual"] = {"feasible": proj.feasible, "max_rate": float(proj.max_rate)}
    if mode in ("joint", "both"):
        proj = region.joint_verdict(dist, reading, info)
        notes = region.joint_mode_system(dist, reading, info).notes
        text.append(f"joint decoding ({reading} reading): feasible={proj.feasible} "
                    f"max_R={_fmt(float(proj.max_rate))}")
        text += [f"  note: {n}" for n in notes]
        data["joint"] = {"reading": reading, "feasible": proj.feasible,
                         "max_rate": float(proj.max_rate), "notes": list(notes)}
    if mode == "both":
        rep = region.compare_modes(dist, grid, reading, info)
        text.append(f"dominance ({grid}x{grid} grid over Rh1, Rh2): "
                    f"joint contains individual={rep.contains} "
                    f"min matched gap={rep.min_gap:.12g} consistent={rep.consistent}")
        text += [f"  {g.individual} -> {g.joint}: individual rhs={g.rhs_individual:.12f} "
                 f"joint rhs={g.rhs_joint:.12f} gap={g.gap:.12g}" for g in rep.gaps]
        text += [f"  witness Rh1={w.rh1:.6f} Rh2={w.rh2:.6f} blocked by "
                 + ", ".join(",".join(r.sources) for r in w.blocking)
                 for w in rep.witnesses[:10]]
        data["dominance"] = {
            "grid": grid, "contains": rep.contains, "consistent": rep.consistent,
            "min_gap": rep.min_gap,
            "gaps": [{"individual": g.individual, "joint": g.joint,
                      "rhs_individual": g.rhs_individual, "rhs_joint": g.rhs_joint,
                      "gap": g.gap} for g in rep.gaps],
            "individual_points": int(rep.individual_feasible.sum()),
            "joint_points": int(rep.joint_feasible.sum()),
            "witnesses": [{"rh1": w.rh1, "rh2": w.rh2,
                           "blocking": [str(r) for r in w.blocking]}
                          for w in rep.witnesses]}
    if fme_check:
        agreement = fme.check_against_theorem1(dist)
        text.append(agreement.describe())
        data["fme_check"] = {
            "agree": agreement.agree, "boundary": agreement.boundary,
            "closed_form_feasible": agreement.theorem_feasible,
            "closed_form_rate": agreement.theorem_rate,
            "elimination_feasible": agreement.fme_feasible,
            "elimination_rate": agreement.fme_rate,
            "contradictions": [str(r) for r in agreement.contradictions]}
    return "\n".join(text) + "\n", data


def cmd_region(args) -> int:
    spec = load_spec(args.spec)
    text, data = region_report(spec, args.mode, args.fme_check, args.reading, args.grid)
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(json.dumps(_finite(data), indent=1) + "\n",
                                  encoding="utf-8")
    return EXIT_OK


# ---------------------------------------------------------------------------
# optimize


def _optimize(spec: NetworkSpec, restarts: int, iters: int, seed: int,
              grid_step: float | None = None):
    if grid_step:
        return grid_search(spec.channel, spec.alphabets, step=grid_step)
    config = OptimizerConfig(restarts=restarts, iterations=iters, seed=seed)
    return maximize_rate(spec.channel, spec.alphabets, config)


def cmd_optimize(args) -> int:
    spec = load_spec(args.spec)
    seed = default_seed() if args.seed is None else args.seed
    try:
        result = _optimize(spec, args.restarts, args.iters, seed, args.grid)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    header = _header("optimize", spec, seed)
    if not result.feasible:
        print(f"# seed={seed}\nno feasible distribution found: every restart and the "
              "idle-relay fallback violate the compression constraints "
              "(a receiver link with I(X0;Y0) = 0 leaves nothing to anchor on)")
        return EXIT_INFEASIBLE
    v = result.verdict
    lines = [f"# seed={seed}", f"spec: {spec.name}",
             f"best rate: {v.achieved_rate:.12f}",
             f"min slack: {v.min_slack:.12g}",
             "restart rates: " + ", ".join(f"{r:.12f}" for r in result.restart_rates)]
    print("\n".join(lines))
    if args.out:
        meta = {"run": {**header, "restarts": args.restarts, "iterations": args.iters,
                        "grid_step": args.grid},
                "best_rate": v.achieved_rate}
        save_spec(spec.with_dist(result.dist, optimize=meta), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate


def _int_list(text: str, flag: str) -> list[int]:
    try:
        out = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"{flag}: expected comma-separated integers, got {text!r}") from None
    if not out:
        raise UsageError(f"{flag}: empty list")
    return out


def _parse_bits(text: str | None) -> dict[str, int]:
    if not text:
        return {}
    out = {}
    for part in text.split(","):
        key, sep, val = part.partition("=")
        key = key.strip()
        if not sep or key not in BUDGETS:
            raise UsageError(f"--bits: {part!r} is not NAME=INT with NAME in {BUDGETS}")
        try:
            out[key] = int(val)
        except ValueError:
            raise UsageError(f"--bits: {part!r} has a non-integer value") from None
    return out


def budgets_for(spec: NetworkSpec, n: int, bits: dict[str, int]) -> dict[str, int]:
    """Explicit ``bits`` win; otherwise the spec's bit budgets or rate point at ``n``."""
    if bits:
        return dict(bits)
    sim = spec.simulation
    if "bits" in sim:
        return {k: int(v) for k, v in sim["bits"].items()}
    names = dict(zip(("R", "R_s1", "R_s2", "R_011", "R_012", "R_021", "R_022", "Rh1",
                      "Rh2"), BUDGETS))
    point = sim.get("rate_point", {})
    return {names[r]: int(math.floor(float(v) * n + 1e-9)) for r, v in point.items()}


def repeat_seed(seed: int, repeat: int) -> int:
    if repeat == 0:
        return seed
    return int(np.random.SeedSequence([seed, repeat]).generate_state(1)[0] % 2**31)


def simulate_rows(spec: NetworkSpec, ns: Sequence[int], seed: int, *, bits=None,
                  blocks=None, epsilon=None, trials=100, repeats=1, joint=False,
                  code=None, typicality=None) -> list[dict]:
    dist = _need_dist(spec)
    sim = spec.simulation
    rows = []
    for r in range(repeats):
        s = repeat_seed(seed, r)
        for n in ns:
            params = SimParams(
                n=n, blocks=blocks if blocks is not None else int(sim.get("blocks", 3)),
                epsilon=epsilon if epsilon is not None else float(sim.get("epsilon", 0.5)),
                typicality=typicality or sim.get("typicality", "strong"),
                code=code or sim.get("code", "ensemble"),
                trials=trials, seed=s, joint_decoding=joint,
                **budgets_for(spec, n, bits or {}))
            est = estimate_error(dist, params)
            row = {"repeat": r, "seed": s, "n": n, "blocks": params.blocks}
            row.update({k: getattr(params, k) for k in BUDGETS})
            row.update({k: _fmt(v) for k, v in params.rates.items()})
            row.update({
                "epsilon": _fmt(params.epsilon), "typicality": params.typicality,
                "code": params.code, "joint_decoding": int(joint),
                "trials": params.trials, "failures": est.failures,
                "error": _fmt(est.error), "ci_low": _fmt(est.ci[0]),
                "ci_high": _fmt(est.ci[1]),
                "stages": ";".join(f"{k}:{v}" for k, v in sorted(est.stages.items()))})
            rows.append(row)
    return rows


def cmd_simulate(args) -> int:
    spec = load_spec(args.spec)
    seed = default_seed() if args.seed is None else args.seed
    if args.trials < 1 or args.repeats < 1:
        raise UsageError("--trials and --repeats must be >= 1")
    rows = simulate_rows(spec, _int_list(args.n, "--n"), seed, bits=_parse_bits(args.bits),
                         blocks=args.blocks, epsilon=args.eps, trials=args.trials,
                         repeats=args.repeats, joint=args.joint_decoding, code=args.code,
                         typicality=args.typicality)
    _emit(_csv_text(_header("simulate", spec, seed), SIM_COLUMNS, rows), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep


def parse_grid(text: str) -> tuple[str, list[float]]:
    """``mix=START:STOP:COUNT`` or ``mix=V1,V2,...``; values must lie in [0, 1]."""
    name, sep, body = text.partition("=")
    if not sep or name.strip() != "mix":
        raise UsageError(f"--param: expected 'mix=START:STOP:COUNT' or 'mix=V,V,...', "
                         f"got {text!r}")
    try:
        if ":" in body:
            start, stop, count = body.split(":")
            k = int(count)
            if k < 1:
                raise ValueError
            values = list(np.linspace(float(start), float(stop), k)) if k > 1 \
                else [float(start)]
        else:
            values = [float(v) for v in body.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--param: malformed grid {body!r}") from None
    if not values or any(not 0.0 <= v <= 1.0 for v in values):
        raise UsageError("--param: mix values must be in [0, 1]")
    return name, [float(v) for v in values]


def _target_channel(spec: NetworkSpec, toward: str):
    if toward == "uniform":
        return networks.uniform_output_channel(spec.channel)
    if toward == "swapped":
        return networks.swap_relays_channel(spec.channel)
    other = load_spec(toward)
    if other.channel.probs.shape != spec.channel.probs.shape:
        raise UsageError(f"--toward {toward}: channel shape "
                         f"{other.channel.probs.shape} != {spec.channel.probs.shape}")
    return other.channel


def sweep_rows(spec: NetworkSpec, values: Sequence[float], toward: str = "uniform",
               optimize: bool = False, restarts: int = 4, iters: int = 400,
               seed: int = 0) -> list[dict]:
    from .pmf import Channel

    target = _target_channel(spec, toward)
    if not optimize:
        _need_dist(spec)
    rows = []
    for i, t in enumerate(values):
        ch = Channel((1.0 - t) * spec.channel.probs + t * target.probs)
        point = spec.with_channel(ch)
        if optimize:
            res = _optimize(point, restarts, iters, seed)
            dist = res.dist
        else:
            dist = point.dist
        if dist is None:
            rows.append({"point": i, "mix": _fmt(t), "feasible": 0, "rate": "nan",
                         "min_slack": "nan", "fme_rate": "nan"})
            continue
        v = region.theorem1_verdict(dist)
        proj = fme.project_max_rate(region.stepwise_system(dist))
        rows.append({"point": i, "mix": _fmt(t), "feasible": int(v.feasible),
                     "rate": _fmt(v.achieved_rate), "min_slack": _fmt(v.min_slack),
                     "fme_rate": _fmt(float(proj.max_rate)) if proj.feasible else "nan"})
    return rows


def cmd_sweep(args) -> int:
    spec = load_spec(args.spec)
    seed = default_seed() if args.seed is None else args.seed
    _, values = parse_grid(args.param)
    rows = sweep_rows(spec, values, args.toward, args.optimize, args.restarts, args.iters,
                      seed)
    header = _header("sweep", spec, seed if args.optimize else None)
    header.update({"param": args.param, "toward": args.toward,
                   "optimize": int(args.optimize)})
    _emit(_csv_text(header, SWEEP_COLUMNS, rows), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="relaynet",
                                description="Two-relay compress-and-forward toolkit.")
    p.add_argument("--version", action="version", version=f"relaynet {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check a network spec")
    v.add_argument("spec", help="spec path or bundled:NAME")
    v.set_defaults(func=cmd_validate)

    r = sub.add_parser("region", help="information terms, verdicts and cross-checks")
    r.add_argument("spec")
    r.add_argument("--mode", choices=("individual", "joint", "both"), default="individual")
    r.add_argument("--fme-check", action="store_true",
                   help="eliminate the stepwise system and compare with the closed form")
    r.add_argument("--reading", choices=region.READINGS, default="literal",
                   help="bin-rate reading of the joint-decoding rows")
    r.add_argument("--grid", type=int, default=32, help="dominance grid size per axis")
    r.add_argument("--out", help="write a JSON report here")
    r.set_defaults(func=cmd_region)

    o = sub.add_parser("optimize", help="search for the best input distribution")
    o.add_argument("spec")
    o.add_argument("--restarts", type=int, default=4)
    o.add_argument("--iters", type=int, default=400)
    o.add_argument("--seed", type=int)
    o.add_argument("--grid", type=float, help="exhaustive grid with this step instead")
    o.add_argument("--out", help="write the spec with the best dist here")
    o.set_defaults(func=cmd_optimize)

    s = sub.add_parser("simulate", help="Monte-Carlo block error of the coding scheme")
    s.add_argument("spec")
    s.add_argument("--n", default="8", help="block lengths, comma separated")
    s.add_argument("--blocks", type=int, help="B (B-1 messages over B+1 blocks)")
    s.add_argument("--bits", help="bit budgets, e.g. k_R=2,k_s1=4,kh1=4")
    s.add_argument("--eps", type=float)
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--repeats", type=int, default=1)
    s.add_argument("--seed", type=int)
    s.add_argument("--joint-decoding", action="store_true")
    s.add_argument("--code", choices=("ensemble", "fixed"))
    s.add_argument("--typicality", choices=("strong", "robust"))
    s.add_argument("--out", help="CSV path (stdout when absent)")
    s.set_defaults(func=cmd_simulate)

    w = sub.add_parser("sweep", help="rate versus a channel mixing parameter")
    w.add_argument("spec")
    w.add_argument("--param", required=True, help="mix=START:STOP:COUNT or mix=V,V,...")
    w.add_argument("--toward", default="uniform",
                   help="'uniform', 'swapped' (relays exchanged) or a spec path")
    w.add_argument("--optimize", action="store_true", help="re-optimize at every point")
    w.add_argument("--restarts", type=int, default=2)
    w.add_argument("--iters", type=int, default=200)
    w.add_argument("--seed", type=int)
    w.add_argument("--out", help="CSV path (stdout when absent)")
    w.set_defaults(func=cmd_sweep)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USER if exc.code else EXIT_OK
    try:
        return args.func(args)
    except SpecParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except SpecError as exc:
        print("spec error:", file=sys.stderr)
        for prob in exc.problems:
            print(f"  {prob}", file=sys.stderr)
        return EXIT_USER
    except ValidationError as exc:
        print("spec error:", file=sys.stderr)
        for prob in exc.violations:
            print(f"  {prob}", file=sys.stderr)
        return EXIT_USER
    except SimParamsError as exc:
        print(f"simulation parameters violate: {exc}", file=sys.stderr)
        return EXIT_USER
    except (UsageError, FileNotFoundError, IsADirectoryError, MemoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER


if __name__ == "__main__":
    sys.exit(main())
