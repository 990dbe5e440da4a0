import csv
import io
import json
import shutil
import subprocess

import numpy as np
import pytest

from relaynet import cli, networks
from relaynet.optimizer import SearchResult
from relaynet.pmf import Channel, degenerate_alphabets
from relaynet.specfile import (BUNDLED, NetworkSpec, SpecError, SpecParseError, bundled_path,
                               bundled_text, load_spec, parse_spec, save_spec)

import oracles
from helpers import random_binary_network


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def rows_of(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


@pytest.fixture
def noiseless_json():
    return json.loads(bundled_text("noiseless_p2p"))


# -- spec files -------------------------------------------------------------

@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_specs_load(name):
    spec = load_spec(f"bundled:{name}")
    assert spec.name == name and spec.dist is not None
    assert load_spec(bundled_path(name)).dumps() == spec.dumps()


def test_spec_round_trip(tmp_path):
    d = random_binary_network(0)
    spec = NetworkSpec("rt", d.alphabets, d.channel, d, "round trip")
    save_spec(spec, tmp_path / "s.json")
    back = load_spec(tmp_path / "s.json")
    assert back.dumps() == spec.dumps()
    for a, b in zip(back.dist.tables(), d.tables()):
        assert np.array_equal(a.probs, b.probs)


def test_spec_errors_carry_paths(noiseless_json):
    bad = json.loads(json.dumps(noiseless_json))
    bad["channel"][1][0][0] = [[[0.5]], [[0.52]]]
    bad["dist"]["p_x0"][0][0] = [0.5]
    bad["alphabets"]["y0"] = 2
    with pytest.raises(SpecError) as exc:
        parse_spec(json.dumps(bad))
    probs = exc.value.problems
    assert "channel[1][0][0]: row sums to 1.02, expected 1" in probs
    assert any(p.startswith("dist.p_x0[0][0]: length 1, expected 2") for p in probs)


@pytest.mark.parametrize("edit,needle", [
    (lambda j: j.pop("alphabets"), "alphabets: missing"),
    (lambda j: j["alphabets"].update(x0=0), "alphabets.x0"),
    (lambda j: j["alphabets"].update(zz=2), "alphabets.zz: unknown label"),
    (lambda j: j.pop("channel"), "channel: missing"),
    (lambda j: j["channel"][0][0][0][0][0].__setitem__(0, "a"), "expected a number"),
    (lambda j: j["dist"].pop("q1"), "dist.q1: missing"),
    (lambda j: j["dist"].update(q3=[]), "dist.q3: unknown factor"),
])
def test_spec_defects(noiseless_json, edit, needle):
    edit(noiseless_json)
    with pytest.raises(SpecError, match=needle.replace("[", r"\[")):
        parse_spec(json.dumps(noiseless_json))


def test_unparseable_spec():
    with pytest.raises(SpecParseError, match="line"):
        parse_spec('{"name": ')
    with pytest.raises(FileNotFoundError):
        load_spec("bundled:nope")


# -- validate ---------------------------------------------------------------

@pytest.mark.parametrize("name", BUNDLED)
def test_validate_bundled(capsys, name):
    code, out, _ = run(capsys, "validate", f"bundled:{name}")
    assert code == 0 and "ok" in out


def test_validate_truncated_is_parse_error(capsys, tmp_path):
    text = bundled_text("noiseless_p2p")
    path = tmp_path / "cut.json"
    path.write_text(text[: len(text) // 2])
    code, _, err = run(capsys, "validate", path)
    assert code == 2 and "parse error" in err


def test_validate_row_sum_names_path(capsys, tmp_path, noiseless_json):
    noiseless_json["channel"][0][0][0] = [[[1.02]], [[0.0]]]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(noiseless_json))
    code, _, err = run(capsys, "validate", path)
    assert code == 1
    assert "channel[0][0][0]: row sums to 1.02" in err


def test_missing_file_is_user_error(capsys, tmp_path):
    code, _, err = run(capsys, "validate", tmp_path / "none.json")
    assert code == 1 and "error" in err


# -- region -----------------------------------------------------------------

def test_region_noiseless(capsys, tmp_path):
    code, out, _ = run(capsys, "region", "bundled:noiseless_p2p", "--fme-check",
                       "--mode", "both", "--grid", "4", "--out", tmp_path / "r.json")
    assert code == 0
    assert "feasible=True rate=1.000000000000" in out
    assert "agreement: true" in out
    assert "dominance" in out.lower()
    data = json.loads((tmp_path / "r.json").read_text())
    assert data["run"]["command"] == "region" and data["run"]["spec"] == "noiseless_p2p"
    assert data["run"]["version"]
    assert data["closed_form"]["rate"] == pytest.approx(1.0)
    assert "dominance" in data and data["fme_check"]["agree"] is True


def test_region_without_dist_hints_optimize(capsys, tmp_path, noiseless_json):
    noiseless_json.pop("dist")
    path = tmp_path / "nodist.json"
    path.write_text(json.dumps(noiseless_json))
    code, _, err = run(capsys, "region", path)
    assert code == 1 and "optimize" in err


# -- optimize ---------------------------------------------------------------

def test_optimize_noiseless_deterministic(capsys, tmp_path):
    args = ["optimize", "bundled:noiseless_p2p", "--restarts", "2", "--iters", "100",
            "--seed", "4"]
    code, out, _ = run(capsys, *args, "--out", tmp_path / "a.json")
    assert code == 0
    rate = float(next(ln for ln in out.splitlines() if ln.startswith("best rate")).split()[-1])
    assert rate == pytest.approx(1.0, abs=1e-3)
    run(capsys, *args, "--out", tmp_path / "b.json")
    a, b = (tmp_path / "a.json").read_bytes(), (tmp_path / "b.json").read_bytes()
    assert a == b
    spec = load_spec(tmp_path / "a.json")
    assert spec.metadata["optimize"]["run"]["seed"] == 4
    assert spec.dist is not None


def test_optimize_random_channel_matches_capacity(capsys, tmp_path):
    p = np.random.default_rng(11).dirichlet(np.ones(2), size=2)
    spec = NetworkSpec("p2p", degenerate_alphabets(x0=2, y0=2), Channel.from_receiver_only(p))
    save_spec(spec, tmp_path / "p2p.json")
    code, out, _ = run(capsys, "optimize", tmp_path / "p2p.json", "--restarts", "2",
                       "--iters", "150")
    assert code == 0
    rate = float(next(ln for ln in out.splitlines() if ln.startswith("best rate")).split()[-1])
    assert rate == pytest.approx(oracles.blahut_arimoto(p), abs=1e-3)


def test_optimize_none_feasible_exit_3(capsys, monkeypatch):
    monkeypatch.setattr(cli, "_optimize", lambda *a, **k: SearchResult(None, None))
    code, out, _ = run(capsys, "optimize", "bundled:noiseless_p2p")
    assert code == 3 and "no feasible" in out


# -- simulate ---------------------------------------------------------------

def test_simulate_zero_budgets(capsys):
    code, out, _ = run(capsys, "simulate", "bundled:noiseless_p2p", "--bits", "k_R=0",
                       "--trials", "20")
    assert code == 0
    (row,) = rows_of(out)
    assert float(row["error"]) == 0.0 and row["failures"] == "0"


def test_simulate_two_lengths_and_determinism(capsys, tmp_path):
    args = ["simulate", "bundled:symmetric_two_relay", "--n", "6,12", "--trials", "20",
            "--seed", "9"]
    run(capsys, *args, "--out", tmp_path / "a.csv")
    run(capsys, *args, "--out", tmp_path / "b.csv")
    a = (tmp_path / "a.csv").read_text()
    assert a == (tmp_path / "b.csv").read_text()
    assert a.startswith("# tool=relaynet")
    assert "seed=9" in a.splitlines()[0]
    rows = rows_of(a)
    assert [r["n"] for r in rows] == ["6", "12"]
    assert list(rows[0]) == list(cli.SIM_COLUMNS)
    assert rows[1]["k_R"] == "4" and rows[1]["kh1"] == "8"


def test_simulate_budget_violation_named(capsys):
    code, _, err = run(capsys, "simulate", "bundled:noiseless_p2p", "--bits", "k_011=1")
    assert code == 1 and "k_011 <= k_s1" in err


def test_simulate_seed_from_environment(capsys, monkeypatch):
    monkeypatch.setenv(cli.SEED_ENV, "17")
    code, out, _ = run(capsys, "simulate", "bundled:noiseless_p2p", "--trials", "5")
    assert code == 0 and "seed=17" in out.splitlines()[0]
    monkeypatch.setenv(cli.SEED_ENV, "x")
    code, _, err = run(capsys, "simulate", "bundled:noiseless_p2p", "--trials", "5")
    assert code == 1 and cli.SEED_ENV in err


@pytest.mark.parametrize("flags", [["--bits", "k_R"], ["--bits", "k_Q=1"], ["--n", "a"],
                                   ["--trials", "0"]])
def test_simulate_bad_flags(capsys, flags):
    code, _, _ = run(capsys, "simulate", "bundled:noiseless_p2p", *flags)
    assert code == 1


# -- sweep ------------------------------------------------------------------

def test_sweep_single_point_equals_region(capsys):
    code, out, _ = run(capsys, "sweep", "bundled:symmetric_two_relay", "--param", "mix=0,")
    assert code == 0
    (row,) = rows_of(out)
    _, data = cli.region_report(load_spec("bundled:symmetric_two_relay"), fme_check=True)
    assert float(row["rate"]) == pytest.approx(data["closed_form"]["rate"], abs=1e-12)
    assert float(row["fme_rate"]) == pytest.approx(data["individual"]["max_rate"], abs=1e-12)
    assert row["feasible"] == "1"


def test_sweep_eleven_rows(capsys):
    code, out, _ = run(capsys, "sweep", "bundled:symmetric_two_relay", "--param",
                       "mix=0:1:11")
    assert code == 0
    rows = rows_of(out)
    assert len(rows) == 11 and list(rows[0]) == list(cli.SWEEP_COLUMNS)
    assert [float(r["mix"]) for r in rows] == pytest.approx(np.linspace(0, 1, 11))
    assert float(rows[-1]["rate"]) == pytest.approx(0, abs=1e-12)


def test_sweep_relabeled_network_gives_same_rates(capsys, tmp_path):
    d = random_binary_network(3)
    spec = NetworkSpec("asym", d.alphabets, d.channel, d)
    sw = networks.swap_relays(d)
    mirror = NetworkSpec("asym", sw.alphabets, sw.channel, sw)
    save_spec(spec, tmp_path / "a.json")
    save_spec(mirror, tmp_path / "b.json")
    _, a, _ = run(capsys, "sweep", tmp_path / "a.json", "--param", "mix=0:1:3")
    _, b, _ = run(capsys, "sweep", tmp_path / "b.json", "--param", "mix=0:1:3")
    for ra, rb in zip(rows_of(a), rows_of(b)):
        assert float(ra["rate"]) == pytest.approx(float(rb["rate"]), abs=2e-3)
        assert ra["feasible"] == rb["feasible"]


def test_sweep_toward_swapped_on_mirror_symmetric_spec(capsys):
    _, out, _ = run(capsys, "sweep", "bundled:symmetric_two_relay", "--param", "mix=0,1",
                    "--toward", "swapped")
    first, last = rows_of(out)
    assert float(first["rate"]) == pytest.approx(float(last["rate"]), abs=2e-3)


@pytest.mark.parametrize("grid", ["mix=0:1", "mix=a,b", "mix=0:2:3", "p=0,1", "mix=",
                                  "mix=0:1:0"])
def test_sweep_malformed_grid(capsys, grid):
    code, _, err = run(capsys, "sweep", "bundled:symmetric_two_relay", "--param", grid)
    assert code == 1 and "--param" in err


# -- entry point ------------------------------------------------------------

def test_usage_errors_exit_1(capsys):
    assert run(capsys, "frobnicate")[0] == 1
    assert run(capsys)[0] == 1
    assert run(capsys, "--version")[0] == 0


@pytest.mark.skipif(shutil.which("relaynet") is None, reason="console script not installed")
def test_console_script():
    res = subprocess.run(["relaynet", "validate", "bundled:noiseless_p2p"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and "ok" in res.stdout
