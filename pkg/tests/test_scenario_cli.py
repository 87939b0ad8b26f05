import json
import math
import warnings

import numpy as np
import pytest
from conftest import short_soc_config

from etdopt import (
    GainConditionWarning,
    ParseError,
    TimeVaryingObjective,
    ValidationError,
    cli,
    dump_scenario,
    load_scenario,
    loads_scenario,
    seeded_initial_states,
    soc_scenario,
)

BASE = """\
[sim]
dt = 1e-3
t_end = 0.1

[topology]
n_agents = 2
edges = 1-2

[gains]
k1 = 5
k2 = 1
k3 = 15

[trigger]
m = 1 1
a = 0.9 0.9

[objective 1]
poly = 0 1
"""


def parses(text):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GainConditionWarning)
        return loads_scenario(text)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def test_bundled_benchmark(soc_config):
    cfg = soc_config
    assert cfg.n_agents == 6
    assert (cfg.gains.k1, cfg.gains.k2, cfg.gains.k3) == (5.0, 1.0, 15.0)
    assert [tc.m for tc in cfg.trigger_cfgs] == [3, 2, 3, 3, 2, 2]
    assert [tc.a for tc in cfg.trigger_cfgs] == [0.9, 0.7, 0.9, 0.9, 0.7, 0.7]
    assert cfg.dt == 1e-4
    assert cfg.t_end == 6.0
    assert cfg.mode == "triggered"
    assert np.array_equal(cfg.x0, np.zeros((6, 1)))
    assert cfg.topology.edges == frozenset(
        {(1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (1, 6)}
    )
    # agent 3 tracks 0.5 sin 2t
    assert cfg.objectives[2].target(math.pi / 4) == pytest.approx([0.5])
    assert cfg.objectives[5].target(1.0) == pytest.approx([1.2])


def test_minimal_scenario():
    cfg = parses(BASE)
    assert cfg.n_agents == 2
    assert cfg.steps == 100
    assert cfg.record_stride == 1
    assert cfg.seed is None
    assert cfg.smoothing_delta is None
    # agent 2 has no objective section: zero target
    assert cfg.objectives[1].target(3.0) == pytest.approx([0.0])


@pytest.mark.parametrize(
    "mangle,fragment",
    [
        (lambda s: s + "\n[extra]\nfoo = 1\n", "unknown section"),
        (lambda s: s.replace("dt = 1e-3", "dt = 1e-3\ndtt = 1"), "unknown key"),
        (lambda s: s.replace("dt = 1e-3", "dt = fast"), "not numeric"),
        (lambda s: s.replace("[gains]\nk1 = 5\nk2 = 1\nk3 = 15\n", ""), "missing section"),
        (lambda s: s.replace("dt = 1e-3\n", ""), "missing required key"),
        (lambda s: s.replace("edges = 1-2", "edges = 1:2"), "bad token"),
        (lambda s: s.replace("edges = 1-2", "edges ="), "empty edge list"),
        (lambda s: s.replace("m = 1 1", "m = 1"), "expected 2 values"),
        (lambda s: s.replace("dt = 1e-3", "dt = 1e-3\nx0 = 1 2 3"), "x0"),
        (lambda s: s.replace("dt = 1e-3", "dt = 1e-3\ndt = 2e-3"), "dt"),
        (lambda s: "stray = 1\n" + s, "File contains no section headers"),
        (lambda s: "[DEFAULT]\nstray = 1\n" + s, "outside any section"),
        (lambda s: s.replace("poly = 0 1", "poly = 0 1 2"), "poly"),
        (lambda s: s.replace("poly = 0 1", "ramp = 0 1"), "unknown key"),
        (lambda s: s.replace("n_agents = 2", "n_agents = two"), "integer"),
    ],
)
def test_parse_errors(mangle, fragment):
    with pytest.raises(ParseError, match=fragment):
        parses(mangle(BASE))


@pytest.mark.parametrize(
    "mangle",
    [
        lambda s: s.replace("[objective 1]", "[objective 5]"),
        lambda s: s.replace("edges = 1-2", "edges = 1-1"),
        lambda s: s.replace("n_agents = 2", "n_agents = 3").replace("m = 1 1", "m = 1 1 1").replace("a = 0.9 0.9", "a = 0.9 0.9 0.9"),
        lambda s: s.replace("k1 = 5", "k1 = -5"),
        lambda s: s.replace("dt = 1e-3", "dt = 3e-3"),
        lambda s: s.replace("dt = 1e-3", "dt = 1e-3\nmode = sometimes"),
        lambda s: s.replace("edges = 1-2", "edges = 1-9"),
    ],
)
def test_validation_errors(mangle):
    with pytest.raises(ValidationError):
        parses(mangle(BASE))


def test_x0_forms():
    assert np.array_equal(parses(BASE).x0, np.zeros((2, 1)))
    scalar = parses(BASE.replace("dt = 1e-3", "dt = 1e-3\nx0 = 0.5"))
    assert np.array_equal(scalar.x0, np.full((2, 1), 0.5))
    listed = parses(BASE.replace("dt = 1e-3", "dt = 1e-3\nx0 = -0.25 0.75"))
    assert np.array_equal(listed.x0, np.array([[-0.25], [0.75]]))


def test_x0_random_uses_seed():
    cfg = parses(BASE.replace("dt = 1e-3", "dt = 1e-3\nx0 = random\nseed = 5"))
    assert cfg.seed == 5
    assert np.array_equal(cfg.x0, seeded_initial_states(2, 1, 5))
    unseeded = parses(BASE.replace("dt = 1e-3", "dt = 1e-3\nx0 = random"))
    assert np.array_equal(unseeded.x0, seeded_initial_states(2, 1, 0))


def test_optional_sim_keys():
    cfg = parses(
        BASE.replace(
            "dt = 1e-3",
            "dt = 1e-3\nrecord_stride = 4\nsmoothing_delta = 0.1\nmode = baseline",
        )
    )
    assert cfg.record_stride == 4
    assert cfg.smoothing_delta == 0.1
    assert cfg.mode == "baseline"
    zero_delta = parses(BASE.replace("dt = 1e-3", "dt = 1e-3\nsmoothing_delta = 0"))
    assert zero_delta.smoothing_delta is None


def test_weak_gain_warns():
    with pytest.warns(GainConditionWarning):
        loads_scenario(BASE.replace("k3 = 15", "k3 = 1"))


def test_strong_gain_does_not_warn():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        loads_scenario(BASE)


def test_load_scenario_missing_file(tmp_path):
    with pytest.raises(ParseError, match="cannot read config file"):
        load_scenario(tmp_path / "missing.cfg")


# ---------------------------------------------------------------------------
# Echo round-trip
# ---------------------------------------------------------------------------

def test_dump_round_trip(soc_config):
    text = dump_scenario(soc_config)
    again = loads_scenario(text)
    assert again.fingerprint() == soc_config.fingerprint()
    assert dump_scenario(again) == text


def test_dump_round_trip_random_start():
    cfg = parses(BASE.replace("dt = 1e-3", "dt = 1e-3\nx0 = random\nseed = 9"))
    again = parses(dump_scenario(cfg))
    assert np.array_equal(again.x0, cfg.x0)
    assert again.fingerprint() == cfg.fingerprint()


def test_dump_numbers_repeated_terms():
    text = BASE.replace("poly = 0 1", "poly = 0 1\nsin = 0.5 2\nsin2 = 0.25 4")
    cfg = parses(text)
    echoed = dump_scenario(cfg)
    assert "sin = 0.5 2.0" in echoed
    assert "sin2 = 0.25 4.0" in echoed
    assert parses(echoed).fingerprint() == cfg.fingerprint()


def test_dump_rejects_other_families():
    class Flat(TimeVaryingObjective):
        dim = 1
        declared_lambda_min = 1.0
        declared_fbar = 0.0

        def evaluate(self, x, t):
            return float(x[0] ** 2 / 2)

        def gradient(self, x, t):
            return np.array([x[0]])

        def hessian(self, x, t):
            return np.eye(1)

    cfg = short_soc_config(objectives=tuple(Flat() for _ in range(6)))
    with pytest.raises(ValidationError):
        dump_scenario(cfg)


# ---------------------------------------------------------------------------
# Command line
# ---------------------------------------------------------------------------

def write_cfg(tmp_path, text, name="scenario.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_cli_usage_errors(capsys):
    assert cli.main([]) == 1
    assert cli.main(["bogus"]) == 1
    assert cli.main(["run"]) == 1
    err = capsys.readouterr().err
    assert "usage error" in err


def test_cli_help(capsys):
    assert cli.main(["--help"]) == 0
    assert "usage" in capsys.readouterr().out


def test_cli_missing_config(tmp_path, capsys):
    missing = tmp_path / "missing.cfg"
    assert cli.main(["run", str(missing), "--out", str(tmp_path / "out")]) == 2
    assert "missing.cfg" in capsys.readouterr().err


def test_cli_bad_config(tmp_path, capsys):
    path = write_cfg(tmp_path, BASE.replace("edges = 1-2", "edges = 1:2"))
    assert cli.main(["run", str(path), "--out", str(tmp_path / "out")]) == 2
    assert "bad token" in capsys.readouterr().err


def test_cli_run_layout(tmp_path, capsys):
    path = write_cfg(tmp_path, BASE)
    out = tmp_path / "out"
    assert cli.main(["run", str(path), "--out", str(out)]) == 0
    assert (out / "trace.csv").exists()
    assert (out / "events.csv").exists()
    assert (out / "metrics.json").exists()
    assert (out / "config_echo").exists()
    assert not (out / "baseline").exists()
    assert "wrote" in capsys.readouterr().out

    header = (out / "trace.csv").read_text().splitlines()[0]
    assert header == "t,agent,x,s,u,eps_norm,triggered"
    assert (out / "events.csv").read_text().splitlines()[0] == "agent,event_time"

    meta = json.loads((out / "metrics.json").read_text())
    assert meta["schema"] == "metrics/1"
    assert meta["n_agents"] == 2
    assert meta["communication"] is None
    for key in ("t", "consensus_max", "tracking_max", "gradient_sum_norm", "optimal"):
        assert key in meta["series"]

    echoed = load_scenario(out / "config_echo")
    assert echoed.fingerprint() == load_scenario(path).fingerprint()


def test_cli_run_both_mode(tmp_path):
    path = write_cfg(tmp_path, BASE.replace("dt = 1e-3", "dt = 1e-3\nmode = both"))
    out = tmp_path / "out"
    assert cli.main(["run", str(path), "--out", str(out)]) == 0
    for name in ("trace.csv", "events.csv", "metrics.json"):
        assert (out / "baseline" / name).exists()
    top = json.loads((out / "metrics.json").read_text())
    base = json.loads((out / "baseline" / "metrics.json").read_text())
    assert top["communication"] is not None
    assert top["communication"]["total_baseline"] == base["events"]["total"]
    assert base["communication"] is None
    assert base["baseline"] is True
    assert top["baseline"] is False


def test_cli_compare(tmp_path, capsys):
    path = write_cfg(tmp_path, BASE)
    assert cli.main(["compare", str(path)]) == 0
    out = capsys.readouterr().out
    assert "broadcast ratio" in out
    assert "final consensus error (triggered)" in out
    assert "final consensus error (baseline)" in out


def test_cli_check(tmp_path, capsys):
    path = write_cfg(tmp_path, BASE)
    assert cli.main(["check", str(path)]) == 0
    out = capsys.readouterr().out
    assert "declared bounds hold" in out
    assert "gain floor" in out


def test_cli_divergence_exit_code(tmp_path, capsys):
    text = (
        BASE.replace("k1 = 5", "k1 = 300")
        .replace("dt = 1e-3", "dt = 1\nx0 = 0.5")
        .replace("t_end = 0.1", "t_end = 5")
    )
    path = write_cfg(tmp_path, text)
    assert cli.main(["run", str(path), "--out", str(tmp_path / "out")]) == 3
    assert "exceeded guard" in capsys.readouterr().err
