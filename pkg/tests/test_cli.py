import csv

import numpy as np
import pytest

from alphapi.cli import main
from alphapi.config import ConfigError, config_text, load_config, manifest_text
from alphapi.experiments import (ExampleAConfig, LinearGameConfig, replay_disturbance,
                                 run_example_a, run_oracle, running_attenuation)
from alphapi.missile import EngagementConfig, ManeuverSpec


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


# experiment drivers ----------------------------------------------------------

def test_replay_disturbance_shape():
    assert replay_disturbance(2.5, 2.5) == 5.0
    assert replay_disturbance(2.5 + np.pi, 2.5) == pytest.approx(-5 * np.exp(-0.2 * np.pi))


def test_running_attenuation_of_a_known_signal(exa_spec):
    ts = np.linspace(0.0, 1.0, 1001)
    xs = np.zeros((ts.size, 2))
    us = np.full((ts.size, 1), 0.5)
    ws = np.ones((ts.size, 1))
    att = running_attenuation(exa_spec, ts, xs, us, ws)
    assert np.isnan(att[0])
    np.testing.assert_allclose(att[1:], 0.5, rtol=1e-12)


def test_example_a_with_full_newton_step_also_converges():
    damped = run_example_a(ExampleAConfig())
    full = run_example_a(ExampleAConfig(alpha=1.0))
    assert damped.solve.converged and full.solve.converged
    assert full.solve.iterations < damped.solve.iterations
    np.testing.assert_allclose(full.solve.weights.critic, damped.solve.weights.critic,
                               rtol=1e-3, atol=1e-4)


def test_example_a_replay_continues_the_collection():
    res = run_example_a(ExampleAConfig())
    assert res.replay_t[0] == 2.5
    assert np.array_equal(res.replay_x[0], res.data.windows[-1].x_end)
    assert res.replay_t[-1] == pytest.approx(12.5)
    assert res.replay_w[0, 0] == 5.0


def test_scalar_oracle_instance():
    cfg = LinearGameConfig(A=[[-1.0]], B=[[1.0]], D=[[0.0]], Q=[[1.0]], x0=(1.0,), windows=20)
    res = run_oracle(cfg)
    assert res.gare.P[0, 0] == pytest.approx(0.4142136, abs=1e-6)
    assert res.P_learned[0, 0] == pytest.approx(np.sqrt(2) - 1, abs=1e-6)
    assert res.max_relative_delta <= 1e-3


def test_default_oracle_delta_table():
    res = run_oracle(LinearGameConfig())
    assert [row[0] for row in res.deltas][:4] == ["P[1,1]", "P[1,2]", "P[2,1]", "P[2,2]"]
    assert res.max_relative_delta <= 1e-3


# configuration files ---------------------------------------------------------

@pytest.mark.parametrize("command,cfg", [
    ("example-a", ExampleAConfig(seed=3, alpha=0.6)),
    ("oracle", LinearGameConfig(gamma=3.0, R=(2.0,))),
    ("missile", EngagementConfig(maneuver=ManeuverSpec(period=3.0), q2=2e8)),
    ("collect", LinearGameConfig(x0=(0.5, 0.5))),
])
def test_config_round_trip(tmp_path, command, cfg):
    path = write(tmp_path, "c.ini", manifest_text(cfg, command, result={"w": [1.0, 2.0]}))
    assert load_config(path, command) == cfg
    assert config_text(load_config(path, command)) == config_text(cfg)


def test_partial_config_fills_defaults(tmp_path):
    path = write(tmp_path, "c.ini", "[learner]\nalpha = 0.5\n[bases]\ncritic = 2 0; 0 2\n")
    cfg = load_config(path, "example-a")
    assert cfg.alpha == 0.5 and cfg.critic == ((2, 0), (0, 2)) and cfg.gamma == 2.0


def test_matrix_syntax(tmp_path):
    path = write(tmp_path, "c.ini", "[game]\nsystem = linear_game\nA = 0 1; -2 -3\n")
    assert load_config(path, "oracle").A == ((0.0, 1.0), (-2.0, -3.0))


@pytest.mark.parametrize("text,match", [
    ("[game]\nbogus = 1\n", "unknown key"),
    ("[extras]\nx = 1\n", "unknown section"),
    ("[scenario]\nalpha = 0.3\n", "belongs in"),
    ("[learner]\nalpha = fast\n", "alpha"),
    ("[game]\nsystem = missile\n", "runs system"),
    ("[game]\nA = 1 2; 3\n", "unknown key"),
    ("no section header\n", "malformed"),
])
def test_config_errors(tmp_path, text, match):
    with pytest.raises(ConfigError, match=match):
        load_config(write(tmp_path, "c.ini", text), "example-a")


def test_override_must_apply():
    with pytest.raises(ConfigError):
        load_config(None, "collect", {"nav_ratio": 4.0})


# command line ----------------------------------------------------------------

def test_example_a_artifacts(tmp_path):
    out = tmp_path / "a"
    assert main(["example-a", "--out-dir", str(out)]) == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == ["attenuation.csv", "inputs.csv", "manifest.ini", "summary.csv",
                     "trajectory.csv", "weights_per_iter.csv"]
    assert read_csv(out / "trajectory.csv")[0] == ["t_s", "x1", "x2", "phase"]
    weights = read_csv(out / "weights_per_iter.csv")
    assert weights[0][:3] == ["iteration", "change", "Wc[x1^2]"]
    assert len(weights) == 1 + 1 + 49
    summary = dict(read_csv(out / "summary.csv")[1:])
    assert summary["converged"] == "1"


def test_reruns_from_manifest_are_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["oracle", "--out-dir", str(a), "--alpha", "0.6"]) == 0
    assert main(["oracle", "--config", str(a / "manifest.ini"), "--out-dir", str(b)]) == 0
    for name in ("deltas.csv", "weights_per_iter.csv", "summary.csv", "manifest.ini"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_missile_artifacts(tmp_path):
    out = tmp_path / "m"
    assert main(["missile", "--out-dir", str(out)]) == 0
    iters = read_csv(out / "iterations.csv")
    assert iters[0] == ["cycle", "t_end_s", "iterations", "converged", "flagged", "message"]
    summary = dict(read_csv(out / "summary.csv")[1:])
    assert float(summary["miss_distance_m"]) <= 5.0
    assert int(summary["cycles"]) == len(iters) - 1
    assert read_csv(out / "accel.csv")[0] == ["t_s", "a_M_m_s2", "a_T_m_s2"]


def test_collect_then_solve(tmp_path):
    c, s = tmp_path / "c", tmp_path / "s"
    assert main(["collect", "--out-dir", str(c), "--seed", "4"]) == 0
    assert main(["solve", "--config", str(c / "manifest.ini"), "--data",
                 str(c / "dataset.txt"), "--out-dir", str(s)]) == 0
    direct = run_example_a(ExampleAConfig(seed=4))
    last = read_csv(s / "weights_per_iter.csv")[-1]
    np.testing.assert_array_equal([float(v) for v in last[2:7]], direct.solve.weights.critic)


def test_exit_codes(tmp_path, capsys):
    assert main(["oracle", "--config", write(tmp_path, "g.ini",
                 "[game]\nsystem = linear_game\ngamma = 0.1\n"), "--out-dir", str(tmp_path)]) == 3
    assert main(["example-a", "--config", write(tmp_path, "n.ini",
                 "[learner]\nmax_iterations = 3\n"), "--out-dir", str(tmp_path / "n")]) == 2
    assert (tmp_path / "n" / "manifest.ini").exists()
    assert main(["example-a", "--config", write(tmp_path, "b.ini", "[game]\nx = 1\n")]) == 1
    assert main(["example-a", "--alpha", "1.5"]) == 1
    assert main(["collect", "--alpha", "0.5"]) == 1
    with pytest.raises(SystemExit) as info:
        main(["unknown"])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        main(["example-a", "--format", "json"])
    assert info.value.code == 1


def test_solve_refuses_data_from_another_plant(tmp_path):
    c = tmp_path / "c"
    assert main(["collect", "--out-dir", str(c)]) == 0
    ini = write(tmp_path, "lin.ini", "[game]\nsystem = linear_game\n")
    assert main(["solve", "--config", ini, "--data", str(c / "dataset.txt"),
                 "--out-dir", str(tmp_path / "s")]) == 1
    assert main(["solve", "--data", str(tmp_path / "missing.txt")]) == 1
