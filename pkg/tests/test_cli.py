import csv

import pytest
import yaml

from beables.cli import EXIT_CONFIG, EXIT_RUNTIME, EXIT_VERIFY, main

from test_config import INLINE

ZERO_COUPLING = """\
system: {labels: ["+", "-"]}
apparatus: {labels: ["+", "-"], ready: [1, 0]}
segments:
  - {duration: 1, hamiltonian: "0 * kron(id, id)"}
coefficients: [0.6, 0.8]
"""

AMBIGUOUS = """\
system: {labels: ["+", "-"]}
apparatus: {labels: ["+", "-"], ready: [1, 0]}
segments:
  - {duration: 1, hamiltonian: "pi/4 * kron(id - sz, sy)"}
  - {duration: 1, hamiltonian: "pi/4 * kron(id, sy)"}
coefficients: [0.6, 0.8]
initial: "+"
"""


def run(args, tmp_path, name="out"):
    out = tmp_path / name
    code = main(["run", *args, "--out-dir", str(out)])
    return code, out


def summary(out):
    return yaml.safe_load((out / "summary.txt").read_text())


def test_run_example2(tmp_path, capsys):
    code, out = run(["--scenario", "example2", "--trials", "1000", "--seed", "42"], tmp_path)
    assert code == 0
    s = summary(out)
    assert s["measured_value"]["-"] == {"count": 1000, "frequency": 1.0}
    assert s["faithful_fraction"] == 0.0
    assert s["seed"] == 42
    rows = list(csv.reader((out / "trajectories.csv").open()))
    assert rows[0] == ["t", "trial", "beable_index", "beable_label"]
    assert len(rows) == 1 + 1000 * 5
    assert rows[-1] == ["4", "999", "3", "--"]


def test_run_example1(tmp_path):
    code, out = run(["--scenario", "example1", "--trials", "1000", "--seed", "7"], tmp_path)
    assert code == 0 and summary(out)["faithful_fraction"] == 1.0


def test_run_is_byte_identical(tmp_path):
    args = ["--scenario", "example2", "--trials", "200", "--seed", "5", "--sample-times", "0.5,1.5"]
    _, a = run(args, tmp_path, "a")
    _, b = run(args, tmp_path, "b")
    for f in ("trajectories.csv", "summary.txt"):
        assert (a / f).read_bytes() == (b / f).read_bytes()


def test_generated_seed_is_reported_and_reproduces(tmp_path):
    _, a = run(["--scenario", "forgetting", "--trials", "50"], tmp_path, "a")
    seed = summary(a)["seed"]
    _, b = run(["--scenario", "forgetting", "--trials", "50", "--seed", str(seed)], tmp_path, "b")
    assert (a / "trajectories.csv").read_bytes() == (b / "trajectories.csv").read_bytes()


def test_run_inline_config(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(INLINE)
    code, out = run(["--config", str(cfg)], tmp_path)
    assert code == 0
    s = summary(out)
    assert s["measured_value"]["-"]["count"] == 50
    assert "1.5" in s["samples"]


def test_run_with_tau(tmp_path):
    code, out = run(["--scenario", "example2", "--trials", "100", "--seed", "1", "--tau", "2"], tmp_path)
    s = summary(out)
    assert code == 0 and s["faithful_fraction"] == 0.0 and s["duration"] == 8.0


@pytest.mark.parametrize("scenario", ["example1", "example2"])
def test_verify_pass(scenario, capsys):
    assert main(["verify", "--scenario", scenario]) == 0
    out = yaml.safe_load(capsys.readouterr().out)
    assert out["von_neumann"] == "pass"
    assert out["pointer_map"] == {"+": [[1.0, 0.0], [0.0, 0.0]], "-": [[0.0, 0.0], [1.0, 0.0]]}


def test_verify_zero_coupling_fails(tmp_path, capsys):
    cfg = tmp_path / "zero.yaml"
    cfg.write_text(ZERO_COUPLING)
    assert main(["verify", "--config", str(cfg)]) == EXIT_VERIFY
    out = yaml.safe_load(capsys.readouterr().out)
    assert out["von_neumann"] == "fail" and out["violating_pair"] == [0, 1]


def test_config_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("labels: [a, b]\nstate: [1, 0]\nsegments:\n  - duration: 1\n    hamiltonian: [[0, 1], [2, 0]]\n")
    assert main(["run", "--config", str(bad)]) == EXIT_CONFIG
    assert "line 5" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "missing.yaml")]) == EXIT_CONFIG
    assert main(["verify", "--scenario", "forgetting"]) == EXIT_CONFIG
    code, _ = run(["--scenario", "example1", "--sample-times", "9"], tmp_path)
    assert code == EXIT_CONFIG
    with pytest.raises(SystemExit) as info:
        main(["run", "--scenario", "nope"])
    assert info.value.code == 2


def test_runtime_errors_exit_3(tmp_path, capsys):
    cfg = tmp_path / "amb.yaml"
    cfg.write_text(AMBIGUOUS)
    code, _ = run(["--config", str(cfg), "--trials", "20", "--seed", "1"], tmp_path)
    assert code == EXIT_RUNTIME
    assert "unique" in capsys.readouterr().err
    cfg.write_text(ZERO_COUPLING)
    code, _ = run(["--config", str(cfg), "--trials", "20", "--seed", "1"], tmp_path)
    assert code == EXIT_RUNTIME
