import numpy as np
import pytest

from beables.config import ConfigError, dump_config, eval_operator, parse_config

from conftest import I2, SX, SY, SZ

INLINE = """\
system:
  labels: ["+", "-"]
apparatus:
  labels: ["+", "-"]
  ready: [1, 0]
segments:
  - duration: 1
    hamiltonian: "kron(sz, sy) * -0.7853981633974483"
  - duration: 1
    hamiltonian: "-pi/2 * kron(sx, id)"
  - duration: 1
    hamiltonian: "pi/4 * kron(id, sy)"
  - duration: 1
    hamiltonian: "pi/2 * kron(sx, id)"
coefficients: [0.7071067811865476, [0.7071067811865476, 0]]
initial: "+"
trials: 50
seed: 3
sample_times: [1.5]
"""


def test_operator_shorthand():
    np.testing.assert_allclose(eval_operator("kron(sz, sy) * -0.7853981633974483"), -np.pi / 4 * np.kron(SZ, SY))
    np.testing.assert_allclose(eval_operator("0.5 * (kron(id, id) + kron(sz, id))"), 0.5 * np.kron(I2 + SZ, I2))
    np.testing.assert_allclose(eval_operator("[0, 1] * sx"), 1j * SX)
    np.testing.assert_allclose(eval_operator("sx - sx / 2"), SX / 2)


@pytest.mark.parametrize("text", ["2 + sx", "open('x')", "sx / sy", "kron()", "3", "foo", "sx.T"])
def test_operator_rejects(text):
    with pytest.raises(ValueError):
        eval_operator(text)


def test_parse_inline_measurement():
    cfg = parse_config(INLINE)
    d = cfg.inline
    assert d.is_measurement and d.labels == ("+", "-") and d.initial == 0
    assert len(d.segments) == 4
    np.testing.assert_allclose(d.segments[0][1], -np.pi / 4 * np.kron(SZ, SY), atol=1e-15)
    assert cfg.trials == 50 and cfg.seed == 3 and cfg.sample_times == [1.5]


def test_parse_scenario():
    cfg = parse_config("scenario: example2\ntrials: 10\nseed: 1\n")
    assert cfg.scenario == "example2" and cfg.inline is None


def test_matrix_literal_with_pairs():
    text = """\
labels: [a, b]
state: [1, 0]
segments:
  - duration: 2
    hamiltonian: [[0, [0, -1]], [[0, 1], 0]]
"""
    d = parse_config(text).inline
    assert not d.is_measurement
    np.testing.assert_allclose(d.segments[0][1], SY)


def _error(text: str) -> ConfigError:
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    return info.value


def test_empty_segment_list():
    err = _error("labels: [a, b]\nstate: [1, 0]\nsegments: []\n")
    assert "segments" in str(err) and err.line == 3


def test_non_hermitian_literal_names_entry():
    text = "labels: [a, b]\nstate: [1, 0]\nsegments:\n  - duration: 1\n    hamiltonian: [[0, 1], [2, 0]]\n"
    err = _error(text)
    assert err.line == 5
    assert "[0][1]" in str(err) or "[1][0]" in str(err)


@pytest.mark.parametrize(
    "text, line",
    [
        ("scenario: example1\nlabels: [a]\n", 2),
        ("scenario: example1\ntrials: -3\n", 2),
        ("scenario: example1\nbogus: 1\n", 2),
        ("labels: [a, b]\nstate: [1, 1]\nsegments:\n  - {duration: 1, hamiltonian: sx}\n", 2),
        ("scenario: [unclosed\n", None),
        ("labels: [a, b]\nstate: [1, 0]\nsegments:\n  - duration: 1\n    hamiltonian: kron(sx, sx)\n", 5),
    ],
)
def test_errors_are_located(text, line):
    err = _error(text)
    if line is not None:
        assert err.line == line
    else:
        assert err.line is not None


def test_one_of_scenario_or_inline():
    _error("trials: 5\n")


def test_round_trip():
    for text in (INLINE, "scenario: forgetting\ntrials: 7\ntau: 2\nsample_times: [1, 2]\n"):
        cfg = parse_config(text)
        again = parse_config(dump_config(cfg))
        assert dump_config(again) == dump_config(cfg)
        if cfg.inline is not None:
            for (t1, h1), (t2, h2) in zip(cfg.inline.segments, again.inline.segments):
                assert t1 == t2 and np.array_equal(h1, h2)
            assert np.array_equal(cfg.inline.coefficients, again.inline.coefficients)
        assert cfg.trials == again.trials and cfg.tau == again.tau
