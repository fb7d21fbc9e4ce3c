"""Run configuration: YAML files with matrix literals and operator shorthands.

A config names a built-in scenario or defines a setup inline::

    system:
      labels: ["+", "-"]
    apparatus:
      labels: ["+", "-"]
      ready: [1, 0]
    segments:
      - duration: 1
        hamiltonian: "kron(sz, sy) * -0.7853981633974483"
    coefficients: [0.7071067811865476, 0.7071067811865476]
    initial: "+"          # a label, an index, or "born"
    trials: 1000
    seed: 42

Without an ``apparatus`` block the inline definition is a bare system:
give ``labels`` (or ``dim``) and the initial ``state`` instead.

Durations are in units of tau and Hamiltonians in units of 1/tau.
Complex numbers are written as ``[re, im]`` pairs; plain reals are
accepted.  Hamiltonian strings may use ``sx``, ``sy``, ``sz``, ``id``,
``pi``, ``kron(a, b, ...)``, ``+``, ``-``, ``*`` and ``/``.
"""

from __future__ import annotations

import ast
import math
import operator
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np
import yaml

from .hilbert import DimensionError, kron_all, pauli, state

HERMITIAN_LOAD_TOL = 1e-9


class ConfigError(ValueError):
    """Config parse or validation failure, anchored to a line when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class _Map(dict):
    line: int | None = None
    key_lines: dict

    def line_of(self, key: str) -> int | None:
        return self.key_lines.get(key, self.line)


class _Seq(list):
    line: int | None = None


class _Loader(yaml.SafeLoader):
    pass


def _construct_map(loader: _Loader, node: yaml.MappingNode) -> _Map:
    loader.flatten_mapping(node)
    m = _Map()
    m.line = node.start_mark.line + 1
    m.key_lines = {}
    for knode, vnode in node.value:
        key = loader.construct_object(knode, deep=True)
        m[key] = loader.construct_object(vnode, deep=True)
        m.key_lines[key] = vnode.start_mark.line + 1
    return m


def _construct_seq(loader: _Loader, node: yaml.SequenceNode) -> _Seq:
    s = _Seq(loader.construct_object(n, deep=True) for n in node.value)
    s.line = node.start_mark.line + 1
    return s


_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_map)
_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_SEQUENCE_TAG, _construct_seq)


# -- operator expressions ---------------------------------------------------

_NAMES = {
    "sx": pauli("x"),
    "sy": pauli("y"),
    "sz": pauli("z"),
    "id": pauli("identity"),
    "pi": math.pi,
}
_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}


def _eval(node: ast.AST, text: str) -> Any:
    if isinstance(node, ast.Expression):
        return _eval(node.body, text)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, complex)) and not isinstance(
        node.value, bool
    ):
        return node.value
    if isinstance(node, ast.Name):
        if node.id not in _NAMES:
            raise ValueError(f"unknown name {node.id!r} in {text!r}")
        return _NAMES[node.id]
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _eval(node.operand, text)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        left, right = _eval(node.left, text), _eval(node.right, text)
        if isinstance(node.op, ast.Mult) and isinstance(left, np.ndarray) and isinstance(right, np.ndarray):
            return left @ right
        if isinstance(node.op, (ast.Add, ast.Sub)) and (isinstance(left, np.ndarray) != isinstance(right, np.ndarray)):
            raise ValueError(f"cannot add a scalar and a matrix in {text!r}")
        if isinstance(node.op, ast.Div) and isinstance(right, np.ndarray):
            raise ValueError(f"cannot divide by a matrix in {text!r}")
        return _BINOPS[type(node.op)](left, right)
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id == "kron" and not node.keywords:
        args = [_eval(a, text) for a in node.args]
        if not args or not all(isinstance(a, np.ndarray) for a in args):
            raise ValueError(f"kron() needs matrix arguments in {text!r}")
        return np.array(kron_all(args))
    if isinstance(node, ast.List) and len(node.elts) == 2:
        re_, im_ = (_eval(e, text) for e in node.elts)
        if isinstance(re_, np.ndarray) or isinstance(im_, np.ndarray):
            raise ValueError(f"[re, im] pair must hold scalars in {text!r}")
        return complex(re_, im_)
    raise ValueError(f"unsupported syntax {ast.dump(node)[:40]}... in {text!r}")


def eval_operator(text: str) -> np.ndarray:
    """Expand an operator expression such as ``"kron(sz, sy) * -pi/4"`` to a matrix."""
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"cannot parse operator expression {text!r}: {exc.msg}") from None
    value = _eval(tree, text)
    if not isinstance(value, np.ndarray):
        raise ValueError(f"expression {text!r} evaluates to a scalar, not a matrix")
    return np.array(value, dtype=np.complex128)


def _scalar(x: Any) -> complex:
    if isinstance(x, bool):
        raise ValueError(f"expected a number, got {x!r}")
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, list) and len(x) == 2 and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in x):
        return complex(x[0], x[1])
    raise ValueError(f"expected a number or [re, im] pair, got {x!r}")


def _vector(x: Any) -> np.ndarray:
    if not isinstance(x, list) or not x:
        raise ValueError("expected a nonempty list of amplitudes")
    return np.array([_scalar(v) for v in x], dtype=np.complex128)


def _matrix(x: Any) -> np.ndarray:
    if isinstance(x, str):
        return eval_operator(x)
    if not isinstance(x, list) or not x or not all(isinstance(r, list) for r in x):
        raise ValueError("hamiltonian must be an operator expression or a list of rows")
    rows = [[_scalar(v) for v in r] for r in x]
    if any(len(r) != len(rows) for r in rows):
        raise ValueError("hamiltonian literal must be square")
    return np.array(rows, dtype=np.complex128)


def check_hermitian(h: np.ndarray, tol: float = HERMITIAN_LOAD_TOL) -> None:
    dev = np.abs(h - h.conj().T)
    if dev.size and dev.max() > tol:
        i, j = np.unravel_index(int(np.argmax(dev)), dev.shape)
        raise ValueError(
            f"matrix is not Hermitian: entry [{i}][{j}] = {complex(h[i, j])} "
            f"but entry [{j}][{i}] = {complex(h[j, i])}"
        )


# -- run configuration ---------------------------------------------------------


@dataclass
class InlineDefinition:
    """Setup given directly in the config (durations in tau, H in 1/tau)."""

    labels: tuple[str, ...]
    segments: list[tuple[float, np.ndarray]]
    coefficients: np.ndarray
    initial: str | int = "born"
    apparatus_labels: tuple[str, ...] | None = None
    apparatus_ready: np.ndarray | None = None

    @property
    def is_measurement(self) -> bool:
        return self.apparatus_labels is not None


@dataclass
class RunConfig:
    scenario: str | None = None
    inline: InlineDefinition | None = None
    trials: int = 1000
    seed: int | None = None
    dt_max: float | None = None
    tau: float = 1.0
    sample_times: list[float] = field(default_factory=list)
    out_dir: str | None = None

    def __post_init__(self) -> None:
        if (self.scenario is None) == (self.inline is None):
            raise ConfigError("give exactly one of a scenario name or an inline definition")

    def with_overrides(self, **kw: Any) -> RunConfig:
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


_RUN_KEYS = {"scenario", "trials", "seed", "dt_max", "tau", "sample_times", "out_dir"}
_INLINE_KEYS = {"system", "apparatus", "segments", "coefficients", "initial", "labels", "dim", "state"}


def _number(m: _Map, key: str, kind: type, positive: bool = True) -> Any:
    v = m[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or (kind is int and not isinstance(v, int)):
        raise ConfigError(f"{key} must be {'an integer' if kind is int else 'a number'}, got {v!r}", m.line_of(key))
    if positive and not v > 0:
        raise ConfigError(f"{key} must be > 0, got {v!r}", m.line_of(key))
    return kind(v)


def _labels(block: _Map, where: str) -> tuple[str, ...]:
    if "labels" in block:
        labels = block["labels"]
        if not isinstance(labels, list) or not labels:
            raise ConfigError(f"{where}.labels must be a nonempty list", block.line_of("labels"))
        return tuple(str(x) for x in labels)
    if "dim" in block:
        return tuple(str(i) for i in range(_number(block, "dim", int)))
    raise ConfigError(f"{where} needs 'labels' or 'dim'", block.line)


def _parse_inline(m: _Map) -> InlineDefinition:
    measurement = "apparatus" in m
    if measurement:
        for key in ("system", "apparatus"):
            if not isinstance(m.get(key), dict):
                raise ConfigError(f"'{key}' must be a mapping", m.line_of(key))
        labels = _labels(m["system"], "system")
        app: _Map = m["apparatus"]
        app_labels = _labels(app, "apparatus")
        if "ready" not in app:
            raise ConfigError("apparatus needs a 'ready' state", app.line)
        try:
            ready = state(_vector(app["ready"]))
        except (ValueError, DimensionError) as exc:
            raise ConfigError(f"apparatus.ready: {exc}", app.line_of("ready")) from None
        if ready.size != len(app_labels):
            raise ConfigError("apparatus.ready length does not match apparatus labels", app.line_of("ready"))
        dim = len(labels) * len(app_labels)
        coeff_key = "coefficients"
    else:
        labels = _labels(m, "config")
        app_labels, ready = None, None
        dim = len(labels)
        coeff_key = "state"

    segs_raw = m.get("segments")
    if not isinstance(segs_raw, list) or not segs_raw:
        raise ConfigError("'segments' must be a nonempty list", m.line_of("segments") if "segments" in m else m.line)
    segments = []
    for k, seg in enumerate(segs_raw):
        if not isinstance(seg, dict) or "duration" not in seg or "hamiltonian" not in seg:
            raise ConfigError(f"segment {k} needs 'duration' and 'hamiltonian'", getattr(seg, "line", segs_raw.line))
        duration = _number(seg, "duration", float)
        if not math.isfinite(duration):
            raise ConfigError(f"segment {k} duration must be finite", seg.line_of("duration"))
        try:
            h = _matrix(seg["hamiltonian"])
            if h.shape != (dim, dim):
                raise ValueError(f"has shape {h.shape}, expected ({dim}, {dim})")
            if not np.all(np.isfinite(h)):
                raise ValueError("contains NaN or Inf")
            check_hermitian(h)
        except ValueError as exc:
            raise ConfigError(f"segment {k} hamiltonian: {exc}", seg.line_of("hamiltonian")) from None
        segments.append((duration, (h + h.conj().T) / 2))

    if coeff_key not in m:
        raise ConfigError(f"inline definition needs '{coeff_key}'", m.line)
    try:
        coeffs = state(_vector(m[coeff_key]))
    except (ValueError, DimensionError) as exc:
        raise ConfigError(f"{coeff_key}: {exc}", m.line_of(coeff_key)) from None
    expected = len(labels) if measurement else dim
    if coeffs.size != expected:
        raise ConfigError(f"{coeff_key} has {coeffs.size} entries, expected {expected}", m.line_of(coeff_key))

    initial: str | int = "born"
    if "initial" in m:
        raw = m["initial"]
        if raw == "born":
            initial = "born"
        elif isinstance(raw, int) and not isinstance(raw, bool) and 0 <= raw < len(labels):
            initial = raw
        elif str(raw) in labels:
            initial = labels.index(str(raw))
        else:
            raise ConfigError(f"initial must be 'born', a label or an index, got {raw!r}", m.line_of("initial"))
        if initial != "born" and abs(coeffs[initial]) ** 2 <= 1e-12:
            raise ConfigError(f"initial value {labels[initial]!r} has zero amplitude", m.line_of("initial"))

    return InlineDefinition(labels, segments, coeffs, initial, app_labels, ready)


def parse_config(text: str) -> RunConfig:
    """Parse YAML config text; raises :class:`ConfigError` with a line number."""
    try:
        m = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"YAML syntax error: {getattr(exc, 'problem', exc)}", mark.line + 1 if mark else None) from None
    if not isinstance(m, dict):
        raise ConfigError("config must be a mapping", getattr(m, "line", 1))
    unknown = set(m) - _RUN_KEYS - _INLINE_KEYS
    if unknown:
        key = sorted(map(str, unknown))[0]
        raise ConfigError(f"unknown key {key!r}", m.line_of(key))

    kw: dict[str, Any] = {}
    if "trials" in m:
        kw["trials"] = _number(m, "trials", int)
    if "seed" in m:
        kw["seed"] = _number(m, "seed", int, positive=False)
        if kw["seed"] < 0:
            raise ConfigError("seed must be >= 0", m.line_of("seed"))
    if "dt_max" in m:
        kw["dt_max"] = _number(m, "dt_max", float)
    if "tau" in m:
        kw["tau"] = _number(m, "tau", float)
    if "sample_times" in m:
        st = m["sample_times"]
        if not isinstance(st, list) or not all(isinstance(t, (int, float)) and not isinstance(t, bool) for t in st):
            raise ConfigError("sample_times must be a list of numbers", m.line_of("sample_times"))
        kw["sample_times"] = [float(t) for t in st]
    if "out_dir" in m:
        kw["out_dir"] = str(m["out_dir"])

    inline_keys = set(m) & _INLINE_KEYS
    if "scenario" in m:
        if inline_keys:
            key = sorted(inline_keys)[0]
            raise ConfigError("give exactly one of a scenario name or an inline definition", m.line_of(key))
        return RunConfig(scenario=str(m["scenario"]), **kw)
    if not inline_keys:
        raise ConfigError("give exactly one of a scenario name or an inline definition", m.line)
    return RunConfig(inline=_parse_inline(m), **kw)


def _pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def to_dict(cfg: RunConfig) -> dict[str, Any]:
    """Plain-data form of ``cfg``; matrices are written out as ``[re, im]`` literals."""
    out: dict[str, Any] = {}
    if cfg.scenario is not None:
        out["scenario"] = cfg.scenario
    else:
        d = cfg.inline
        assert d is not None
        if d.is_measurement:
            out["system"] = {"labels": list(d.labels)}
            out["apparatus"] = {"labels": list(d.apparatus_labels), "ready": [_pair(z) for z in d.apparatus_ready]}
            out["coefficients"] = [_pair(z) for z in d.coefficients]
        else:
            out["labels"] = list(d.labels)
            out["state"] = [_pair(z) for z in d.coefficients]
        out["segments"] = [
            {"duration": float(t), "hamiltonian": [[_pair(z) for z in row] for row in h]} for t, h in d.segments
        ]
        out["initial"] = d.initial if d.initial == "born" else d.labels[d.initial]
    out["trials"] = cfg.trials
    if cfg.seed is not None:
        out["seed"] = cfg.seed
    if cfg.dt_max is not None:
        out["dt_max"] = cfg.dt_max
    out["tau"] = cfg.tau
    if cfg.sample_times:
        out["sample_times"] = list(cfg.sample_times)
    if cfg.out_dir is not None:
        out["out_dir"] = cfg.out_dir
    return out


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(to_dict(cfg), sort_keys=False, default_flow_style=None)


def load_config(path: str) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
