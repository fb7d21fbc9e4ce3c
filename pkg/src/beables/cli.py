"""Command-line front end.

    beables run --scenario example2 --trials 1000 --seed 42 --out-dir out/
    beables verify --scenario example1
    beables run --config my_setup.yaml

Exit codes: 0 success, 2 config error, 3 runtime error, 4 verification failed.
"""

from __future__ import annotations

import argparse
import csv
import secrets
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import yaml

from . import __version__
from .beable import BeableBasis, InitialLaw, run_trials
from .config import ConfigError, RunConfig, load_config, to_dict
from .experiments import SCENARIOS, get_scenario
from .measurement import (
    MeasurementSetup,
    NotAMeasurementError,
    ReadoutError,
    VonNeumannReport,
    measurement_trials,
    tabulate,
    verify_von_neumann,
)
from .schedule import Schedule

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_VERIFY = 0, 2, 3, 4


def fmt(x: float) -> str:
    return f"{x:.12g}"


def _num(x: float) -> float:
    return float(fmt(x))


def _clean(x: float) -> float:
    # display only: drop roundoff noise and negative zero
    return 0.0 if abs(x) < 1e-12 else _num(x)


@dataclass
class Resolved:
    """A config turned into concrete objects, with time already scaled by tau."""

    name: str
    schedule: Schedule
    basis: BeableBasis
    coefficients: np.ndarray
    initial: InitialLaw
    setup: MeasurementSetup | None


def resolve(cfg: RunConfig) -> Resolved:
    if cfg.scenario is not None:
        try:
            sc = get_scenario(cfg.scenario, cfg.tau)
        except KeyError as exc:
            raise ConfigError(str(exc.args[0])) from None
        return Resolved(sc.name, sc.schedule, sc.basis, np.array(sc.coefficients), sc.initial, sc.setup)
    d = cfg.inline
    assert d is not None
    sched = Schedule(d.segments).scaled(cfg.tau)
    system = BeableBasis(d.labels)
    if d.is_measurement:
        app = BeableBasis(d.apparatus_labels)
        try:
            setup = MeasurementSetup(system, app, d.apparatus_ready, sched)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return Resolved("inline", sched, setup.product_basis, d.coefficients, d.initial, setup)
    return Resolved("inline", sched, system, d.coefficients, d.initial, None)


def _law_text(law: InitialLaw, labels: Sequence[str]) -> str:
    return "born" if law == "born" else f"fixed({labels[int(law)]})"


def _counts_block(values: np.ndarray, labels: Sequence[str]) -> dict:
    counts = np.bincount(values, minlength=len(labels))
    n = values.size
    return {lab: {"count": int(c), "frequency": _num(c / n)} for lab, c in zip(labels, counts)}


def _pointer_block(report: VonNeumannReport, setup: MeasurementSetup) -> dict:
    out = {}
    for i, lab in enumerate(setup.system_basis.labels):
        amps = report.pointers[i]
        out[lab] = [[_clean(z.real), _clean(z.imag)] for z in amps]
    return out


def cmd_run(cfg: RunConfig, out_dir: Path) -> int:
    res = resolve(cfg)
    seed = cfg.seed if cfg.seed is not None else secrets.randbits(32)
    tau = cfg.tau
    dt_max = cfg.dt_max * tau if cfg.dt_max is not None else tau / 200
    sample_times = [t * tau for t in cfg.sample_times]
    end = res.schedule.total_duration
    for t in sample_times:
        if not 0 <= t <= end:
            raise ConfigError(f"sample time {t / tau!r} (units of tau) outside [0, {end / tau!r}]")

    summary: dict = {
        "scenario": res.name,
        "kind": "measurement" if res.setup is not None else "dynamics",
        "seed": seed,
        "trials": cfg.trials,
        "tau": _num(tau),
        "dt_max": _num(dt_max),
        "duration": _num(end),
    }
    if res.setup is not None:
        setup = res.setup
        report = verify_von_neumann(setup)
        if not report.passed:
            raise NotAMeasurementError(report.violation)
        law: InitialLaw = res.initial
        prop, sim = measurement_trials(setup, res.coefficients, law, cfg.trials, dt_max, seed, sample_times)
        faith = tabulate(setup, report, sim.initial, sim.beables[:, -1], seed)
        sys_labels = setup.system_basis.labels
        summary["initial_law"] = _law_text(law, sys_labels)
        summary["system_coefficients"] = [[_num(z.real), _num(z.imag)] for z in np.asarray(res.coefficients)]
        summary["grid_steps"] = prop.n_steps
        summary["pointer_map"] = _pointer_block(report, setup)
        summary["initial_system_value"] = _counts_block(sim.initial // setup.apparatus_dim, sys_labels)
        summary["final_beable"] = _counts_block(sim.beables[:, -1], res.basis.labels)
        summary["measured_value"] = _counts_block(
            np.repeat(np.arange(len(sys_labels)), faith.counts.sum(axis=0)), sys_labels
        )
        summary["contingency"] = {
            f"{sys_labels[i]}->{sys_labels[j]}": int(faith.counts[i, j])
            for i in range(len(sys_labels))
            for j in range(len(sys_labels))
        }
        summary["faithful_fraction"] = _num(faith.faithful_fraction)
    else:
        prop, sim = run_trials(res.coefficients, res.schedule, res.initial, cfg.trials, seed, dt_max, sample_times)
        summary["initial_law"] = _law_text(res.initial, res.basis.labels)
        summary["initial_state"] = [[_num(z.real), _num(z.imag)] for z in np.asarray(res.coefficients)]
        summary["grid_steps"] = prop.n_steps
        summary["final_beable"] = _counts_block(sim.beables[:, -1], res.basis.labels)
    summary["samples"] = {
        fmt(t): _counts_block(sim.beables[:, c], res.basis.labels) for c, t in enumerate(sim.times)
    }
    if sim.guarded_hits:
        summary["diagnostics"] = {"vanishing_amplitude_steps": sim.guarded_hits}
    echo = to_dict(cfg.with_overrides(seed=seed))
    echo.pop("out_dir", None)
    summary["config"] = echo

    out_dir.mkdir(parents=True, exist_ok=True)
    labels = res.basis.labels
    with open(out_dir / "trajectories.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "trial", "beable_index", "beable_label"])
        tstr = [fmt(t) for t in sim.times]
        for n, row in enumerate(sim.beables):
            for ts, b in zip(tstr, row):
                w.writerow([ts, n, int(b), labels[b]])
    text = yaml.safe_dump(summary, sort_keys=False, allow_unicode=True, default_flow_style=None)
    (out_dir / "summary.txt").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    res = resolve(cfg)
    if res.setup is None:
        raise ConfigError("verify needs a measurement setup (system + apparatus)")
    report = verify_von_neumann(res.setup)
    out = {
        "scenario": res.name,
        "von_neumann": "pass" if report.passed else "fail",
        "pointer_map": _pointer_block(report, res.setup),
        "fidelities": [_num(f) for f in report.fidelities],
    }
    if not report.passed:
        out["violation"] = report.violation
        if report.bad_index is not None:
            out["violating_index"] = report.bad_index
        if report.bad_pair is not None:
            out["violating_pair"] = list(report.bad_pair)
    sys.stdout.write(yaml.safe_dump(out, sort_keys=False, default_flow_style=None))
    return EXIT_OK if report.passed else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="beables", description="Simulate beable jump dynamics and measurements.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, helptext in (("run", "simulate trials and write trajectories.csv + summary.txt"),
                           ("verify", "check the von Neumann measurement property")):
        sp = sub.add_parser(name, help=helptext)
        src = sp.add_mutually_exclusive_group(required=True)
        src.add_argument("--scenario", choices=sorted(SCENARIOS))
        src.add_argument("--config", metavar="PATH", help="YAML config file")
        sp.add_argument("--tau", type=float)
        if name == "run":
            sp.add_argument("--trials", type=int)
            sp.add_argument("--seed", type=int)
            sp.add_argument("--dt-max", type=float, help="max substep, units of tau (default 1/200)")
            sp.add_argument("--sample-times", help="comma-separated times in units of tau")
            sp.add_argument("--out-dir", help="output directory (default: current directory)")
    return p


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    if args.config:
        try:
            cfg = load_config(args.config)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
    else:
        cfg = RunConfig(scenario=args.scenario)
    over = {"tau": args.tau}
    if args.command == "run":
        over.update(trials=args.trials, seed=args.seed, dt_max=args.dt_max, out_dir=args.out_dir)
        if args.sample_times:
            try:
                over["sample_times"] = [float(x) for x in args.sample_times.split(",") if x.strip()]
            except ValueError:
                raise ConfigError(f"--sample-times: cannot parse {args.sample_times!r}") from None
    cfg = cfg.with_overrides(**over)
    if cfg.trials < 1:
        raise ConfigError("trials must be >= 1")
    if cfg.tau <= 0 or (cfg.dt_max is not None and cfg.dt_max <= 0):
        raise ConfigError("tau and dt-max must be > 0")
    if cfg.seed is not None and cfg.seed < 0:
        raise ConfigError("seed must be >= 0")
    return cfg


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
        if args.command == "verify":
            return cmd_verify(cfg)
        return cmd_run(cfg, Path(cfg.out_dir or "."))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ReadoutError, NotAMeasurementError, RuntimeError, ValueError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
