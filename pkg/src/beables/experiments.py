"""Built-in scenarios: two spin-1/2 measurement models and a one-spin forgetting demo.

All scenarios take the time unit ``tau`` (default 1).  Outcomes are
independent of ``tau``; only the grid spacing scales with it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .beable import BeableBasis, InitialLaw, run_trials
from .hilbert import ComplexArray, basis_state, pauli, state, tensor_op
from .measurement import MeasurementSetup
from .schedule import Schedule

SX, SY, SZ, ID = (pauli(a) for a in ("x", "y", "z", "identity"))
SQRT_HALF = 1 / np.sqrt(2)


@dataclass(frozen=True)
class Scenario:
    """A named, runnable setup with its default inputs and expected outcome.

    For measurement scenarios ``setup`` is set and ``coefficients`` are
    system amplitudes; otherwise ``coefficients`` is the full initial
    state on ``basis``.
    """

    name: str
    schedule: Schedule
    basis: BeableBasis
    coefficients: tuple[complex, ...]
    initial: InitialLaw
    expected: str
    tau: float = 1.0
    setup: MeasurementSetup | None = None

    @property
    def is_measurement(self) -> bool:
        return self.setup is not None

    def initial_state(self, coefficients=None) -> ComplexArray:
        c = self.coefficients if coefficients is None else coefficients
        if self.setup is not None:
            return self.setup.initial_state(c)
        return state(c)


def _two_spin_setup(schedule: Schedule) -> MeasurementSetup:
    spin = BeableBasis.spins(1)
    return MeasurementSetup(spin, spin, basis_state(2, 0), schedule)


def example1_schedule(tau: float = 1.0) -> Schedule:
    h = np.pi / (4 * tau) * tensor_op(ID - SZ, SY)
    return Schedule([(tau, h)])


def example2_schedule(tau: float = 1.0) -> Schedule:
    return Schedule(
        [
            (tau, -np.pi / (4 * tau) * tensor_op(SZ, SY)),
            (tau, -np.pi / (2 * tau) * tensor_op(SX, ID)),
            (tau, np.pi / (4 * tau) * tensor_op(ID, SY)),
            (tau, np.pi / (2 * tau) * tensor_op(SX, ID)),
        ]
    )


def measurement_unitary() -> ComplexArray:
    """``((I + sz) (x) I - i (I - sz) (x) sy) / 2``, shared by both measurement examples."""
    return 0.5 * (tensor_op(ID + SZ, ID) - 1j * tensor_op(ID - SZ, SY))


def scenario_example1(tau: float = 1.0) -> Scenario:
    if not tau > 0:
        raise ValueError("tau must be > 0")
    sched = example1_schedule(tau)
    return Scenario(
        name="example1",
        schedule=sched,
        basis=BeableBasis.spins(2),
        coefficients=(SQRT_HALF, SQRT_HALF),
        initial="born",
        expected="coupling commutes with the system spin: every trial is faithful",
        tau=tau,
        setup=_two_spin_setup(sched),
    )


def scenario_example2(tau: float = 1.0) -> Scenario:
    if not tau > 0:
        raise ValueError("tau must be > 0")
    sched = example2_schedule(tau)
    return Scenario(
        name="example2",
        schedule=sched,
        basis=BeableBasis.spins(2),
        coefficients=(SQRT_HALF, SQRT_HALF),
        initial=0,
        expected="same unitary as example1, but starting from + the apparatus reads - in every trial",
        tau=tau,
        setup=_two_spin_setup(sched),
    )


def scenario_forgetting(tau: float = 1.0) -> Scenario:
    if not tau > 0:
        raise ValueError("tau must be > 0")
    sched = Schedule([(8 * tau, np.pi / (4 * tau) * SY)])
    return Scenario(
        name="forgetting",
        schedule=sched,
        basis=BeableBasis.spins(1),
        coefficients=(SQRT_HALF, SQRT_HALF),
        initial="born",
        expected="beable is - at t = tau in every trial; no correlation between t = 0 and t = 8 tau",
        tau=tau,
    )


SCENARIOS: dict[str, Callable[[float], Scenario]] = {
    "example1": scenario_example1,
    "example2": scenario_example2,
    "forgetting": scenario_forgetting,
}


def get_scenario(name: str, tau: float = 1.0) -> Scenario:
    try:
        return SCENARIOS[name](tau)
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}") from None


@dataclass
class DecorrelationResult:
    """Sample correlation of the +/-1 encoded beable at t = 0 and t = 8 tau.

    ``correlation`` is ``None`` when either sample has zero variance.
    """

    correlation: float | None
    n_trials: int
    minus_at_tau: float
    plus_at_end: float


def decorrelation_test(
    tau: float = 1.0,
    n_trials: int = 2000,
    seed: int = 0,
    initial: InitialLaw = "born",
    dt_max: float | None = None,
) -> DecorrelationResult:
    if n_trials < 2:
        raise ValueError("need at least two trials for a correlation")
    sc = scenario_forgetting(tau)
    end = sc.schedule.total_duration
    _, res = run_trials(
        sc.initial_state(), sc.schedule, initial, n_trials, seed,
        dt_max if dt_max is not None else tau / 200, sample_times=[tau],
    )
    times = list(res.times)
    spin = 1 - 2 * res.beables  # index 0 is +
    first, at_tau, last = spin[:, 0], spin[:, times.index(tau)], spin[:, times.index(end)]
    if first.std() == 0 or last.std() == 0:
        corr = None
    else:
        corr = float(np.corrcoef(first, last)[0, 1])
    return DecorrelationResult(corr, n_trials, float(np.mean(at_tau == -1)), float(np.mean(last == 1)))
