"""Von Neumann measurement checks and faithfulness experiments.

A coupling between a system and an apparatus is a von Neumann
measurement when every system basis state ``|i>`` paired with the ready
state ``|A0>`` ends as ``|i>|A_i>`` with mutually orthonormal ``|A_i>``.
Since the state vector never collapses, the measured value is read off
the final apparatus beable, and the measurement is faithful when it
equals the system beable's value before the interaction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .beable import (
    DEFAULT_DT_MAX,
    ZERO_AMPLITUDE,
    BeableBasis,
    InitialLaw,
    VState,
    propagate,
    run_trials,
    simulate,
)
from .hilbert import COMPARISON_TOL, ComplexArray, DimensionError, InvariantError, state
from .schedule import Schedule


class ReadoutError(RuntimeError):
    """The final apparatus beable does not identify a unique measured value."""


class NotAMeasurementError(ValueError):
    """The coupling fails the von Neumann measurement check."""


@dataclass(frozen=True)
class MeasurementSetup:
    """System/apparatus factorization plus the coupling schedule.

    The apparatus ready state must be an apparatus beable eigenstate, so
    that the initial apparatus beable value is fixed.
    """

    system_basis: BeableBasis
    apparatus_basis: BeableBasis
    apparatus_ready: ComplexArray
    coupling: Schedule

    def __post_init__(self) -> None:
        ready = state(self.apparatus_ready)
        object.__setattr__(self, "apparatus_ready", ready)
        if ready.size != self.apparatus_dim:
            raise DimensionError(f"ready state has dim {ready.size}, apparatus dim is {self.apparatus_dim}")
        if self.coupling.dim != self.system_dim * self.apparatus_dim:
            raise DimensionError(
                f"coupling dim {self.coupling.dim} != {self.system_dim} x {self.apparatus_dim}"
            )
        support = np.flatnonzero(np.abs(ready) ** 2 > ZERO_AMPLITUDE)
        if support.size != 1:
            raise InvariantError("apparatus ready state must be an apparatus beable eigenstate")

    @property
    def system_dim(self) -> int:
        return self.system_basis.dim

    @property
    def apparatus_dim(self) -> int:
        return self.apparatus_basis.dim

    @property
    def ready_index(self) -> int:
        return int(np.argmax(np.abs(self.apparatus_ready)))

    @property
    def product_basis(self) -> BeableBasis:
        return self.system_basis.product(self.apparatus_basis)

    def product_index(self, system: int, apparatus: int) -> int:
        return system * self.apparatus_dim + apparatus

    def split_index(self, index: int) -> tuple[int, int]:
        return divmod(int(index), self.apparatus_dim)

    def initial_state(self, system_coeffs: Sequence[complex]) -> ComplexArray:
        c = state(system_coeffs)
        if c.size != self.system_dim:
            raise DimensionError(f"expected {self.system_dim} system coefficients, got {c.size}")
        return state(np.kron(c, self.apparatus_ready))


@dataclass
class VonNeumannReport:
    """Outcome of :func:`verify_von_neumann`.

    ``pointers[i]`` is the extracted apparatus state ``|A_i>``;
    ``fidelities[i]`` is the weight of ``U|i>|A0>`` on the ``|i>`` row.
    On failure ``violation`` names the offending index or pair.
    """

    passed: bool
    pointers: np.ndarray
    fidelities: np.ndarray
    overlaps: np.ndarray
    violation: str | None = None
    bad_index: int | None = None
    bad_pair: tuple[int, int] | None = None


def verify_von_neumann(setup: MeasurementSetup, tol: float = COMPARISON_TOL) -> VonNeumannReport:
    u = setup.coupling.total_unitary()
    ds, da = setup.system_dim, setup.apparatus_dim
    pointers = np.zeros((ds, da), dtype=np.complex128)
    fidelities = np.zeros(ds)
    for i in range(ds):
        sys_state = np.zeros(ds, dtype=np.complex128)
        sys_state[i] = 1.0
        out = (u @ np.kron(sys_state, setup.apparatus_ready)).reshape(ds, da)
        row = out[i]
        fidelities[i] = float(np.vdot(row, row).real)
        if fidelities[i] > 0:
            pointers[i] = row / np.sqrt(fidelities[i])
    overlaps = pointers.conj() @ pointers.T

    for i in range(ds):
        if fidelities[i] < 1.0 - tol:
            return VonNeumannReport(
                False, pointers, fidelities, overlaps,
                violation=f"system state {i} ({setup.system_basis.labels[i]}) is disturbed: "
                f"fidelity of factorized form {fidelities[i]:.12g}",
                bad_index=i,
            )
    dev = np.abs(overlaps - np.eye(ds))
    for i in range(ds):
        for j in range(i, ds):
            if dev[i, j] > tol:
                return VonNeumannReport(
                    False, pointers, fidelities, overlaps,
                    violation=f"pointer states {i} and {j} are not orthonormal: "
                    f"|<A_{i}|A_{j}>| = {abs(overlaps[i, j]):.12g}",
                    bad_pair=(i, j),
                )
    return VonNeumannReport(True, pointers, fidelities, overlaps)


def readout(pointers: np.ndarray, apparatus_index: int, tol: float = COMPARISON_TOL) -> int:
    """System index whose pointer state puts the most weight on ``apparatus_index``."""
    weights = np.abs(pointers[:, apparatus_index]) ** 2
    best = float(weights.max())
    winners = np.flatnonzero(weights >= best - tol)
    if best <= tol or winners.size != 1:
        raise ReadoutError(
            f"apparatus value {apparatus_index} does not identify a unique system value "
            f"(pointer weights {np.round(weights, 12).tolist()})"
        )
    return int(winners[0])


def _require_measurement(setup: MeasurementSetup) -> VonNeumannReport:
    report = verify_von_neumann(setup)
    if not report.passed:
        raise NotAMeasurementError(report.violation)
    return report


@dataclass
class MeasurementRun:
    final: VState
    measured: int
    initial: int


def run_measurement(
    setup: MeasurementSetup,
    system_coeffs: Sequence[complex],
    initial_beable: int,
    dt_max: float,
    rng: np.random.Generator,
) -> MeasurementRun:
    """One measurement from a definite initial system beable value."""
    report = _require_measurement(setup)
    psi0 = setup.initial_state(system_coeffs)
    start = setup.product_index(initial_beable, setup.ready_index)
    VState(psi0, start)  # validates the nonzero-amplitude precondition
    prop = propagate(psi0, setup.coupling, dt_max)
    res = simulate(prop, np.array([start]), [rng], [prop.times[-1]])
    final_index = int(res.beables[0, -1])
    final = VState(prop.psi[-1], final_index)
    measured = readout(report.pointers, setup.split_index(final_index)[1])
    return MeasurementRun(final, measured, initial_beable)


@dataclass
class FaithfulnessReport:
    """Contingency table of (initial system value, measured value) over trials."""

    n_trials: int
    counts: np.ndarray  # counts[initial, measured]
    seed: int
    labels: tuple[str, ...] = ()
    final_beables: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int), repr=False)

    @property
    def faithful_fraction(self) -> float:
        return float(np.trace(self.counts)) / self.n_trials

    @property
    def measured_frequencies(self) -> np.ndarray:
        return self.counts.sum(axis=0) / self.n_trials

    @property
    def initial_frequencies(self) -> np.ndarray:
        return self.counts.sum(axis=1) / self.n_trials


def measurement_trials(
    setup: MeasurementSetup,
    system_coeffs: Sequence[complex],
    initial_law: InitialLaw,
    n_trials: int,
    dt_max: float,
    seed: int,
    sample_times: Sequence[float] = (),
):
    """Shared machinery for faithfulness runs; returns the propagation and raw results.

    ``initial_law`` is ``"born"`` or a system index.  A Born law draws the
    system value from ``|c_i|^2``; the apparatus always starts at the
    ready index.
    """
    psi0 = setup.initial_state(system_coeffs)
    if isinstance(initial_law, str):
        if initial_law != "born":
            raise ValueError(f"initial law must be 'born' or a system index, got {initial_law!r}")
        law: InitialLaw = "born"
    else:
        law = setup.product_index(int(initial_law), setup.ready_index)
        VState(psi0, law)
    return run_trials(psi0, setup.coupling, law, n_trials, seed, dt_max, sample_times)


def faithfulness_experiment(
    setup: MeasurementSetup,
    system_coeffs: Sequence[complex],
    initial_law: InitialLaw = "born",
    n_trials: int = 1000,
    dt_max: float = DEFAULT_DT_MAX,
    seed: int = 0,
) -> FaithfulnessReport:
    report = _require_measurement(setup)
    _, res = measurement_trials(setup, system_coeffs, initial_law, n_trials, dt_max, seed)
    return tabulate(setup, report, res.initial, res.beables[:, -1], seed)


def tabulate(
    setup: MeasurementSetup,
    report: VonNeumannReport,
    initial_product: np.ndarray,
    final_product: np.ndarray,
    seed: int,
) -> FaithfulnessReport:
    ds, da = setup.system_dim, setup.apparatus_dim
    decode = {a: readout(report.pointers, a) for a in np.unique(final_product % da)}
    counts = np.zeros((ds, ds), dtype=int)
    for i0, f in zip(initial_product, final_product):
        counts[int(i0) // da, decode[int(f) % da]] += 1
    return FaithfulnessReport(
        n_trials=len(final_product),
        counts=counts,
        seed=seed,
        labels=setup.system_basis.labels,
        final_beables=np.asarray(final_product),
    )
