"""Stochastic jump dynamics for the value of a discrete beable.

The beable is an index into a fixed orthonormal basis; the state vector
evolves unitarily and never collapses.  The index jumps from an occupied
basis state ``k`` to ``j`` at rate

    T[k, j] = max(J[j, k], 0) / |c_k|^2,
    J[i, j] = 2 Im(conj(c_i) H[i, j] c_j),

where ``J[i, j]`` is the Schroedinger probability current into ``i`` from
``j``.  With this choice the Born distribution ``|c_i(t)|^2`` is carried
along by the jump process (equivariance), and the rates vanish whenever
``H`` is diagonal in the beable basis.

Simulation is split in two phases.  :func:`propagate` computes the state
vector exactly on an adaptive time grid shared by all trials, together
with per-interval jump probabilities.  :func:`simulate` then walks any
number of trials over that grid in a vectorized way, consuming exactly
one uniform variate per trial per grid interval.  Each trial draws from
its own stream derived from ``(seed, trial index)``, so results do not
depend on how many trials run together.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .hilbert import ComplexArray, DimensionError, EVOLUTION_TOL, InvariantError, matrix_exponential_unitary, state
from .schedule import Schedule

logger = logging.getLogger(__name__)

#: probabilities below this are treated as "term absent"
ZERO_AMPLITUDE = 1e-12
#: per-substep cap on (total exit rate) * dt
JUMP_BUDGET = 0.1
DEFAULT_DT_MAX = 0.005
MAX_GRID_POINTS = 5_000_000
_CHUNK = 512

InitialLaw = Union[str, int]


class RateBudgetError(RuntimeError):
    """Raised when rate * dt exceeds the jump budget; the caller must substep."""


@dataclass(frozen=True)
class BeableBasis:
    """Display labels for the beable values, one per basis index."""

    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", tuple(self.labels))
        if not self.labels:
            raise ValueError("basis needs at least one label")

    @property
    def dim(self) -> int:
        return len(self.labels)

    @classmethod
    def spins(cls, n: int = 1) -> BeableBasis:
        """z-basis of ``n`` spin-1/2 factors, labels like ``"+-"``."""
        return cls(tuple("".join(p) for p in itertools.product("+-", repeat=n)))

    @classmethod
    def numbered(cls, dim: int) -> BeableBasis:
        return cls(tuple(str(i) for i in range(dim)))

    def product(self, other: BeableBasis) -> BeableBasis:
        return BeableBasis(tuple(a + b for a in self.labels for b in other.labels))

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown beable label {label!r}; known: {list(self.labels)}") from None


@dataclass(frozen=True)
class VState:
    """A state vector together with the actual beable value.

    The beable must sit on a term that is present in the expansion of
    ``psi``, i.e. ``|psi[beable]|^2 > 1e-12``.
    """

    psi: ComplexArray
    beable: int

    def __post_init__(self) -> None:
        psi = state(self.psi)
        object.__setattr__(self, "psi", psi)
        if not 0 <= self.beable < psi.size:
            raise IndexError(f"beable index {self.beable} out of range for dim {psi.size}")
        if abs(psi[self.beable]) ** 2 <= ZERO_AMPLITUDE:
            raise InvariantError(f"beable index {self.beable} carries zero amplitude")

    @property
    def probs(self) -> np.ndarray:
        return np.abs(self.psi) ** 2


@dataclass(frozen=True)
class TrajectorySample:
    t: float
    beable: int
    probs: np.ndarray | None = None


def probability_current(psi: np.ndarray, h: np.ndarray) -> np.ndarray:
    """``J[i, j] = 2 Im(conj(c_i) H[i, j] c_j)``; row sums give ``d|c_i|^2/dt``."""
    return 2.0 * np.imag(np.conj(psi)[:, None] * h * psi[None, :])


def _rates_from_current(current: np.ndarray, probs: np.ndarray) -> np.ndarray:
    flow = np.maximum(current.T, 0.0)  # flow[k, j] = max(J[j, k], 0)
    np.fill_diagonal(flow, 0.0)
    live = probs > ZERO_AMPLITUDE
    rates = np.zeros_like(flow)
    rates[live] = flow[live] / probs[live, None]
    return rates


def jump_rates(psi: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Jump-rate matrix; ``T[k, j]`` is the rate of leaving occupied ``k`` for ``j``.

    Exit rates from indices whose probability is below ``ZERO_AMPLITUDE``
    are set to zero.
    """
    psi = state(psi)
    h = np.asarray(h, dtype=np.complex128)
    if h.shape != (psi.size, psi.size):
        raise DimensionError(f"Hamiltonian shape {h.shape} does not match state dim {psi.size}")
    return _rates_from_current(probability_current(psi, h), np.abs(psi) ** 2)


def _pick(cumulative: np.ndarray, u: float, current: int) -> int:
    if u < cumulative[-1]:
        return int(np.argmax(u < cumulative))
    return current


def step(v: VState, h: np.ndarray, dt: float, rng: np.random.Generator) -> VState:
    """Advance one substep: at most one jump, then exact unitary evolution.

    Raises
    ------
    RateBudgetError
        If the total exit rate from the occupied index times ``dt``
        exceeds ``JUMP_BUDGET``.
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt!r}")
    rates = jump_rates(v.psi, h)[v.beable]
    total = float(rates.sum())
    if total * dt > JUMP_BUDGET * (1 + 1e-12):
        raise RateBudgetError(f"exit rate {total:.4g} times dt {dt:.4g} exceeds budget {JUMP_BUDGET}")
    if abs(v.psi[v.beable]) ** 2 <= ZERO_AMPLITUDE:
        logger.warning("beable sits on a vanishing amplitude; exit rates suppressed")
    k = _pick(np.cumsum(rates * dt), rng.random(), v.beable)
    psi = matrix_exponential_unitary(h, dt) @ v.psi
    return VState(psi, k)


@dataclass
class Propagation:
    """Exact state-vector history on the shared adaptive grid.

    Attributes
    ----------
    times : ndarray, shape (n_points,)
        Grid points, including 0, every segment boundary, every requested
        sample time and the end time.
    psi : ndarray, shape (n_points, dim)
        State vector at each grid point.
    segment : ndarray, shape (n_points - 1,)
        Owning segment of each grid interval.
    cumulative : dict[int, ndarray]
        For intervals with any nonzero rate, ``cumsum(T * dt, axis=1)``
        evaluated at the left grid point.  Intervals absent from the dict
        carry no jumps.
    guarded : dict[int, ndarray]
        Boolean masks of indices whose exit rates were suppressed by the
        zero-amplitude rule on that interval.
    """

    schedule: Schedule
    times: np.ndarray
    psi: np.ndarray
    segment: np.ndarray
    cumulative: dict[int, np.ndarray]
    guarded: dict[int, np.ndarray] = field(default_factory=dict)

    @property
    def n_steps(self) -> int:
        return len(self.times) - 1

    @property
    def dim(self) -> int:
        return self.psi.shape[1]

    def index_of(self, t: float) -> int:
        i = int(np.searchsorted(self.times, t))
        if i >= len(self.times) or not np.isclose(self.times[i], t, rtol=0, atol=1e-12):
            raise KeyError(f"time {t!r} is not a grid point")
        return i

    def probs_at(self, t: float) -> np.ndarray:
        return np.abs(self.psi[self.index_of(t)]) ** 2


def propagate(
    psi0: np.ndarray,
    schedule: Schedule,
    dt_max: float = DEFAULT_DT_MAX,
    sample_times: Sequence[float] = (),
) -> Propagation:
    """Build the shared grid: exact ``psi(t)`` plus per-interval jump probabilities.

    Each interval satisfies ``dt <= dt_max`` and ``max_k exit_rate_k * dt
    <= JUMP_BUDGET``, so every trajectory meets the per-step budget
    whatever index it occupies.
    """
    if not dt_max > 0:
        raise ValueError(f"dt_max must be > 0, got {dt_max!r}")
    psi0 = state(psi0)
    if psi0.size != schedule.dim:
        raise DimensionError(f"state dim {psi0.size} does not match schedule dim {schedule.dim}")
    edges = schedule.boundaries()
    end = edges[-1]
    extra = sorted(float(t) for t in sample_times)
    for t in extra:
        if not 0.0 <= t <= end + 1e-12:
            raise ValueError(f"sample time {t!r} outside [0, {end!r}]")

    times = [0.0]
    states = [np.array(psi0)]
    segs: list[int] = []
    cumulative: dict[int, np.ndarray] = {}
    guarded: dict[int, np.ndarray] = {}

    psi_start = np.array(psi0)
    for k, seg in enumerate(schedule.segments):
        t0, t1 = edges[k], edges[k + 1]
        stops = [t for t in extra if t0 < t < t1 - 1e-12] + [t1]
        evals, evecs = np.linalg.eigh(seg.hamiltonian)
        coeffs = evecs.conj().T @ psi_start
        h = seg.hamiltonian

        def at(s: float) -> np.ndarray:
            return evecs @ (np.exp(-1j * evals * s) * coeffs)

        t = t0
        psi = psi_start
        for stop in stops:
            while t < stop:
                probs = np.abs(psi) ** 2
                current = probability_current(psi, h)
                rates = _rates_from_current(current, probs)
                exit_rate = rates.sum(axis=1)
                dt = min(dt_max, stop - t)
                peak = float(exit_rate.max())
                if peak * dt > JUMP_BUDGET:
                    dt = JUMP_BUDGET / peak
                t_next = stop if stop - (t + dt) <= 1e-15 * max(1.0, abs(stop)) else t + dt
                m = len(times) - 1
                if peak > 0:
                    # t + dt may round up past the budget near a vanishing amplitude
                    cumulative[m] = np.cumsum(rates * min(t_next - t, dt), axis=1)
                mask = (probs <= ZERO_AMPLITUDE) & (np.maximum(current.T, 0).sum(axis=1) > 0)
                if mask.any():
                    guarded[m] = mask
                psi = at(t_next - t0)
                times.append(t_next)
                states.append(psi)
                segs.append(k)
                t = t_next
                if len(times) > MAX_GRID_POINTS:
                    raise RuntimeError("adaptive grid exceeded MAX_GRID_POINTS")
        drift = abs(float(np.vdot(psi, psi).real) - 1.0)
        if drift > EVOLUTION_TOL:
            logger.warning("norm drift %.3e at end of segment %d; renormalizing", drift, k)
            psi = psi / np.linalg.norm(psi)
            states[-1] = psi
        psi_start = psi

    return Propagation(
        schedule=schedule,
        times=np.array(times),
        psi=np.array(states),
        segment=np.array(segs, dtype=int),
        cumulative=cumulative,
        guarded=guarded,
    )


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent stream for ``trial``, derived from ``(seed, trial)`` only."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial,)))


def sample_born(probs: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Map uniforms to indices distributed as ``probs``, never landing on an empty index."""
    cum = np.cumsum(probs)
    idx = np.searchsorted(cum, u, side="right")
    last = int(np.flatnonzero(probs > ZERO_AMPLITUDE)[-1])
    return np.minimum(idx, last)


@dataclass
class SimulationResult:
    """Beable indices of every trial at the requested grid points."""

    times: np.ndarray
    beables: np.ndarray  # (n_trials, n_times)
    initial: np.ndarray
    guarded_hits: int = 0


def simulate(
    prop: Propagation,
    initial: np.ndarray,
    rngs: Sequence[np.random.Generator],
    record_times: Sequence[float] | None = None,
) -> SimulationResult:
    """Run trials over a precomputed grid.

    Trial ``n`` starts at ``initial[n]`` and draws one uniform per grid
    interval from ``rngs[n]``.
    """
    k = np.array(initial, dtype=int)
    n = k.size
    if len(rngs) != n:
        raise ValueError("need one random stream per trial")
    p0 = np.abs(prop.psi[0]) ** 2
    if np.any(p0[k] <= ZERO_AMPLITUDE):
        raise InvariantError("initial beable sits on a zero-amplitude term")
    if record_times is None:
        record_idx = np.arange(len(prop.times))
    else:
        record_idx = np.array([prop.index_of(t) for t in record_times], dtype=int)
    want = {int(i): c for c, i in enumerate(record_idx)}
    out = np.empty((n, len(record_idx)), dtype=int)
    if 0 in want:
        out[:, want[0]] = k

    hits = 0
    rows = np.arange(n)
    for base in range(0, prop.n_steps, _CHUNK):
        width = min(_CHUNK, prop.n_steps - base)
        uniforms = np.stack([g.random(width) for g in rngs]) if n else np.empty((0, width))
        for off in range(width):
            m = base + off
            mask = prop.guarded.get(m)
            if mask is not None:
                hits += int(mask[k].sum())
            cum = prop.cumulative.get(m)
            if cum is not None:
                row = cum[k]
                u = uniforms[:, off]
                jumping = u < row[:, -1]
                if jumping.any():
                    k = k.copy()
                    k[jumping] = np.argmax(u[jumping, None] < row[jumping], axis=1)
            c = want.get(m + 1)
            if c is not None:
                out[rows, c] = k
    if hits:
        logger.warning("%d trial-steps sat on a vanishing amplitude (exit rates suppressed)", hits)
    return SimulationResult(prop.times[record_idx], out, np.array(initial, dtype=int), hits)


def _initial_indices(psi0: np.ndarray, law: InitialLaw, rngs: Sequence[np.random.Generator]) -> np.ndarray:
    if isinstance(law, str):
        if law != "born":
            raise ValueError(f"initial law must be 'born' or an index, got {law!r}")
        u = np.array([g.random() for g in rngs])
        return sample_born(np.abs(psi0) ** 2, u)
    return np.full(len(rngs), int(law), dtype=int)


def run_trials(
    psi0: np.ndarray,
    schedule: Schedule,
    initial: InitialLaw,
    n: int,
    seed: int,
    dt_max: float = DEFAULT_DT_MAX,
    sample_times: Sequence[float] = (),
    prop: Propagation | None = None,
) -> tuple[Propagation, SimulationResult]:
    """``n`` independent trajectories sampled at boundaries and ``sample_times``.

    With a ``"born"`` law each trial's first uniform picks its starting
    index; the remaining draws drive the jumps.
    """
    if n < 1:
        raise ValueError("need at least one trial")
    if prop is None:
        prop = propagate(psi0, schedule, dt_max, sample_times)
    rngs = [trial_rng(seed, i) for i in range(n)]
    start = _initial_indices(prop.psi[0], initial, rngs)
    record = sorted(set(schedule.boundaries()) | {float(t) for t in sample_times})
    return prop, simulate(prop, start, rngs, [prop.times[prop.index_of(t)] for t in record])


def evolve(
    v: VState,
    schedule: Schedule,
    dt_max: float,
    rng: np.random.Generator,
    sample_times: Sequence[float] = (),
) -> list[TrajectorySample]:
    """One trajectory through ``schedule``, sampled at boundaries and ``sample_times``."""
    prop = propagate(v.psi, schedule, dt_max, sample_times)
    record = sorted(set(schedule.boundaries()) | {float(t) for t in sample_times})
    res = simulate(prop, np.array([v.beable]), [rng], [prop.times[prop.index_of(t)] for t in record])
    return [
        TrajectorySample(float(t), int(b), np.abs(prop.psi[prop.index_of(t)]) ** 2)
        for t, b in zip(res.times, res.beables[0])
    ]


def final_vstate(v: VState, schedule: Schedule, dt_max: float, rng: np.random.Generator) -> VState:
    samples = evolve(v, schedule, dt_max, rng)
    psi = schedule.total_unitary() @ v.psi
    return VState(psi, samples[-1].beable)


def ensemble_distribution(
    psi0: np.ndarray,
    initial: InitialLaw,
    schedule: Schedule,
    t: float,
    n: int,
    seed: int,
    dt_max: float = DEFAULT_DT_MAX,
) -> np.ndarray:
    """Empirical frequency of each beable index at time ``t`` over ``n`` trials."""
    prop, res = run_trials(psi0, schedule, initial, n, seed, dt_max, sample_times=[t])
    col = int(np.flatnonzero(np.isclose(res.times, t, rtol=0, atol=1e-12))[0])
    return np.bincount(res.beables[:, col], minlength=prop.dim) / n
