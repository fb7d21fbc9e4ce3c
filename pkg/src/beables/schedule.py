"""Piecewise-constant Hamiltonian schedules."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .hilbert import ComplexArray, DimensionError, hermitian, matrix_exponential_unitary


@dataclass(frozen=True)
class Segment:
    """A Hamiltonian held constant for ``duration``."""

    duration: float
    hamiltonian: ComplexArray

    def __post_init__(self) -> None:
        if not (math.isfinite(self.duration) and self.duration > 0):
            raise ValueError(f"segment duration must be finite and > 0, got {self.duration!r}")
        object.__setattr__(self, "hamiltonian", hermitian(self.hamiltonian))

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    def unitary(self) -> ComplexArray:
        return matrix_exponential_unitary(self.hamiltonian, self.duration)


@dataclass(frozen=True)
class Schedule:
    """Ordered segments sharing one Hilbert-space dimension.

    Segments store durations rather than absolute times, so schedules
    compose by concatenation (``a + b`` runs ``a`` first).
    """

    segments: tuple[Segment, ...]

    def __init__(self, segments: Iterable[Segment | tuple[float, np.ndarray]]):
        segs = tuple(s if isinstance(s, Segment) else Segment(*s) for s in segments)
        if not segs:
            raise ValueError("schedule needs at least one segment (use Schedule.trivial for H = 0)")
        dims = {s.dim for s in segs}
        if len(dims) != 1:
            raise DimensionError(f"segments have mixed dimensions {sorted(dims)}")
        object.__setattr__(self, "segments", segs)

    @classmethod
    def trivial(cls, dim: int, duration: float = 1.0) -> Schedule:
        """A single segment with ``H = 0``."""
        return cls([Segment(duration, np.zeros((dim, dim), dtype=np.complex128))])

    @property
    def dim(self) -> int:
        return self.segments[0].dim

    @property
    def total_duration(self) -> float:
        return math.fsum(s.duration for s in self.segments)

    def boundaries(self) -> list[float]:
        """Segment start times followed by the end time."""
        out = [0.0]
        acc = 0.0
        for s in self.segments:
            acc += s.duration
            out.append(acc)
        return out

    def segment_index_at(self, t: float) -> int:
        """Index of the segment owning ``t``; boundary instants go to the later segment."""
        edges = self.boundaries()
        if not (0.0 <= t < edges[-1]):
            raise ValueError(f"time {t!r} outside schedule range [0, {edges[-1]!r})")
        for k in range(len(self.segments)):
            if t < edges[k + 1]:
                return k
        raise AssertionError("unreachable")

    def hamiltonian_at(self, t: float) -> ComplexArray:
        return self.segments[self.segment_index_at(t)].hamiltonian

    def segment_unitaries(self) -> list[ComplexArray]:
        return [s.unitary() for s in self.segments]

    def total_unitary(self) -> ComplexArray:
        """Time-ordered product; later segments multiply on the left."""
        u = np.eye(self.dim, dtype=np.complex128)
        for seg_u in self.segment_unitaries():
            u = seg_u @ u
        u.setflags(write=False)
        return u

    def __add__(self, other: Schedule) -> Schedule:
        return Schedule(self.segments + other.segments)

    def scaled(self, tau: float) -> Schedule:
        """Rescale time by ``tau``: durations times ``tau``, Hamiltonians divided by it."""
        return Schedule(Segment(s.duration * tau, s.hamiltonian / tau) for s in self.segments)


def hamiltonian_at(s: Schedule, t: float) -> ComplexArray:
    return s.hamiltonian_at(t)


def total_unitary(s: Schedule) -> ComplexArray:
    return s.total_unitary()


def split_segment(s: Schedule, index: int) -> Schedule:
    """Replace segment ``index`` by two halves of equal duration."""
    segs: list[Segment] = list(s.segments)
    seg = segs[index]
    half = Segment(seg.duration / 2.0, seg.hamiltonian)
    segs[index : index + 1] = [half, half]
    return Schedule(segs)


def concatenate(parts: Sequence[Schedule]) -> Schedule:
    return Schedule(seg for p in parts for seg in p.segments)
