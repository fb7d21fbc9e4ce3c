"""Dense complex linear algebra for small Hilbert spaces.

States and operators are plain ``numpy`` arrays of dtype ``complex128``.
The constructors in this module validate the structural invariants
(normalization, Hermiticity, unitarity) once and hand back read-only
arrays, so a value that made it out of here can be shared freely.

Basis ordering is system-major: for two spins the product basis is
``(|++>, |+->, |-+>, |-->)``, i.e. plain ``np.kron`` ordering.
"""

from __future__ import annotations

import logging
from typing import Iterable

import numpy as np
from numpy.typing import ArrayLike, NDArray

logger = logging.getLogger(__name__)

ComplexArray = NDArray[np.complex128]

# tolerance ladder
CONSTRUCTION_TOL = 1e-12
EVOLUTION_TOL = 1e-9
COMPARISON_TOL = 1e-8

MAX_DIM = 64


class DimensionError(ValueError):
    """Operand dimensions are incompatible or exceed the configured cap."""


class InvariantError(ValueError):
    """A state or operator violates its structural invariant."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _finite_complex(data: ArrayLike, what: str) -> ComplexArray:
    a = np.array(data, dtype=np.complex128)
    if not np.all(np.isfinite(a)):
        raise InvariantError(f"{what} contains NaN or Inf")
    return a


def state(amps: ArrayLike, tol: float = EVOLUTION_TOL) -> ComplexArray:
    """Validate a normalized state vector and return it as a read-only array."""
    psi = _finite_complex(amps, "state vector")
    if psi.ndim != 1 or psi.size == 0:
        raise DimensionError(f"state vector must be 1-d and nonempty, got shape {psi.shape}")
    norm2 = float(np.vdot(psi, psi).real)
    if abs(norm2 - 1.0) > tol:
        raise InvariantError(f"state vector has squared norm {norm2!r}, expected 1")
    return _frozen(psi)


def basis_state(dim: int, index: int) -> ComplexArray:
    if not 0 <= index < dim:
        raise IndexError(f"basis index {index} out of range for dim {dim}")
    psi = np.zeros(dim, dtype=np.complex128)
    psi[index] = 1.0
    return _frozen(psi)


def _square(data: ArrayLike, what: str) -> ComplexArray:
    m = _finite_complex(data, what)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise DimensionError(f"{what} must be a nonempty square matrix, got shape {m.shape}")
    return m


def hermitian(data: ArrayLike, tol: float = CONSTRUCTION_TOL) -> ComplexArray:
    """Validate a Hermitian matrix (a Hamiltonian, in units with hbar = 1)."""
    h = _square(data, "Hermitian operator")
    dev = np.abs(h - h.conj().T)
    if dev.max() > tol:
        i, j = np.unravel_index(int(np.argmax(dev)), dev.shape)
        raise InvariantError(
            f"operator is not Hermitian: entry [{i}][{j}]={h[i, j]!r} "
            f"but conj([{j}][{i}])={np.conj(h[j, i])!r}"
        )
    return _frozen(h)


def unitary(data: ArrayLike, tol: float = 1e-10) -> ComplexArray:
    u = _square(data, "unitary operator")
    dev = np.abs(u.conj().T @ u - np.eye(u.shape[0]))
    if dev.max() > tol:
        raise InvariantError(f"operator is not unitary (max |U^dag U - I| = {dev.max():.3e})")
    return _frozen(u)


def is_hermitian(h: np.ndarray, tol: float = CONSTRUCTION_TOL) -> bool:
    return h.ndim == 2 and h.shape[0] == h.shape[1] and bool(np.all(np.abs(h - h.conj().T) <= tol))


_PAULI = {
    "identity": [[1, 0], [0, 1]],
    "x": [[0, 1], [1, 0]],
    "y": [[0, -1j], [1j, 0]],
    "z": [[1, 0], [0, -1]],
}
_PAULI["i"] = _PAULI["id"] = _PAULI["identity"]


def pauli(axis: str) -> ComplexArray:
    """Pauli matrix in the z-eigenbasis ordered ``(|+>, |->)``.

    ``axis`` is one of ``"x"``, ``"y"``, ``"z"`` or ``"identity"``
    (``"i"`` and ``"id"`` are accepted as aliases).
    """
    try:
        return _frozen(np.array(_PAULI[axis.lower()], dtype=np.complex128))
    except KeyError:
        raise ValueError(f"unknown Pauli axis {axis!r}") from None


def _check_cap(dim: int, max_dim: int) -> None:
    if dim > max_dim:
        raise DimensionError(f"product dimension {dim} exceeds cap {max_dim}")


def tensor_op(a: ArrayLike, b: ArrayLike, max_dim: int = MAX_DIM) -> ComplexArray:
    """Kronecker product ``a (x) b`` of two square operators."""
    a = _square(a, "left operand")
    b = _square(b, "right operand")
    _check_cap(a.shape[0] * b.shape[0], max_dim)
    return _frozen(np.kron(a, b))


def tensor_state(a: ArrayLike, b: ArrayLike, max_dim: int = MAX_DIM) -> ComplexArray:
    a = state(a)
    b = state(b)
    _check_cap(a.size * b.size, max_dim)
    return _frozen(np.kron(a, b))


def kron_all(ops: Iterable[ArrayLike], max_dim: int = MAX_DIM) -> ComplexArray:
    out = np.ones((1, 1), dtype=np.complex128)
    for op in ops:
        out = tensor_op(out, op, max_dim=max_dim)
    return out


def matrix_exponential_unitary(h: ArrayLike, t: float) -> ComplexArray:
    """Return ``exp(-i H t)`` via the eigendecomposition of ``H``.

    Parameters
    ----------
    h : array_like
        Hermitian matrix; rejected with :class:`InvariantError` otherwise.
    t : float
        Non-negative, finite duration.
    """
    if not np.isfinite(t) or t < 0:
        raise ValueError(f"duration must be finite and >= 0, got {t!r}")
    h = hermitian(h)
    if t == 0:
        return _frozen(np.eye(h.shape[0], dtype=np.complex128))
    evals, evecs = np.linalg.eigh(h)
    return _frozen((evecs * np.exp(-1j * evals * t)) @ evecs.conj().T)


def expm_series(h: ArrayLike, t: float) -> ComplexArray:
    """``exp(-i H t)`` by scaling and squaring a truncated Taylor series.

    An independent route to :func:`matrix_exponential_unitary`, kept for
    cross-checking the eigendecomposition path.
    """
    h = hermitian(h)
    a = -1j * t * h
    norm = np.linalg.norm(a, 1)
    squarings = max(0, int(np.ceil(np.log2(norm / 0.25)))) if norm > 0.25 else 0
    a = a / 2.0**squarings
    out = np.eye(h.shape[0], dtype=np.complex128)
    term = np.eye(h.shape[0], dtype=np.complex128)
    for k in range(1, 30):
        term = term @ a / k
        out = out + term
        if np.abs(term).max() < 1e-18:
            break
    for _ in range(squarings):
        out = out @ out
    return _frozen(out)


def apply(u: ArrayLike, psi: ArrayLike) -> ComplexArray:
    """Apply ``u`` to ``psi``, renormalizing only if the norm drifted past 1e-9."""
    u = np.asarray(u, dtype=np.complex128)
    psi = np.asarray(psi, dtype=np.complex128)
    if u.ndim != 2 or u.shape[1] != psi.shape[0]:
        raise DimensionError(f"cannot apply {u.shape} operator to state of dim {psi.shape[0]}")
    out = u @ psi
    norm2 = float(np.vdot(out, out).real)
    if abs(norm2 - 1.0) > EVOLUTION_TOL:
        logger.warning("norm drift %.3e after apply; renormalizing", norm2 - 1.0)
        out = out / np.sqrt(norm2)
    return _frozen(out)


def equal_up_to_phase(a: ArrayLike, b: ArrayLike, tol: float = COMPARISON_TOL) -> bool:
    """True when two vectors or matrices agree entrywise after removing a global phase."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.shape != b.shape:
        return False
    overlap = np.vdot(b, a)
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return bool(np.abs(a - phase * b).max() <= tol)


def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> ComplexArray:
    """Draw a GUE-like Hermitian matrix; used for fuzzing and property checks."""
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return hermitian(scale * (m + m.conj().T) / 2.0)


def random_state(dim: int, rng: np.random.Generator) -> ComplexArray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return state(v / np.linalg.norm(v))
