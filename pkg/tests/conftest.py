import numpy as np
import pytest

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)
R2 = 1 / np.sqrt(2)

# closed-form unitaries written out by hand from the Pauli algebra
U_MEASURE = 0.5 * (np.kron(I2 + SZ, I2) - 1j * np.kron(I2 - SZ, SY))
U_SEG = [
    R2 * (np.kron(I2, I2) + 1j * np.kron(SZ, SY)),
    1j * np.kron(SX, I2),
    R2 * np.kron(I2, I2 - 1j * SY),
    -1j * np.kron(SX, I2),
]

# product-basis amplitudes (|++>, |+->, |-+>, |-->) of the two-spin worked example
PSI_T0 = np.array([R2, 0, R2, 0], dtype=complex)
PSI_T1 = np.array([0.5, -0.5, 0.5, 0.5], dtype=complex)
PSI_T2 = np.array([0.5j, 0.5j, 0.5j, -0.5j])
PSI_T3 = np.array([0, 1j * R2, 1j * R2, 0])
PSI_T4 = np.array([R2, 0, 0, R2], dtype=complex)


def eq23_state(t: float, tau: float = 1.0) -> np.ndarray:
    """Exact state on (tau, 2 tau) under the second segment of the four-step schedule."""
    plus = np.exp(1j * np.pi * (t - tau) / (2 * tau))
    minus = np.exp(-1j * np.pi * (t - tau) / (2 * tau))
    return 0.5 * np.array([plus, -minus, plus, minus])


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
