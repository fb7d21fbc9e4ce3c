import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from beables import hilbert
from beables.hilbert import (
    DimensionError,
    InvariantError,
    apply,
    expm_series,
    matrix_exponential_unitary,
    pauli,
    random_hermitian,
    random_state,
    tensor_op,
    tensor_state,
)

from conftest import I2, PSI_T0, PSI_T1, R2, SY, SZ, U_MEASURE, U_SEG

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(1, 8)


@pytest.mark.parametrize(
    "axis, expected",
    [
        ("identity", [[1, 0], [0, 1]]),
        ("z", [[1, 0], [0, -1]]),
        ("y", [[0, -1j], [1j, 0]]),
        ("x", [[0, 1], [1, 0]]),
    ],
)
def test_pauli(axis, expected):
    assert np.array_equal(pauli(axis), np.array(expected, dtype=complex))


def test_pauli_is_read_only():
    with pytest.raises(ValueError):
        pauli("x")[0, 0] = 5


def test_pauli_rejects_unknown_axis():
    with pytest.raises(ValueError):
        pauli("w")


def test_tensor_identity():
    assert np.array_equal(tensor_op(pauli("identity"), pauli("identity")), np.eye(4))


def test_tensor_block_structure():
    m = tensor_op(pauli("z"), pauli("y"))
    expected = np.block([[SY, np.zeros((2, 2))], [np.zeros((2, 2)), -SY]])
    assert np.array_equal(m, expected)


def test_tensor_involution():
    m = tensor_op(pauli("x"), pauli("identity"))
    assert np.allclose(m @ m, np.eye(4), atol=0)


def test_tensor_cap():
    big = np.eye(8)
    assert tensor_op(big, big).shape == (64, 64)
    with pytest.raises(DimensionError):
        tensor_op(big, np.eye(16))
    with pytest.raises(DimensionError):
        tensor_op(big, big, max_dim=32)


def test_tensor_state_ordering():
    up, down = np.array([1, 0]), np.array([0, 1])
    assert np.array_equal(tensor_state(up, up), [1, 0, 0, 0])
    assert np.array_equal(tensor_state(down, down), [0, 0, 0, 1])
    np.testing.assert_allclose(tensor_state([R2, R2], up), PSI_T0, atol=1e-15)


def test_state_rejects_unnormalized_and_nan():
    with pytest.raises(InvariantError):
        hilbert.state([1, 1])
    with pytest.raises(InvariantError):
        hilbert.state([np.nan, 1])


def test_hermitian_rejects_and_names_entry():
    with pytest.raises(InvariantError, match=r"\[0\]\[1\]|\[1\]\[0\]"):
        hilbert.hermitian([[0, 1], [2, 0]])


def test_expm_zero_time_is_identity():
    h = random_hermitian(4, np.random.default_rng(0))
    assert np.array_equal(matrix_exponential_unitary(h, 0.0), np.eye(4))


@pytest.mark.parametrize("tau", [0.5, 1.0, 2.0])
def test_expm_measurement_hamiltonian(tau):
    h = np.pi / (4 * tau) * np.kron(I2 - SZ, SY)
    np.testing.assert_allclose(matrix_exponential_unitary(h, tau), U_MEASURE, atol=1e-12)


def test_expm_forgetting_period():
    h = np.pi / 4 * SY
    np.testing.assert_allclose(matrix_exponential_unitary(h, 8.0), np.eye(2), atol=1e-12)


def test_expm_rejects_non_hermitian_and_negative_time():
    with pytest.raises(InvariantError):
        matrix_exponential_unitary([[0, 1], [0, 0]], 1.0)
    with pytest.raises(ValueError):
        matrix_exponential_unitary(np.eye(2), -1.0)


@settings(max_examples=50, deadline=None)
@given(seed=seeds, dim=st.integers(1, 16), t=st.floats(0, 5))
def test_expm_matches_scipy(seed, dim, t):
    h = random_hermitian(dim, np.random.default_rng(seed))
    np.testing.assert_allclose(matrix_exponential_unitary(h, t), scipy.linalg.expm(-1j * h * t), atol=1e-12)


def test_apply_identity():
    psi = random_state(5, np.random.default_rng(3))
    assert np.array_equal(apply(np.eye(5), psi), psi)


def test_apply_paper_states():
    c = np.array([0.6, 0.8j])
    psi = np.kron(c, [1, 0])
    np.testing.assert_allclose(apply(U_MEASURE, psi), [0.6, 0, 0, 0.8j], atol=1e-15)
    np.testing.assert_allclose(apply(U_SEG[0], PSI_T0), PSI_T1, atol=1e-15)


def test_apply_dimension_mismatch():
    with pytest.raises(DimensionError):
        apply(np.eye(3), [1, 0])


def test_apply_renormalizes_drift(caplog):
    out = apply(np.eye(2) * 1.001, [1, 0])
    assert abs(np.linalg.norm(out) - 1) < 1e-12
    assert "renormalizing" in caplog.text


@settings(max_examples=60, deadline=None)
@given(seed=seeds, dim=dims, t=st.floats(0, 10))
def test_norm_preserved(seed, dim, t):
    g = np.random.default_rng(seed)
    h, psi = random_hermitian(dim, g), random_state(dim, g)
    assert abs(np.linalg.norm(apply(matrix_exponential_unitary(h, t), psi)) - 1) < 1e-9


@settings(max_examples=60, deadline=None)
@given(seed=seeds, dim=dims, t1=st.floats(0, 3), t2=st.floats(0, 3))
def test_group_property(seed, dim, t1, t2):
    h = random_hermitian(dim, np.random.default_rng(seed))
    lhs = matrix_exponential_unitary(h, t1) @ matrix_exponential_unitary(h, t2)
    np.testing.assert_allclose(lhs, matrix_exponential_unitary(h, t1 + t2), atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(seed=seeds, dim=st.integers(1, 4), t=st.floats(0, 3))
def test_tensor_exponential_compatibility(seed, dim, t):
    a = random_hermitian(dim, np.random.default_rng(seed))
    lhs = matrix_exponential_unitary(tensor_op(a, np.eye(2)), t)
    np.testing.assert_allclose(lhs, tensor_op(matrix_exponential_unitary(a, t), np.eye(2)), atol=1e-10)


@settings(max_examples=60, deadline=None)
@given(seed=seeds, dim=dims, t=st.floats(0, 5))
def test_series_agrees_with_eigendecomposition(seed, dim, t):
    h = random_hermitian(dim, np.random.default_rng(seed))
    np.testing.assert_allclose(expm_series(h, t), matrix_exponential_unitary(h, t), atol=1e-10)


def test_equal_up_to_phase():
    v = random_state(4, np.random.default_rng(1))
    assert hilbert.equal_up_to_phase(np.exp(0.7j) * v, v)
    assert not hilbert.equal_up_to_phase(v[::-1], v)
