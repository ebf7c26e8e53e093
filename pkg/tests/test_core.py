import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsvm_lab.core import (
    DensityMatrix,
    HermitianOperator,
    PureState,
    evolution_unitary,
    exact_evolve,
    fidelity,
    hermitian_eig,
    partial_trace,
    state_fidelity,
    swap_operator,
    tensor,
    tensor_all,
)
from qsvm_lab.errors import InputError, InvariantViolation

from _data import random_density, random_hermitian


def test_pure_state_requires_unit_norm():
    with pytest.raises(InvariantViolation):
        PureState([1.0, 1.0])
    assert PureState.normalized([3.0, 4.0]).amplitudes[1] == pytest.approx(0.8)


def test_dims_must_multiply():
    with pytest.raises(InvariantViolation):
        PureState([1, 0, 0, 0], (2, 3))


def test_density_matrix_invariants():
    with pytest.raises(InvariantViolation):
        DensityMatrix(np.eye(2))
    with pytest.raises(InvariantViolation):
        DensityMatrix([[0.5, 0.1], [0.2, 0.5]])
    with pytest.raises(InvariantViolation):
        DensityMatrix([[1.5, 0.0], [0.0, -0.5]])


def test_operator_must_be_hermitian():
    with pytest.raises(InvariantViolation):
        HermitianOperator([[0.0, 1.0], [0.0, 0.0]])


def test_values_are_read_only():
    psi = PureState([1.0, 0.0])
    with pytest.raises(ValueError):
        psi.amplitudes[0] = 0.0


def test_tensor_basis_bookkeeping():
    out = tensor(PureState.basis(0, 2), PureState.basis(1, 2))
    np.testing.assert_array_equal(out.amplitudes, PureState.basis(1, 4).amplitudes)
    assert out.dims == (2, 2)


def test_tensor_rejects_mixed_types():
    with pytest.raises(InputError):
        tensor(PureState.basis(0, 2), DensityMatrix.maximally_mixed(2))


def test_tensor_all_three_factors():
    out = tensor_all([PureState.basis(1, 2)] * 3)
    assert out.dims == (2, 2, 2)
    assert out.amplitudes[7] == 1.0


def test_partial_trace_product_state():
    rng = np.random.default_rng(0)
    rho, sigma = DensityMatrix(random_density(rng, 3)), DensityMatrix(random_density(rng, 2))
    joint = tensor(rho, sigma)
    np.testing.assert_allclose(partial_trace(joint, 0).entries, rho.entries, atol=1e-12)
    np.testing.assert_allclose(partial_trace(joint, 1).entries, sigma.entries, atol=1e-12)


@pytest.mark.parametrize("keep", [0, 1])
def test_partial_trace_bell_state(keep):
    bell = PureState(np.array([1, 0, 0, 1]) / math.sqrt(2), (2, 2))
    np.testing.assert_allclose(partial_trace(bell.density(), keep).entries, np.eye(2) / 2, atol=1e-15)


def test_partial_trace_chi_example():
    chi = PureState(np.array([1, 0, 0, 1]) / math.sqrt(2), (2, 2))
    np.testing.assert_allclose(partial_trace(chi.density(), 0).entries, np.eye(2) / 2, atol=1e-15)


@pytest.mark.parametrize("keep", [[2], [], [-1]])
def test_partial_trace_bad_index(keep):
    with pytest.raises(InputError):
        partial_trace(DensityMatrix(np.eye(4) / 4, (2, 2)), keep)


def test_partial_trace_needs_two_subsystems():
    with pytest.raises(InputError):
        partial_trace(DensityMatrix.maximally_mixed(2), 0)


def test_partial_trace_middle_subsystem():
    rng = np.random.default_rng(9)
    a, b, c = (DensityMatrix(random_density(rng, d)) for d in (2, 3, 2))
    joint = tensor_all([a, b, c])
    np.testing.assert_allclose(partial_trace(joint, 1).entries, b.entries, atol=1e-12)
    np.testing.assert_allclose(partial_trace(joint, [0, 2]).entries, tensor(a, c).entries, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**31))
def test_partial_trace_of_product_property(d1, d2, seed):
    rng = np.random.default_rng(seed)
    rho, sigma = DensityMatrix(random_density(rng, d1)), DensityMatrix(random_density(rng, d2))
    np.testing.assert_allclose(partial_trace(tensor(rho, sigma), 0).entries, rho.entries, atol=1e-10)


def test_swap_operator_exchanges_factors():
    rng = np.random.default_rng(1)
    a = PureState.normalized(rng.normal(size=3))
    b = PureState.normalized(rng.normal(size=3))
    S = swap_operator(3).entries
    np.testing.assert_allclose(S @ tensor(a, b).amplitudes, tensor(b, a).amplitudes, atol=1e-15)
    np.testing.assert_array_equal(S @ S, np.eye(9))


def test_eig_pauli_x():
    w, _ = hermitian_eig(HermitianOperator([[0, 1], [1, 0]]))
    np.testing.assert_allclose(w, [-1, 1], atol=1e-15)


def test_eig_diagonal_sorted():
    w, _ = hermitian_eig(np.diag([3.0, -1.0, 2.0]))
    np.testing.assert_array_equal(w, [-1.0, 2.0, 3.0])


def test_eig_random_orthonormal():
    A = random_hermitian(np.random.default_rng(2), 8)
    w, V = hermitian_eig(A)
    np.testing.assert_allclose(V.conj().T @ V, np.eye(8), atol=1e-10)
    np.testing.assert_allclose((V * w) @ V.conj().T, A, atol=1e-10)


def test_eig_rejects_non_hermitian():
    with pytest.raises(InvariantViolation):
        hermitian_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_evolve_zero_time():
    rng = np.random.default_rng(3)
    A = HermitianOperator(random_hermitian(rng, 4))
    psi = PureState.normalized(rng.normal(size=4) + 1j * rng.normal(size=4))
    np.testing.assert_allclose(exact_evolve(A, 0.0, psi).amplitudes, psi.amplitudes, atol=1e-14)


def test_evolve_identity_is_global_phase():
    rng = np.random.default_rng(4)
    rho = DensityMatrix(random_density(rng, 3))
    out = exact_evolve(HermitianOperator(np.eye(3)), 0.77, rho)
    np.testing.assert_allclose(out.entries, rho.entries, atol=1e-15)
    psi = PureState.normalized(rng.normal(size=3))
    np.testing.assert_allclose(exact_evolve(HermitianOperator(np.eye(3)), 0.77, psi).amplitudes,
                               np.exp(-0.77j) * psi.amplitudes, atol=1e-15)


def test_evolve_group_law():
    A = HermitianOperator(random_hermitian(np.random.default_rng(5), 5))
    np.testing.assert_allclose(evolution_unitary(A, 0.3) @ evolution_unitary(A, 0.4), evolution_unitary(A, 0.7), atol=1e-12)


def test_evolve_matches_taylor_series():
    A = random_hermitian(np.random.default_rng(6), 4) * 0.2
    U = np.eye(4, dtype=complex)
    term = np.eye(4, dtype=complex)
    for k in range(1, 30):
        term = term @ (-1j * A) / k
        U = U + term
    np.testing.assert_allclose(evolution_unitary(A, 1.0), U, atol=1e-13)


def test_evolve_dimension_mismatch():
    with pytest.raises(InputError):
        exact_evolve(HermitianOperator(np.eye(2)), 1.0, PureState.basis(0, 3))


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 6), st.floats(-10, 10), st.integers(0, 2**31))
def test_evolve_preserves_orthonormality(d, t, seed):
    rng = np.random.default_rng(seed)
    A = HermitianOperator(random_hermitian(rng, d))
    a, b = PureState.basis(0, d), PureState.basis(1, d)
    ea, eb = exact_evolve(A, t, a), exact_evolve(A, t, b)
    assert fidelity(ea, ea) == pytest.approx(1.0, abs=1e-10)
    assert fidelity(ea, eb) == pytest.approx(0.0, abs=1e-10)


def test_fidelity_examples():
    zero, one = PureState.basis(0, 2), PureState.basis(1, 2)
    plus = PureState(np.array([1, 1]) / math.sqrt(2))
    assert fidelity(zero, zero) == 1.0
    assert fidelity(zero, one) == 0.0
    assert fidelity(plus, zero) == pytest.approx(0.5)
    assert state_fidelity(plus, zero.density()) == pytest.approx(0.5)
