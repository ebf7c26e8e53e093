"""Non-sparse matrix exponentiation by the swap trick.

The trace-normalized kernel matrix is prepared as a density matrix by
discarding the feature register of the training superposition. One time
slice of ``exp(-i K_hat dt)`` is then enacted on a system state by evolving
``K_hat ⊗ rho`` under the swap operator and tracing out the environment
copy. The bordered LS-SVM matrix ``F_hat`` is exponentiated by a Lie
splitting into a label-block phase, the star-graph coupling ``J`` and the
kernel block.

The splitting order within a slice is fixed: phase term, then ``J``, then
kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .classical import LINEAR, KernelSpec, TrainingSet, feature_map
from .core import (
    DensityMatrix,
    HermitianOperator,
    PureState,
    evolution_unitary,
    partial_trace,
    ptrace_array,
    swap_operator,
    tensor,
)
from .errors import CapacityError, InputError

MAX_DIM = 2**14


@dataclass(frozen=True)
class ChiState:
    state: PureState
    normChi: float


@dataclass(frozen=True)
class TrotterPlan:
    deltaT: float
    steps: int
    trF: float
    trK: float

    @classmethod
    def build(cls, total_time: float, steps: int, training: TrainingSet, gamma: float,
              spec: KernelSpec = LINEAR) -> "TrotterPlan":
        if steps < 1:
            raise InputError("trotter steps must be positive")
        trK = prepare_chi(training, spec).normChi
        return cls(total_time / steps, int(steps), trK + training.M / gamma, trK)

    @property
    def kernel_time_scale(self) -> float:
        """Rescaling factor ``tr K / tr F`` applied to the kernel slice."""
        return self.trK / self.trF


@dataclass(frozen=True)
class StarEigensystem:
    values: tuple[float, float]
    states: tuple[PureState, PureState]
    null_dim: int


def prepare_chi(training: TrainingSet, spec: KernelSpec = LINEAR) -> ChiState:
    """Amplitude-exact ``|chi> ∝ sum_i |x_i| |i>|x_i>`` over index ⊗ feature registers."""
    phi = feature_map(training.vectors, spec)
    M, F = phi.shape
    if M * F > MAX_DIM:
        raise CapacityError(f"|chi> would need {M * F} amplitudes (cap {MAX_DIM})")
    norm_chi = math.fsum((phi * phi).ravel())
    return ChiState(PureState(phi.ravel() / math.sqrt(norm_chi), (M, F)), norm_chi)


def kernel_density(training: TrainingSet, spec: KernelSpec = LINEAR) -> DensityMatrix:
    chi = prepare_chi(training, spec).state
    return partial_trace(chi.density(), 0)


def _swap_unitary(dim: int, dt: float) -> np.ndarray:
    return evolution_unitary(swap_operator(dim), dt)


def swap_step(kernelState: DensityMatrix, rho: DensityMatrix, deltaT: float) -> DensityMatrix:
    """``tr_1{ e^{-iS dt} (K_hat ⊗ rho) e^{iS dt} }``."""
    if kernelState.dim != rho.dim:
        raise InputError(f"environment dimension {kernelState.dim} != system dimension {rho.dim}")
    d = rho.dim
    joint = tensor(DensityMatrix(kernelState.entries), DensityMatrix(rho.entries))
    W = _swap_unitary(d, deltaT)
    evolved = W @ joint.entries @ W.conj().T
    out = ptrace_array(evolved, (d, d), [1])
    return DensityMatrix(0.5 * (out + out.conj().T), rho.dims)


def star_matrix(M: int) -> np.ndarray:
    J = np.zeros((M + 1, M + 1))
    J[0, 1:] = 1.0
    J[1:, 0] = 1.0
    return J


def star_eigensystem(M: int) -> StarEigensystem:
    if M < 1:
        raise InputError("star graph needs M >= 1")
    s = math.sqrt(M)
    plus = np.full(M + 1, 1.0 / s)
    minus = -plus
    plus[0] = minus[0] = 1.0
    return StarEigensystem(
        (s, -s),
        (PureState(plus / math.sqrt(2)), PureState(minus / math.sqrt(2))),
        M - 1,
    )


def star_unitary(M: int, t: float) -> np.ndarray:
    """``exp(-i J t)`` from the two nonzero eigenpairs; the null space is left alone."""
    star = star_eigensystem(M)
    U = np.eye(M + 1, dtype=complex)
    for lam, st in zip(star.values, star.states):
        v = st.amplitudes
        U += (np.exp(-1j * lam * t) - 1.0) * np.outer(v, v.conj())
    return U


def padded_kernel_density(training: TrainingSet, spec: KernelSpec = LINEAR) -> DensityMatrix:
    # direct sum 0 ⊕ K_hat; trace stays 1, so no renormalization is needed
    Kh = kernel_density(training, spec).entries
    M = Kh.shape[0]
    env = np.zeros((M + 1, M + 1), dtype=complex)
    env[1:, 1:] = Kh
    return DensityMatrix(env)


def f_hat_matrix(training: TrainingSet, gamma: float, spec: KernelSpec = LINEAR) -> np.ndarray:
    """``F / tr F`` assembled from the quantum-prepared kernel density."""
    chi = prepare_chi(training, spec)
    K = kernel_density(training, spec).entries.real * chi.normChi
    M = training.M
    F = star_matrix(M)
    F[1:, 1:] += K + np.eye(M) / gamma
    return F / np.trace(F)


def _label_phase(M: int, gamma: float, trF: float, dt: float) -> np.ndarray:
    # the identity term is a global phase; only its absence on index 0 is physical
    ph = np.full(M + 1, np.exp(-1j * dt / (gamma * trF)))
    ph[0] = 1.0
    return np.diag(ph)


def f_hat_step(training: TrainingSet, gamma: float, deltaT: float, rho: DensityMatrix,
               spec: KernelSpec = LINEAR, include_kernel: bool = True) -> DensityMatrix:
    """One Lie-product slice of ``exp(-i F_hat dt)`` acting on ``rho``.

    ``include_kernel=False`` withholds the kernel block (test harness only).
    """
    if not gamma > 0:
        raise InputError(f"gamma must be positive, got {gamma!r}")
    M = training.M
    if rho.dim != M + 1:
        raise InputError(f"rho has dimension {rho.dim}, expected M+1 = {M + 1}")
    plan = TrotterPlan.build(deltaT, 1, training, gamma, spec)
    U = star_unitary(M, deltaT / plan.trF) @ _label_phase(M, gamma, plan.trF, deltaT)
    X = U @ rho.entries @ U.conj().T
    out = DensityMatrix(0.5 * (X + X.conj().T), rho.dims)
    if include_kernel:
        env = padded_kernel_density(training, spec)
        out = swap_step(env, out, deltaT * plan.kernel_time_scale)
    return out


# Superoperators act on row-major vectorized operators: vec(A X B) = kron(A, B.T) vec(X).

def _superop(fn, d: int) -> np.ndarray:
    S = np.empty((d * d, d * d), dtype=complex)
    for idx in range(d * d):
        E = np.zeros(d * d, dtype=complex)
        E[idx] = 1.0
        S[:, idx] = fn(E.reshape(d, d)).ravel()
    return S


def _swap_maps(env: np.ndarray, dt: float):
    """One-sided and two-sided swap-trick maps on arbitrary operator blocks."""
    d = env.shape[0]
    W = _swap_unitary(d, dt)

    def both(X):
        return ptrace_array(W @ np.kron(env, X) @ W.conj().T, (d, d), [1])

    def left(X):
        return ptrace_array(W @ np.kron(env, X), (d, d), [1])

    def right(X):
        return ptrace_array(np.kron(env, X) @ W.conj().T, (d, d), [1])

    return both, left, right


def slice_superoperators(training: TrainingSet, gamma: float, deltaT: float,
                         spec: KernelSpec = LINEAR, inverse: bool = False) -> dict:
    """Superoperators of one slice for a control in superposition.

    Keys ``(a, b)`` give the map on the operator block ``|a><b|`` of a control
    qubit: ``(1, 1)`` both sides evolve, ``(1, 0)`` only the ket side,
    ``(0, 1)`` only the bra side. ``inverse=True`` builds the time-reversed
    slice (negative time, reversed splitting order) used for uncomputation.
    """
    M = training.M
    d = M + 1
    plan = TrotterPlan.build(deltaT, 1, training, gamma, spec)
    U = star_unitary(M, deltaT / plan.trF) @ _label_phase(M, gamma, plan.trF, deltaT)
    env = padded_kernel_density(training, spec).entries
    I = np.eye(d)
    if not inverse:
        both, left, right = _swap_maps(env, deltaT * plan.kernel_time_scale)
        return {
            (1, 1): _superop(both, d) @ np.kron(U, U.conj()),
            (1, 0): _superop(left, d) @ np.kron(U, I),
            (0, 1): _superop(right, d) @ np.kron(I, U.conj()),
        }
    both, left, right = _swap_maps(env, -deltaT * plan.kernel_time_scale)
    Ud = U.conj().T
    return {
        (1, 1): np.kron(Ud, Ud.conj()) @ _superop(both, d),
        (1, 0): np.kron(Ud, I) @ _superop(left, d),
        (0, 1): np.kron(I, Ud.conj()) @ _superop(right, d),
    }
