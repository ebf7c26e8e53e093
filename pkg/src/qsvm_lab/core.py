"""Dense complex-amplitude simulation substrate.

States, density matrices and Hermitian operators carry an explicit list of
subsystem dimensions. Dimensions are arbitrary positive integers; a training
index register of size M is simulated as a single M-level system.

Every constructor validates its invariants and raises InvariantViolation on
failure. Nothing is renormalized implicitly.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence, Union

import numpy as np

from .errors import InputError, InvariantViolation

NORM_TOL = 1e-10
HERMITIAN_TOL = 1e-12


def _dims(dims, total: int) -> tuple[int, ...]:
    dims = (total,) if dims is None else tuple(int(d) for d in dims)
    if any(d < 1 for d in dims):
        raise InputError(f"subsystem dimensions must be positive, got {dims}")
    if int(np.prod(dims)) != total:
        raise InvariantViolation(f"dims {dims} do not multiply to {total}")
    return dims


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


def _hermitian_defect(A: np.ndarray) -> float:
    return float(np.max(np.abs(A - A.conj().T))) if A.size else 0.0


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: np.ndarray
    dims: tuple[int, ...]

    def __init__(self, amplitudes, dims=None):
        psi = np.asarray(amplitudes, dtype=complex).ravel()
        dims = _dims(dims, psi.shape[0])
        norm2 = float(np.vdot(psi, psi).real)
        if abs(norm2 - 1.0) > NORM_TOL:
            raise InvariantViolation(f"state has squared norm {norm2!r}, expected 1")
        object.__setattr__(self, "amplitudes", _readonly(psi))
        object.__setattr__(self, "dims", dims)

    @classmethod
    def normalized(cls, vector, dims=None) -> "PureState":
        v = np.asarray(vector, dtype=complex).ravel()
        n = np.linalg.norm(v)
        if n == 0:
            raise InvariantViolation("cannot normalize the zero vector")
        return cls(v / n, dims)

    @classmethod
    def basis(cls, index: int, dim: int) -> "PureState":
        v = np.zeros(dim, dtype=complex)
        v[index] = 1.0
        return cls(v)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()), self.dims)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    entries: np.ndarray
    dims: tuple[int, ...]

    def __init__(self, entries, dims=None):
        rho = np.asarray(entries, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise InvariantViolation("density matrix must be square")
        dims = _dims(dims, rho.shape[0])
        if _hermitian_defect(rho) > HERMITIAN_TOL:
            raise InvariantViolation("density matrix is not Hermitian")
        tr = np.trace(rho)
        if abs(tr - 1.0) > NORM_TOL:
            raise InvariantViolation(f"density matrix has trace {tr!r}, expected 1")
        if np.linalg.eigvalsh(rho).min() < -NORM_TOL:
            raise InvariantViolation("density matrix is not positive semidefinite")
        object.__setattr__(self, "entries", _readonly(rho))
        object.__setattr__(self, "dims", dims)

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim) / dim)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    entries: np.ndarray
    label: str = ""
    dims: tuple[int, ...] = ()

    def __init__(self, entries, label: str = "", dims=None):
        A = np.asarray(entries, dtype=complex)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise InvariantViolation("operator must be square")
        dims = _dims(dims, A.shape[0])
        scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
        if _hermitian_defect(A) > HERMITIAN_TOL * scale:
            raise InvariantViolation(f"operator {label!r} is not Hermitian")
        object.__setattr__(self, "entries", _readonly(A))
        object.__setattr__(self, "label", label)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


Quantum = Union[PureState, DensityMatrix, HermitianOperator]


def tensor(a: Quantum, b: Quantum) -> Quantum:
    if type(a) is not type(b):
        raise InputError(f"cannot tensor {type(a).__name__} with {type(b).__name__}")
    dims = a.dims + b.dims
    if isinstance(a, PureState):
        return PureState(np.kron(a.amplitudes, b.amplitudes), dims)
    if isinstance(a, DensityMatrix):
        return DensityMatrix(np.kron(a.entries, b.entries), dims)
    label = f"{a.label}⊗{b.label}" if a.label or b.label else ""
    return HermitianOperator(np.kron(a.entries, b.entries), label, dims)


def tensor_all(items: Sequence[Quantum]) -> Quantum:
    return reduce(tensor, items)


def ptrace_array(rho: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Partial trace on a raw (not necessarily physical) operator array."""
    dims = list(dims)
    n = len(dims)
    keep = sorted(keep)
    t = np.asarray(rho).reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for i in range(n):
        if i not in keep:
            col[i] = row[i]
    out = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    red = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    d = int(np.prod([dims[i] for i in keep]))
    return red.reshape(d, d)


def partial_trace(rho: DensityMatrix, keep) -> DensityMatrix:
    """Reduced state on the subsystem(s) ``keep``; all others are traced out."""
    if len(rho.dims) < 2:
        raise InputError("partial trace needs at least two subsystems")
    keep = [keep] if np.isscalar(keep) else list(keep)
    if not keep or any(not 0 <= k < len(rho.dims) for k in keep):
        raise InputError(f"subsystem index {keep} out of range for dims {rho.dims}")
    red = ptrace_array(rho.entries, rho.dims, keep)
    return DensityMatrix(red, [rho.dims[k] for k in sorted(keep)])


def swap_operator(dim: int) -> HermitianOperator:
    if dim < 1:
        raise InputError("swap dimension must be positive")
    S = np.zeros((dim * dim, dim * dim))
    for m in range(dim):
        for n in range(dim):
            S[m * dim + n, n * dim + m] = 1.0
    return HermitianOperator(S, "S", (dim, dim))


def hermitian_eig(op) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvector columns."""
    if not isinstance(op, HermitianOperator):
        op = HermitianOperator(op)
    w, V = np.linalg.eigh(op.entries)
    err = np.linalg.norm((V * w) @ V.conj().T - op.entries)
    if err > 1e-10 * max(1.0, np.linalg.norm(op.entries)):
        raise InvariantViolation(f"eigendecomposition reconstruction error {err:.3e}")
    return w, V


def evolution_unitary(op, t: float) -> np.ndarray:
    """Matrix ``exp(-i A t)`` built from the spectral decomposition."""
    w, V = hermitian_eig(op)
    return (V * np.exp(-1j * w * t)) @ V.conj().T


def exact_evolve(op: HermitianOperator, t: float, target):
    U = evolution_unitary(op, t)
    if target.dim != U.shape[0]:
        raise InputError(f"operator dimension {U.shape[0]} does not match target {target.dim}")
    if isinstance(target, PureState):
        return PureState(U @ target.amplitudes, target.dims)
    rho = U @ target.entries @ U.conj().T
    return DensityMatrix(0.5 * (rho + rho.conj().T), target.dims)


def fidelity(a: PureState, b: PureState) -> float:
    if a.dim != b.dim:
        raise InputError(f"state dimensions differ: {a.dim} vs {b.dim}")
    return float(min(1.0, abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2))


def state_fidelity(psi: PureState, rho: DensityMatrix) -> float:
    """``<psi|rho|psi>``."""
    return float(np.real(np.vdot(psi.amplitudes, rho.entries @ psi.amplitudes)))
