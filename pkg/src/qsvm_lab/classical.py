"""Classical least-squares SVM: kernels, the bordered linear system, an exact
dense solver, and the spectral analytics (kernel PCA, rank-one inverse,
truncation error) used as ground truth by the quantum modules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DegenerateError, InputError, InvariantViolation, NumericalError, SingularMatrixError

SYMMETRY_TOL = 1e-12
PSD_TOL = 1e-10
PIVOT_TOL = 1e-13


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TrainingSet:
    vectors: np.ndarray
    labels: np.ndarray

    def __init__(self, vectors, labels):
        try:
            X = np.array(vectors, dtype=float)
        except ValueError as exc:
            raise InputError(f"feature vectors have inconsistent dimensions: {exc}") from None
        y = np.asarray(labels, dtype=float).ravel()
        if X.ndim != 2:
            raise InputError("feature vectors must form an M x N array")
        M, N = X.shape
        if M < 1 or N < 1:
            raise InputError("training set needs at least one vector of dimension >= 1")
        if y.shape[0] != M:
            raise InputError(f"got {M} vectors but {y.shape[0]} labels")
        if not np.all(np.isfinite(X)):
            raise InputError("feature vectors contain non-finite values")
        bad = np.flatnonzero((y != 1.0) & (y != -1.0))
        if bad.size:
            raise InputError(f"label at index {bad[0]} is {y[bad[0]]!r}, expected -1 or +1")
        zero = np.flatnonzero(~np.any(X != 0.0, axis=1))
        if zero.size:
            raise InputError(f"training vector {zero[0]} is all-zero; its normalized state is undefined")
        object.__setattr__(self, "vectors", _frozen(X))
        object.__setattr__(self, "labels", _frozen(y))

    @property
    def M(self) -> int:
        return self.vectors.shape[0]

    @property
    def N(self) -> int:
        return self.vectors.shape[1]

    @property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.vectors, axis=1)


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "linear"
    degree: int = 1

    def __post_init__(self):
        if self.kind not in ("linear", "polynomial"):
            raise InputError(f"unknown kernel kind {self.kind!r}")
        if int(self.degree) != self.degree or self.degree < 1:
            raise InputError(f"kernel degree must be a positive integer, got {self.degree!r}")
        if self.kind == "linear" and self.degree != 1:
            raise InputError("linear kernel has degree 1")

    @property
    def d(self) -> int:
        return int(self.degree)

    @classmethod
    def parse(cls, text: str) -> "KernelSpec":
        """Parse ``linear`` or ``poly:<d>``."""
        text = text.strip().lower()
        if text == "linear":
            return cls()
        if text.startswith("poly:"):
            try:
                d = int(text[5:])
            except ValueError:
                raise InputError(f"bad polynomial degree in {text!r}") from None
            return cls("polynomial", d)
        raise InputError(f"kernel must be 'linear' or 'poly:<d>', got {text!r}")

    def __str__(self) -> str:
        return "linear" if self.kind == "linear" else f"poly:{self.degree}"

    def __call__(self, a: np.ndarray, b: np.ndarray):
        return np.dot(a, b) ** self.d


LINEAR = KernelSpec()


@dataclass(frozen=True)
class KernelMatrix:
    entries: np.ndarray
    trace: float = field(init=False)

    def __post_init__(self):
        K = np.asarray(self.entries, dtype=float)
        if K.ndim != 2 or K.shape[0] != K.shape[1]:
            raise InputError("kernel matrix must be square")
        scale = max(1.0, float(np.max(np.abs(K))))
        if np.max(np.abs(K - K.T)) > SYMMETRY_TOL * scale:
            raise InvariantViolation("kernel matrix is not symmetric")
        if np.min(np.linalg.eigvalsh(K)) < -PSD_TOL * scale:
            raise InvariantViolation("kernel matrix is not positive semidefinite")
        tr = math.fsum(np.diag(K))
        if tr <= 0:
            raise InvariantViolation("kernel matrix has non-positive trace")
        object.__setattr__(self, "entries", _frozen(K))
        object.__setattr__(self, "trace", tr)

    @property
    def M(self) -> int:
        return self.entries.shape[0]

    @property
    def normalized(self) -> np.ndarray:
        return self.entries / self.trace


@dataclass(frozen=True)
class LSSystem:
    F: np.ndarray
    rhs: np.ndarray
    gamma: float


@dataclass(frozen=True)
class SvmModel:
    b: float
    alpha: np.ndarray
    normC: float = field(init=False)

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=float).ravel()
        object.__setattr__(self, "alpha", _frozen(alpha))
        object.__setattr__(self, "b", float(self.b))
        c = math.fsum([self.b * self.b, *(alpha * alpha)])
        object.__setattr__(self, "normC", c)

    @property
    def params(self) -> np.ndarray:
        """The vector ``(b, alpha_1, ..., alpha_M)``."""
        return np.concatenate([[self.b], self.alpha])

    @classmethod
    def from_params(cls, params) -> "SvmModel":
        p = np.asarray(params, dtype=float).ravel()
        return cls(p[0], p[1:])


@dataclass(frozen=True)
class Eigensystem:
    values: np.ndarray
    vectors: np.ndarray  # columns


@dataclass(frozen=True)
class LowRankAnalysis:
    lambda1: float
    u1: np.ndarray
    c: float
    gamma: float
    inverse: np.ndarray
    truncationError: float
    w: np.ndarray | None = None
    c_prime: float | None = None


def _as_kernel(K) -> KernelMatrix:
    return K if isinstance(K, KernelMatrix) else KernelMatrix(np.asarray(K, dtype=float))


def feature_map(X: np.ndarray, spec: KernelSpec = LINEAR) -> np.ndarray:
    """Unnormalized tensor-power features ``x^(⊗d)``, one row per vector."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = X
    for _ in range(spec.d - 1):
        out = np.einsum("mi,mj->mij", out, X).reshape(X.shape[0], -1)
    return out


def build_kernel(training: TrainingSet, spec: KernelSpec = LINEAR) -> KernelMatrix:
    X = training.vectors
    return KernelMatrix((X @ X.T) ** spec.d)


def build_ls_system(K, gamma: float, labels: Sequence[float]) -> LSSystem:
    if not gamma > 0:
        raise InputError(f"gamma must be positive, got {gamma!r}")
    Km = np.asarray(K.entries if isinstance(K, KernelMatrix) else K, dtype=float)
    y = np.asarray(labels, dtype=float).ravel()
    M = Km.shape[0]
    if y.shape[0] != M:
        raise InputError(f"kernel is {M}x{M} but {y.shape[0]} labels were given")
    F = np.zeros((M + 1, M + 1))
    F[0, 1:] = 1.0
    F[1:, 0] = 1.0
    F[1:, 1:] = Km + np.eye(M) / gamma
    rhs = np.concatenate([[0.0], y])
    return LSSystem(_frozen(F), _frozen(rhs), float(gamma))


def gaussian_elimination(A, b) -> np.ndarray:
    """Solve ``A x = b`` by elimination with partial pivoting.

    Raises SingularMatrixError when the best available pivot is below 1e-13
    in magnitude; the error carries the elimination column.
    """
    A = np.array(A, dtype=float)
    x = np.array(b, dtype=float)
    n = A.shape[0]
    for col in range(n):
        p = col + int(np.argmax(np.abs(A[col:, col])))
        if abs(A[p, col]) < PIVOT_TOL:
            raise SingularMatrixError(f"matrix is numerically singular at pivot {col}", col)
        if p != col:
            A[[col, p]] = A[[p, col]]
            x[[col, p]] = x[[p, col]]
        for row in range(col + 1, n):
            m = A[row, col] / A[col, col]
            if m != 0.0:
                A[row, col:] -= m * A[col, col:]
                x[row] -= m * x[col]
    for row in range(n - 1, -1, -1):
        x[row] = (x[row] - A[row, row + 1:] @ x[row + 1:]) / A[row, row]
    return x


def solve_ls(system: LSSystem) -> SvmModel:
    sol = gaussian_elimination(system.F, system.rhs)
    resid = np.linalg.norm(system.F @ sol - system.rhs)
    if resid > 1e-9 * max(1.0, np.linalg.norm(system.rhs)):
        raise NumericalError(f"LS-SVM solve residual {resid:.3e} exceeds 1e-9")
    return SvmModel.from_params(sol)


def train_classical(training: TrainingSet, gamma: float, spec: KernelSpec = LINEAR) -> SvmModel:
    K = build_kernel(training, spec)
    return solve_ls(build_ls_system(K, gamma, training.labels))


def decision_value(model: SvmModel, training: TrainingSet, spec: KernelSpec, query) -> float:
    q = np.asarray(query, dtype=float).ravel()
    if q.shape[0] != training.N:
        raise InputError(f"query has dimension {q.shape[0]}, training data has {training.N}")
    k = (training.vectors @ q) ** spec.d
    return math.fsum([*(model.alpha * k), model.b])


def classify_classical(model: SvmModel, training: TrainingSet, spec: KernelSpec, query) -> int:
    # sign(0) resolves to +1
    return 1 if decision_value(model, training, spec, query) >= 0 else -1


def _canonical_signs(V: np.ndarray) -> np.ndarray:
    V = V.copy()
    for j in range(V.shape[1]):
        nz = np.flatnonzero(np.abs(V[:, j]) > 1e-12)
        if nz.size and V[nz[0], j] < 0:
            V[:, j] = -V[:, j]
    return V


def kernel_eigensystem(K, tie_tol: float = 1e-10) -> Eigensystem:
    """Full spectral decomposition with eigenvalues in descending order.

    Eigenvectors are sign-fixed so their first nonzero component is positive;
    within a group of (numerically) equal eigenvalues they are ordered
    lexicographically.
    """
    Km = np.asarray(K.entries if isinstance(K, KernelMatrix) else K, dtype=float)
    w, V = np.linalg.eigh(Km)
    w, V = w[::-1], _canonical_signs(V[:, ::-1])
    order = []
    i = 0
    scale = max(1.0, float(np.max(np.abs(w)))) if w.size else 1.0
    while i < len(w):
        j = i + 1
        while j < len(w) and abs(w[j] - w[i]) <= tie_tol * scale:
            j += 1
        group = list(range(i, j))
        if len(group) > 1:
            cols = np.round(V[:, group], 12)
            # lexsort keys: last key is primary
            idx = np.lexsort(cols[::-1])
            group = [group[k] for k in idx]
        order.extend(group)
        i = j
    w, V = w[order], V[:, order]
    err = np.linalg.norm((V * w) @ V.T - Km)
    if err > 1e-10 * max(1.0, np.linalg.norm(Km)):
        raise NumericalError(f"eigendecomposition reconstruction error {err:.3e}")
    return Eigensystem(_frozen(w), _frozen(V))


def low_rank_inverse(K, gamma: float, labels=None, training: TrainingSet | None = None) -> LowRankAnalysis:
    """Rank-one Sherman-Morrison approximation of ``(K + I/gamma)^-1``.

    With ``labels`` and ``training`` supplied, also returns the effective
    normal vector ``w = gamma * sum_m (y_m - c' u1[m]) x_m``.
    """
    if not gamma > 0:
        raise InputError(f"gamma must be positive, got {gamma!r}")
    eig = kernel_eigensystem(K)
    lam1 = float(eig.values[0])
    if lam1 <= 0:
        raise DegenerateError(f"leading kernel eigenvalue is {lam1:.3e}; nothing to approximate")
    u1 = eig.vectors[:, 0]
    c = gamma * lam1 / (1.0 + gamma * lam1)
    M = u1.shape[0]
    inverse = gamma * (np.eye(M) - c * np.outer(u1, u1))
    trunc = math.sqrt(math.fsum(eig.values[1:] ** 2))
    w = c_prime = None
    if labels is not None:
        y = np.asarray(labels, dtype=float).ravel()
        c_prime = float(c * (u1 @ y))
        if training is not None:
            w = gamma * ((y - c_prime * u1) @ training.vectors)
    return LowRankAnalysis(lam1, _frozen(u1), c, float(gamma), _frozen(inverse), trunc, w, c_prime)


def truncation_error(K, epsK: float) -> float:
    """Frobenius error of dropping eigenvalues of ``K/tr K`` below ``epsK``.

    The closed form (root-sum-square of the discarded eigenvalues) is
    cross-checked against the explicit norm of the difference matrix.
    """
    if not 0 < epsK < 1:
        raise InputError(f"epsK must lie in (0, 1), got {epsK!r}")
    km = _as_kernel(K)
    Kh = km.normalized
    w, V = np.linalg.eigh(Kh)
    drop = np.abs(w) < epsK
    closed = math.sqrt(math.fsum(w[drop] ** 2))
    keep = ~drop
    Kq = (V[:, keep] * w[keep]) @ V[:, keep].T
    direct = float(np.linalg.norm(Kh - Kq))
    if abs(closed - direct) > 1e-10:
        raise NumericalError(f"truncation error mismatch: closed form {closed!r}, direct {direct!r}")
    return closed
