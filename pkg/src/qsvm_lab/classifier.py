"""Swap-test classification of a query against the trained hyperplane state."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .classical import LINEAR, KernelSpec, SvmModel, TrainingSet, feature_map
from .core import PureState
from .errors import CapacityError, DegenerateError, InputError, InvariantViolation
from .hamiltonian import MAX_DIM


@dataclass(frozen=True)
class ClassificationResult:
    P: float
    innerProduct: float
    label: int
    shotsUsed: int = 0


def poly_feature_state(x, d: int) -> PureState:
    """Normalized ``d``-fold tensor power of ``x``."""
    x = np.asarray(x, dtype=float).ravel()
    if d < 1:
        raise InputError("degree must be >= 1")
    if x.shape[0] ** d > MAX_DIM:
        raise CapacityError(f"feature state of dimension {x.shape[0]}^{d} exceeds cap {MAX_DIM}")
    n = np.linalg.norm(x)
    if n == 0:
        raise InputError("feature vector is zero")
    return PureState(feature_map(x / n, KernelSpec("polynomial", d))[0])


def _features(X, spec: KernelSpec) -> np.ndarray:
    phi = feature_map(X, spec)
    if phi.shape[1] > MAX_DIM:
        raise CapacityError(f"feature dimension {phi.shape[1]} exceeds cap {MAX_DIM}")
    return phi


def build_u_tilde(model: SvmModel, training: TrainingSet, spec: KernelSpec = LINEAR) -> PureState:
    if model.alpha.shape[0] != training.M:
        raise InputError(f"model has {model.alpha.shape[0]} multipliers for {training.M} vectors")
    phi = _features(training.vectors, spec)
    M, F = phi.shape
    amp = np.zeros((M + 1, F))
    amp[0, 0] = model.b
    amp[1:] = model.alpha[:, None] * phi
    n_u = math.fsum([model.b**2, *((model.alpha**2) * np.sum(phi * phi, axis=1))])
    if n_u <= 0:
        raise DegenerateError("model with b = 0 and alpha = 0 has no hyperplane state")
    return PureState(amp.ravel() / math.sqrt(n_u), (M + 1, F))


def build_x_tilde(query, M: int, spec: KernelSpec = LINEAR) -> PureState:
    q = np.asarray(query, dtype=float).ravel()
    if not np.any(q != 0):
        raise InputError("query vector is zero")
    phi = _features(q, spec)[0]
    F = phi.shape[0]
    amp = np.zeros((M + 1, F))
    amp[0, 0] = 1.0
    amp[1:] = phi
    n_x = M * math.fsum(phi * phi) + 1.0
    return PureState(amp.ravel() / math.sqrt(n_x), (M + 1, F))


def swap_test(u: PureState, x: PureState, mode: str = "exact", shots: int = 1000, seed=None) -> ClassificationResult:
    """Ancilla interference between ``|u>`` and ``|x>``.

    Prepares ``(|0>|u> + |1>|x>)/sqrt 2`` and projects the ancilla on
    ``(|0> - |1>)/sqrt 2``. A result ``P < 1/2`` classifies as +1.
    """
    if u.dim != x.dim:
        raise InputError(f"state dimensions differ: {u.dim} vs {x.dim}")
    # correctly rounded overlap: symmetric in (u, x) and exactly 0 for orthogonal states
    terms = u.amplitudes.conj() * x.amplitudes
    ip_re, ip_im = math.fsum(terms.real), math.fsum(terms.imag)
    if abs(ip_im) > 1e-12:
        raise InvariantViolation(f"overlap has imaginary part {ip_im:.3e}; amplitudes should be real")
    P = (1.0 - ip_re) / 2.0
    psi = np.concatenate([u.amplitudes, x.amplitudes]) / math.sqrt(2)
    phi_anc = np.array([1.0, -1.0]) / math.sqrt(2)
    projected = phi_anc.conj() @ psi.reshape(2, -1)
    if abs(float(np.vdot(projected, projected).real) - P) > 1e-10:
        raise InvariantViolation("ancilla projection disagrees with the overlap expression")
    if mode == "exact":
        return ClassificationResult(P, ip_re, 1 if P < 0.5 else -1, 0)
    if mode != "sampled":
        raise InputError(f"mode must be exact or sampled, got {mode!r}")
    rng = np.random.default_rng(seed)
    p_hat = rng.binomial(shots, min(1.0, max(0.0, P))) / shots
    return ClassificationResult(p_hat, 1.0 - 2.0 * p_hat, 1 if p_hat < 0.5 else -1, shots)


def classify_quantum(model: SvmModel, training: TrainingSet, query, mode: str = "exact",
                     shots: int = 1000, seed=None, spec: KernelSpec = LINEAR) -> ClassificationResult:
    q = np.asarray(query, dtype=float).ravel()
    if q.shape[0] != training.N:
        raise InputError(f"query has dimension {q.shape[0]}, training data has {training.N}")
    u = build_u_tilde(model, training, spec)
    x = build_x_tilde(q, training.M, spec)
    return swap_test(u, x, mode, shots, seed)
