"""Kernel trace estimation from the norm Hamiltonian ``sum_j |x_j| |j><j| ⊗ sigma_x``."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .classical import LINEAR, KernelSpec, TrainingSet
from .core import HermitianOperator, PureState, exact_evolve
from .errors import InputError

SMALL_ANGLE = 0.3


@dataclass(frozen=True)
class TraceEstimate:
    probabilityOne: float
    estimatedTrace: float
    t: float
    mode: str
    shots: int
    seed: int | None
    exactProbability: float
    trueTrace: float

    @property
    def bias(self) -> float:
        return self.estimatedTrace - self.trueTrace


def norm_hamiltonian(norms) -> HermitianOperator:
    sx = np.array([[0.0, 1.0], [1.0, 0.0]])
    return HermitianOperator(np.kron(np.diag(norms), sx), "H_tr", (len(norms), 2))


def trace_estimate(training: TrainingSet, t: float, mode: str = "exact", shots: int = 10000,
                   seed: int | None = None, spec: KernelSpec = LINEAR) -> TraceEstimate:
    """Estimate ``tr K`` from the ancilla-flip probability after time ``t``.

    The estimator inverts the leading-order relation ``p ≈ tr K t^2 / M``.
    """
    if not t > 0:
        raise InputError(f"evolution time must be positive, got {t!r}")
    norms = training.norms ** spec.d
    M = training.M
    if norms.max() * t > SMALL_ANGLE:
        warnings.warn(
            f"max |x_j| t = {norms.max() * t:.3g} exceeds {SMALL_ANGLE}; leading-order estimate is biased",
            RuntimeWarning,
            stacklevel=2,
        )
    start = np.zeros((M, 2))
    start[:, 0] = 1.0 / math.sqrt(M)
    psi = exact_evolve(norm_hamiltonian(norms), t, PureState(start.ravel(), (M, 2)))
    amp = psi.amplitudes.reshape(M, 2)
    p_exact = math.fsum(np.abs(amp[:, 1]) ** 2)
    if mode == "exact":
        p = p_exact
    elif mode == "sampled":
        rng = np.random.default_rng(seed)
        p = rng.binomial(shots, min(1.0, p_exact)) / shots
    else:
        raise InputError(f"mode must be exact or sampled, got {mode!r}")
    true_trace = math.fsum(norms**2)
    return TraceEstimate(p, M * p / t**2, float(t), mode, shots if mode == "sampled" else 0,
                         seed, p_exact, true_trace)
