"""Phase estimation, eigenvalue filtering and controlled-rotation inversion.

Two simulation paths share the same circuit:

* exact evolution keeps a pure statevector over system ⊗ phase register
  (⊗ flag qubit after the rotation) and applies ``exp(-i A t)`` from the
  spectral decomposition;
* trotter evolution replaces every controlled power by swap-trick slices.
  The slices are channels, so the joint state is a density matrix stored as
  ``R x R`` operator blocks of the system, one per pair of register values.

Register value ``k`` decodes to the eigenvalue ``2 pi k / (2^r t0)`` with
two's-complement sign (``k >= 2^(r-1)`` is negative). Inversion uses the
decoded grid value, not the true eigenvalue.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .classical import LINEAR, KernelSpec, TrainingSet
from .core import HermitianOperator, PureState, evolution_unitary, hermitian_eig
from .errors import CapacityError, ConfigurationError, EmptySolutionError, InputError
from .hamiltonian import MAX_DIM, f_hat_matrix, slice_superoperators

MAX_CHANNEL_ENTRIES = 2**22
EMPTY_TOL = 1e-14
READOUT_REPORT_MIN = 1e-3


@dataclass(frozen=True)
class SolverConfig:
    gamma: float = 1.0
    epsK: float = 0.05
    t0: float | None = None
    register_bits: int = 8
    trotter_steps: int = 64
    evolution: str = "exact"
    mode: str = "exact"
    shots: int = 1000
    seed: int = 0
    C: float | None = None

    def __post_init__(self):
        if not self.gamma > 0:
            raise ConfigurationError(f"gamma must be positive, got {self.gamma!r}")
        if not 0 < self.epsK < 1:
            raise ConfigurationError(f"epsK must lie in (0, 1), got {self.epsK!r}")
        if self.t0 is not None and not self.t0 > 0:
            raise ConfigurationError(f"t0 must be positive, got {self.t0!r}")
        if self.register_bits < 1:
            raise ConfigurationError("register needs at least one bit")
        if self.trotter_steps < 1:
            raise ConfigurationError("trotter steps must be positive")
        if self.evolution not in ("exact", "trotter"):
            raise ConfigurationError(f"evolution must be exact or trotter, got {self.evolution!r}")
        if self.mode not in ("exact", "sampled"):
            raise ConfigurationError(f"mode must be exact or sampled, got {self.mode!r}")
        if self.shots < 1:
            raise ConfigurationError("shots must be positive")
        if self.C is not None and not self.C > 0:
            raise ConfigurationError(f"rotation constant C={self.C!r} must be positive")

    @property
    def kappa_eff(self) -> float:
        return 1.0 / self.epsK

    @property
    def rotation_constant(self) -> float:
        return self.epsK if self.C is None else self.C


@dataclass(frozen=True)
class TrotterEvolution:
    """Controlled powers built from swap-trick slices of ``F_hat``."""

    training: TrainingSet
    gamma: float
    steps: int
    spec: KernelSpec = LINEAR


@dataclass(frozen=True, eq=False)
class PhaseEstimate:
    """Output of phase estimation.

    ``state`` (exact path) is the pure state over system ⊗ register.
    ``blocks`` (trotter path) holds the joint density matrix as an array of
    shape ``(R, R, D, D)``; ``blocks[k, l]`` is the system operator paired
    with ``|k><l|`` on the register.
    """

    register_bits: int
    t0: float
    state: PureState | None = None
    blocks: np.ndarray | None = None
    unitaries: tuple = ()
    inverse_superops: tuple = ()

    @property
    def R(self) -> int:
        return 2**self.register_bits

    def readout_distribution(self) -> np.ndarray:
        if self.state is not None:
            D = self.state.dims[0]
            psi = self.state.amplitudes.reshape(D, self.R)
            return np.sum(np.abs(psi) ** 2, axis=0)
        diag = self.blocks[np.arange(self.R), np.arange(self.R)]
        return np.real(np.trace(diag, axis1=1, axis2=2))


@dataclass(frozen=True, eq=False)
class FilteredState:
    """Joint state after rotation and uncomputation, flag qubit last."""

    register_bits: int
    state: PureState | None = None
    success_block: np.ndarray | None = None  # trotter path: unnormalized system operator


@dataclass(frozen=True, eq=False)
class QuantumSolution:
    state: PureState
    successProbability: float
    retainedEigenvalues: list
    diagnostics: dict = field(default_factory=dict)


def decode_register(r: int, t0: float) -> np.ndarray:
    """Eigenvalue estimate for every register value, two's complement."""
    R = 2**r
    k = np.arange(R)
    signed = np.where(k >= R // 2, k - R, k)
    return 2 * np.pi * signed / (R * t0)


def auto_t0(spectrum) -> float:
    return math.pi / (1.05 * float(np.max(np.abs(spectrum))))


def check_decodable(spectrum, t0: float) -> None:
    top = float(np.max(np.abs(spectrum)))
    if t0 * top / (2 * np.pi) >= 0.5:
        raise ConfigurationError(
            f"t0={t0!r} aliases eigenvalue magnitude {top:.6g}: need t0*max|lambda|/(2 pi) < 1/2"
        )


def _check_resolution(epsK: float, r: int, t0: float) -> None:
    spacing = 2 * np.pi / (2**r * t0)
    if epsK < spacing:
        warnings.warn(
            f"register grid spacing {spacing:.3g} exceeds epsK={epsK:.3g}; the filter is under-resolved",
            RuntimeWarning,
            stacklevel=3,
        )


def _walsh_hadamard(psi: np.ndarray, r: int) -> np.ndarray:
    """H on every register qubit; register is the last axis of ``psi``."""
    lead = psi.shape[:-1]
    t = psi.reshape(*lead, *([2] * r))
    h = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    for ax in range(len(lead), len(lead) + r):
        t = np.moveaxis(np.tensordot(t, h, axes=([ax], [1])), -1, ax)
    return t.reshape(psi.shape)


def _bit_columns(R: int, j: int) -> np.ndarray:
    return np.flatnonzero((np.arange(R) >> j) & 1)


def phase_estimate(op, input: PureState, r: int, t0: float, evolution="exact",
                   check_decodable_bound: bool = True) -> PhaseEstimate:
    """Phase estimation with controlled powers ``exp(-i A t0 tau)``, ``tau < 2^r``.

    With ``evolution="exact"`` returns a pure joint state. Passing a
    :class:`TrotterEvolution` runs the channel version on ``F_hat`` instead;
    ``op`` must then be ``F_hat`` for the same training set.
    """
    if not isinstance(op, HermitianOperator):
        op = HermitianOperator(op)
    if input.dim != op.dim:
        raise InputError(f"input dimension {input.dim} != operator dimension {op.dim}")
    if r < 1:
        raise ConfigurationError("register needs at least one bit")
    w, _ = hermitian_eig(op)
    if check_decodable_bound:
        check_decodable(w, t0)
    R = 2**r
    D = op.dim
    if evolution == "exact":
        if D * R > MAX_DIM:
            raise CapacityError(f"system x register dimension {D * R} exceeds cap {MAX_DIM}")
        psi = np.repeat(input.amplitudes[:, None], R, axis=1) / math.sqrt(R)
        unitaries = []
        for j in range(r):
            U = evolution_unitary(op, t0 * 2**j)
            cols = _bit_columns(R, j)
            psi[:, cols] = U @ psi[:, cols]
            unitaries.append(U)
        # QFT with positive exponent: positive eigenvalues read out at k = lambda t0 R / 2pi
        psi = np.fft.ifft(psi, axis=1) * math.sqrt(R)
        return PhaseEstimate(r, t0, state=PureState(psi.ravel(), (D, R)), unitaries=tuple(unitaries))
    if isinstance(evolution, TrotterEvolution):
        return _phase_estimate_channel(op, input, r, t0, evolution)
    raise ConfigurationError(f"unknown evolution {evolution!r}")


def _bit_powers(superops: dict, steps: int, r: int) -> list[dict]:
    """Per-register-bit superoperators: slice map to the power ``2^j * steps``."""
    base = {key: np.linalg.matrix_power(S, steps) for key, S in superops.items()}
    out = [base]
    for _ in range(1, r):
        out.append({key: S @ S for key, S in out[-1].items()})
    return out


def _apply_controlled(V: np.ndarray, powers: list[dict], order) -> np.ndarray:
    R = V.shape[0]
    for j in order:
        ones = _bit_columns(R, j)
        zeros = np.setdiff1d(np.arange(R), ones)
        for (a, b), S in powers[j].items():
            rows = ones if a else zeros
            cols = ones if b else zeros
            sel = np.ix_(rows, cols)
            V[sel] = V[sel] @ S.T
    return V


def _phase_estimate_channel(op: HermitianOperator, input: PureState, r: int, t0: float,
                            evo: TrotterEvolution) -> PhaseEstimate:
    R = 2**r
    D = op.dim
    if D != evo.training.M + 1:
        raise InputError("trotter evolution requires the unpadded (M+1)-dimensional F_hat")
    if R * R * D * D > MAX_CHANNEL_ENTRIES:
        raise CapacityError(
            f"channel simulation needs {R * R * D * D} block entries (cap {MAX_CHANNEL_ENTRIES}); "
            "reduce register bits or M"
        )
    dt = t0 / evo.steps
    fwd = slice_superoperators(evo.training, evo.gamma, dt, evo.spec)
    inv = slice_superoperators(evo.training, evo.gamma, dt, evo.spec, inverse=True)
    rho0 = np.outer(input.amplitudes, input.amplitudes.conj()).ravel()
    V = np.broadcast_to(rho0 / R, (R, R, D * D)).copy()
    V = _apply_controlled(V, _bit_powers(fwd, evo.steps, r), range(r))
    V = np.fft.ifft(V, axis=0) * math.sqrt(R)
    V = np.fft.fft(V, axis=1) / math.sqrt(R)
    return PhaseEstimate(
        r, t0, blocks=V.reshape(R, R, D, D),
        inverse_superops=tuple(_bit_powers(inv, evo.steps, r)),
    )


def rotation_amplitudes(r: int, t0: float, epsK: float, C: float) -> np.ndarray:
    """Success amplitude ``C / lambda_k`` per register value, 0 where filtered."""
    lam = decode_register(r, t0)
    keep = np.abs(lam) >= epsK
    f = np.zeros_like(lam)
    f[keep] = C / lam[keep]
    return f


def invert_and_filter(pe: PhaseEstimate, epsK: float, C: float | None = None) -> FilteredState:
    """Controlled rotation on a flag qubit, then uncompute the phase register.

    Register values decoding below ``epsK`` in magnitude leave the flag in
    ``|0>`` (discarded); the others rotate it to amplitude ``C / lambda`` on
    ``|1>``.
    """
    C = epsK if C is None else C
    r, R = pe.register_bits, pe.R
    f = rotation_amplitudes(r, pe.t0, epsK, C)
    if not C > 0 or np.max(np.abs(f)) > 1.0 + 1e-12:
        raise ConfigurationError(
            f"rotation constant C={C!r} must be positive and at most the smallest retained |lambda|"
        )
    retained = pe.readout_distribution()[f != 0].sum()
    if retained < EMPTY_TOL:
        raise EmptySolutionError(f"all eigenvalue mass lies below epsK={epsK!r}")

    if pe.state is not None:
        D = pe.state.dims[0]
        psi = pe.state.amplitudes.reshape(D, R)
        branches = []
        for amp in (np.sqrt(np.clip(1.0 - f * f, 0.0, None)), f):
            b = psi * amp
            b = np.fft.fft(b, axis=1) / math.sqrt(R)
            for j in reversed(range(r)):
                cols = _bit_columns(R, j)
                b[:, cols] = pe.unitaries[j].conj().T @ b[:, cols]
            branches.append(_walsh_hadamard(b, r))
        joint = np.stack(branches, axis=-1)  # (D, R, flag)
        return FilteredState(r, state=PureState(joint.ravel(), (D, R, 2)))

    V = pe.blocks.reshape(R, R, -1) * np.outer(f, f)[:, :, None]
    V = np.fft.fft(V, axis=0) / math.sqrt(R)
    V = np.fft.ifft(V, axis=1) * math.sqrt(R)
    V = _apply_controlled(V, list(pe.inverse_superops), reversed(range(r)))
    D = pe.blocks.shape[-1]
    # <0| H^r on both sides: uniform average over all blocks
    success = V.sum(axis=(0, 1)).reshape(D, D) / R
    return FilteredState(r, success_block=success)


def post_select(filtered: FilteredState):
    """Condition on flag = 1 and register = 0.

    Returns ``(system_state, probability)``; for the trotter path the system
    state is a density matrix array (unnormalized probability removed).
    """
    if filtered.state is not None:
        D, R, _ = filtered.state.dims
        amp = filtered.state.amplitudes.reshape(D, R, 2)[:, 0, 1]
        p = float(np.vdot(amp, amp).real)
        if p < EMPTY_TOL:
            raise EmptySolutionError("post-selection has zero success probability")
        return PureState(amp / math.sqrt(p), (D,)), p
    rho = filtered.success_block
    p = float(np.trace(rho).real)
    if p < EMPTY_TOL:
        raise EmptySolutionError("post-selection has zero success probability")
    return rho / p, p


def solve_hermitian(op, rhs: PureState, epsK: float, r: int, t0: float,
                    C: float | None = None) -> tuple[PureState, float, PhaseEstimate]:
    """Exact-evolution solve of ``A x = rhs`` restricted to ``|lambda| >= epsK``."""
    pe = phase_estimate(op, rhs, r, t0)
    state, p = post_select(invert_and_filter(pe, epsK, C))
    return state, p, pe


def filtered_pseudoinverse_solution(op, rhs, epsK: float) -> np.ndarray:
    """Classical reference: spectral pseudo-inverse restricted to ``|lambda| >= epsK``."""
    A = op.entries if isinstance(op, HermitianOperator) else np.asarray(op)
    w, V = np.linalg.eigh(A)
    b = rhs.amplitudes if isinstance(rhs, PureState) else np.asarray(rhs)
    keep = np.abs(w) >= epsK
    coeff = (V[:, keep].conj().T @ b) / w[keep]
    return V[:, keep] @ coeff


def _pad(n: int) -> int:
    return 1 << max(0, (n - 1).bit_length())


def label_state(labels) -> PureState:
    """``(0, y) / sqrt(M)``: the normalized right-hand side."""
    y = np.asarray(labels, dtype=float).ravel()
    return PureState(np.concatenate([[0.0], y]) / math.sqrt(y.shape[0]))


def solve_qsvm(training: TrainingSet, labels, config: SolverConfig,
               spec: KernelSpec = LINEAR) -> QuantumSolution:
    """Quantum LS-SVM training: returns the post-selected ``|b, alpha>``."""
    y = training.labels if labels is None else np.asarray(labels, dtype=float)
    if y.shape[0] != training.M:
        raise InputError(f"{y.shape[0]} labels for {training.M} training vectors")
    M = training.M
    Fh = f_hat_matrix(training, config.gamma, spec)
    spectrum, _ = hermitian_eig(HermitianOperator(Fh, "F_hat"))
    t0 = auto_t0(spectrum) if config.t0 is None else config.t0
    check_decodable(spectrum, t0)
    r = config.register_bits
    _check_resolution(config.epsK, r, t0)
    C = config.rotation_constant
    ytil = label_state(y)
    diagnostics = {"t0": t0, "grid_spacing": 2 * np.pi / (2**r * t0), "C": C,
                   "f_hat_spectrum": sorted(spectrum.tolist(), reverse=True)}

    try:
        if config.evolution == "exact":
            D = _pad(M + 1)
            A = np.zeros((D, D))
            A[: M + 1, : M + 1] = Fh
            rhs = np.zeros(D)
            rhs[: M + 1] = ytil.amplitudes.real
            pe = phase_estimate(HermitianOperator(A, "F_hat"), PureState(rhs), r, t0)
            sys_state, p = post_select(invert_and_filter(pe, config.epsK, C))
            amps = sys_state.amplitudes
            leak = float(np.linalg.norm(amps[M + 1:]))
            if leak > 1e-9:
                raise EmptySolutionError(f"padding leaked amplitude {leak:.3e}")
            state = PureState.normalized(amps[: M + 1])
            diagnostics["padded_dim"] = D
        else:
            evo = TrotterEvolution(training, config.gamma, config.trotter_steps, spec)
            pe = phase_estimate(HermitianOperator(Fh, "F_hat"), ytil, r, t0, evolution=evo)
            rho, p = post_select(invert_and_filter(pe, config.epsK, C))
            rho = 0.5 * (rho + rho.conj().T)
            w, V = np.linalg.eigh(rho)
            v = V[:, -1]
            # a density matrix has no global phase; orient so that <y~|F_hat|x> > 0
            overlap = np.vdot(ytil.amplitudes, Fh @ v)
            v = v * (abs(overlap) / overlap if abs(overlap) > 0 else 1.0)
            state = PureState.normalized(v)
            diagnostics["purity"] = float(np.real(np.trace(rho @ rho)))
            diagnostics["density"] = rho
    except EmptySolutionError as exc:
        raise EmptySolutionError(str(exc), spectrum=sorted(spectrum.tolist(), reverse=True)) from None

    readout = pe.readout_distribution()
    lam = decode_register(r, t0)
    passed = np.abs(lam) >= config.epsK
    keep = passed & (readout >= READOUT_REPORT_MIN)
    retained = sorted(zip(lam[keep].tolist(), readout[keep].tolist()))
    diagnostics["retained_readout_mass"] = float(readout[passed].sum())
    diagnostics["exact_success_probability"] = p
    if config.mode == "sampled":
        rng = np.random.default_rng(config.seed)
        hits = int(rng.binomial(config.shots, min(1.0, p)))
        diagnostics["success_shots"] = hits
        p = hits / config.shots
    return QuantumSolution(state, p, retained, diagnostics)
