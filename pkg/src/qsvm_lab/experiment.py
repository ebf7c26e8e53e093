"""Dataset ingestion, end-to-end experiment orchestration and report serialization."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .classical import (
    LINEAR,
    KernelSpec,
    TrainingSet,
    SvmModel,
    build_kernel,
    build_ls_system,
    classify_classical,
    decision_value,
    solve_ls,
    truncation_error,
)
from .classifier import classify_quantum
from .core import HermitianOperator, PureState, fidelity, hermitian_eig
from .errors import CapacityError, InputError
from .estimators import trace_estimate
from .hamiltonian import MAX_DIM, f_hat_matrix
from .qls import (
    MAX_CHANNEL_ENTRIES,
    SolverConfig,
    _pad,
    auto_t0,
    filtered_pseudoinverse_solution,
    label_state,
    solve_qsvm,
)

SIG_DIGITS = 12
# roundoff-level magnitudes are written as zero so reports do not depend on BLAS summation order
ZERO_FLOOR = 1e-14
QUERY_HEADER = ["query_id", "classical_label", "quantum_label", "P", "agreement"]


def _resolve(path) -> Path:
    p = Path(path)
    if p.exists():
        return p
    bundled = resources.files("qsvm_lab") / "datasets" / f"{p.stem}.csv"
    if bundled.is_file():
        return Path(str(bundled))
    raise InputError(f"dataset {str(path)!r} not found")


def _read_rows(path) -> list[tuple[int, list[float]]]:
    p = _resolve(path)
    rows = []
    with open(p, newline="") as fh:
        for lineno, raw in enumerate(csv.reader(fh), start=1):
            if not raw or all(not c.strip() for c in raw) or raw[0].lstrip().startswith("#"):
                continue
            try:
                rows.append((lineno, [float(c) for c in raw]))
            except ValueError:
                if not rows and lineno == 1:
                    continue  # header row
                raise InputError(f"{p.name}:{lineno}: malformed row {','.join(raw)!r}") from None
    if not rows:
        raise InputError(f"{p.name}: no rows")
    width = len(rows[0][1])
    for lineno, vals in rows:
        if len(vals) != width:
            raise InputError(f"{p.name}:{lineno}: expected {width} columns, found {len(vals)}")
    return rows


def load_dataset(path) -> TrainingSet:
    """Read ``N`` feature columns followed by a ``±1`` label column."""
    rows = _read_rows(path)
    if len(rows[0][1]) < 2:
        raise InputError("dataset needs at least one feature column and a label column")
    for lineno, vals in rows:
        if vals[-1] not in (1.0, -1.0):
            raise InputError(f"line {lineno}: label {vals[-1]:g} is not -1 or +1")
        if not any(v != 0.0 for v in vals[:-1]):
            raise InputError(f"line {lineno}: feature vector is all zero")
    data = np.array([vals for _, vals in rows])
    return TrainingSet(data[:, :-1], data[:, -1])


def load_queries(path, N: int) -> np.ndarray:
    rows = _read_rows(path)
    if len(rows[0][1]) != N:
        raise InputError(f"queries have {len(rows[0][1])} columns, training data has {N} features")
    return np.array([vals for _, vals in rows])


@dataclass(frozen=True)
class ExperimentConfig:
    data: str
    kernel: KernelSpec = LINEAR
    gamma: float = 1.0
    epsK: float = 0.05
    t0: float | None = None
    register_bits: int = 8
    trotter_steps: int = 64
    evolution: str = "exact"
    mode: str = "exact"
    shots: int = 1000
    seed: int = 0
    queries: str | None = None
    trace_t: float | None = None
    report: str = "json"
    include_timing: bool = False

    def solver_config(self, seed: int) -> SolverConfig:
        return SolverConfig(self.gamma, self.epsK, self.t0, self.register_bits, self.trotter_steps,
                            self.evolution, self.mode, self.shots, seed)

    def echo(self) -> dict:
        return {
            "data": Path(self.data).name,
            "kernel": str(self.kernel),
            "gamma": self.gamma,
            "eps_k": self.epsK,
            "t0": "auto" if self.t0 is None else self.t0,
            "register_bits": self.register_bits,
            "trotter_steps": self.trotter_steps,
            "evolution": self.evolution,
            "mode": self.mode,
            "shots": self.shots,
            "seed": self.seed,
            "queries": None if self.queries is None else Path(self.queries).name,
            "trace_estimate_t": self.trace_t,
        }


@dataclass
class RunReport:
    config: dict
    classical: dict
    quantum: dict
    spectrum: dict
    truncation_error: float
    queries: list
    trace_estimate: dict | None = None
    timing: dict | None = None
    version: str = field(default=__version__)

    def to_dict(self) -> dict:
        out = {
            "version": self.version,
            "config": self.config,
            "classical": self.classical,
            "quantum": self.quantum,
            "spectrum": self.spectrum,
            "truncation_error": self.truncation_error,
            "queries": self.queries,
        }
        if self.trace_estimate is not None:
            out["trace_estimate"] = self.trace_estimate
        if self.timing is not None:
            out["timing"] = self.timing
        return out


def _child_seeds(seed: int, n: int) -> list[int]:
    return [int(c.generate_state(1)[0]) for c in np.random.SeedSequence(seed).spawn(n)]


def check_capacity(config: ExperimentConfig, training: TrainingSet) -> None:
    M = training.M
    R = 2**config.register_bits
    if config.evolution == "exact":
        total = _pad(M + 1) * R
        if total > MAX_DIM:
            raise CapacityError(f"simulated dimension {total} exceeds {MAX_DIM}; lower --register-bits")
    else:
        total = (R * (M + 1)) ** 2
        if total > MAX_CHANNEL_ENTRIES:
            raise CapacityError(
                f"trotter simulation needs {total} density entries (cap {MAX_CHANNEL_ENTRIES}); "
                "lower --register-bits"
            )
    feat = training.N**config.kernel.d
    if (M + 1) * feat > MAX_DIM:
        raise CapacityError(f"classification state dimension {(M + 1) * feat} exceeds {MAX_DIM}")


def spectrum_summary(training: TrainingSet, gamma: float, epsK: float, spec: KernelSpec = LINEAR) -> dict:
    Fh = f_hat_matrix(training, gamma, spec)
    w, _ = hermitian_eig(HermitianOperator(Fh, "F_hat"))
    w = np.sort(w)[::-1]
    K = build_kernel(training, spec)
    kw = np.sort(np.linalg.eigvalsh(K.normalized))[::-1]
    absw = np.abs(w)
    return {
        "f_hat_eigenvalues": w.tolist(),
        "retained": (absw >= epsK).tolist(),
        "eps_k": epsK,
        "kappa_eff": 1.0 / epsK,
        "condition_number": float(absw.max() / absw.min()) if absw.min() > 0 else math.inf,
        "negative_eigenvalues": int(np.sum(w < 0)),
        "kernel_hat_eigenvalues": kw.tolist(),
        "truncation_error": truncation_error(K, epsK),
        "auto_t0": auto_t0(w),
    }


def run_experiment(config: ExperimentConfig) -> RunReport:
    t_start = time.perf_counter()
    training = load_dataset(config.data)
    queries = training.vectors if config.queries is None else load_queries(config.queries, training.N)
    check_capacity(config, training)
    seeds = _child_seeds(config.seed, 2 + len(queries))
    spec = config.kernel

    K = build_kernel(training, spec)
    system = build_ls_system(K, config.gamma, training.labels)
    model = solve_ls(system)
    t_classical = time.perf_counter()

    solution = solve_qsvm(training, None, config.solver_config(seeds[0]), spec)
    t_quantum = time.perf_counter()

    Fh = f_hat_matrix(training, config.gamma, spec)
    ytil = label_state(training.labels)
    classical_state = PureState.normalized(model.params)
    retained_ref = PureState.normalized(filtered_pseudoinverse_solution(Fh, ytil, config.epsK))
    qstate = solution.state
    amps = qstate.amplitudes.real
    # rescale the unit quantum state to the classical norm to get a residual in F-units
    sign = 1.0 if amps @ model.params >= 0 else -1.0
    scaled = sign * math.sqrt(model.normC) * amps
    residual = float(np.linalg.norm(system.F @ scaled - system.rhs))

    spectrum = spectrum_summary(training, config.gamma, config.epsK, spec)
    trunc = spectrum.pop("truncation_error")
    spectrum["readout"] = [[lam, w] for lam, w in solution.retainedEigenvalues]

    qmodel = SvmModel.from_params(amps)
    rows = []
    for i, q in enumerate(queries):
        c_label = classify_classical(model, training, spec, q)
        res = classify_quantum(qmodel, training, q, config.mode, config.shots, seeds[2 + i], spec)
        rows.append({
            "query_id": i,
            "classical_label": c_label,
            "quantum_label": res.label,
            "P": res.P,
            "agreement": c_label == res.label,
            "decision_value": decision_value(model, training, spec, q),
            "inner_product": res.innerProduct,
        })

    trace = None
    if config.trace_t is not None:
        est = trace_estimate(training, config.trace_t, config.mode, config.shots, seeds[1], spec)
        trace = {
            "t": est.t,
            "probability_one": est.probabilityOne,
            "estimated_trace": est.estimatedTrace,
            "true_trace": est.trueTrace,
            "exact_probability": est.exactProbability,
        }

    diag = solution.diagnostics
    quantum = {
        "amplitudes": amps.tolist(),
        "fidelity_to_classical": fidelity(qstate, classical_state),
        "fidelity_to_retained_classical": fidelity(qstate, retained_ref),
        "success_probability": solution.successProbability,
        "exact_success_probability": diag["exact_success_probability"],
        "post_selection_repetitions": 1.0 / diag["exact_success_probability"],
        "t0": diag["t0"],
        "grid_spacing": diag["grid_spacing"],
        "rotation_constant": diag["C"],
        "retained_readout_mass": diag["retained_readout_mass"],
        "residual": residual,
    }
    if "purity" in diag:
        quantum["purity"] = diag["purity"]
    if "success_shots" in diag:
        quantum["success_shots"] = diag["success_shots"]

    timing = None
    if config.include_timing:
        t_end = time.perf_counter()
        timing = {"classical_s": t_classical - t_start, "quantum_s": t_quantum - t_classical,
                  "total_s": t_end - t_start}
    return RunReport(
        config=config.echo(),
        classical={"b": model.b, "alpha": model.alpha.tolist(), "normC": model.normC},
        quantum=quantum,
        spectrum=spectrum,
        truncation_error=trunc,
        queries=rows,
        trace_estimate=trace,
        timing=timing,
    )


def _round(obj):
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(f"{float(obj):.{SIG_DIGITS}g}")
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return 0.0 if abs(x) < ZERO_FLOOR else x
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return f"{x:.{SIG_DIGITS}g}"
    return str(x)


def _text(d: dict, indent: int = 0) -> list[str]:
    lines = []
    pad = "  " * indent
    for k, v in d.items():
        if isinstance(v, dict):
            lines.append(f"{pad}{k}:")
            lines.extend(_text(v, indent + 1))
        elif isinstance(v, list) and v and isinstance(v[0], dict):
            lines.append(f"{pad}{k}:")
            for row in v:
                lines.append(pad + "  - " + ", ".join(f"{rk}={_fmt(rv)}" for rk, rv in row.items()))
        elif isinstance(v, list):
            lines.append(f"{pad}{k}: [" + ", ".join(_fmt(x) if not isinstance(x, list) else
                                                      "(" + ", ".join(_fmt(y) for y in x) + ")" for x in v) + "]")
        else:
            lines.append(f"{pad}{k}: {_fmt(v)}")
    return lines


def emit_report(report, format: str = "json") -> bytes:
    """Deterministic serialization; floats carry 12 significant digits."""
    data = _round(report.to_dict() if isinstance(report, RunReport) else report)
    if format == "json":
        return (json.dumps(data, indent=2, allow_nan=False) + "\n").encode()
    if format == "csv":
        if "queries" not in data:
            raise InputError("csv output needs a query table")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(QUERY_HEADER)
        for row in data["queries"]:
            w.writerow([_fmt(row[k]) for k in QUERY_HEADER])
        return buf.getvalue().encode()
    if format == "text":
        return ("\n".join(_text(data)) + "\n").encode()
    raise InputError(f"unknown report format {format!r}")
