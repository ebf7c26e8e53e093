"""Exact simulator of the quantum least-squares SVM pipeline, checked against a classical LS-SVM."""

__version__ = "0.1.0"

from .classical import (  # noqa: E402
    KernelMatrix,
    KernelSpec,
    LSSystem,
    SvmModel,
    TrainingSet,
    build_kernel,
    build_ls_system,
    classify_classical,
    kernel_eigensystem,
    low_rank_inverse,
    solve_ls,
    truncation_error,
)
from .classifier import classify_quantum, swap_test  # noqa: E402
from .core import DensityMatrix, HermitianOperator, PureState  # noqa: E402
from .qls import SolverConfig, solve_qsvm  # noqa: E402

__all__ = [
    "DensityMatrix",
    "HermitianOperator",
    "KernelMatrix",
    "KernelSpec",
    "LSSystem",
    "PureState",
    "SolverConfig",
    "SvmModel",
    "TrainingSet",
    "build_kernel",
    "build_ls_system",
    "classify_classical",
    "classify_quantum",
    "kernel_eigensystem",
    "low_rank_inverse",
    "solve_ls",
    "solve_qsvm",
    "swap_test",
    "truncation_error",
]
