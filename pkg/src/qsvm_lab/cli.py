"""``qsvm-lab`` command line.

Exit codes: 0 ok, 2 input error, 3 configuration error, 4 numerical error.
Errors are reported on stderr as one line: ``qsvm-lab: <CODE> [<module>]: <text>``.
"""

from __future__ import annotations

import argparse
import sys
import traceback
from pathlib import Path

from .classical import KernelSpec
from .errors import EmptySolutionError, InputError, QsvmError
from .experiment import ExperimentConfig, emit_report, load_dataset, run_experiment, spectrum_summary


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def _t0(text: str):
    if text == "auto":
        return None
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--t0 must be a number or 'auto', got {text!r}") from None


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="CSV: N feature columns then a ±1 label")
    p.add_argument("--kernel", type=KernelSpec.parse, default=KernelSpec(), help="linear or poly:<d>")
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--eps-k", dest="eps_k", type=float, default=0.05)
    p.add_argument("--report", choices=["json", "csv", "text"], default="json")
    p.add_argument("--out", type=Path, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qsvm-lab", description="Quantum LS-SVM simulator with classical oracle checks")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="train classically and quantumly, classify queries, report")
    _common(run)
    run.add_argument("--t0", type=_t0, default=None, help="evolution time or 'auto'")
    run.add_argument("--register-bits", type=int, default=8)
    run.add_argument("--evolution", choices=["exact", "trotter"], default="exact")
    run.add_argument("--trotter-steps", type=int, default=64)
    run.add_argument("--mode", choices=["exact", "sampled"], default="exact")
    run.add_argument("--shots", type=int, default=1000)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--queries", default=None, help="CSV of N feature columns; defaults to the training vectors")
    run.add_argument("--trace-estimate", dest="trace_t", type=float, default=None, metavar="T")
    run.add_argument("--timing", action="store_true", help="include wall-clock timing (breaks byte determinism)")

    spec = sub.add_parser("spectrum", help="dump the F_hat spectrum and truncation error")
    _common(spec)
    return parser


def _provenance(exc: BaseException) -> str:
    tb = traceback.extract_tb(exc.__traceback__)
    return Path(tb[-1].filename).stem if tb else "cli"


def _write(data: bytes, out: Path | None) -> None:
    if out is None:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        out.write_bytes(data)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command == "spectrum":
            training = load_dataset(args.data)
            summary = spectrum_summary(training, args.gamma, args.eps_k, args.kernel)
            fmt = "text" if args.report == "csv" else args.report
            _write(emit_report(summary, fmt), args.out)
            return 0
        config = ExperimentConfig(
            data=args.data, kernel=args.kernel, gamma=args.gamma, epsK=args.eps_k, t0=args.t0,
            register_bits=args.register_bits, trotter_steps=args.trotter_steps, evolution=args.evolution,
            mode=args.mode, shots=args.shots, seed=args.seed, queries=args.queries,
            trace_t=args.trace_t, report=args.report, include_timing=args.timing,
        )
        report = run_experiment(config)
        _write(emit_report(report, args.report), args.out)
        return 0
    except QsvmError as exc:
        msg = " ".join(str(exc).split())
        if isinstance(exc, EmptySolutionError) and exc.spectrum is not None:
            msg += " spectrum=[" + ",".join(f"{v:.6g}" for v in exc.spectrum) + "]"
        print(f"qsvm-lab: {exc.code} [{_provenance(exc)}]: {msg}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"qsvm-lab: {InputError.code} [io]: {exc}", file=sys.stderr)
        return InputError.exit_code


if __name__ == "__main__":
    sys.exit(main())
