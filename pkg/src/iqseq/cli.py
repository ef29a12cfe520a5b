"""Command-line interface: ``iqseq {validate,decompose,resources,simulate,verify,examples}``.

JSON goes to stdout, diagnostics to stderr.  Exit codes: 0 success,
2 malformed input, 3 invariant or precondition failure, 4 verification failure.
"""
from __future__ import annotations

import argparse
import os
import sys
from typing import Sequence

import numpy as np

from . import io
from .decompose import (
    InvariantError,
    PreconditionError,
    min_ancilla,
    n_step,
    povm_two_step,
    product_outcomes,
    two_step,
    two_step_reduced,
)
from .generators import EXAMPLES, example_postproc, gen_example, qubit4_closed_form
from .linalg import DEFAULT_TOL
from .quantum import (
    ROOT,
    AdaptiveSequence,
    Instrument,
    Povm,
    StochasticMatrix,
    induced_povm,
    luders,
    povm_as_instrument,
    validate,
    validate_state,
)
from .resources import m_values, resource_report
from .runtime import run, verify_equivalence

EXIT_OK, EXIT_MALFORMED, EXIT_INVARIANT, EXIT_VERIFY = 0, 2, 3, 4


class CliError(Exception):
    def __init__(self, code: int, message: str):
        self.code = code
        super().__init__(message)


def default_tol() -> float:
    value = os.environ.get("IQSEQ_TOL")
    if value is None:
        return DEFAULT_TOL
    try:
        return float(value)
    except ValueError:
        raise CliError(EXIT_MALFORMED, f"IQSEQ_TOL is not a number: {value!r}") from None


def _read(path: str):
    try:
        text = sys.stdin.read() if path == "-" else open(path, encoding="utf-8").read()
    except OSError as exc:
        raise CliError(EXIT_MALFORMED, f"{path}: {exc.strerror}") from None
    try:
        return io.from_json(io.loads(text))
    except io.MalformedError as exc:
        raise CliError(EXIT_MALFORMED, f"{path}: malformed at {exc}") from None
    except ValueError as exc:
        raise CliError(EXIT_MALFORMED, f"{path}: {exc}") from None


def _emit(data: dict) -> None:
    sys.stdout.write(io.dumps(data) + "\n")


def _as_instrument(obj, path: str) -> Instrument:
    if isinstance(obj, Instrument):
        return obj
    if isinstance(obj, Povm):
        return luders(obj)
    raise CliError(EXIT_MALFORMED, f"{path}: expected an instrument or a POVM")


def _as_sequence(obj, path: str) -> AdaptiveSequence:
    if isinstance(obj, AdaptiveSequence):
        return obj
    if isinstance(obj, Instrument):
        return AdaptiveSequence.single(obj)
    raise CliError(EXIT_MALFORMED, f"{path}: expected an adaptive sequence")


def _as_stochastic(obj, path: str) -> StochasticMatrix:
    if not isinstance(obj, StochasticMatrix):
        raise CliError(EXIT_MALFORMED, f"{path}: expected a stochastic matrix")
    return obj


def _check(obj, what: str, tol: float) -> None:
    diags = validate(obj, tol)
    if diags:
        for d in diags:
            print(f"{what}: {d}", file=sys.stderr)
        raise CliError(EXIT_INVARIANT, f"{what} violates its invariants")


def cmd_validate(args) -> int:
    tol = args.tol if args.tol is not None else default_tol()
    obj = _read(args.file)
    diags = validate_state(obj, tol) if isinstance(obj, np.ndarray) else validate(obj, tol)
    for d in diags:
        print(str(d), file=sys.stderr)
    _emit({"valid": not diags,
           "diagnostics": [{"invariant": d.invariant, "residual": d.residual, "where": d.where}
                           for d in diags]})
    return EXIT_OK if not diags else EXIT_INVARIANT


def _povm_sequence(a: Povm, nu: StochasticMatrix, tol: float) -> tuple[AdaptiveSequence, Instrument]:
    dec = povm_two_step(a, nu, tol)
    second = {j: povm_as_instrument(c, tol) for j, c in dec.conditional.items()}
    return AdaptiveSequence(({ROOT: dec.initial}, second)), povm_as_instrument(a, tol)


def cmd_decompose(args) -> int:
    tol = args.tol if args.tol is not None else default_tol()
    obj = _read(args.file)
    nu = _as_stochastic(_read(args.postproc), args.postproc) if args.postproc else None
    chain = [_as_stochastic(_read(p), p) for p in (args.chain or [])]
    m = None
    try:
        if args.mode == "povm":
            a = obj if isinstance(obj, Povm) else induced_povm(_as_instrument(obj, args.file))
            _check(a, "POVM", tol)
            nu = nu or StochasticMatrix.identity(a.outcomes)
            asi, target = _povm_sequence(a, nu, tol)
        else:
            target = _as_instrument(obj, args.file)
            _check(target, "instrument", tol)
            if args.mode in ("two-step", "two-step-reduced"):
                nu = nu or StochasticMatrix.identity(target.outcomes)
                build = two_step if args.mode == "two-step" else two_step_reduced
                asi = build(target, nu, tol=tol).as_sequence()
                m = m_values(target, nu, tol)
            elif args.mode == "n-step":
                asi = n_step(target, chain, tol)
            elif args.mode == "product":
                asi = product_outcomes(target, tol)
            else:
                asi = min_ancilla(target, tol)
    except (PreconditionError, InvariantError) as exc:
        raise CliError(EXIT_INVARIANT, str(exc)) from None
    except ValueError as exc:
        raise CliError(EXIT_INVARIANT, str(exc)) from None
    report = verify_equivalence(asi, target, tol)
    if not report.passed:
        print(io.dumps(report.to_dict()), file=sys.stderr)
        raise CliError(EXIT_VERIFY, f"recomposition failed: max distance {report.max_distance:.3e}")
    _emit({**io.header("decomposition"), "mode": args.mode, "asi": io.asi_to_json(asi),
           "resources": resource_report(asi, m, tol).to_dict(), "verification": report.to_dict()})
    return EXIT_OK


def cmd_resources(args) -> int:
    tol = args.tol if args.tol is not None else default_tol()
    asi = _as_sequence(_read(args.file), args.file)
    _check(asi, "sequence", tol)
    _emit(resource_report(asi, tol=tol).to_dict())
    return EXIT_OK


def _state(spec: str, dim: int) -> np.ndarray:
    if spec == "mixed":
        return np.eye(dim, dtype=complex) / dim
    if spec == "zero":
        rho = np.zeros((dim, dim), dtype=complex)
        rho[0, 0] = 1.0
        return rho
    obj = _read(spec)
    if not isinstance(obj, np.ndarray):
        raise CliError(EXIT_MALFORMED, f"{spec}: expected a state")
    return obj


def cmd_simulate(args) -> int:
    tol = default_tol()
    asi = _as_sequence(_read(args.file), args.file)
    _check(asi, "sequence", tol)
    rho = _state(args.state, asi.dims[0])
    diags = validate_state(rho, tol)
    if rho.shape != (asi.dims[0],) * 2:
        raise CliError(EXIT_INVARIANT, f"state dimension {rho.shape[0]} does not match {asi.dims[0]}")
    if diags:
        for d in diags:
            print(f"state: {d}", file=sys.stderr)
        raise CliError(EXIT_INVARIANT, "state violates its invariants")
    if args.shots < 1:
        raise CliError(EXIT_MALFORMED, "--shots must be positive")
    try:
        stats, _ = run(asi, rho, args.shots, args.seed, args.record_intermediate)
    except ValueError as exc:
        raise CliError(EXIT_INVARIANT, str(exc)) from None
    if stats.renormalized:
        print("warning: outcome probabilities were renormalised", file=sys.stderr)
    _emit(stats.to_dict())
    return EXIT_OK


def cmd_verify(args) -> int:
    tol = args.tol if args.tol is not None else default_tol()
    asi = _as_sequence(_read(args.file), args.file)
    target_obj = _read(args.target)
    if isinstance(target_obj, Povm) and asi.dims[-1] == 1:
        target = povm_as_instrument(target_obj, tol)
    else:
        target = _as_instrument(target_obj, args.target)
    _check(asi, "sequence", tol)
    try:
        report = verify_equivalence(asi, target, tol)
    except ValueError as exc:
        raise CliError(EXIT_INVARIANT, str(exc)) from None
    _emit(report.to_dict())
    return EXIT_OK if report.passed else EXIT_VERIFY


def cmd_examples(args) -> int:
    try:
        if args.postproc:
            _emit(io.to_json(example_postproc(args.name)))
            return EXIT_OK
        obj = gen_example(args.name, args.alpha, args.beta, args.eta)
    except ValueError as exc:
        raise CliError(EXIT_INVARIANT, str(exc)) from None
    data = io.to_json(obj)
    if args.closed_form:
        if not args.name.startswith("qubit4"):
            raise CliError(EXIT_INVARIANT, "closed forms exist only for the qubit4 family")
        kw = {k: v for k, v in (("alpha", args.alpha), ("beta", args.beta), ("eta", args.eta))
              if v is not None}
        cf = qubit4_closed_form(**kw)
        data["closed_form"] = {"step1": {j: io.matrix_to_json(k) for j, k in cf.step1.items()},
                               "step2": {j: io.matrix_to_json(k) for j, k in cf.step2.items()}}
    _emit(data)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="iqseq", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="check the invariants of an object file")
    s.add_argument("file", nargs="?", default="-")
    s.add_argument("--tol", type=float)
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("decompose", help="decompose an instrument or POVM into a sequence")
    s.add_argument("file", nargs="?", default="-")
    s.add_argument("--mode", required=True,
                   choices=["two-step", "two-step-reduced", "n-step", "product", "min-ancilla", "povm"])
    s.add_argument("--postproc", help="stochastic matrix file for the two-step and povm modes")
    s.add_argument("--chain", nargs="+", help="stochastic matrix files for n-step mode")
    s.add_argument("--tol", type=float)
    s.set_defaults(func=cmd_decompose)

    s = sub.add_parser("resources", help="report ancilla resources of a sequence")
    s.add_argument("file", nargs="?", default="-")
    s.add_argument("--tol", type=float)
    s.set_defaults(func=cmd_resources)

    s = sub.add_parser("simulate", help="sample trajectories of a sequence")
    s.add_argument("file", nargs="?", default="-")
    s.add_argument("--state", required=True, help="state file, or 'mixed' / 'zero'")
    s.add_argument("--shots", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--record-intermediate", action="store_true")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("verify", help="compare a sequence with a target instrument")
    s.add_argument("file", nargs="?", default="-")
    s.add_argument("--target", required=True)
    s.add_argument("--tol", type=float)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("examples", help="print a built-in example")
    s.add_argument("name", choices=EXAMPLES)
    s.add_argument("--alpha", type=float)
    s.add_argument("--beta", type=float)
    s.add_argument("--eta", type=float)
    s.add_argument("--postproc", action="store_true", help="print the example's outcome merge")
    s.add_argument("--closed-form", action="store_true",
                   help="attach the expected product-sequence Kraus operators (qubit4 only)")
    s.set_defaults(func=cmd_examples)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_MALFORMED if exc.code else EXIT_OK
    try:
        return args.func(args)
    except CliError as exc:
        print(f"iqseq: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
