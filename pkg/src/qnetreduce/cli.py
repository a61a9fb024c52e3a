"""Command line front end.

Subcommands: validate, feedback, adiabatic, commute, converge. Commands
read a network spec file, run the corresponding pipeline and emit a
machine-readable report (and, for reductions, the reduced generator spec).

Exit codes: 0 pass, 1 parse/IO or usage error, 2 validation failure,
3 ill-posed feedback loop, 4 structural or adiabatic precondition failure.

Summaries go to stdout, diagnostics to stderr. Tolerance comes from --tol,
else the QNETREDUCE_TOL environment variable, else the library default.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .dynamics import DensityMatrix, convergence_study, error_ratios
from .errors import (
    FastDecouplingError,
    HpValidationError,
    IllPosedNetworkError,
    QnetReduceError,
    SingularPivotError,
    SpecFormatError,
    StructureError,
)
from .generator import (
    DEFAULT_TOL,
    INTERNAL,
    EXTERNAL,
    from_slh,
    instantiate,
    validate_fast_decoupling,
    validate_hp,
    validate_structure,
)
from .io import (
    file_sha256,
    json_to_complex,
    load_spec_file,
    spec_to_family,
    spec_to_generator,
    spec_to_slh,
    write_report_file,
    write_spec_file,
)
from .reductions import (
    adiabatic_eliminate,
    check_commutativity,
    feedback_eliminate,
)
from .report import ReductionReport

EXIT_OK = 0
EXIT_IO = 1
EXIT_VALIDATION = 2
EXIT_FEEDBACK = 3
EXIT_STRUCTURE = 4

ENV_TOL = "QNETREDUCE_TOL"


def _diag(msg: str) -> None:
    print(msg, file=sys.stderr)


def _tolerance(args) -> float:
    if args.tol is not None:
        return args.tol
    env = os.environ.get(ENV_TOL)
    if env:
        try:
            return float(env)
        except ValueError:
            raise SpecFormatError(f"{ENV_TOL} must be a float, got {env!r}")
    return DEFAULT_TOL


def _input_summary(path, obj: dict) -> dict:
    dims = obj.get("dims", {})
    return {
        "file": Path(path).name,
        "sha256": file_sha256(path),
        "kind": obj.get("kind"),
        "dims": dims,
        "channel_roles": obj.get("channel_roles", []),
    }


def _report_path(out_path) -> Path:
    p = Path(out_path)
    return p.with_name(p.stem + ".report.json")


def _emit_report(args, report: ReductionReport, *, tolerance: float,
                 path=None, extra: dict | None = None) -> None:
    print(report.summary())
    target = path if path is not None else args.out
    if target:
        write_report_file(target, report, timestamp=not args.no_timestamp,
                          tolerance=tolerance, extra=extra)
        print(f"report written to {target}")


def _parse_roles_override(spec_roles, override: str | None, n: int):
    if override is None:
        return tuple(spec_roles)
    try:
        idx = {int(x) for x in override.split(",") if x.strip() != ""}
    except ValueError:
        raise SpecFormatError(f"--internal must be a comma-separated index list, got {override!r}")
    bad = [i for i in idx if not 0 <= i < n]
    if bad:
        raise SpecFormatError(f"--internal indices out of range 0..{n - 1}: {bad}")
    return tuple(INTERNAL if j in idx else EXTERNAL for j in range(n))


def cmd_validate(args) -> int:
    spec = load_spec_file(args.path)
    tol = _tolerance(args)
    rep = ReductionReport("validate", _input_summary(args.path, spec))
    try:
        if spec["kind"] == "generator":
            g = spec_to_generator(spec)
            rep.extend(validate_hp(g, tol), prefix="hp.")
        elif spec["kind"] == "slh":
            triple, roles = spec_to_slh(spec)
            g = from_slh(triple, roles, tol=tol)
            rep.extend(validate_hp(g, tol), prefix="hp.")
        else:
            fam = spec_to_family(spec)
            rep.extend(validate_structure(fam, tol), prefix="structure.")
            if rep.passed:
                rep.extend(validate_fast_decoupling(fam, tol), prefix="fast_decoupling.")
    except (ValueError, HpValidationError) as e:
        _diag(f"validation failed: {e}")
        rep.notes.append(str(e))
        _emit_report(args, rep, tolerance=tol)
        return EXIT_VALIDATION
    _emit_report(args, rep, tolerance=tol)
    return EXIT_OK if rep.passed else EXIT_VALIDATION


def _load_generator_for_feedback(args, spec):
    if spec["kind"] == "generator":
        return spec_to_generator(spec)
    if spec["kind"] == "scaled_family":
        if args.k is None:
            raise SpecFormatError("a scaled_family spec needs --k to instantiate")
        fam = spec_to_family(spec)
        return instantiate(fam, args.k)
    raise SpecFormatError(f"kind {spec['kind']!r} is not supported by this command")


def cmd_feedback(args) -> int:
    spec = load_spec_file(args.path)
    tol = _tolerance(args)
    try:
        g = _load_generator_for_feedback(args, spec)
        g = g.with_roles(_parse_roles_override(g.channel_roles, args.internal, g.n))
        hp = validate_hp(g, tol)
        if not hp.passed:
            _diag("input generator is HP-invalid:\n" + hp.summary())
            return EXIT_VALIDATION
        out, rep = feedback_eliminate(g, tol=tol, return_report=True)
    except (ValueError, HpValidationError) as e:
        _diag(f"validation failed: {e}")
        return EXIT_VALIDATION
    except IllPosedNetworkError as e:
        _diag(f"ill-posed feedback loop: {e}")
        return EXIT_FEEDBACK
    rep.input_summary = _input_summary(args.path, spec)
    extra = None
    if args.out:
        write_spec_file(args.out, out)
        print(f"reduced generator written to {args.out}")
        extra = {"output_file": Path(args.out).name}
    _emit_report(args, rep, tolerance=tol,
                 path=_report_path(args.out) if args.out else None, extra=extra)
    return EXIT_OK


def cmd_adiabatic(args) -> int:
    spec = load_spec_file(args.path)
    tol = _tolerance(args)
    if spec["kind"] != "scaled_family":
        raise SpecFormatError("adiabatic elimination needs a scaled_family spec")
    try:
        fam = spec_to_family(spec)
    except ValueError as e:
        _diag(f"validation failed: {e}")
        return EXIT_VALIDATION
    try:
        out, rep = adiabatic_eliminate(fam, tol=tol, return_report=True)
    except (FastDecouplingError, StructureError) as e:
        _diag(f"adiabatic precondition failed: {e}")
        if e.report is not None:
            for c in e.report.failed_checks():
                _diag(f"  {c.name}: residual={c.residual:.6e} threshold={c.threshold:.6e}")
        return EXIT_STRUCTURE
    rep.input_summary = _input_summary(args.path, spec)
    extra = None
    if args.out:
        write_spec_file(args.out, out)
        print(f"reduced generator written to {args.out}")
        extra = {"output_file": Path(args.out).name}
    _emit_report(args, rep, tolerance=tol,
                 path=_report_path(args.out) if args.out else None, extra=extra)
    return EXIT_OK


def cmd_commute(args) -> int:
    spec = load_spec_file(args.path)
    tol = _tolerance(args)
    if spec["kind"] != "scaled_family":
        raise SpecFormatError("the commutativity check needs a scaled_family spec")
    try:
        fam = spec_to_family(spec)
    except ValueError as e:
        _diag(f"validation failed: {e}")
        return EXIT_VALIDATION
    rep = check_commutativity(fam, tol=tol)
    rep.input_summary = _input_summary(args.path, spec)
    _emit_report(args, rep, tolerance=tol)
    if any("undefined" in note for note in rep.notes):
        _diag("one or more reduction orders are undefined; see report notes")
        return EXIT_STRUCTURE
    return EXIT_OK if rep.passed else EXIT_VALIDATION


def _parse_k_list(text: str) -> list[float]:
    try:
        ks = [float(x) for x in text.split(",") if x.strip() != ""]
    except ValueError:
        raise SpecFormatError(f"--k must be a comma-separated float list, got {text!r}")
    if not ks or any(k <= 0 for k in ks):
        raise SpecFormatError("--k values must be positive")
    return ks


def _load_rho0(args, slow_dim: int) -> DensityMatrix:
    if args.rho0 is None:
        return DensityMatrix.maximally_mixed(slow_dim)
    spec = load_spec_file_raw(args.rho0)
    mat = json_to_complex(spec.get("matrix"), "matrix", (slow_dim, slow_dim))
    return DensityMatrix(mat)


def load_spec_file_raw(path) -> dict:
    """JSON object without network-spec header checks (for state files)."""
    import json

    try:
        obj = json.loads(Path(path).read_text())
    except OSError as e:
        raise SpecFormatError(f"cannot read {path}: {e}")
    except ValueError as e:
        raise SpecFormatError(f"{path}: invalid JSON: {e}")
    if not isinstance(obj, dict):
        raise SpecFormatError(f"{path}: top level must be an object")
    return obj


def cmd_converge(args) -> int:
    spec = load_spec_file(args.path)
    tol = _tolerance(args)
    if spec["kind"] != "scaled_family":
        raise SpecFormatError("the convergence study needs a scaled_family spec")
    ks = _parse_k_list(args.k)
    try:
        fam = spec_to_family(spec)
        rho0 = _load_rho0(args, int(spec["dims"]["slow_dim"]))
        rows = convergence_study(fam, rho0, args.t, ks, tol=tol)
    except ValueError as e:
        _diag(f"validation failed: {e}")
        return EXIT_VALIDATION
    except (FastDecouplingError, StructureError) as e:
        _diag(f"adiabatic precondition failed: {e}")
        return EXIT_STRUCTURE

    print(f"{'k':>10}  {'error':>14}")
    for row in rows:
        print(f"{row.k:>10.4f}  {row.error:>14.6e}")
    ratios = error_ratios(rows)
    if ratios:
        print("successive ratios: " + ", ".join(f"{r:.3f}" for r in ratios))

    rep = ReductionReport("converge", _input_summary(args.path, spec))
    monotone = None
    if len(rows) >= 2:
        monotone = all(a.error > b.error for a, b in zip(rows, rows[1:]))
        print(f"monotone decreasing: {'yes' if monotone else 'NO'}")
    else:
        rep.notes.append("single k value; monotonicity check skipped")
        print("single k value; monotonicity check skipped")
    extra = {
        "t": args.t,
        "rows": [[row.k, row.error] for row in rows],
        "ratios": ratios,
        "monotone_decreasing": monotone,
    }
    if args.out:
        write_report_file(args.out, rep, timestamp=not args.no_timestamp,
                          tolerance=tol, extra=extra)
        print(f"report written to {args.out}")
    return EXIT_OK if monotone is not False else EXIT_VALIDATION


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("path", help="network spec file (JSON)")
    p.add_argument("--out", help="output file path")
    p.add_argument("--tol", type=float, default=None,
                   help=f"validation tolerance (default {DEFAULT_TOL}, env {ENV_TOL})")
    p.add_argument("--no-timestamp", action="store_true",
                   help="omit timestamp and wall time from reports (for golden files)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qnetreduce",
        description="Model reduction of quantum feedback networks by Schur complementation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a spec's identities / structure")
    _add_common(p)
    p.set_defaults(handler=cmd_validate)

    p = sub.add_parser("feedback", help="eliminate internal channels")
    _add_common(p)
    p.add_argument("--internal", default=None,
                   help="comma-separated 0-based channel indices to treat as internal")
    p.add_argument("--k", type=float, default=None,
                   help="coupling strength (required for scaled_family input)")
    p.set_defaults(handler=cmd_feedback)

    p = sub.add_parser("adiabatic", help="eliminate fast degrees of freedom")
    _add_common(p)
    p.set_defaults(handler=cmd_adiabatic)

    p = sub.add_parser("commute", help="compare both reduction orders and the joint complement")
    _add_common(p)
    p.set_defaults(handler=cmd_commute)

    p = sub.add_parser("converge", help="k-sweep of full vs reduced slow dynamics")
    _add_common(p)
    p.add_argument("--k", default="2,4,8,16,32", help="comma-separated k values")
    p.add_argument("--t", type=float, default=1.0, help="evolution time")
    p.add_argument("--rho0", default=None,
                   help="JSON file with a slow-space density matrix (default: maximally mixed)")
    p.set_defaults(handler=cmd_converge)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except SpecFormatError as e:
        _diag(f"error: {e}")
        return EXIT_IO
    except OSError as e:
        _diag(f"io error: {e}")
        return EXIT_IO
    except IllPosedNetworkError as e:
        _diag(f"ill-posed feedback loop: {e}")
        return EXIT_FEEDBACK
    except (StructureError, SingularPivotError) as e:
        _diag(f"structural failure: {e}")
        return EXIT_STRUCTURE
    except QnetReduceError as e:
        _diag(f"error: {e}")
        return EXIT_VALIDATION


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
