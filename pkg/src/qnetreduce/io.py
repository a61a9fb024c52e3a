"""Network spec files and machine-readable reports.

A spec file is JSON with a ``kind`` of "generator", "slh" or
"scaled_family". Complex matrices are nested arrays of [re, im] pairs;
channel rows (L, M, C, F, G) are stored as lists of n d x d blocks, the
scattering blocks (N, S) as single (nd) x (nd) matrices, and the slow
subspace as explicit orthonormal basis columns. Floats survive the JSON
round trip bit-exactly, so parse(emit(x)) == x.

Reports serialize with sorted keys; suppressing the timestamp (which also
drops the wall time) makes repeated runs byte-identical for golden-file
comparison. File writes go through a temp file and rename.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import SpecFormatError
from .generator import (
    ItoGeneratorMatrix,
    ScaledGeneratorFamily,
    SlhTriple,
    SubspaceDecomposition,
)
from .report import ReductionReport

SCHEMA_VERSION = "1"
KINDS = ("generator", "slh", "scaled_family")


def complex_to_json(arr) -> list:
    """Nested [re, im] pair encoding of a complex matrix."""
    a = np.asarray(arr, dtype=complex)
    return [[[float(x.real), float(x.imag)] for x in row] for row in a]


def json_to_complex(obj, name: str, shape: tuple[int, int] | None = None) -> np.ndarray:
    try:
        a = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as e:
        raise SpecFormatError(f"{name}: not a nested [re, im] array: {e}")
    if a.ndim != 3 or a.shape[2] != 2:
        raise SpecFormatError(f"{name}: expected rows of [re, im] pairs, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise SpecFormatError(f"{name}: non-finite entries")
    mat = a[:, :, 0] + 1j * a[:, :, 1]
    if shape is not None and mat.shape != shape:
        raise SpecFormatError(f"{name}: expected shape {shape}, got {mat.shape}")
    return mat


def _blocks_to_json(row_matrix: np.ndarray, d: int, n: int, axis: int) -> list:
    """Split a channel row (axis=1) or column (axis=0) into per-channel blocks."""
    out = []
    for j in range(n):
        if axis == 1:
            out.append(complex_to_json(row_matrix[:, j * d:(j + 1) * d]))
        else:
            out.append(complex_to_json(row_matrix[j * d:(j + 1) * d, :]))
    return out


def _json_to_blocks(obj, name: str, d: int, n: int, axis: int) -> np.ndarray:
    if not isinstance(obj, list) or len(obj) != n:
        raise SpecFormatError(f"{name}: expected a list of {n} blocks")
    blocks = [json_to_complex(b, f"{name}[{j}]", (d, d)) for j, b in enumerate(obj)]
    if not blocks:
        return np.zeros((d, 0) if axis == 1 else (0, d), dtype=complex)
    return np.hstack(blocks) if axis == 1 else np.vstack(blocks)


def _roles(obj, n: int) -> tuple[str, ...]:
    if not isinstance(obj, list) or len(obj) != n:
        raise SpecFormatError(f"channel_roles must list {n} entries")
    for r in obj:
        if r not in ("external", "internal"):
            raise SpecFormatError(f"invalid channel role {r!r}")
    return tuple(obj)


def generator_to_spec(g: ItoGeneratorMatrix) -> dict:
    d, n = g.d, g.n
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "generator",
        "dims": {"d": d, "n": n},
        "channel_roles": list(g.channel_roles),
        "K": complex_to_json(g.K),
        "L": _blocks_to_json(g.L, d, n, axis=1),
        "M": _blocks_to_json(g.M, d, n, axis=0),
        "N": complex_to_json(g.N),
    }


def spec_to_generator(obj: dict) -> ItoGeneratorMatrix:
    dims = obj.get("dims", {})
    d, n = int(dims.get("d", -1)), int(dims.get("n", -1))
    if d < 1 or n < 0:
        raise SpecFormatError(f"bad dims {dims}")
    return ItoGeneratorMatrix(
        json_to_complex(obj["K"], "K", (d, d)),
        _json_to_blocks(obj["L"], "L", d, n, axis=1),
        _json_to_blocks(obj["M"], "M", d, n, axis=0),
        json_to_complex(obj["N"], "N", (n * d, n * d)),
        _roles(obj["channel_roles"], n),
        validate=False,
    )


def slh_to_spec(t: SlhTriple, channel_roles=None) -> dict:
    d, n = t.d, t.n
    roles = list(channel_roles) if channel_roles is not None else ["external"] * n
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "slh",
        "dims": {"d": d, "n": n},
        "channel_roles": roles,
        "S": complex_to_json(t.S),
        "C": _blocks_to_json(t.C, d, n, axis=0),
        "H": complex_to_json(t.H),
    }


def spec_to_slh(obj: dict) -> tuple[SlhTriple, tuple[str, ...]]:
    """Parse an SLH spec; invariants (S unitary, H Hermitian) are checked here."""
    dims = obj.get("dims", {})
    d, n = int(dims.get("d", -1)), int(dims.get("n", -1))
    if d < 1 or n < 0:
        raise SpecFormatError(f"bad dims {dims}")
    roles = _roles(obj["channel_roles"], n)
    triple = SlhTriple(
        json_to_complex(obj["S"], "S", (n * d, n * d)),
        _json_to_blocks(obj["C"], "C", d, n, axis=0),
        json_to_complex(obj["H"], "H", (d, d)),
    )
    return triple, roles


def family_to_spec(fam: ScaledGeneratorFamily) -> dict:
    d, n = fam.d, fam.n
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "scaled_family",
        "dims": {"d": d, "n": n, "slow_dim": fam.decomp.slow_dim},
        "channel_roles": list(fam.channel_roles),
        "Y": complex_to_json(fam.Y),
        "A": complex_to_json(fam.A),
        "B": complex_to_json(fam.B),
        "F": _blocks_to_json(fam.F, d, n, axis=1),
        "G": _blocks_to_json(fam.G, d, n, axis=1),
        "N": complex_to_json(fam.N),
        "slow_basis": complex_to_json(fam.decomp.slow_basis),
    }


def spec_to_family(obj: dict) -> ScaledGeneratorFamily:
    """Parse a family spec; the slow basis is Gram-checked, structure is not."""
    dims = obj.get("dims", {})
    d, n = int(dims.get("d", -1)), int(dims.get("n", -1))
    s = int(dims.get("slow_dim", -1))
    if d < 1 or n < 0 or not 1 <= s < d:
        raise SpecFormatError(f"bad dims {dims}")
    basis = json_to_complex(obj["slow_basis"], "slow_basis", (d, s))
    decomp = SubspaceDecomposition(basis)
    return ScaledGeneratorFamily(
        json_to_complex(obj["Y"], "Y", (d, d)),
        json_to_complex(obj["A"], "A", (d, d)),
        json_to_complex(obj["B"], "B", (d, d)),
        _json_to_blocks(obj["F"], "F", d, n, axis=1),
        _json_to_blocks(obj["G"], "G", d, n, axis=1),
        json_to_complex(obj["N"], "N", (n * d, n * d)),
        decomp,
        _roles(obj["channel_roles"], n),
        validate=False,
    )


def object_to_spec(obj) -> dict:
    if isinstance(obj, ItoGeneratorMatrix):
        return generator_to_spec(obj)
    if isinstance(obj, ScaledGeneratorFamily):
        return family_to_spec(obj)
    if isinstance(obj, SlhTriple):
        return slh_to_spec(obj)
    raise TypeError(f"no spec encoding for {type(obj).__name__}")


def load_spec_file(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise SpecFormatError(f"cannot read {path}: {e}")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise SpecFormatError(f"{path}: invalid JSON: {e}")
    if not isinstance(obj, dict):
        raise SpecFormatError(f"{path}: top level must be an object")
    if obj.get("schema_version") != SCHEMA_VERSION:
        raise SpecFormatError(
            f"{path}: unsupported schema_version {obj.get('schema_version')!r}"
        )
    if obj.get("kind") not in KINDS:
        raise SpecFormatError(f"{path}: unknown kind {obj.get('kind')!r}")
    return obj


def dumps_canonical(obj: dict) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def atomic_write_text(path, text: str) -> None:
    """Write via a same-directory temp file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_spec_file(path, obj) -> None:
    atomic_write_text(path, dumps_canonical(object_to_spec(obj)))


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def report_to_dict(report: ReductionReport, *, timestamp: bool = True,
                   tolerance: float | None = None, extra: dict | None = None) -> dict:
    out = {
        "tool_version": __version__,
        "operation": report.operation,
        "input": report.input_summary,
        "passed": report.passed,
        "checks": [
            {"name": c.name, "residual": c.residual, "threshold": c.threshold,
             "passed": c.passed}
            for c in report.checks
        ],
        "notes": list(report.notes),
    }
    if tolerance is not None:
        out["tolerance"] = tolerance
    if timestamp:
        out["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
        if report.wall_time_s is not None:
            out["wall_time_s"] = report.wall_time_s
    if extra:
        out.update(extra)
    return out


def write_report_file(path, report: ReductionReport, *, timestamp: bool = True,
                      tolerance: float | None = None, extra: dict | None = None) -> None:
    atomic_write_text(
        path, dumps_canonical(report_to_dict(report, timestamp=timestamp,
                                             tolerance=tolerance, extra=extra))
    )
