"""Structured pass/fail records for validators and reductions."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np


@dataclass
class CheckResult:
    """One named residual compared against its threshold."""

    name: str
    residual: float
    threshold: float
    passed: bool


@dataclass
class ReductionReport:
    """Record of what an operation checked and produced.

    ``checks`` holds every residual with its threshold so a failed
    precondition is always attributable to a specific number.
    ``outputs`` maps names to produced objects (kept in memory only;
    file serialization references output files instead).
    """

    operation: str
    input_summary: dict = field(default_factory=dict)
    checks: list[CheckResult] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    outputs: dict = field(default_factory=dict)
    wall_time_s: float | None = None

    def add_check(self, name: str, residual: float, threshold: float) -> bool:
        residual = float(residual)
        ok = bool(residual <= threshold)
        self.checks.append(CheckResult(name, residual, float(threshold), ok))
        return ok

    def extend(self, other: "ReductionReport", prefix: str = "") -> None:
        """Fold another report's checks and notes into this one."""
        for c in other.checks:
            self.checks.append(CheckResult(prefix + c.name, c.residual, c.threshold, c.passed))
        for n in other.notes:
            self.notes.append(prefix + n)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed_checks(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]

    @property
    def residuals(self) -> dict[str, float]:
        return {c.name: c.residual for c in self.checks}

    def summary(self) -> str:
        lines = [f"{self.operation}: {'PASS' if self.passed else 'FAIL'}"]
        for c in self.checks:
            lines.append(
                f"  [{'ok' if c.passed else 'FAIL'}] {c.name}: "
                f"residual={c.residual:.6e} threshold={c.threshold:.6e}"
            )
        for n in self.notes:
            lines.append(f"  note: {n}")
        return "\n".join(lines)


def sha256_of_arrays(*arrays: np.ndarray) -> str:
    """Deterministic content hash of a sequence of arrays."""
    h = hashlib.sha256()
    for a in arrays:
        arr = np.ascontiguousarray(a)
        h.update(str(arr.shape).encode())
        h.update(arr.tobytes())
    return h.hexdigest()
