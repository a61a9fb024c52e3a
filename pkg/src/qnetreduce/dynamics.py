"""Master-equation oracle for generator matrices.

Builds the vectorized Lindblad generator induced by a generator matrix,
propagates density matrices by dense matrix exponential, and runs the
k-sweep that compares full slow-subspace dynamics against the reduced
model. The mapping from the right-coupling row to jump operators (adjoint
per channel) and the Hamiltonian sign are locked by the amplitude-damping
and pure-Hamiltonian closed-form tests.
"""

from __future__ import annotations

from typing import Iterable, NamedTuple

import numpy as np
import scipy.linalg

from .errors import HpValidationError, PropagationAccuracyError
from .generator import (
    DEFAULT_TOL,
    ItoGeneratorMatrix,
    ScaledGeneratorFamily,
    extract_hamiltonian,
    instantiate,
    validate_hp,
)
from .blockmat import as_complex_matrix
from .reductions import adiabatic_eliminate


def vec(rho: np.ndarray) -> np.ndarray:
    """Column-stack a matrix."""
    return np.asarray(rho, dtype=complex).reshape(-1, order="F")


def unvec(v: np.ndarray, d: int) -> np.ndarray:
    return np.asarray(v, dtype=complex).reshape((d, d), order="F")


class DensityMatrix:
    """Validated quantum state: Hermitian, unit trace, positive to tolerance."""

    def __init__(self, matrix, *, atol_herm: float = 1e-9,
                 atol_trace: float = 1e-12, atol_eig: float = 1e-10):
        rho = as_complex_matrix(matrix, "rho")
        if rho.shape[0] != rho.shape[1]:
            raise ValueError(f"density matrix must be square, got {rho.shape}")
        herm = np.linalg.norm(rho - rho.conj().T)
        if herm > atol_herm * max(1.0, np.linalg.norm(rho)):
            raise ValueError(f"not Hermitian (residual {herm:.3e})")
        drift = abs(np.trace(rho) - 1.0)
        if drift > atol_trace:
            raise ValueError(f"trace deviates from 1 by {drift:.3e}")
        lo = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min())
        if lo < -atol_eig:
            raise ValueError(f"negative eigenvalue {lo:.3e}")
        rho.flags.writeable = False
        self.matrix = rho

    @property
    def d(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def pure(cls, state: Iterable[complex]) -> "DensityMatrix":
        """Projector onto a (normalized) state vector."""
        psi = np.asarray(list(state), dtype=complex)
        nrm = np.linalg.norm(psi)
        if nrm == 0:
            raise ValueError("zero state vector")
        psi = psi / nrm
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def maximally_mixed(cls, d: int) -> "DensityMatrix":
        return cls(np.eye(d) / d)


class Superoperator:
    """Linear map on column-vectorized density matrices.

    Trace preservation (the vectorized identity is a left null vector) is
    checked at construction.
    """

    def __init__(self, matrix, *, atol_trace: float = 1e-10):
        S = as_complex_matrix(matrix, "superoperator")
        dsq = S.shape[0]
        d = int(round(np.sqrt(dsq)))
        if S.shape != (dsq, dsq) or d * d != dsq:
            raise ValueError(f"superoperator must be d^2 x d^2, got {S.shape}")
        leak = np.linalg.norm(vec(np.eye(d)).conj() @ S)
        if leak > atol_trace * max(1.0, np.linalg.norm(S)):
            raise ValueError(f"trace preservation violated (residual {leak:.3e})")
        S.flags.writeable = False
        self.matrix = S
        self.d = d


def lindblad_generator(g: ItoGeneratorMatrix, *, tol: float = DEFAULT_TOL) -> Superoperator:
    """Vectorized generator of the induced master equation.

    With H = (i/2)(K - K*) and jump operators c_j the adjoints of the
    coupling blocks, builds the generator of

        drho/dt = -i[H, rho] + sum_j (c_j rho c_j* - {c_j* c_j, rho}/2)

    acting on column-stacked density matrices. Rejects HP-invalid input.
    """
    rep = validate_hp(g, tol=tol)
    if not rep.passed:
        raise HpValidationError(
            "refusing to build dynamics for an HP-invalid generator:\n" + rep.summary(),
            report=rep,
        )
    d = g.d
    eye = np.eye(d)
    H = extract_hamiltonian(g.K)
    S = -1j * (np.kron(eye, H) - np.kron(H.T, eye))
    for j in range(g.n):
        c = g.L_block(j).conj().T
        cdc = c.conj().T @ c
        S += np.kron(c.conj(), c)
        S -= 0.5 * (np.kron(eye, cdc) + np.kron(cdc.T, eye))
    return Superoperator(S)


def propagate(sop: Superoperator, rho0: DensityMatrix, t: float) -> DensityMatrix:
    """exp(t * sop) applied to rho0, re-validated as a state.

    The Hermitian part is kept; the trace is never renormalized, a drift
    beyond 1e-8 is an accuracy failure and raises.
    """
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    if rho0.d != sop.d:
        raise ValueError(f"state dimension {rho0.d} does not match superoperator {sop.d}")
    U = scipy.linalg.expm(t * sop.matrix)
    out = unvec(U @ vec(rho0.matrix), sop.d)
    out = 0.5 * (out + out.conj().T)
    drift = abs(np.trace(out) - 1.0)
    if drift > 1e-8:
        raise PropagationAccuracyError(f"trace drifted by {drift:.3e} during propagation")
    return DensityMatrix(out, atol_trace=1e-8, atol_eig=1e-8)


def _half_trace_norm(delta: np.ndarray) -> float:
    """Half the trace norm of a Hermitian matrix via its eigenvalues."""
    return 0.5 * float(np.abs(np.linalg.eigvalsh(delta)).sum())


def trace_distance(a, b) -> float:
    """State-discrimination distance, half the trace norm of the difference."""
    A = a.matrix if isinstance(a, DensityMatrix) else as_complex_matrix(a, "a")
    B = b.matrix if isinstance(b, DensityMatrix) else as_complex_matrix(b, "b")
    if A.shape != B.shape:
        raise ValueError(f"dimension mismatch: {A.shape} vs {B.shape}")
    return _half_trace_norm(A - B)


class ConvergenceRow(NamedTuple):
    k: float
    error: float


def convergence_study(fam: ScaledGeneratorFamily, rho0_slow: DensityMatrix,
                      t: float, k_values, *, tol: float = DEFAULT_TOL) -> list[ConvergenceRow]:
    """Slow-subspace error of the full dynamics against the reduced model.

    For each k the slow initial state is embedded in the full space,
    propagated under the instantiated generator, compressed back to the
    slow basis and compared (half trace norm) against propagation under the
    reduced generator. Rows are returned in ascending k.
    """
    decomp = fam.decomp
    if rho0_slow.d != decomp.slow_dim:
        raise ValueError(
            f"initial state dimension {rho0_slow.d} does not match slow dimension "
            f"{decomp.slow_dim}"
        )
    reduced = adiabatic_eliminate(fam, tol=tol)
    rho_ref = propagate(lindblad_generator(reduced, tol=tol), rho0_slow, t).matrix

    Vs = decomp.slow_basis
    rows = []
    for k in sorted(float(k) for k in k_values):
        g = instantiate(fam, k, tol=tol)
        sop = lindblad_generator(g, tol=tol)
        embedded = DensityMatrix(Vs @ rho0_slow.matrix @ Vs.conj().T)
        rho_t = propagate(sop, embedded, t)
        compressed = Vs.conj().T @ rho_t.matrix @ Vs
        rows.append(ConvergenceRow(k, _half_trace_norm(compressed - rho_ref)))
    return rows


def error_ratios(rows: list[ConvergenceRow]) -> list[float]:
    """Successive error ratios of a sweep; empty when any error vanishes."""
    out = []
    for prev, cur in zip(rows, rows[1:]):
        if cur.error == 0.0:
            return []
        out.append(prev.error / cur.error)
    return out
