"""Canonical models: worked fixtures, constructed violations, random families.

The fast-cavity family is the package's standard nontrivial example: a
qubit exchanging excitations with a strongly damped cavity mode. Its slow
subspace is the qubit tensored with the empty mode, the k-scaled coupling
is the adjointed mode-lowering operator, and the reduced model is a qubit
with a dressed decay rate. All expected numbers for it are derived by the
dynamics oracle in the tests, not assumed.

``random_valid_family`` draws structurally valid families whose limit
dynamics decouples exactly, with all reduction pivots condition-screened so
randomized suites run at tight tolerances.
"""

from __future__ import annotations

import numpy as np

from .blockmat import condition_number, schur_complement
from .errors import SingularPivotError, StructureError
from .generator import (
    EXTERNAL,
    INTERNAL,
    ItoGeneratorMatrix,
    ScaledGeneratorFamily,
    SlhTriple,
    SubspaceDecomposition,
    extract_hamiltonian,
    from_slh,
    trivial_generator,
)
from .reductions import build_extended_generator

SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)  # |g><e|
SIGMA_PLUS = SIGMA_MINUS.conj().T
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


def lowering(levels: int) -> np.ndarray:
    """Truncated mode lowering operator a|l> = sqrt(l)|l-1>."""
    a = np.zeros((levels, levels), dtype=complex)
    for l in range(1, levels):
        a[l - 1, l] = np.sqrt(l)
    return a


def scalar_scattering(channel_unitary, d: int) -> np.ndarray:
    """Scattering block acting only on the channel index."""
    return np.kron(np.asarray(channel_unitary, dtype=complex), np.eye(d))


def swap_scattering_generator() -> ItoGeneratorMatrix:
    """Two trivial ports swapped into each other, second port internal.

    Feedback elimination turns this into a perfect passthrough.
    """
    N = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    return ItoGeneratorMatrix(
        np.zeros((1, 1)), np.zeros((1, 2)), np.zeros((2, 1)), N,
        (EXTERNAL, INTERNAL), validate=False,
    )


def amplitude_damping_generator(gamma: float = 1.0) -> ItoGeneratorMatrix:
    """Qubit decaying into a single port at rate gamma, basis (|g>, |e>)."""
    C = np.sqrt(gamma) * SIGMA_MINUS
    return from_slh(SlhTriple(np.eye(2), [C], np.zeros((2, 2))))


def ill_posed_loop_generator() -> ItoGeneratorMatrix:
    """Identity scattering declared internal: the loop pivot N_ii - I is zero."""
    return trivial_generator(2, 1, (INTERNAL,))


def flipped_m_generator(gamma: float = 1.0) -> ItoGeneratorMatrix:
    """Amplitude-damping generator with the sign of M flipped (HP-invalid)."""
    g = amplitude_damping_generator(gamma)
    return ItoGeneratorMatrix(g.K, g.L, -g.M, g.N, g.channel_roles, validate=False)


def _qubit_mode_operators(levels: int):
    a = lowering(levels)
    Iq, Im = np.eye(2), np.eye(levels)
    full = lambda q, m: np.kron(q, m)
    d = 2 * levels
    slow = np.zeros((d, 2), dtype=complex)
    slow[0, 0] = 1.0            # |g, 0>
    slow[levels, 1] = 1.0       # |e, 0>
    return a, Iq, Im, full, SubspaceDecomposition(slow)


def fast_cavity_family(levels: int = 4, kappa: float = 2.0, g: float = 0.5,
                       gamma: float = 0.4, delta: float = 0.0,
                       omega: float = 0.0) -> ScaledGeneratorFamily:
    """Qubit + fast damped cavity mode, two external ports.

    Port 1 carries the k-scaled cavity decay (coupling sqrt(kappa) a,
    entering adjointed), port 2 a direct qubit decay sqrt(gamma). The
    qubit-mode exchange of strength g sits in the k-linear Hamiltonian,
    delta detunes the occupied mode levels, omega detunes the qubit.
    """
    a, Iq, Im, full, decomp = _qubit_mode_operators(levels)
    d = 2 * levels
    F = [np.sqrt(kappa) * full(Iq, a.conj().T), np.zeros((d, d))]
    G = [np.zeros((d, d)), np.sqrt(gamma) * full(SIGMA_PLUS, Im)]
    H0 = 0.5 * omega * full(SIGMA_Z, Im)
    H1 = g * (full(SIGMA_PLUS, a) + full(SIGMA_MINUS, a.conj().T))
    H2 = delta * full(Iq, a.conj().T @ a)
    N = np.eye(2 * d)
    return ScaledGeneratorFamily.from_couplings(
        F, G, H0, H1, H2, N, decomp, (EXTERNAL, EXTERNAL)
    )


def fast_cavity_loop_family(levels: int = 4, kappa: float = 2.0, g: float = 0.5,
                            gamma: float = 0.4, kappa2: float = 1.0, mu: float = 0.3,
                            theta: float = np.pi / 3, delta: float = 0.25,
                            omega: float = 0.1) -> ScaledGeneratorFamily:
    """Fast cavity with a third, internal port closed through a beam splitter.

    The loop port carries both a second k-scaled cavity coupling and a
    direct qubit coupling, and the beam splitter of angle theta mixes it
    with the qubit port, so neither reduction order is trivial.
    """
    a, Iq, Im, full, decomp = _qubit_mode_operators(levels)
    d = 2 * levels
    F = [np.sqrt(kappa) * full(Iq, a.conj().T), np.zeros((d, d)),
         np.sqrt(kappa2) * full(Iq, a.conj().T)]
    G = [np.zeros((d, d)), np.sqrt(gamma) * full(SIGMA_PLUS, Im),
         np.sqrt(mu) * full(SIGMA_PLUS, Im)]
    H0 = 0.5 * omega * full(SIGMA_Z, Im)
    H1 = g * (full(SIGMA_PLUS, a) + full(SIGMA_MINUS, a.conj().T))
    H2 = delta * full(Iq, a.conj().T @ a)
    c, s = np.cos(theta), np.sin(theta)
    mix = np.array([[1, 0, 0], [0, c, s], [0, -s, c]], dtype=complex)
    N = scalar_scattering(mix, d)
    return ScaledGeneratorFamily.from_couplings(
        F, G, H0, H1, H2, N, decomp, (EXTERNAL, EXTERNAL, INTERNAL)
    )


def fast_decoupling_violation_family() -> ScaledGeneratorFamily:
    """Structurally valid family whose limit would pump a fast state.

    A slow-fast exchange term between the empty and the doubly occupied
    mode makes the fast row of the limit coupling nonzero, and a
    fast-to-fast lowering component on the qubit port makes the mixed limit
    scattering blocks nonzero, so adiabatic elimination must refuse. The
    Hamiltonian orders are recovered from (B, A, Y) and the family rebuilt,
    keeping the dissipation identities exact.
    """
    fam = fast_cavity_family(levels=3)
    d = fam.d                   # slow indices {0, 3}, fast {1, 2, 4, 5}
    H1 = np.array(extract_hamiltonian(fam.A))
    H1[0, 2] += 0.3             # |g,0><g,2| + h.c.
    H1[2, 0] += 0.3
    F = np.array(fam.F)
    F[1, d + 2] += 0.4          # |g,1><g,2| in the second channel block
    return ScaledGeneratorFamily.from_couplings(
        F, fam.G, extract_hamiltonian(fam.B), H1,
        extract_hamiltonian(fam.Y), fam.N, fam.decomp, fam.channel_roles,
    )


def kernel_condition_violation_family() -> ScaledGeneratorFamily:
    """Structurally valid family whose feedback-dressed fast block is singular.

    For a single internal loop of phase theta the dressing shifts the fast
    pivot by |phi|^2 / (1 - e^{-i theta}) = |phi|^2 (1 - i cot(theta/2)) / 2,
    whose real part exactly cancels the dissipative half; choosing the fast
    detuning to cancel the remaining imaginary part makes the dressed pivot
    vanish while the undressed one stays invertible. Both composition
    orders and the joint pivot become singular together.
    """
    theta = np.pi / 2
    phi, beta = 1.0, 1.0
    h2 = -0.5 * phi ** 2 / np.tan(theta / 2)
    decomp = SubspaceDecomposition.coordinate_split(3, 1)
    d = 3
    F_ext = np.zeros((d, d), dtype=complex)
    F_ext[2, 0] = beta          # slow -> second fast level, external port
    F_int = np.zeros((d, d), dtype=complex)
    F_int[1, 0] = phi           # slow -> first fast level, loop port
    G = [np.zeros((d, d)), np.zeros((d, d))]
    H2 = np.diag([0.0, h2, 0.3]).astype(complex)
    N = scalar_scattering(np.diag([1.0, np.exp(1j * theta)]), d)
    return ScaledGeneratorFamily.from_couplings(
        [F_ext, F_int], G, np.zeros((d, d)), np.zeros((d, d)), H2, N, decomp,
        (EXTERNAL, INTERNAL),
    )


def _random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def _random_hermitian(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * 0.5 * (z + z.conj().T)


def random_valid_family(rng: np.random.Generator, *, d_max: int = 6, fast_max: int = 3,
                        n_max: int = 4, require_internal: bool = True,
                        rotate_basis: bool = True, cond_cap: float = 1e4,
                        max_tries: int = 200) -> ScaledGeneratorFamily:
    """Draw a structurally valid family with exactly decoupling limit dynamics.

    The k-scaled coupling maps slow to fast only, the unscaled coupling has
    no slow-to-fast block, and the scattering acts on the channel index
    alone; under these the fast row and the mixed blocks of the limit
    coefficients vanish identically. Families whose reduction pivots are
    worse conditioned than ``cond_cap`` are redrawn, so downstream suites
    can assert tight tolerances.
    """
    for _ in range(max_tries):
        f = int(rng.integers(1, fast_max + 1))
        s = int(rng.integers(1, d_max - f + 1))
        d = s + f
        n = int(rng.integers(2 if require_internal else 1, n_max + 1))
        roles = [EXTERNAL] * n
        if require_internal:
            n_int = int(rng.integers(1, n))
            for j in rng.choice(n, size=n_int, replace=False):
                roles[j] = INTERNAL

        F_blocks, G_blocks = [], []
        for _ in range(n):
            Fj = np.zeros((d, d), dtype=complex)
            Fj[s:, :s] = (rng.standard_normal((f, s)) + 1j * rng.standard_normal((f, s))) / np.sqrt(d)
            F_blocks.append(Fj)
            Gj = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(d)
            Gj[:s, s:] = 0.0
            G_blocks.append(Gj)
        H0 = _random_hermitian(rng, d, 0.5)
        H1 = _random_hermitian(rng, d, 0.5)
        H1[:s, :s] = 0.0
        H2 = np.zeros((d, d), dtype=complex)
        H2[s:, s:] = _random_hermitian(rng, f, 0.7)
        N = scalar_scattering(_random_unitary(rng, n), d)

        if rotate_basis and rng.random() < 0.75:
            R = _random_unitary(rng, d)
            rot = lambda X: R @ X @ R.conj().T
            F_blocks = [rot(X) for X in F_blocks]
            G_blocks = [rot(X) for X in G_blocks]
            H0, H1, H2 = rot(H0), rot(H1), rot(H2)
            decomp = SubspaceDecomposition(R[:, :s], R[:, s:])
        else:
            decomp = SubspaceDecomposition.coordinate_split(d, s)

        try:
            fam = ScaledGeneratorFamily.from_couplings(
                F_blocks, G_blocks, H0, H1, H2, N, decomp, tuple(roles)
            )
        except StructureError:
            continue
        if _pivots_well_conditioned(fam, cond_cap):
            return fam
    raise RuntimeError(f"no valid family found in {max_tries} draws")


def _pivots_well_conditioned(fam: ScaledGeneratorFamily, cond_cap: float) -> bool:
    """Screen every pivot the reduction pipeline will have to invert."""
    try:
        ext = build_extended_generator(fam)
    except StructureError:
        return False
    checks = [ext.bom.block("fast", "fast")]
    if fam.internal_channels:
        checks.append(ext.bom.block("int", "int"))
        idx = np.concatenate([ext.bom.partition.rows(lab) for lab in ("fast", "int")])
        checks.append(ext.bom.matrix[np.ix_(idx, idx)])
        try:
            after_fast = schur_complement(ext.bom, "fast")
            checks.append(after_fast.block("int", "int"))
            after_int = schur_complement(ext.bom, "int")
            checks.append(after_int.block("fast", "fast"))
        except SingularPivotError:
            return False
    return all(condition_number(P) < cond_cap for P in checks)
