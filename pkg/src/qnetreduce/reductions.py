"""Model reduction of generator matrices by Schur complementation.

Two operations act on a common extended generator:

* feedback elimination removes internal channels in the zero-delay limit by
  complementing the internal scattering block N_ii - I;
* adiabatic elimination removes fast degrees of freedom by complementing
  the fast block Y_ff of the extended generator and compressing to the slow
  subspace.

Both composition orders are computed as nested complements of the same
extended matrix and cross-checked against their operational two-step
counterparts; :func:`check_commutativity` compares both orders with the
one-shot complement over the joint pivot.
"""

from __future__ import annotations

import time

import numpy as np

from .blockmat import (
    COND_LIMIT,
    BlockOperatorMatrix,
    BlockPartition,
    condition_number,
    schur_complement,
)
from .errors import (
    FastDecouplingError,
    HpValidationError,
    IllPosedNetworkError,
    KernelConditionError,
    PathMismatchError,
    QnetReduceError,
    SingularPivotError,
    StructureError,
)
from .generator import (
    DEFAULT_TOL,
    EXTERNAL,
    FamilyBlocks,
    ItoGeneratorMatrix,
    ScaledGeneratorFamily,
    instantiate,
    kron_channels,
    validate_fast_decoupling,
    validate_hp,
    validate_structure,
)
from .report import ReductionReport

#: Two algebraically identical computation paths must agree this closely.
PATH_TOL = 1e-10


def _rel_dev(X: np.ndarray, Y: np.ndarray) -> float:
    return float(np.linalg.norm(X - Y)
                 / max(1.0, np.linalg.norm(X), np.linalg.norm(Y)))


def _finish(out, rep, t0, return_report):
    rep.wall_time_s = time.perf_counter() - t0
    return (out, rep) if return_report else out


def _generator_from_blocks(mat: np.ndarray, sys_rows: np.ndarray, chan_rows: np.ndarray,
                           d: int, roles, rep: ReductionReport,
                           tol: float) -> ItoGeneratorMatrix:
    """Assemble and HP-check a generator from rows/cols of a reduced matrix."""
    K = mat[np.ix_(sys_rows, sys_rows)]
    L = mat[np.ix_(sys_rows, chan_rows)]
    M = mat[np.ix_(chan_rows, sys_rows)]
    N = mat[np.ix_(chan_rows, chan_rows)] + np.eye(len(chan_rows))
    out = ItoGeneratorMatrix(K, L, M, N, roles, validate=False)
    hp = validate_hp(out, tol)
    rep.extend(hp, prefix="hp.")
    if not hp.passed:
        raise HpValidationError(
            "reduced generator violates the HP identities:\n" + hp.summary(), report=rep
        )
    return out


def feedback_eliminate(g: ItoGeneratorMatrix, *, tol: float = DEFAULT_TOL,
                       cond_limit: float = COND_LIMIT, return_report: bool = False):
    """Eliminate the internal channels in the zero-delay limit.

    Schur complement of [[K, L], [M, N - I]] with respect to the internal
    block of N - I. The output lives on the external channels only and is
    HP-checked. With no internal channels the input is returned unchanged.
    """
    t0 = time.perf_counter()
    rep = ReductionReport("feedback_eliminate", g.fingerprint())
    if g.n_internal == 0:
        rep.notes.append("no internal channels; generator returned unchanged")
        rep.outputs["generator"] = g
        return _finish(g, rep, t0, return_report)

    bom = g.to_block_matrix()
    try:
        red = schur_complement(bom, "int", cond_limit=cond_limit)
    except SingularPivotError as e:
        raise IllPosedNetworkError(
            f"internal feedback loop is ill-posed: {e}", cond=e.cond
        ) from e
    roles = tuple(EXTERNAL for _ in g.external_channels)
    out = _generator_from_blocks(
        red.matrix, red.partition.rows("sys"), red.partition.rows("ext"),
        g.d, roles, rep, tol,
    )
    rep.outputs["generator"] = out
    return _finish(out, rep, t0, return_report)


class ExtendedGeneratorMatrix:
    """Common 3x3-block carrier for both reductions.

    Rows and columns are the full initial space, the fast coordinates and
    the channel block (whose indices carry the external/internal split):

        [[B,     A_sf,  G   ],
         [A_f,   Y_ff,  F_f ],
         [-NG*, -NF_f*, N - I]]

    where the fast row holds the fast-basis compressions A_f and F_f of A
    and F, and the (sys, fast) entry embeds the slow-rows block of A.
    """

    def __init__(self, bom: BlockOperatorMatrix, family: ScaledGeneratorFamily):
        self.bom = bom
        self.family = family

    def block(self, row_label: str, col_label: str) -> np.ndarray:
        return self.bom.block(row_label, col_label)

    @property
    def Y_ff(self) -> np.ndarray:
        return self.bom.block("fast", "fast")


def build_extended_generator(fam: ScaledGeneratorFamily, *,
                             tol: float = DEFAULT_TOL) -> ExtendedGeneratorMatrix:
    """Assemble the extended generator of a structurally valid family."""
    rep = validate_structure(fam, tol=tol)
    if not rep.passed:
        raise StructureError(
            "family violates structural conditions:\n" + rep.summary(), report=rep
        )
    Vs, Vf = fam.decomp.slow_basis, fam.decomp.fast_basis
    d, f, n = fam.d, fam.decomp.fast_dim, fam.n

    A_sf_embedded = (fam.decomp.P_s @ fam.A) @ Vf      # d x f, zero on fast rows
    A_f = Vf.conj().T @ fam.A                          # f x d
    F_f = Vf.conj().T @ fam.F                          # f x nd
    Y_ff = Vf.conj().T @ fam.Y @ Vf

    size = d + f + n * d
    mat = np.zeros((size, size), dtype=complex)
    mat[:d, :d] = fam.B
    mat[:d, d:d + f] = A_sf_embedded
    mat[:d, d + f:] = fam.G
    mat[d:d + f, :d] = A_f
    mat[d:d + f, d:d + f] = Y_ff
    mat[d:d + f, d + f:] = F_f
    mat[d + f:, :d] = -fam.N @ fam.G.conj().T
    mat[d + f:, d:d + f] = -fam.N @ F_f.conj().T
    mat[d + f:, d + f:] = fam.N - np.eye(n * d)

    off = d + f
    sys_idx = tuple(range(d))
    fast_idx = tuple(range(d, d + f))
    ext_idx = tuple(off + j * d + i for j in fam.external_channels for i in range(d))
    int_idx = tuple(off + j * d + i for j in fam.internal_channels for i in range(d))
    part = BlockPartition(
        ("sys", "fast", "ext", "int"),
        (sys_idx, fast_idx, ext_idx, int_idx),
        (sys_idx, fast_idx, ext_idx, int_idx),
    )
    return ExtendedGeneratorMatrix(BlockOperatorMatrix(mat, part), fam)


def _compress_to_slow(red: BlockOperatorMatrix, fam: ScaledGeneratorFamily,
                      roles, rep: ReductionReport, tol: float) -> ItoGeneratorMatrix:
    """Compress a reduced block matrix (sys row + channel rows) to the slow basis."""
    Vs = fam.decomp.slow_basis
    mat = red.matrix
    sys_rows = red.partition.rows("sys")
    chan_rows = np.setdiff1d(np.arange(mat.shape[0]), sys_rows)
    d = fam.d
    n_out = len(chan_rows) // d
    E = kron_channels(n_out, Vs)

    K = Vs.conj().T @ mat[np.ix_(sys_rows, sys_rows)] @ Vs
    L = Vs.conj().T @ mat[np.ix_(sys_rows, chan_rows)] @ E
    M = E.conj().T @ mat[np.ix_(chan_rows, sys_rows)] @ Vs
    N = E.conj().T @ (mat[np.ix_(chan_rows, chan_rows)] + np.eye(len(chan_rows))) @ E
    out = ItoGeneratorMatrix(K, L, M, N, roles, validate=False)
    hp = validate_hp(out, tol)
    rep.extend(hp, prefix="hp.")
    if not hp.passed:
        raise HpValidationError(
            "reduced generator violates the HP identities:\n" + hp.summary(), report=rep
        )
    return out


def adiabatic_eliminate(fam: ScaledGeneratorFamily, *, tol: float = DEFAULT_TOL,
                        cond_limit: float = COND_LIMIT, return_report: bool = False):
    """Strong-coupling limit generator on the slow subspace.

    Complements the extended generator by its fast block and compresses both
    sides with the slow basis; the output keeps all channels and their roles
    but acts on an initial space of the slow dimension.
    """
    t0 = time.perf_counter()
    rep = ReductionReport("adiabatic_eliminate", fam.fingerprint())
    fd = validate_fast_decoupling(fam, tol=tol)
    rep.extend(fd, prefix="fast_decoupling.")
    if not fd.passed:
        raise FastDecouplingError(
            "limit dynamics would leak into the fast subspace:\n" + fd.summary(),
            report=rep,
        )
    ext = build_extended_generator(fam, tol=tol)
    red = schur_complement(ext.bom, "fast", cond_limit=cond_limit)
    out = _compress_to_slow(red, fam, fam.channel_roles, rep, tol)
    rep.outputs["generator"] = out
    return _finish(out, rep, t0, return_report)


def feedback_reduced_family(fam: ScaledGeneratorFamily, *,
                            cond_limit: float = COND_LIMIT) -> ScaledGeneratorFamily:
    """Scaled family of the post-feedback network.

    Eliminating the internal channels of the instantiated generator at every
    k is itself a scaled family on the external channels; matching powers of
    k in K - L_i (N_ii - I)^{-1} M_i gives its coefficients:

        Y' = Y + F_i W N_i F*,   A' = A + F_i W N_i G* + G_i W N_i F*,
        B' = B + G_i W N_i G*,   F' = F_e - F_i W N_ie,
        G' = G_e - G_i W N_ie,   N' = N_ee - N_ei W N_ie,

    with W = (N_ii - I)^{-1}.
    """
    d = fam.d
    int_idx = np.concatenate([np.arange(j * d, (j + 1) * d) for j in fam.internal_channels]) \
        if fam.internal_channels else np.array([], dtype=int)
    ext_idx = np.concatenate([np.arange(j * d, (j + 1) * d) for j in fam.external_channels]) \
        if fam.external_channels else np.array([], dtype=int)
    if len(int_idx) == 0:
        return fam

    N_ii = fam.N[np.ix_(int_idx, int_idx)] - np.eye(len(int_idx))
    cond = condition_number(N_ii)
    if not cond < cond_limit:
        raise IllPosedNetworkError(
            f"internal feedback loop is ill-posed (cond {cond:.3e})", cond=cond
        )
    N_i = fam.N[int_idx, :]
    N_ie = fam.N[np.ix_(int_idx, ext_idx)]
    N_ei = fam.N[np.ix_(ext_idx, int_idx)]
    N_ee = fam.N[np.ix_(ext_idx, ext_idx)]
    F_i, F_e = fam.F[:, int_idx], fam.F[:, ext_idx]
    G_i, G_e = fam.G[:, int_idx], fam.G[:, ext_idx]

    solve = lambda rhs: np.linalg.solve(N_ii, rhs)
    Y2 = fam.Y + F_i @ solve(N_i @ fam.F.conj().T)
    A2 = fam.A + F_i @ solve(N_i @ fam.G.conj().T) + G_i @ solve(N_i @ fam.F.conj().T)
    B2 = fam.B + G_i @ solve(N_i @ fam.G.conj().T)
    F2 = F_e - F_i @ solve(N_ie)
    G2 = G_e - G_i @ solve(N_ie)
    N2 = N_ee - N_ei @ solve(N_ie)
    roles = tuple(EXTERNAL for _ in fam.external_channels)
    return ScaledGeneratorFamily(Y2, A2, B2, F2, G2, N2, fam.decomp, roles, validate=True)


def _check_kernel_condition(fam: ScaledGeneratorFamily, rep: ReductionReport,
                            tol: float, cond_limit: float) -> None:
    """Feedback-dressed fast block: confinement and invertibility of Y + F_i W N_i F*."""
    d = fam.d
    int_idx = np.concatenate([np.arange(j * d, (j + 1) * d) for j in fam.internal_channels])
    N_ii = fam.N[np.ix_(int_idx, int_idx)] - np.eye(len(int_idx))
    cond_loop = condition_number(N_ii)
    if not cond_loop < cond_limit:
        raise IllPosedNetworkError(
            f"internal feedback loop is ill-posed (cond {cond_loop:.3e})", cond=cond_loop
        )
    N_i = fam.N[int_idx, :]
    F_i = fam.F[:, int_idx]
    Y_hat = fam.Y + F_i @ np.linalg.solve(N_ii, N_i @ fam.F.conj().T)

    Vs, Vf = fam.decomp.slow_basis, fam.decomp.fast_basis
    scale = max(1.0, float(np.linalg.norm(Y_hat)))
    thr = tol * scale
    ok_rows = rep.add_check("Y_hat_slow_rows", np.linalg.norm(Vs.conj().T @ Y_hat), thr)
    ok_cols = rep.add_check("Y_hat_slow_cols", np.linalg.norm(Y_hat @ Vs), thr)
    cond_ff = condition_number(Vf.conj().T @ Y_hat @ Vf)
    ok_ff = rep.add_check("Y_hat_ff_condition", cond_ff, cond_limit)
    if not (ok_rows and ok_cols and ok_ff):
        raise KernelConditionError(
            "feedback-dressed fast block violates the kernel condition:\n" + rep.summary(),
            report=rep,
        )


def compose_fa(fam: ScaledGeneratorFamily, *, tol: float = DEFAULT_TOL,
               cond_limit: float = COND_LIMIT, path_tol: float = PATH_TOL,
               return_report: bool = False):
    """Adiabatic elimination followed by feedback elimination.

    Computed as the nested complement of the extended generator (fast block
    first, then the dressed internal block) compressed to the slow basis,
    and cross-checked against literally running the two operations in
    sequence. Disagreement beyond ``path_tol`` raises.
    """
    t0 = time.perf_counter()
    rep = ReductionReport("compose_fa", fam.fingerprint())
    if not fam.internal_channels:
        rep.notes.append("no internal channels; feedback step is the identity")
        out, sub = adiabatic_eliminate(fam, tol=tol, cond_limit=cond_limit, return_report=True)
        rep.extend(sub)
        rep.outputs["generator"] = out
        return _finish(out, rep, t0, return_report)

    fd = validate_fast_decoupling(fam, tol=tol)
    rep.extend(fd, prefix="fast_decoupling.")
    if not fd.passed:
        raise FastDecouplingError(
            "limit dynamics would leak into the fast subspace:\n" + fd.summary(), report=rep
        )
    ext = build_extended_generator(fam, tol=tol)
    try:
        step1 = schur_complement(ext.bom, "fast", cond_limit=cond_limit)
    except SingularPivotError as e:
        e.stage = "fa.fast"
        raise
    try:
        step2 = schur_complement(step1, "int", cond_limit=cond_limit)
    except SingularPivotError as e:
        e.stage = "fa.int"
        raise
    roles = tuple(EXTERNAL for _ in fam.external_channels)
    nested = _compress_to_slow(step2, fam, roles, rep, tol)

    two_step = feedback_eliminate(adiabatic_eliminate(fam, tol=tol), tol=tol)
    dev = _rel_dev(nested.full_matrix(), two_step.full_matrix())
    rep.add_check("path_equivalence", dev, path_tol)
    if dev > path_tol:
        raise PathMismatchError(
            f"nested and two-step reductions disagree by {dev:.3e}", deviation=dev
        )
    rep.outputs["generator"] = nested
    return _finish(nested, rep, t0, return_report)


def compose_af(fam: ScaledGeneratorFamily, *, tol: float = DEFAULT_TOL,
               cond_limit: float = COND_LIMIT, path_tol: float = PATH_TOL,
               return_report: bool = False):
    """Feedback elimination followed by adiabatic elimination.

    Computed as the nested complement of the extended generator (internal
    block first, then the dressed fast block, which is exactly the fast
    block of the post-feedback family) and cross-checked against adiabatic
    elimination of the explicitly derived post-feedback family.
    """
    t0 = time.perf_counter()
    rep = ReductionReport("compose_af", fam.fingerprint())
    if not fam.internal_channels:
        rep.notes.append("no internal channels; feedback step is the identity")
        out, sub = adiabatic_eliminate(fam, tol=tol, cond_limit=cond_limit, return_report=True)
        rep.extend(sub)
        rep.outputs["generator"] = out
        return _finish(out, rep, t0, return_report)

    _check_kernel_condition(fam, rep, tol, cond_limit)
    ext = build_extended_generator(fam, tol=tol)
    try:
        step1 = schur_complement(ext.bom, "int", cond_limit=cond_limit)
    except SingularPivotError as e:
        e.stage = "af.int"
        raise
    try:
        step2 = schur_complement(step1, "fast", cond_limit=cond_limit)
    except SingularPivotError as e:
        e.stage = "af.fast"
        raise
    roles = tuple(EXTERNAL for _ in fam.external_channels)
    nested = _compress_to_slow(step2, fam, roles, rep, tol)

    reduced_family = feedback_reduced_family(fam, cond_limit=cond_limit)
    two_step = adiabatic_eliminate(reduced_family, tol=tol)
    dev = _rel_dev(nested.full_matrix(), two_step.full_matrix())
    rep.add_check("path_equivalence", dev, path_tol)
    if dev > path_tol:
        raise PathMismatchError(
            f"nested and two-step reductions disagree by {dev:.3e}", deviation=dev
        )
    rep.outputs["generator"] = nested
    return _finish(nested, rep, t0, return_report)


def check_commutativity(fam: ScaledGeneratorFamily, *, tol: float = DEFAULT_TOL,
                        cond_limit: float = COND_LIMIT) -> ReductionReport:
    """Compare both composition orders and the one-shot joint complement.

    Reports the three pairwise relative Frobenius deviations at ``tol``.
    Stage failures are captured as notes instead of raised, so a family for
    which one order is undefined still produces a diagnosis.
    """
    t0 = time.perf_counter()
    rep = ReductionReport("check_commutativity", fam.fingerprint())
    results: dict[str, ItoGeneratorMatrix | None] = {}

    for name, fn in (("fa", compose_fa), ("af", compose_af)):
        try:
            results[name] = fn(fam, tol=tol, cond_limit=cond_limit)
        except QnetReduceError as e:
            results[name] = None
            rep.notes.append(f"{name} undefined: {e.__class__.__name__}: {e}")

    try:
        ext = build_extended_generator(fam, tol=tol)
        joint = schur_complement(ext.bom, {"fast", "int"}, cond_limit=cond_limit)
        roles = tuple(EXTERNAL for _ in fam.external_channels)
        results["joint"] = _compress_to_slow(joint, fam, roles,
                                             ReductionReport("joint"), tol)
    except QnetReduceError as e:
        results["joint"] = None
        rep.notes.append(f"joint undefined: {e.__class__.__name__}: {e}")

    pairs = (("fa", "af"), ("fa", "joint"), ("af", "joint"))
    for a, b in pairs:
        if results[a] is not None and results[b] is not None:
            dev = _rel_dev(results[a].full_matrix(), results[b].full_matrix())
            rep.add_check(f"deviation_{a}_{b}", dev, tol)
    for name, out in results.items():
        if out is not None:
            rep.outputs[name] = out
    rep.wall_time_s = time.perf_counter() - t0
    return rep
