"""Dense complex block-matrix algebra.

Partitioned matrices with labelled index groups, ordinary and generalized
Schur complements, Moore-Penrose inverses with an explicit numerical-rank
cutoff, and the successive-complementation identity that lets a joint
elimination be carried out one pivot at a time.

Everything here is a pure function over immutable values; index groups may
be any disjoint subsets (not necessarily contiguous), so eliminating a
block never reorders the surviving rows and columns.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .errors import (
    IllDefinedComplementError,
    SingularPivotError,
    UnknownBlockLabelError,
)

#: Invertibility policy: a pivot counts as invertible iff its SVD condition
#: number stays below this.
COND_LIMIT = 1e12

#: Default pass threshold for inclusion checks, relative to the tested block.
INCLUSION_TOL = 1e-9


def as_complex_matrix(a, name: str = "matrix") -> np.ndarray:
    """Copy input into a finite 2-d complex array."""
    arr = np.array(a, dtype=complex)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def default_rank_tol(a: np.ndarray) -> float:
    """Standard numerical-rank cutoff: max(rows, cols) * machine epsilon."""
    return max(a.shape) * np.finfo(float).eps if a.size else 0.0


def condition_number(a: np.ndarray) -> float:
    """2-norm condition number; inf when singular. Empty blocks count as 1."""
    if a.size == 0:
        return 1.0
    s = np.linalg.svd(a, compute_uv=False)
    if s[-1] == 0.0 or not np.isfinite(s[0]):
        return np.inf
    return float(s[0] / s[-1])


@dataclass(frozen=True)
class BlockPartition:
    """Labelled disjoint index groups covering the rows and columns.

    Row and column groups are parallel lists sharing one label sequence, so
    the block structure is square in the label sense even when individual
    groups have different sizes.
    """

    labels: tuple[str, ...]
    row_groups: tuple[tuple[int, ...], ...]
    col_groups: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        rows = tuple(tuple(int(i) for i in g) for g in self.row_groups)
        cols = tuple(tuple(int(i) for i in g) for g in self.col_groups)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "row_groups", rows)
        object.__setattr__(self, "col_groups", cols)
        if not (len(labels) == len(rows) == len(cols)):
            raise ValueError("labels, row_groups and col_groups must have equal length")
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate block labels")
        _check_cover(rows, "row")
        _check_cover(cols, "column")

    @classmethod
    def from_sizes(cls, labels: Iterable[str], row_sizes: Iterable[int],
                   col_sizes: Iterable[int] | None = None) -> "BlockPartition":
        """Contiguous partition from per-group sizes."""
        labels = tuple(labels)
        row_sizes = tuple(int(s) for s in row_sizes)
        col_sizes = row_sizes if col_sizes is None else tuple(int(s) for s in col_sizes)

        def groups(sizes):
            out, off = [], 0
            for s in sizes:
                out.append(tuple(range(off, off + s)))
                off += s
            return tuple(out)

        return cls(labels, groups(row_sizes), groups(col_sizes))

    @property
    def n_rows(self) -> int:
        return sum(len(g) for g in self.row_groups)

    @property
    def n_cols(self) -> int:
        return sum(len(g) for g in self.col_groups)

    def has(self, label: str) -> bool:
        return label in self.labels

    def _index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise UnknownBlockLabelError(f"unknown block label {label!r}; have {self.labels}")

    def rows(self, label: str) -> np.ndarray:
        return np.asarray(self.row_groups[self._index(label)], dtype=int)

    def cols(self, label: str) -> np.ndarray:
        return np.asarray(self.col_groups[self._index(label)], dtype=int)


def _check_cover(groups, what: str) -> None:
    total = sum(len(g) for g in groups)
    flat = sorted(i for g in groups for i in g)
    if flat != list(range(total)):
        raise ValueError(f"{what} groups must be disjoint and cover 0..{total - 1}")


@dataclass(frozen=True)
class BlockOperatorMatrix:
    """A dense complex matrix together with a block partition."""

    matrix: np.ndarray
    partition: BlockPartition

    def __post_init__(self):
        mat = as_complex_matrix(self.matrix)
        if mat.shape != (self.partition.n_rows, self.partition.n_cols):
            raise ValueError(
                f"matrix shape {mat.shape} does not match partition "
                f"({self.partition.n_rows}, {self.partition.n_cols})"
            )
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)

    def block(self, row_label: str, col_label: str) -> np.ndarray:
        rows = self.partition.rows(row_label)
        cols = self.partition.cols(col_label)
        return self.matrix[np.ix_(rows, cols)].copy()


def block(m: BlockOperatorMatrix, row_label: str, col_label: str) -> np.ndarray:
    """Sub-matrix at the labelled block, by value."""
    return m.block(row_label, col_label)


def _normalize_labels(partition: BlockPartition, labels) -> tuple[str, ...]:
    """Validate a label or set of labels, returned in partition order."""
    if isinstance(labels, str):
        labels = {labels}
    wanted = set(labels)
    for lab in wanted:
        partition._index(lab)  # raises on unknown label
    return tuple(lab for lab in partition.labels if lab in wanted)


def _pivot_indices(partition: BlockPartition, labels: tuple[str, ...]):
    prow = np.concatenate([partition.rows(l) for l in labels]) if labels else np.array([], dtype=int)
    pcol = np.concatenate([partition.cols(l) for l in labels]) if labels else np.array([], dtype=int)
    return prow, pcol


def _complement_partition(partition: BlockPartition, drop: tuple[str, ...],
                          krow: np.ndarray, kcol: np.ndarray) -> BlockPartition:
    labels, rgs, cgs = [], [], []
    for lab, rg, cg in zip(partition.labels, partition.row_groups, partition.col_groups):
        if lab in drop:
            continue
        labels.append(lab)
        rgs.append(tuple(int(i) for i in np.searchsorted(krow, np.asarray(rg, dtype=int))))
        cgs.append(tuple(int(i) for i in np.searchsorted(kcol, np.asarray(cg, dtype=int))))
    return BlockPartition(tuple(labels), tuple(rgs), tuple(cgs))


def schur_complement(m: BlockOperatorMatrix, pivot_labels,
                     *, cond_limit: float = COND_LIMIT) -> BlockOperatorMatrix:
    """Ordinary Schur complement over the diagonal pivot named by ``pivot_labels``.

    Returns X_cc - X_cp P^{-1} X_pc on the surviving labels, with indices kept
    in their original relative order. The pivot solve is factorization based;
    the pivot must satisfy the condition-number policy.
    """
    labels = _normalize_labels(m.partition, pivot_labels)
    prow, pcol = _pivot_indices(m.partition, labels)
    if len(prow) != len(pcol):
        raise ValueError(f"pivot block {labels} is not square: {len(prow)}x{len(pcol)}")
    X = m.matrix
    krow = np.setdiff1d(np.arange(X.shape[0]), prow)
    kcol = np.setdiff1d(np.arange(X.shape[1]), pcol)
    new_part = _complement_partition(m.partition, labels, krow, kcol)
    if len(prow) == 0:
        return BlockOperatorMatrix(X[np.ix_(krow, kcol)], new_part)
    P = X[np.ix_(prow, pcol)]
    cond = condition_number(P)
    if not cond < cond_limit:
        raise SingularPivotError(
            f"pivot {list(labels)} has condition number {cond:.3e} (policy limit {cond_limit:.1e})",
            cond=cond,
        )
    result = X[np.ix_(krow, kcol)] - X[np.ix_(krow, pcol)] @ np.linalg.solve(P, X[np.ix_(prow, kcol)])
    return BlockOperatorMatrix(result, new_part)


def schur_complement_general(m: BlockOperatorMatrix, row_pivot_labels, col_pivot_labels,
                             *, cond_limit: float = COND_LIMIT) -> np.ndarray:
    """General complement X_{r^c,c^c} - X_{r^c,c} X_{r,c}^{-1} X_{r,c^c}.

    Row and column pivot labels may differ. Returns a bare array since the
    surviving row and column labels no longer match; the reduction pipeline
    only uses the diagonal form above.
    """
    rlabels = _normalize_labels(m.partition, row_pivot_labels)
    clabels = _normalize_labels(m.partition, col_pivot_labels)
    prow = np.concatenate([m.partition.rows(l) for l in rlabels]) if rlabels else np.array([], dtype=int)
    pcol = np.concatenate([m.partition.cols(l) for l in clabels]) if clabels else np.array([], dtype=int)
    if len(prow) != len(pcol):
        raise ValueError("row and column pivots select a non-square block")
    X = m.matrix
    krow = np.setdiff1d(np.arange(X.shape[0]), prow)
    kcol = np.setdiff1d(np.arange(X.shape[1]), pcol)
    if len(prow) == 0:
        return X[np.ix_(krow, kcol)].copy()
    P = X[np.ix_(prow, pcol)]
    cond = condition_number(P)
    if not cond < cond_limit:
        raise SingularPivotError(
            f"pivot rows {list(rlabels)} x cols {list(clabels)} has condition number {cond:.3e}",
            cond=cond,
        )
    return X[np.ix_(krow, kcol)] - X[np.ix_(krow, pcol)] @ np.linalg.solve(P, X[np.ix_(prow, kcol)])


def generalized_inverse(a, rank_tol: float | None = None) -> np.ndarray:
    """Moore-Penrose pseudoinverse by SVD.

    Singular values at or below ``rank_tol * sigma_max`` are treated as zero.
    """
    arr = as_complex_matrix(a)
    if rank_tol is None:
        rank_tol = default_rank_tol(arr)
    if rank_tol < 0:
        raise ValueError("rank_tol must be nonnegative")
    if arr.size == 0:
        return np.zeros((arr.shape[1], arr.shape[0]), dtype=complex)
    return np.linalg.pinv(arr, rcond=rank_tol)


class InclusionResult(NamedTuple):
    ok: bool
    residual: float


def inclusion_check(sub, ambient, mode: str, rank_tol: float | None = None,
                    *, tol: float = INCLUSION_TOL) -> InclusionResult:
    """Numerical subspace inclusion test.

    mode="image":  is every column of ``sub`` inside the column space of
    ``ambient``?  The residual is the Frobenius norm of the projection of
    ``sub`` onto the orthogonal complement.

    mode="kernel": is ker(ambient) contained in ker(sub)?  The residual is
    the norm of ``sub`` applied to an orthonormal null-space basis of
    ``ambient``.

    The boolean compares the residual against ``tol * max(1, ||sub||_F)``.
    """
    S = as_complex_matrix(sub, "sub")
    A = as_complex_matrix(ambient, "ambient")
    if mode not in ("image", "kernel"):
        raise ValueError(f"mode must be 'image' or 'kernel', got {mode!r}")
    if mode == "image" and S.shape[0] != A.shape[0]:
        raise ValueError(f"image mode needs equal row counts, got {S.shape[0]} and {A.shape[0]}")
    if mode == "kernel" and S.shape[1] != A.shape[1]:
        raise ValueError(f"kernel mode needs equal column counts, got {S.shape[1]} and {A.shape[1]}")
    if rank_tol is None:
        rank_tol = default_rank_tol(A)

    if A.size == 0:
        rank = 0
        U = np.zeros((A.shape[0], 0))
        Vh = np.zeros((0, A.shape[1]))
    else:
        U, s, Vh = np.linalg.svd(A)
        rank = int(np.sum(s > rank_tol * s[0])) if s.size and s[0] > 0 else 0

    if mode == "image":
        Q = U[:, :rank]
        resid = float(np.linalg.norm(S - Q @ (Q.conj().T @ S)))
    else:
        Z = Vh[rank:].conj().T
        resid = float(np.linalg.norm(S @ Z))
    ok = resid <= tol * max(1.0, float(np.linalg.norm(S)))
    return InclusionResult(bool(ok), resid)


def generalized_schur_complement(m: BlockOperatorMatrix, pivot_labels,
                                 rank_tol: float | None = None,
                                 *, tol: float = INCLUSION_TOL) -> BlockOperatorMatrix:
    """Schur complement with a possibly singular pivot.

    Requires im(G21) inside im(G22) and ker(G22) inside ker(G12); under
    these inclusions the result G11 - G12 G22^- G21 does not depend on the
    choice of generalized inverse, and the Moore-Penrose inverse is used.
    A failed inclusion raises rather than returning an inverse-dependent
    answer.
    """
    labels = _normalize_labels(m.partition, pivot_labels)
    prow, pcol = _pivot_indices(m.partition, labels)
    X = m.matrix
    krow = np.setdiff1d(np.arange(X.shape[0]), prow)
    kcol = np.setdiff1d(np.arange(X.shape[1]), pcol)
    new_part = _complement_partition(m.partition, labels, krow, kcol)
    if len(prow) == 0 and len(pcol) == 0:
        return BlockOperatorMatrix(X[np.ix_(krow, kcol)], new_part)

    G22 = X[np.ix_(prow, pcol)]
    G21 = X[np.ix_(prow, kcol)]
    G12 = X[np.ix_(krow, pcol)]
    G11 = X[np.ix_(krow, kcol)]

    img = inclusion_check(G21, G22, "image", rank_tol, tol=tol)
    if not img.ok:
        raise IllDefinedComplementError(
            f"image inclusion im(G21) in im(G22) failed with residual {img.residual:.3e}",
            which="image", residual=img.residual,
        )
    ker = inclusion_check(G12, G22, "kernel", rank_tol, tol=tol)
    if not ker.ok:
        raise IllDefinedComplementError(
            f"kernel inclusion ker(G22) in ker(G12) failed with residual {ker.residual:.3e}",
            which="kernel", residual=ker.residual,
        )
    result = G11 - G12 @ generalized_inverse(G22, rank_tol) @ G21
    return BlockOperatorMatrix(result, new_part)


def successive_schur(m: BlockOperatorMatrix, first_pivot, second_pivot,
                     *, cond_limit: float = COND_LIMIT) -> BlockOperatorMatrix:
    """(X / X_first) / (X / X_first)_second.

    Equals the one-shot complement over the union of the two pivots, and the
    opposite order, whenever all involved pivots are invertible. Singular
    pivots raise with the failing stage recorded on the exception.
    """
    first = _normalize_labels(m.partition, first_pivot)
    second = _normalize_labels(m.partition, second_pivot)
    if set(first) & set(second):
        raise ValueError(f"pivot label sets overlap: {set(first) & set(second)}")
    try:
        step = schur_complement(m, first, cond_limit=cond_limit)
    except SingularPivotError as e:
        e.stage = "first"
        raise
    try:
        return schur_complement(step, second, cond_limit=cond_limit)
    except SingularPivotError as e:
        e.stage = "second"
        raise


def banachiewicz_inverse(m: BlockOperatorMatrix, pivot_labels,
                         *, cond_limit: float = COND_LIMIT) -> np.ndarray:
    """Block 2x2 inverse from the pivot inverse and its Schur complement.

    With pivot P and W = S - R P^{-1} Q the inverse is assembled as
    [[P^-1 + P^-1 Q W^-1 R P^-1, -P^-1 Q W^-1], [-W^-1 R P^-1, W^-1]]
    and returned in the original index order. Invertibility of P and W is
    exactly what makes the whole matrix invertible.
    """
    labels = _normalize_labels(m.partition, pivot_labels)
    prow, pcol = _pivot_indices(m.partition, labels)
    if len(prow) != len(pcol):
        raise ValueError("pivot block is not square")
    X = m.matrix
    n_rows, n_cols = X.shape
    if n_rows != n_cols:
        raise ValueError("matrix must be square")
    krow = np.setdiff1d(np.arange(n_rows), prow)
    kcol = np.setdiff1d(np.arange(n_cols), pcol)

    P = X[np.ix_(prow, pcol)]
    cond_p = condition_number(P)
    if not cond_p < cond_limit:
        raise SingularPivotError(f"pivot block singular (cond {cond_p:.3e})", cond=cond_p, stage="pivot")
    Q = X[np.ix_(prow, kcol)]
    R = X[np.ix_(krow, pcol)]
    S = X[np.ix_(krow, kcol)]
    Pinv = np.linalg.inv(P)
    W = S - R @ Pinv @ Q
    cond_w = condition_number(W)
    if not cond_w < cond_limit:
        raise SingularPivotError(
            f"Schur complement of pivot singular (cond {cond_w:.3e})", cond=cond_w, stage="complement"
        )
    Winv = np.linalg.inv(W)

    out = np.zeros((n_rows, n_cols), dtype=complex)
    out[np.ix_(pcol, prow)] = Pinv + Pinv @ Q @ Winv @ R @ Pinv
    out[np.ix_(pcol, krow)] = -Pinv @ Q @ Winv
    out[np.ix_(kcol, prow)] = -Winv @ R @ Pinv
    out[np.ix_(kcol, krow)] = Winv
    return out
