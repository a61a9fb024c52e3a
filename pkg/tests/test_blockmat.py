"""Block-matrix algebra: partitions, complements, generalized inverses."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qnetreduce.blockmat import (
    BlockOperatorMatrix,
    BlockPartition,
    banachiewicz_inverse,
    block,
    condition_number,
    generalized_inverse,
    generalized_schur_complement,
    inclusion_check,
    schur_complement,
    schur_complement_general,
    successive_schur,
)
from qnetreduce.errors import (
    IllDefinedComplementError,
    SingularPivotError,
    UnknownBlockLabelError,
)

from conftest import rand_complex


def two_by_two(entries):
    part = BlockPartition.from_sizes(("a", "b"), (1, 1))
    return BlockOperatorMatrix(np.asarray(entries, dtype=complex), part)


class TestPartition:
    def test_from_sizes(self):
        p = BlockPartition.from_sizes(("x", "y"), (2, 3))
        assert p.n_rows == p.n_cols == 5
        assert tuple(p.rows("y")) == (2, 3, 4)

    def test_overlapping_groups_rejected(self):
        with pytest.raises(ValueError, match="disjoint"):
            BlockPartition(("a", "b"), ((0, 1), (1, 2)), ((0, 1), (1, 2)))

    def test_gap_rejected(self):
        with pytest.raises(ValueError, match="disjoint"):
            BlockPartition(("a", "b"), ((0,), (2,)), ((0,), (2,)))

    def test_duplicate_labels_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            BlockPartition(("a", "a"), ((0,), (1,)), ((0,), (1,)))

    def test_mismatched_lengths_rejected(self):
        with pytest.raises(ValueError, match="equal length"):
            BlockPartition(("a",), ((0,), (1,)), ((0,), (1,)))

    def test_empty_group_allowed(self):
        p = BlockPartition(("a", "b"), ((0, 1), ()), ((0, 1), ()))
        assert len(p.rows("b")) == 0


class TestBlockLookup:
    def test_identity_diagonal(self):
        m = two_by_two(np.eye(2))
        assert np.array_equal(block(m, "a", "a"), [[1.0]])

    def test_identity_off_diagonal(self):
        m = two_by_two(np.eye(2))
        assert np.array_equal(block(m, "a", "b"), [[0.0]])

    def test_unknown_label(self):
        m = two_by_two(np.eye(2))
        with pytest.raises(UnknownBlockLabelError):
            block(m, "c", "a")

    def test_returned_block_is_a_copy(self):
        m = two_by_two(np.eye(2))
        b = block(m, "a", "a")
        b[0, 0] = 7.0
        assert m.matrix[0, 0] == 1.0


class TestSchurComplement:
    def test_hand_computed_2x2(self):
        m = two_by_two([[1.0, 2.0], [3.0, 4.0]])
        out = schur_complement(m, "b")
        assert np.allclose(out.matrix, [[1.0 - 2.0 * 3.0 / 4.0]])
        assert out.partition.labels == ("a",)

    def test_block_diagonal_is_untouched(self):
        rng = np.random.default_rng(0)
        d1, d2 = rand_complex(rng, 3, 3), rand_complex(rng, 2, 2) + 3 * np.eye(2)
        mat = np.zeros((5, 5), dtype=complex)
        mat[:3, :3] = d1
        mat[3:, 3:] = d2
        m = BlockOperatorMatrix(mat, BlockPartition.from_sizes(("d1", "d2"), (3, 2)))
        out = schur_complement(m, "d2")
        assert np.array_equal(out.matrix, d1)

    def test_matches_inverse_restriction(self):
        # complement of the pivot equals the inverse of the complementary
        # block of the full inverse
        rng = np.random.default_rng(42)
        for _ in range(20):
            x = rand_complex(rng, 6, 6) + 2 * np.eye(6)
            m = BlockOperatorMatrix(x, BlockPartition.from_sizes(("keep", "piv"), (3, 3)))
            if condition_number(x) > 1e4 or condition_number(x[3:, 3:]) > 1e4:
                continue
            out = schur_complement(m, "piv").matrix
            oracle = np.linalg.inv(np.linalg.inv(x)[:3, :3])
            assert np.linalg.norm(out - oracle) / np.linalg.norm(oracle) < 1e-9

    def test_singular_pivot_raises_with_cond(self):
        mat = np.array([[1.0, 1.0], [1.0, 0.0]], dtype=complex)
        m = two_by_two(mat)
        with pytest.raises(SingularPivotError) as exc:
            schur_complement(m, "b")
        assert not np.isfinite(exc.value.cond)

    def test_empty_pivot_is_identity_operation(self):
        rng = np.random.default_rng(1)
        x = rand_complex(rng, 3, 3)
        part = BlockPartition(("a", "b"), ((0, 1, 2), ()), ((0, 1, 2), ()))
        out = schur_complement(BlockOperatorMatrix(x, part), "b")
        assert np.array_equal(out.matrix, x)

    def test_interleaved_groups_keep_original_order(self):
        rng = np.random.default_rng(2)
        x = rand_complex(rng, 4, 4) + 3 * np.eye(4)
        part = BlockPartition(("odd", "even"), ((1, 3), (0, 2)), ((1, 3), (0, 2)))
        out = schur_complement(BlockOperatorMatrix(x, part), "even")
        keep, piv = [1, 3], [0, 2]
        oracle = x[np.ix_(keep, keep)] - x[np.ix_(keep, piv)] @ np.linalg.solve(
            x[np.ix_(piv, piv)], x[np.ix_(piv, keep)]
        )
        assert np.allclose(out.matrix, oracle)

    def test_general_form_matches_diagonal_form(self):
        rng = np.random.default_rng(3)
        x = rand_complex(rng, 5, 5) + 3 * np.eye(5)
        m = BlockOperatorMatrix(x, BlockPartition.from_sizes(("p", "q"), (2, 3)))
        a = schur_complement(m, "q").matrix
        b = schur_complement_general(m, "q", "q")
        assert np.allclose(a, b)

    def test_general_form_off_diagonal(self):
        rng = np.random.default_rng(4)
        x = rand_complex(rng, 4, 4)
        x[np.ix_([0, 1], [2, 3])] += 3 * np.eye(2)   # make the off-diagonal pivot invertible
        m = BlockOperatorMatrix(x, BlockPartition.from_sizes(("p", "q"), (2, 2)))
        out = schur_complement_general(m, "p", "q")
        piv = x[np.ix_([0, 1], [2, 3])]
        oracle = x[np.ix_([2, 3], [0, 1])] - x[np.ix_([2, 3], [2, 3])] @ np.linalg.solve(
            piv, x[np.ix_([0, 1], [0, 1])]
        )
        assert np.allclose(out, oracle)


class TestGeneralizedInverse:
    def test_identity(self):
        assert np.array_equal(generalized_inverse(np.eye(3)), np.eye(3))

    def test_zero_matrix(self):
        assert np.array_equal(generalized_inverse(np.zeros((2, 3))), np.zeros((3, 2)))

    def test_rank_one_diagonal(self):
        out = generalized_inverse([[2.0, 0.0], [0.0, 0.0]])
        assert np.allclose(out, [[0.5, 0.0], [0.0, 0.0]])

    def test_rejects_negative_tolerance(self):
        with pytest.raises(ValueError):
            generalized_inverse(np.eye(2), rank_tol=-1.0)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            generalized_inverse([[np.nan, 0.0], [0.0, 1.0]])

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), m=st.integers(1, 8), n=st.integers(1, 8))
    def test_penrose_identities(self, seed, m, n):
        rng = np.random.default_rng(seed)
        rank = int(rng.integers(0, min(m, n) + 1))
        x = rand_complex(rng, m, n, rank=rank) if rank else np.zeros((m, n), dtype=complex)
        xp = generalized_inverse(x)
        scale = max(1.0, np.linalg.norm(x)) ** 2
        tol = 1e-10 * scale
        assert np.linalg.norm(x @ xp @ x - x) < tol
        assert np.linalg.norm(xp @ x @ xp - xp) < tol
        assert np.linalg.norm((x @ xp) - (x @ xp).conj().T) < tol
        assert np.linalg.norm((xp @ x) - (xp @ x).conj().T) < tol


class TestInclusionCheck:
    def test_self_inclusion(self):
        rng = np.random.default_rng(5)
        x = rand_complex(rng, 4, 4, rank=2)
        ok, resid = inclusion_check(x, x, "image")
        assert ok and resid < 1e-12

    def test_identity_ambient_accepts_anything(self):
        rng = np.random.default_rng(6)
        ok, _ = inclusion_check(rand_complex(rng, 4, 2), np.eye(4), "image")
        assert ok

    def test_component_outside_rank_one_ambient(self):
        u = np.array([[1.0], [0.0], [0.0]])
        ambient = u @ np.array([[1.0, 2.0, 3.0]])
        w = np.array([[0.0], [0.7], [0.0]])
        ok, resid = inclusion_check(u + w, ambient, "image")
        assert not ok
        assert resid == pytest.approx(0.7, rel=1e-12)

    def test_kernel_mode(self):
        rng = np.random.default_rng(7)
        g22 = rand_complex(rng, 4, 4, rank=2)
        ok, _ = inclusion_check(rand_complex(rng, 3, 4) @ g22, g22, "kernel")
        assert ok
        null_vec = np.linalg.svd(g22)[2][-1]
        bad = np.outer(np.ones(3), null_vec.conj())
        ok2, resid2 = inclusion_check(bad, g22, "kernel")
        assert not ok2 and resid2 > 1e-3

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            inclusion_check(np.eye(3), np.eye(4), "image")

    def test_bad_mode(self):
        with pytest.raises(ValueError):
            inclusion_check(np.eye(2), np.eye(2), "span")


def compatible_singular_instance(rng, keep, piv, rank):
    """Instance whose pivot is rank deficient but both inclusions hold."""
    g22 = rand_complex(rng, piv, piv, rank=rank)
    g21 = g22 @ rand_complex(rng, piv, keep)
    g12 = rand_complex(rng, keep, piv) @ g22
    g11 = rand_complex(rng, keep, keep)
    mat = np.block([[g11, g12], [g21, g22]])
    part = BlockPartition.from_sizes(("keep", "piv"), (keep, piv))
    return BlockOperatorMatrix(mat, part), g11, g12, g21, g22


class TestGeneralizedSchurComplement:
    def test_zero_pivot_and_couplings(self):
        rng = np.random.default_rng(8)
        g11 = rand_complex(rng, 3, 3)
        mat = np.zeros((5, 5), dtype=complex)
        mat[:3, :3] = g11
        m = BlockOperatorMatrix(mat, BlockPartition.from_sizes(("keep", "piv"), (3, 2)))
        out = generalized_schur_complement(m, "piv")
        assert np.array_equal(out.matrix, g11)

    def test_reduces_to_ordinary_complement(self):
        rng = np.random.default_rng(9)
        x = rand_complex(rng, 6, 6) + 3 * np.eye(6)
        m = BlockOperatorMatrix(x, BlockPartition.from_sizes(("keep", "piv"), (3, 3)))
        a = generalized_schur_complement(m, "piv").matrix
        b = schur_complement(m, "piv").matrix
        assert np.linalg.norm(a - b) < 1e-10 * np.linalg.norm(b)

    def test_independent_of_inverse_choice(self):
        rng = np.random.default_rng(10)
        for _ in range(25):
            m, g11, g12, g21, g22 = compatible_singular_instance(rng, 3, 4, 2)
            out = generalized_schur_complement(m, "piv").matrix
            pinv = generalized_inverse(g22)
            w = rand_complex(rng, 4, 4)
            alt = pinv + (np.eye(4) - pinv @ g22) @ w
            assert np.linalg.norm(g22 @ alt @ g22 - g22) < 1e-9  # alt is a generalized inverse
            alt_out = g11 - g12 @ alt @ g21
            assert np.linalg.norm(out - alt_out) < 1e-9

    def test_image_violation_refused(self):
        rng = np.random.default_rng(11)
        m, g11, g12, g21, g22 = compatible_singular_instance(rng, 3, 4, 2)
        mat = np.array(m.matrix)
        left_null = np.linalg.svd(g22)[0][:, -1]
        mat[np.ix_(m.partition.rows("piv"), m.partition.cols("keep"))] += \
            np.outer(left_null, np.ones(3))
        bad = BlockOperatorMatrix(mat, m.partition)
        with pytest.raises(IllDefinedComplementError) as exc:
            generalized_schur_complement(bad, "piv")
        assert exc.value.which == "image"

    def test_kernel_violation_refused(self):
        rng = np.random.default_rng(12)
        m, g11, g12, g21, g22 = compatible_singular_instance(rng, 3, 4, 2)
        mat = np.array(m.matrix)
        right_null = np.linalg.svd(g22)[2][-1].conj()
        mat[np.ix_(m.partition.rows("keep"), m.partition.cols("piv"))] += \
            np.outer(np.ones(3), right_null.conj())
        bad = BlockOperatorMatrix(mat, m.partition)
        with pytest.raises(IllDefinedComplementError) as exc:
            generalized_schur_complement(bad, "piv")
        assert exc.value.which == "kernel"


class TestSuccessiveComplementation:
    def test_three_decoupled_blocks(self):
        rng = np.random.default_rng(13)
        blocks = [rand_complex(rng, 2, 2) + 3 * np.eye(2) for _ in range(3)]
        mat = np.zeros((6, 6), dtype=complex)
        for i, b in enumerate(blocks):
            mat[2 * i:2 * i + 2, 2 * i:2 * i + 2] = b
        m = BlockOperatorMatrix(mat, BlockPartition.from_sizes(("p", "q", "r"), (2, 2, 2)))
        one_shot = schur_complement(m, {"q", "r"}).matrix
        seq1 = successive_schur(m, "q", "r").matrix
        seq2 = successive_schur(m, "r", "q").matrix
        for out in (one_shot, seq1, seq2):
            assert np.array_equal(out, blocks[0])

    def test_random_orders_agree(self):
        rng = np.random.default_rng(14)
        done = 0
        while done < 30:
            x = rand_complex(rng, 9, 9)
            m = BlockOperatorMatrix(x, BlockPartition.from_sizes(("p", "q", "r"), (3, 3, 3)))
            try:
                one_shot = schur_complement(m, {"q", "r"}, cond_limit=1e6).matrix
                seq1 = successive_schur(m, "q", "r", cond_limit=1e6).matrix
                seq2 = successive_schur(m, "r", "q", cond_limit=1e6).matrix
            except SingularPivotError:
                continue
            assert np.linalg.norm(one_shot - seq1) < 1e-10
            assert np.linalg.norm(one_shot - seq2) < 1e-10
            done += 1

    def test_overlapping_pivots_rejected(self):
        m = two_by_two(np.eye(2))
        with pytest.raises(ValueError, match="overlap"):
            successive_schur(m, "a", "a")

    def test_pivot_singular_only_after_first_stage(self):
        # second-stage pivot e - f h / i vanishes even though e itself is fine
        mat = np.array([[2.0, 1.0, 1.0],
                        [1.0, 1.0, 1.0],
                        [1.0, 1.0, 1.0]], dtype=complex)
        m = BlockOperatorMatrix(mat, BlockPartition.from_sizes(("p", "q", "r"), (1, 1, 1)))
        with pytest.raises(SingularPivotError) as exc:
            successive_schur(m, "r", "q")
        assert exc.value.stage == "second"
        # the same pivot alone is perfectly invertible
        schur_complement(m, "q")


class TestBanachiewicz:
    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), p=st.integers(1, 4), q=st.integers(1, 4))
    def test_formula_matches_dense_inverse(self, seed, p, q):
        rng = np.random.default_rng(seed)
        n = p + q
        x = rand_complex(rng, n, n) + 2 * np.eye(n)
        m = BlockOperatorMatrix(x, BlockPartition.from_sizes(("p", "q"), (p, q)))
        try:
            out = banachiewicz_inverse(m, "p")
        except SingularPivotError:
            return
        dense = np.linalg.inv(x)
        assert np.linalg.norm(out - dense) / np.linalg.norm(dense) < 1e-9

    def test_invertibility_prediction(self):
        # P invertible and W singular must be rejected, and the full matrix
        # really is singular there
        mat = np.array([[1.0, 1.0], [1.0, 1.0]], dtype=complex)
        m = two_by_two(mat)
        with pytest.raises(SingularPivotError) as exc:
            banachiewicz_inverse(m, "a")
        assert exc.value.stage == "complement"
        assert abs(np.linalg.det(mat)) < 1e-12
