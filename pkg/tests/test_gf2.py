"""Bit-packed GF(2) linear algebra: rank, solving, kernels, random
ensembles, and the rank-preserving compositions."""

import math

import numpy as np
import pytest

from linesim import gf2


def bm(rows):
    return gf2.BitMatrix.from_rows(rows)


class TestPacking:
    def test_round_trip(self):
        rng = np.random.default_rng(0)
        for cols in (1, 7, 63, 64, 65, 130):
            bits = rng.integers(0, 2, size=(5, cols)).astype(np.uint8)
            assert np.array_equal(gf2.unpack_rows(gf2.pack_rows(bits), cols), bits)

    def test_tail_bits_clear(self):
        words = gf2.random_words(np.random.default_rng(1), 50, 70)
        assert np.all(words[:, 1] >> np.uint64(6) == 0)

    def test_get_set(self):
        M = gf2.BitMatrix.zeros(2, 70)
        M.set(1, 69, 1)
        assert M.get(1, 69) == 1 and M.get(0, 69) == 0
        M.set(1, 69, 0)
        assert M.get(1, 69) == 0


class TestRank:
    def test_identity(self):
        assert gf2.rank(gf2.BitMatrix.identity(3)) == 3

    def test_zero(self):
        assert gf2.rank(gf2.BitMatrix.zeros(2, 3)) == 0

    def test_dependent_rows(self):
        assert gf2.rank(bm([[1, 1], [1, 1], [0, 1]])) == 2

    def test_permutation_invariance(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            r, c = rng.integers(1, 20, size=2)
            bits = rng.integers(0, 2, size=(r, c)).astype(np.uint8)
            M = bm(bits)
            P = bm(bits[rng.permutation(r)][:, rng.permutation(c)])
            assert gf2.rank(M) == gf2.rank(P)

    def test_rank_bound(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            r, c = rng.integers(1, 30, size=2)
            M = gf2.BitMatrix(r, c, gf2.random_words(rng, r, c))
            assert gf2.rank(M) <= min(r, c)

    def test_wide_matrix_duplicate_rows(self):
        # column count past several machine words; duplicated rows add no rank
        rng = np.random.default_rng(4)
        bits = rng.integers(0, 2, size=(100, 200)).astype(np.uint8)
        r = gf2.rank(bm(bits))
        assert r == gf2.rank(bm(np.vstack([bits, bits])))
        assert r <= 100


class TestSolve:
    def test_identity(self):
        x = gf2.solve(gf2.BitMatrix.identity(2), gf2.BitVector.from_bits([1, 0]))
        assert list(x.to_array()) == [1, 0]

    def test_singular(self):
        assert gf2.solve(gf2.BitMatrix.zeros(2, 2), gf2.BitVector.from_bits([1, 0])) is None

    def test_overdetermined(self):
        A = bm([[1, 0], [1, 1], [0, 1]])
        x = gf2.solve(A, gf2.BitVector.from_bits([1, 1, 0]))
        assert list(x.to_array()) == [1, 0]

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            gf2.solve(gf2.BitMatrix.identity(2), gf2.BitVector.from_bits([1, 0, 0]))

    def test_inconsistent(self):
        A = bm([[1, 0], [1, 0], [0, 1]])
        assert gf2.solve(A, gf2.BitVector.from_bits([1, 0, 0])) is None

    def test_random_round_trip(self):
        rng = np.random.default_rng(5)
        for n in (3, 17, 64, 100):
            while True:
                A = gf2.BitMatrix(n, n, gf2.random_words(rng, n, n))
                if gf2.rank(A) == n:
                    break
            xbits = rng.integers(0, 2, size=n).astype(np.uint8)
            y = gf2.multiply(A, gf2.BitMatrix.from_rows(xbits.reshape(-1, 1)))
            sol = gf2.solve(A, gf2.BitVector.from_bits(y.to_array()[:, 0]))
            assert np.array_equal(sol.to_array(), xbits)


class TestKernelSize:
    def test_identity(self):
        assert gf2.kernel_size(gf2.BitMatrix.identity(3)) == 1

    def test_zero(self):
        assert gf2.kernel_size(gf2.BitMatrix.zeros(2, 2)) == 4

    def test_repeated_row(self):
        assert gf2.kernel_size(bm([[1, 1], [1, 1]])) == 2

    def test_too_wide(self):
        with pytest.raises(ValueError):
            gf2.kernel_size(gf2.BitMatrix.zeros(2, 31))

    def test_matches_exhaustive_count(self):
        rng = np.random.default_rng(6)
        for _ in range(30):
            r = int(rng.integers(1, 8))
            c = int(rng.integers(1, 8))
            bits = rng.integers(0, 2, size=(r, c)).astype(np.uint8)
            M = bm(bits)
            count = 0
            for v in range(1 << c):
                x = np.array([(v >> j) & 1 for j in range(c)], dtype=np.uint8)
                if not np.any(bits.dot(x) % 2):
                    count += 1
            assert gf2.kernel_size(M) == count


class TestRandomLowerTriangular:
    def test_smallest(self):
        M = gf2.random_lower_triangular(1, 2.0, np.random.default_rng(7))
        assert (M.rows, M.cols) == (1, 1)

    def test_shape_and_zero_pattern(self):
        M = gf2.random_lower_triangular(4, 2.0, np.random.default_rng(8))
        assert (M.rows, M.cols) == (8, 4)
        bits = M.to_array()
        for i in range(4):
            for j in range(i + 1, 4):
                assert bits[i, j] == 0

    def test_extra_rows(self):
        assert gf2.extra_rows(1, 2.0) == 0
        assert gf2.extra_rows(4, 2.0) == 4
        assert gf2.extra_rows(5, 2.0) == math.ceil(2 * math.log2(5))

    def test_rank_deficiency_rare(self):
        # k=64, c=2: the rank-deficiency bound is 1/(2*64) = 0.0078
        rng = np.random.default_rng(9)
        fails = sum(
            gf2.rank(gf2.random_lower_triangular(64, 2.0, rng)) < 64 for _ in range(2000)
        )
        assert fails / 2000 <= 0.012

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            gf2.random_lower_triangular(0, 2.0, np.random.default_rng(0))
        with pytest.raises(ValueError):
            gf2.random_lower_triangular(4, 1.0, np.random.default_rng(0))


class TestSparseRandomMatrix:
    def test_p_one(self):
        M = gf2.sparse_random_matrix(3, 4, 1.0, np.random.default_rng(10))
        assert np.all(M.to_array() == 1)

    def test_density(self):
        M = gf2.sparse_random_matrix(200, 200, 0.5, np.random.default_rng(11))
        assert abs(M.to_array().mean() - 0.5) < 0.02

    def test_full_rank_trend(self):
        # l=512 with l + 2*ceil(log2 l) rows at density 1.5 ln(l)/l
        l = 512
        rows = l + math.ceil(2 * math.log2(l))
        p = 1.5 * math.log(l) / l
        rng = np.random.default_rng(12)
        ok = sum(
            gf2.rank(gf2.sparse_random_matrix(rows, l, p, rng)) == l for _ in range(100)
        )
        assert ok >= 90

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            gf2.sparse_random_matrix(2, 2, 0.0, np.random.default_rng(0))


class TestCompositions:
    def test_multiply_identity(self):
        B = bm([[1, 0], [0, 1], [1, 1]])
        assert gf2.multiply(gf2.BitMatrix.identity(3), B) == B

    def test_multiply_hand_case(self):
        A = bm([[1, 0], [1, 1], [0, 1]])
        B = bm([[1], [1]])
        assert gf2.multiply(A, B) == bm([[1], [0], [1]])

    def test_multiply_mismatch(self):
        with pytest.raises(ValueError):
            gf2.multiply(gf2.BitMatrix.identity(3), gf2.BitMatrix.identity(2))

    def test_direct_sum_identities(self):
        S = gf2.direct_sum(gf2.BitMatrix.identity(2), gf2.BitMatrix.identity(3))
        assert S == gf2.BitMatrix.identity(5)

    def test_direct_sum_rank_additive(self):
        A = bm([[1, 0], [0, 1], [1, 1]])  # rank 2
        B = gf2.BitMatrix.identity(3)
        assert gf2.rank(gf2.direct_sum(A, B)) == 5
        assert gf2.rank(gf2.direct_sum(gf2.BitMatrix.zeros(2, 2), gf2.BitMatrix.identity(2))) == 2

    def test_partition_round_trip(self):
        rng = np.random.default_rng(13)
        bits = rng.integers(0, 2, size=(4, 6)).astype(np.uint8)
        A = bm(bits)
        left, right = gf2.partition_columns(A, (3, 3))
        assert np.array_equal(
            np.hstack([left.to_array(), right.to_array()]), bits
        )
        (whole,) = gf2.partition_columns(A, (6,))
        assert whole == A

    def test_partition_identity_ranks(self):
        blocks = gf2.partition_columns(gf2.BitMatrix.identity(4), (2, 2))
        assert [gf2.rank(b) for b in blocks] == [2, 2]

    def test_partition_size_mismatch(self):
        with pytest.raises(ValueError):
            gf2.partition_columns(gf2.BitMatrix.identity(4), (2, 3))

    def test_full_rank_preserved(self):
        rng = np.random.default_rng(14)
        for _ in range(100):
            c = int(rng.integers(2, 20))
            r = c + int(rng.integers(0, 10))
            while True:
                A = gf2.BitMatrix(r, c, gf2.random_words(rng, r, c))
                if gf2.rank(A) == c:
                    break
            while True:
                B = gf2.BitMatrix(r + 5, r, gf2.random_words(rng, r + 5, r))
                if gf2.rank(B) == r:
                    break
            assert gf2.rank(gf2.multiply(B, A)) == c
            assert gf2.rank(gf2.direct_sum(A, A)) == 2 * c
