"""Dense bit-packed linear algebra over GF(2).

Provides rank, solving, the random matrix ensembles used by the coding
schemes (random lower-triangular, i.i.d. sparse), and the rank-preserving
compositions used for general networks (product, direct sum, column
partition).
"""

from __future__ import annotations

import math

import numpy as np

from ._kernels import (
    gf2_back_substitute,
    gf2_eliminate,
    gf2_kernel_basis,
    gf2_matmul,
    gf2_rows_zero,
)

__all__ = [
    "BitMatrix",
    "BitVector",
    "rank",
    "solve",
    "kernel_size",
    "random_lower_triangular",
    "sparse_random_matrix",
    "multiply",
    "direct_sum",
    "partition_columns",
    "extra_rows",
]

_WORD = 64


def _nwords(ncols: int) -> int:
    return max((ncols + _WORD - 1) // _WORD, 1)


def _tail_mask(ncols: int) -> np.uint64:
    rem = ncols % _WORD
    if rem == 0:
        return np.uint64(0xFFFFFFFFFFFFFFFF)
    return np.uint64((1 << rem) - 1)


def pack_rows(bits) -> np.ndarray:
    """Pack a (rows, cols) 0/1 array into little-endian uint64 words."""
    arr = np.asarray(bits, dtype=np.uint8)
    if arr.ndim != 2:
        raise ValueError("expected a 2-D bit array")
    rows, cols = arr.shape
    nw = _nwords(cols)
    packed = np.packbits(arr, axis=1, bitorder="little")
    padded = np.zeros((rows, nw * 8), dtype=np.uint8)
    padded[:, : packed.shape[1]] = packed
    return padded.view(np.uint64).reshape(rows, nw)


def unpack_rows(words: np.ndarray, ncols: int) -> np.ndarray:
    """Inverse of pack_rows; returns a (rows, ncols) uint8 array."""
    rows = words.shape[0]
    as_bytes = words.reshape(rows, -1).view(np.uint8)
    bits = np.unpackbits(as_bytes, axis=1, bitorder="little")
    return bits[:, :ncols].copy()


def random_words(rng: np.random.Generator, rows: int, ncols: int) -> np.ndarray:
    """Fair-coin packed rows with clean tail bits."""
    nw = _nwords(ncols)
    raw = rng.bytes(rows * nw * 8)
    words = np.frombuffer(raw, dtype=np.uint64).reshape(rows, nw).copy()
    words[:, -1] &= _tail_mask(ncols)
    return words


class CoinRows:
    """Fair-coin packed rows drawn one at a time from block-buffered
    generator output; cheaper than one generator call per row."""

    __slots__ = ("rng", "buf", "pos")

    def __init__(self, rng: np.random.Generator, block_words: int = 8192):
        self.rng = rng
        self.buf = np.frombuffer(rng.bytes(block_words * 8), dtype=np.uint64)
        self.pos = 0

    def next(self, ncols: int) -> np.ndarray:
        nw = _nwords(ncols)
        if self.pos + nw > len(self.buf):
            block = max(len(self.buf), 2 * nw)
            self.buf = np.frombuffer(self.rng.bytes(block * 8), dtype=np.uint64)
            self.pos = 0
        row = self.buf[self.pos : self.pos + nw].copy()
        self.pos += nw
        row[-1] &= _tail_mask(ncols)
        return row


class BitMatrix:
    """Dense matrix over GF(2), rows packed into uint64 words.

    Bits beyond ``cols`` in the last word of each row are kept zero.
    """

    __slots__ = ("rows", "cols", "words")

    def __init__(self, rows: int, cols: int, words: np.ndarray | None = None):
        if rows < 0 or cols < 0:
            raise ValueError("negative dimensions")
        self.rows = rows
        self.cols = cols
        if words is None:
            words = np.zeros((rows, _nwords(cols)), dtype=np.uint64)
        self.words = words

    @classmethod
    def from_rows(cls, bits) -> "BitMatrix":
        arr = np.atleast_2d(np.asarray(bits, dtype=np.uint8))
        return cls(arr.shape[0], arr.shape[1], pack_rows(arr))

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls.from_rows(np.eye(n, dtype=np.uint8))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BitMatrix":
        return cls(rows, cols)

    def to_array(self) -> np.ndarray:
        return unpack_rows(self.words, self.cols)

    def get(self, i: int, j: int) -> int:
        return int((self.words[i, j >> 6] >> np.uint64(j & 63)) & np.uint64(1))

    def set(self, i: int, j: int, v: int) -> None:
        mask = np.uint64(1) << np.uint64(j & 63)
        if v:
            self.words[i, j >> 6] |= mask
        else:
            self.words[i, j >> 6] &= ~mask

    def copy(self) -> "BitMatrix":
        return BitMatrix(self.rows, self.cols, self.words.copy())

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BitMatrix)
            and self.rows == other.rows
            and self.cols == other.cols
            and bool(np.array_equal(self.words, other.words))
        )

    def __repr__(self) -> str:
        return f"BitMatrix({self.rows}x{self.cols})"


class BitVector:
    """Column vector over GF(2)."""

    __slots__ = ("len", "words")

    def __init__(self, length: int, words: np.ndarray | None = None):
        self.len = length
        if words is None:
            words = np.zeros(_nwords(length), dtype=np.uint64)
        self.words = words

    @classmethod
    def from_bits(cls, bits) -> "BitVector":
        arr = np.asarray(bits, dtype=np.uint8).reshape(1, -1)
        return cls(arr.shape[1], pack_rows(arr)[0])

    def to_array(self) -> np.ndarray:
        return unpack_rows(self.words.reshape(1, -1), self.len)[0]

    def get(self, i: int) -> int:
        return int((self.words[i >> 6] >> np.uint64(i & 63)) & np.uint64(1))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BitVector)
            and self.len == other.len
            and bool(np.array_equal(self.words, other.words))
        )

    def __repr__(self) -> str:
        return f"BitVector({list(self.to_array())})"


def rank(M: BitMatrix) -> int:
    r, _ = gf2_eliminate(M.words.copy(), M.cols)
    return r


def solve(A: BitMatrix, y: BitVector):
    """Solve A x = y.  Returns the unique BitVector solution when A has full
    column rank and the system is consistent; None otherwise (SINGULAR)."""
    if A.rows != y.len:
        raise ValueError(f"A has {A.rows} rows but y has length {y.len}")
    wc = _nwords(A.cols)
    aug = np.zeros((A.rows, wc + 1), dtype=np.uint64)
    aug[:, :wc] = A.words
    ybits = y.to_array()
    aug[:, wc] = ybits.astype(np.uint64)
    r, pivots = gf2_eliminate(aug, A.cols)
    if r < A.cols:
        return None
    if not gf2_rows_zero(aug, r, wc, wc + 1):
        return None
    sol = gf2_back_substitute(aug, pivots, r, A.cols, wc)
    return BitVector.from_bits((sol[:, 0] & np.uint64(1)).astype(np.uint8))


def kernel_size(M: BitMatrix, max_cols: int = 30) -> int:
    """|{x : Mx = 0}| = 2^(cols - rank); restricted to small widths so the
    count fits comfortably in a machine word."""
    if M.cols > max_cols:
        raise ValueError(f"kernel_size limited to {max_cols} columns, got {M.cols}")
    return 1 << (M.cols - rank(M))


def extra_rows(k: int, c: float) -> int:
    """Row surplus ceil(c * log2(k)) used by the lower-triangular ensemble."""
    if k <= 1:
        return 0
    return math.ceil(c * math.log2(k))


def random_lower_triangular(k: int, c: float, rng: np.random.Generator) -> BitMatrix:
    """(k + ceil(c*log2 k)) x k matrix, zero above the diagonal in the first
    k rows, everything else i.i.d. fair-coin."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if c <= 1:
        raise ValueError("c must be > 1")
    rows = k + extra_rows(k, c)
    words = random_words(rng, rows, k)
    words[:k] &= _lower_triangle_masks(k)
    return BitMatrix(rows, k, words)


def _lower_triangle_masks(k: int) -> np.ndarray:
    """Row i of the result keeps columns 0..i and clears the rest."""
    global _LT_MASK_CACHE
    cached = _LT_MASK_CACHE
    if cached is not None and cached.shape[0] == k:
        return cached
    nw = _nwords(k)
    i = np.arange(k).reshape(-1, 1)
    t = np.arange(nw).reshape(1, -1)
    lo = t * 64
    nbits = np.clip(i - lo + 1, 0, 64)
    full = np.uint64(0xFFFFFFFFFFFFFFFF)
    masks = np.where(
        nbits >= 64, full, (np.uint64(1) << nbits.astype(np.uint64)) - np.uint64(1)
    )
    _LT_MASK_CACHE = masks
    return masks


_LT_MASK_CACHE: np.ndarray | None = None


def sparse_random_matrix(
    rows: int, cols: int, p: float, rng: np.random.Generator
) -> BitMatrix:
    """Entries i.i.d. Bernoulli(p)."""
    if not 0 < p <= 1:
        raise ValueError("p must be in (0, 1]")
    bits = (rng.random((rows, cols)) < p).astype(np.uint8)
    return BitMatrix(rows, cols, pack_rows(bits))


def multiply(A: BitMatrix, B: BitMatrix) -> BitMatrix:
    if A.cols != B.rows:
        raise ValueError(f"dimension mismatch: {A.cols} != {B.rows}")
    wout = _nwords(B.cols)
    C = gf2_matmul(A.words, A.cols, B.words, wout)
    return BitMatrix(A.rows, B.cols, C)


def direct_sum(A: BitMatrix, B: BitMatrix) -> BitMatrix:
    rows = A.rows + B.rows
    cols = A.cols + B.cols
    out = BitMatrix(rows, cols)
    a = A.to_array()
    b = B.to_array()
    dense = np.zeros((rows, cols), dtype=np.uint8)
    dense[: A.rows, : A.cols] = a
    dense[A.rows :, A.cols :] = b
    out.words = pack_rows(dense)
    return out


def partition_columns(A: BitMatrix, sizes) -> list[BitMatrix]:
    sizes = list(sizes)
    if sum(sizes) != A.cols:
        raise ValueError(f"sizes sum to {sum(sizes)}, expected {A.cols}")
    dense = A.to_array()
    blocks = []
    start = 0
    for s in sizes:
        blocks.append(BitMatrix.from_rows(dense[:, start : start + s]))
        start += s
    return blocks
