"""GF(2^m) arithmetic tables for field sizes q in {2, 4, 16, 256}.

Coefficients are byte values < q; addition is XOR; multiplication goes
through a precomputed table so the elimination kernels run branch-light.
Payload bytes pack 8/m independent field symbols (m bits each), and a
coefficient acts on every packed group at once, so the same byte-wise table
lookup serves both coefficient and payload columns.  That packing is why
only fields whose symbol width divides a byte are supported.  Backs the
dense GF(q) random-combination scheme and its receiver-side elimination.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from ._kernels import (
    gfq_back_substitute,
    gfq_dot,
    gfq_eliminate,
    gfq_kernel_basis,
    gfq_rows_zero,
)

__all__ = ["GFTables", "field", "gfq_rank", "gfq_solve_stage"]

_PRIMITIVE_POLY = {2: 0x3, 4: 0x7, 16: 0x13, 256: 0x11D}


class GFTables:
    """Multiplication and inverse tables of GF(q)."""

    __slots__ = ("q", "mul_table", "inv_table")

    def __init__(self, q: int):
        if q not in _PRIMITIVE_POLY:
            raise ValueError(f"q must be one of {sorted(_PRIMITIVE_POLY)}, got {q}")
        self.q = q
        poly = _PRIMITIVE_POLY[q]
        qm1 = q - 1
        exp = np.zeros(2 * qm1, dtype=np.int64)
        log = np.zeros(q, dtype=np.int64)
        x = 1
        for i in range(qm1):
            exp[i] = x
            exp[i + qm1] = x
            log[x] = i
            x <<= 1
            if x & q:
                x ^= poly
        small = np.zeros((q, q), dtype=np.uint8)
        for a in range(1, q):
            for b in range(1, q):
                small[a, b] = exp[log[a] + log[b]]
        # extend columns to all byte values: a byte packs 8/m field symbols
        # and the coefficient multiplies each packed group independently
        m_bits = qm1.bit_length()
        groups = 8 // m_bits
        mul = np.zeros((256, 256), dtype=np.uint8)
        b = np.arange(256, dtype=np.int64)
        for a in range(1, q):
            acc = np.zeros(256, dtype=np.int64)
            for g in range(groups):
                sub = (b >> (g * m_bits)) & qm1
                acc |= small[a, sub].astype(np.int64) << (g * m_bits)
            mul[a] = acc
        inv = np.zeros(256, dtype=np.uint8)
        for a in range(1, q):
            inv[a] = exp[qm1 - log[a]]
        self.mul_table = mul
        self.inv_table = inv

    def mul(self, a: int, b: int) -> int:
        return int(self.mul_table[a, b])

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("inverse of 0")
        return int(self.inv_table[a])

    def dot(self, coeffs: np.ndarray, payloads: np.ndarray) -> np.ndarray:
        return gfq_dot(coeffs, payloads, self.mul_table)


@lru_cache(maxsize=None)
def field(q: int) -> GFTables:
    return GFTables(q)


def gfq_rank(M: np.ndarray, ncols: int, gf: GFTables) -> int:
    r, _ = gfq_eliminate(M.copy(), ncols, gf.mul_table, gf.inv_table)
    return r


def gfq_solve_stage(M: np.ndarray, ncols: int, gf: GFTables):
    """Eliminate an augmented byte system in place; return the affine
    solution set.

    Returns (y0, K, free_cols) with the full solution set
    {y0 + K t : t free} over the first ``ncols`` columns, or None when the
    augmented part is inconsistent.
    """
    m, w = M.shape
    r, pivots = gfq_eliminate(M, ncols, gf.mul_table, gf.inv_table)
    if not gfq_rows_zero(M, r, ncols, w):
        return None
    y0 = gfq_back_substitute(M, pivots, r, ncols, gf.mul_table)
    pivset = set(int(pivots[i]) for i in range(r))
    free = np.array([c for c in range(ncols) if c not in pivset], dtype=np.int64)
    K = gfq_kernel_basis(M, pivots, r, ncols, free, gf.mul_table)
    return y0, K, free
