"""Compiled elimination kernels for GF(2) bit-packed and GF(2^m) byte matrices.

Bit packing is little-endian row-major: column j of a row lives in word
``j >> 6``, bit ``j & 63``.  Every row may carry extra words after the
coefficient words (augmented payload); row operations always cover the full
row width so augmented data is eliminated alongside the coefficients.

The GF(2) forward elimination uses 32-column pivot blocks with four 256-entry
combination tables (method of the four Russians), which is what makes dense
rank/solve at tens of thousands of columns feasible in about a second.  Inner
loops avoid data-dependent branches on fair-coin bits; a mispredicted branch
per matrix entry costs more than the unconditional masked XOR.
"""

from __future__ import annotations

import numpy as np
from numba import njit

ONE = np.uint64(1)


@njit(cache=True)
def gf2_eliminate(M, ncols):
    """Forward-eliminate packed matrix ``M`` in place.

    The first ``ceil(ncols / 64)`` words of each row are coefficient words;
    the rest are augmented.  Returns ``(rank, pivots)``; after the call rows
    ``[0:rank)`` are pivot rows in echelon order (identity pattern on pivot
    columns within each 16-column block) and rows ``[rank:)`` have an all-zero
    coefficient part.
    """
    m, w = M.shape
    maxr = min(m, ncols)
    pivots = np.empty(max(maxr, 1), dtype=np.int64)
    if m == 0 or ncols == 0:
        return 0, pivots
    tables = np.empty((4, 256, w), dtype=np.uint64)
    blk_w = np.empty(32, dtype=np.int64)
    blk_sh = np.empty(32, dtype=np.uint64)
    r = 0
    c = 0
    while c < ncols and r < m:
        cb_end = c + 32
        if cb_end > ncols:
            cb_end = ncols
        npiv = 0
        for cc in range(c, cb_end):
            wi = cc >> 6
            sh = np.uint64(cc & 63)
            mask = ONE << sh
            found = -1
            for i in range(r + npiv, m):
                bit = (M[i, wi] >> sh) & ONE
                # reduce virtually against gathered pivots (identity pattern
                # on gathered columns, so one round suffices)
                for b in range(npiv):
                    bit ^= ((M[i, blk_w[b]] >> blk_sh[b]) & ONE) & (
                        (M[r + b, wi] >> sh) & ONE
                    )
                if bit:
                    found = i
                    break
            if found < 0:
                continue
            # apply the virtual reduction for real
            for b in range(npiv):
                if (M[found, blk_w[b]] >> blk_sh[b]) & ONE:
                    for j in range(w):
                        M[found, j] ^= M[r + b, j]
            tgt = r + npiv
            if found != tgt:
                for j in range(w):
                    t = M[found, j]
                    M[found, j] = M[tgt, j]
                    M[tgt, j] = t
            # clear the new pivot column from earlier gathered rows
            for b in range(npiv):
                if M[r + b, wi] & mask:
                    for j in range(w):
                        M[r + b, j] ^= M[tgt, j]
            blk_w[npiv] = wi
            blk_sh[npiv] = sh
            pivots[tgt] = cc
            npiv += 1
            if r + npiv == m:
                break
        if npiv == 0:
            c = cb_end
            continue
        # combination tables over the gathered pivot rows, 8 rows per table
        ntab = (npiv + 7) >> 3
        for g in range(ntab):
            nbits = npiv - 8 * g
            if nbits > 8:
                nbits = 8
            for j in range(w):
                tables[g, 0, j] = np.uint64(0)
            for t in range(1, 1 << nbits):
                low = t & (-t)
                b = 0
                tt = low
                while tt > 1:
                    tt >>= 1
                    b += 1
                prev = t ^ low
                for j in range(w):
                    tables[g, t, j] = tables[g, prev, j] ^ M[r + 8 * g + b, j]
        # eliminate every row below the block via table lookups
        for i in range(r + npiv, m):
            pat = np.uint64(0)
            for b in range(npiv):
                pat |= ((M[i, blk_w[b]] >> blk_sh[b]) & ONE) << np.uint64(b)
            p0 = np.int64(pat & np.uint64(255))
            p1 = np.int64((pat >> np.uint64(8)) & np.uint64(255))
            p2 = np.int64((pat >> np.uint64(16)) & np.uint64(255))
            p3 = np.int64((pat >> np.uint64(24)) & np.uint64(255))
            if ntab == 4:
                for j in range(w):
                    M[i, j] ^= (
                        tables[0, p0, j]
                        ^ tables[1, p1, j]
                        ^ tables[2, p2, j]
                        ^ tables[3, p3, j]
                    )
            elif ntab == 3:
                for j in range(w):
                    M[i, j] ^= tables[0, p0, j] ^ tables[1, p1, j] ^ tables[2, p2, j]
            elif ntab == 2:
                for j in range(w):
                    M[i, j] ^= tables[0, p0, j] ^ tables[1, p1, j]
            else:
                for j in range(w):
                    M[i, j] ^= tables[0, p0, j]
        r += npiv
        c = cb_end
    return r, pivots


@njit(cache=True)
def gf2_eliminate_rev(M, ncols):
    """Forward-eliminate packed ``M`` in place, pivoting columns from the
    highest down.

    Identical contract to gf2_eliminate except for the pivot column order
    (pivots come out in descending column order).  As elimination proceeds
    the untouched coefficient region shrinks from the high end, so row-wide
    loops run over a prefix ``range(wend)`` — which vectorizes — instead of
    a suffix, roughly halving memory traffic on large systems.
    """
    m, w = M.shape
    w_coef = (ncols + 63) >> 6
    maxr = min(m, ncols)
    pivots = np.empty(max(maxr, 1), dtype=np.int64)
    if m == 0 or ncols == 0:
        return 0, pivots
    tables = np.empty((4, 256, w), dtype=np.uint64)
    blk_w = np.empty(32, dtype=np.int64)
    blk_sh = np.empty(32, dtype=np.uint64)
    naug = w - w_coef
    r = 0
    c_hi = ncols  # columns >= c_hi are already processed
    while c_hi > 0 and r < m:
        cb_start = c_hi - 32
        if cb_start < 0:
            cb_start = 0
        wend = ((c_hi - 1) >> 6) + 1  # live coefficient words
        npiv = 0
        for cc in range(c_hi - 1, cb_start - 1, -1):
            wi = cc >> 6
            sh = np.uint64(cc & 63)
            mask = ONE << sh
            found = -1
            for i in range(r + npiv, m):
                bit = (M[i, wi] >> sh) & ONE
                for b in range(npiv):
                    bit ^= ((M[i, blk_w[b]] >> blk_sh[b]) & ONE) & (
                        (M[r + b, wi] >> sh) & ONE
                    )
                if bit:
                    found = i
                    break
            if found < 0:
                continue
            for b in range(npiv):
                if (M[found, blk_w[b]] >> blk_sh[b]) & ONE:
                    for j in range(wend):
                        M[found, j] ^= M[r + b, j]
                    for j in range(naug):
                        M[found, w_coef + j] ^= M[r + b, w_coef + j]
            tgt = r + npiv
            if found != tgt:
                for j in range(w):
                    t = M[found, j]
                    M[found, j] = M[tgt, j]
                    M[tgt, j] = t
            for b in range(npiv):
                if M[r + b, wi] & mask:
                    for j in range(wend):
                        M[r + b, j] ^= M[tgt, j]
                    for j in range(naug):
                        M[r + b, w_coef + j] ^= M[tgt, w_coef + j]
            blk_w[npiv] = wi
            blk_sh[npiv] = sh
            pivots[tgt] = cc
            npiv += 1
            if r + npiv == m:
                break
        if npiv == 0:
            c_hi = cb_start
            continue
        ntab = (npiv + 7) >> 3
        for g in range(ntab):
            nbits = npiv - 8 * g
            if nbits > 8:
                nbits = 8
            for j in range(wend):
                tables[g, 0, j] = np.uint64(0)
            for j in range(naug):
                tables[g, 0, w_coef + j] = np.uint64(0)
            for t in range(1, 1 << nbits):
                low = t & (-t)
                b = 0
                tt = low
                while tt > 1:
                    tt >>= 1
                    b += 1
                prev = t ^ low
                for j in range(wend):
                    tables[g, t, j] = tables[g, prev, j] ^ M[r + 8 * g + b, j]
                for j in range(naug):
                    tables[g, t, w_coef + j] = (
                        tables[g, prev, w_coef + j] ^ M[r + 8 * g + b, w_coef + j]
                    )
        for i in range(r + npiv, m):
            pat = np.uint64(0)
            for b in range(npiv):
                pat |= ((M[i, blk_w[b]] >> blk_sh[b]) & ONE) << np.uint64(b)
            p0 = np.int64(pat & np.uint64(255))
            p1 = np.int64((pat >> np.uint64(8)) & np.uint64(255))
            p2 = np.int64((pat >> np.uint64(16)) & np.uint64(255))
            p3 = np.int64((pat >> np.uint64(24)) & np.uint64(255))
            if ntab == 4:
                for j in range(wend):
                    M[i, j] ^= (
                        tables[0, p0, j]
                        ^ tables[1, p1, j]
                        ^ tables[2, p2, j]
                        ^ tables[3, p3, j]
                    )
                for j in range(naug):
                    M[i, w_coef + j] ^= (
                        tables[0, p0, w_coef + j]
                        ^ tables[1, p1, w_coef + j]
                        ^ tables[2, p2, w_coef + j]
                        ^ tables[3, p3, w_coef + j]
                    )
            elif ntab == 3:
                for j in range(wend):
                    M[i, j] ^= tables[0, p0, j] ^ tables[1, p1, j] ^ tables[2, p2, j]
                for j in range(naug):
                    M[i, w_coef + j] ^= (
                        tables[0, p0, w_coef + j]
                        ^ tables[1, p1, w_coef + j]
                        ^ tables[2, p2, w_coef + j]
                    )
            elif ntab == 2:
                for j in range(wend):
                    M[i, j] ^= tables[0, p0, j] ^ tables[1, p1, j]
                for j in range(naug):
                    M[i, w_coef + j] ^= (
                        tables[0, p0, w_coef + j] ^ tables[1, p1, w_coef + j]
                    )
            else:
                for j in range(wend):
                    M[i, j] ^= tables[0, p0, j]
                for j in range(naug):
                    M[i, w_coef + j] ^= tables[0, p0, w_coef + j]
        r += npiv
        c_hi = cb_start
    return r, pivots


@njit(cache=True)
def gf2_rows_zero(M, row_start, w_from, w_to):
    """True if all rows from ``row_start`` are zero over words [w_from, w_to)."""
    m = M.shape[0]
    for i in range(row_start, m):
        for j in range(w_from, w_to):
            if M[i, j]:
                return False
    return True


@njit(cache=True)
def gf2_back_substitute(M, pivots, rank, ncols, w_coef):
    """Augmented-part solution of an eliminated system, free variables = 0.

    Returns ``sol`` of shape (ncols, w - w_coef); row ``pivots[i]`` holds the
    augmented words of the solution for that variable.
    """
    w = M.shape[1]
    naug = w - w_coef
    sol = np.zeros((ncols, naug), dtype=np.uint64)
    if naug == 1:
        flat = np.zeros(max(rank, 1), dtype=np.uint64)
        for i in range(rank - 1, -1, -1):
            acc = M[i, w_coef]
            for t in range(i + 1, rank):
                p2 = pivots[t]
                bit = (M[i, p2 >> 6] >> np.uint64(p2 & 63)) & ONE
                acc ^= flat[t] & (np.uint64(0) - bit)
            flat[i] = acc
            sol[pivots[i], 0] = acc
        return sol
    for i in range(rank - 1, -1, -1):
        pc = pivots[i]
        for a in range(naug):
            sol[pc, a] = M[i, w_coef + a]
        for t in range(i + 1, rank):
            p2 = pivots[t]
            bit = (M[i, p2 >> 6] >> np.uint64(p2 & 63)) & ONE
            msk = np.uint64(0) - bit
            for a in range(naug):
                sol[pc, a] ^= sol[p2, a] & msk
    return sol


@njit(cache=True)
def gf2_kernel_basis(M, pivots, rank, ncols, free_cols):
    """Null-space basis of the coefficient part of an eliminated matrix.

    Basis vector ``b`` has a 1 at ``free_cols[b]``; its value at column
    ``col`` is bit ``b`` of the packed row ``K[col]``.  Shape of ``K`` is
    (ncols, ceil(nfree / 64)).
    """
    nfree = free_cols.size
    kw = max((nfree + 63) >> 6, 1)
    K = np.zeros((ncols, kw), dtype=np.uint64)
    for b in range(nfree):
        K[free_cols[b], b >> 6] |= ONE << np.uint64(b & 63)
    # pivot-row kernel values packed by echelon index for a branch-free pass
    P = np.zeros((max(rank, 1), kw), dtype=np.uint64)
    acc = np.empty(kw, dtype=np.uint64)
    for i in range(rank - 1, -1, -1):
        pc = pivots[i]
        for j in range(kw):
            acc[j] = np.uint64(0)
        for b in range(nfree):
            f = free_cols[b]
            # row i only holds bits at free columns processed after it was
            # fixed; a plain bit test is correct for either pivot order
            if (M[i, f >> 6] >> np.uint64(f & 63)) & ONE:
                acc[b >> 6] ^= ONE << np.uint64(b & 63)
        if kw == 1:
            a0 = acc[0]
            for t in range(i + 1, rank):
                p2 = pivots[t]
                bit = (M[i, p2 >> 6] >> np.uint64(p2 & 63)) & ONE
                a0 ^= P[t, 0] & (np.uint64(0) - bit)
            P[i, 0] = a0
            K[pc, 0] = a0
        else:
            for t in range(i + 1, rank):
                p2 = pivots[t]
                bit = (M[i, p2 >> 6] >> np.uint64(p2 & 63)) & ONE
                msk = np.uint64(0) - bit
                for j in range(kw):
                    acc[j] ^= P[t, j] & msk
            for j in range(kw):
                P[i, j] = acc[j]
                K[pc, j] = acc[j]
    return K


@njit(cache=True)
def gf2_matmul(A, ncolsA, B, wout):
    """Packed GF(2) product: row i of C is the XOR of rows of B selected by
    the set bits of row i of A (first ncolsA columns)."""
    rows = A.shape[0]
    C = np.zeros((rows, wout), dtype=np.uint64)
    for i in range(rows):
        for j in range(ncolsA):
            if (A[i, j >> 6] >> np.uint64(j & 63)) & ONE:
                for t in range(wout):
                    C[i, t] ^= B[j, t]
    return C


@njit(cache=True)
def gf2_xor_select(rows, mask_words, nsel, out):
    """XOR together rows[i] for every i < nsel whose bit is set in the packed
    mask; accumulates into ``out`` (caller zeroes it)."""
    w = rows.shape[1]
    if w == 1:
        acc = np.uint64(0)
        for i in range(nsel):
            bit = (mask_words[i >> 6] >> np.uint64(i & 63)) & ONE
            acc ^= rows[i, 0] & (np.uint64(0) - bit)
        out[0] ^= acc
        return
    for i in range(nsel):
        bit = (mask_words[i >> 6] >> np.uint64(i & 63)) & ONE
        msk = np.uint64(0) - bit
        for j in range(w):
            out[j] ^= rows[i, j] & msk


# ---------------------------------------------------------------------------
# GF(2^m) byte-matrix kernels (full multiplication-table arithmetic)
# ---------------------------------------------------------------------------


@njit(cache=True)
def gfq_eliminate(M, ncols, multable, invtable):
    """Forward-eliminate byte matrix over GF(2^m) in place; columns beyond
    ``ncols`` are augmented.  Pivot rows are normalized to leading 1.
    Returns (rank, pivots)."""
    m, w = M.shape
    maxr = min(m, ncols)
    pivots = np.empty(max(maxr, 1), dtype=np.int64)
    r = 0
    for c in range(ncols):
        piv = -1
        for i in range(r, m):
            if M[i, c]:
                piv = i
                break
        if piv < 0:
            continue
        if piv != r:
            for j in range(c, w):
                t = M[piv, j]
                M[piv, j] = M[r, j]
                M[r, j] = t
        a = M[r, c]
        if a != 1:
            inv = invtable[a]
            row = multable[inv]
            for j in range(c, w):
                M[r, j] = row[M[r, j]]
        for i in range(r + 1, m):
            f = M[i, c]
            if f:
                row = multable[f]
                for j in range(c, w):
                    M[i, j] ^= row[M[r, j]]
        pivots[r] = c
        r += 1
        if r == m:
            break
    return r, pivots


@njit(cache=True)
def gfq_rows_zero(M, row_start, c_from, c_to):
    m = M.shape[0]
    for i in range(row_start, m):
        for j in range(c_from, c_to):
            if M[i, j]:
                return False
    return True


@njit(cache=True)
def gfq_back_substitute(M, pivots, rank, ncols, multable):
    """Augmented-part solution with free variables = 0; shape (ncols, naug)."""
    w = M.shape[1]
    naug = w - ncols
    sol = np.zeros((ncols, naug), dtype=np.uint8)
    for i in range(rank - 1, -1, -1):
        pc = pivots[i]
        for a in range(naug):
            sol[pc, a] = M[i, ncols + a]
        for t in range(i + 1, rank):
            p2 = pivots[t]
            f = M[i, p2]
            if f:
                row = multable[f]
                for a in range(naug):
                    sol[pc, a] ^= row[sol[p2, a]]
    return sol


@njit(cache=True)
def gfq_kernel_basis(M, pivots, rank, ncols, free_cols, multable):
    """Null-space basis; basis vector b has value 1 at free_cols[b].
    Returns (ncols, nfree) uint8."""
    nfree = free_cols.size
    K = np.zeros((ncols, max(nfree, 1)), dtype=np.uint8)
    for b in range(nfree):
        K[free_cols[b], b] = 1
    for i in range(rank - 1, -1, -1):
        pc = pivots[i]
        for b in range(nfree):
            f = free_cols[b]
            if f > pc and M[i, f]:
                K[pc, b] ^= M[i, f]
        for t in range(i + 1, rank):
            p2 = pivots[t]
            f = M[i, p2]
            if f:
                row = multable[f]
                for b in range(nfree):
                    K[pc, b] ^= row[K[p2, b]]
    return K


@njit(cache=True)
def gfq_dot(coeffs, payloads, multable):
    """out[b] = sum_i coeffs[i] * payloads[i, b] over GF(2^m)."""
    n, ps = payloads.shape
    out = np.zeros(ps, dtype=np.uint8)
    for i in range(n):
        f = coeffs[i]
        if f:
            row = multable[f]
            for b in range(ps):
                out[b] ^= row[payloads[i, b]]
    return out
