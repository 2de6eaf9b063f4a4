"""LT-style fountain coding: robust-soliton degree distribution, rateless
encoder, incremental peeling decoder with a dense-elimination fallback, and
parity generation for the fixed systematic relay scheme.

Payloads are byte strings of a fixed per-run size; internally they travel as
little-endian integers so XOR is a single machine operation for small sizes.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from ._kernels import gf2_back_substitute, gf2_eliminate_rev, gf2_rows_zero

__all__ = [
    "DegreeDistribution",
    "EncodedSymbol",
    "Incomplete",
    "InconsistentSymbols",
    "robust_soliton",
    "parity_degree_distribution",
    "lt_encode_next",
    "peel_decode",
    "gaussian_fallback_decode",
    "systematic_parity",
    "IncrementalPeeler",
]


class InconsistentSymbols(Exception):
    """Two resolutions of the same source index disagree (corrupted input)."""


@dataclass
class Incomplete:
    """Peeling stalled; ``partial`` maps resolved source index -> payload."""

    partial: dict


@dataclass(frozen=True)
class EncodedSymbol:
    """A coded symbol: XOR of the source symbols listed in ``neighbors``."""

    neighbors: tuple
    payload: bytes


class DegreeDistribution:
    """Discrete distribution over symbol degrees in [1, k]."""

    __slots__ = ("degrees", "masses", "_cdf")

    def __init__(self, pairs):
        pairs = [(int(d), float(m)) for d, m in pairs if m > 0]
        if not pairs:
            raise ValueError("empty distribution")
        pairs.sort()
        self.degrees = np.array([d for d, _ in pairs], dtype=np.int64)
        self.masses = np.array([m for _, m in pairs], dtype=np.float64)
        total = self.masses.sum()
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"masses sum to {total}, expected 1")
        if self.degrees[0] < 1:
            raise ValueError("degrees must be >= 1")
        self._cdf = np.cumsum(self.masses)
        self._cdf[-1] = 1.0

    def sample(self, rng: np.random.Generator) -> int:
        i = int(np.searchsorted(self._cdf, rng.random(), side="right"))
        return int(self.degrees[min(i, len(self.degrees) - 1)])

    def mode_degree(self) -> int:
        return int(self.degrees[int(np.argmax(self.masses))])


def robust_soliton(k: int, c_rs: float = 0.03, delta_rs: float = 0.5) -> DegreeDistribution:
    """Robust soliton distribution over degrees 1..k.

    The spike lands at round(k / R) with R = c_rs * ln(k / delta_rs) * sqrt(k).
    For k = 1 the distribution collapses to degree 1.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if c_rs <= 0:
        raise ValueError("c_rs must be > 0")
    if not 0 < delta_rs < 1:
        raise ValueError("delta_rs must be in (0, 1)")
    if k == 1:
        return DegreeDistribution([(1, 1.0)])
    rho = np.zeros(k + 1)
    rho[1] = 1.0 / k
    d = np.arange(2, k + 1)
    rho[2:] = 1.0 / (d * (d - 1.0))
    tau = np.zeros(k + 1)
    R = c_rs * math.log(k / delta_rs) * (k ** 0.5)
    spike = int(round(k / R))
    if spike < 1:
        spike = 1
    if spike > k:
        spike = k
    for i in range(1, spike):
        tau[i] = R / (i * k)
    tau[spike] = R * math.log(R / delta_rs) / k if R > delta_rs else 0.0
    weights = rho + tau
    weights[weights < 0] = 0.0
    total = weights.sum()
    return DegreeDistribution([(i, weights[i] / total) for i in range(1, k + 1)])


def parity_degree_distribution(
    k: int, missing: int, c_rs: float = 0.03, delta_rs: float = 0.5
) -> DegreeDistribution:
    """Degree distribution for parities protecting ``missing`` erasures out
    of k systematic symbols: a robust soliton over the missing count with
    degrees rescaled to the full block, so the parity set restricted to the
    missed positions peels like a fountain code.  (A soliton over k itself
    leaves a constant fraction of missed symbols uncovered.)"""
    if not 1 <= missing <= k:
        raise ValueError("need 1 <= missing <= k")
    base = robust_soliton(missing, c_rs, delta_rs)
    agg: dict = {}
    for d, mass in zip(base.degrees, base.masses):
        deg = min(int(round(int(d) * k / missing)), k)
        agg[max(deg, 1)] = agg.get(max(deg, 1), 0.0) + float(mass)
    return DegreeDistribution(sorted(agg.items()))


def xor_payloads(a: bytes, b: bytes) -> bytes:
    n = len(a)
    return (int.from_bytes(a, "little") ^ int.from_bytes(b, "little")).to_bytes(n, "little")


def lt_encode_next(
    source: list, dist: DegreeDistribution, rng: np.random.Generator
) -> EncodedSymbol:
    """Draw one rateless coded symbol: degree from ``dist``, neighbors uniform
    without replacement, payload the XOR of the chosen source symbols."""
    k = len(source)
    if k == 0:
        raise ValueError("source must be nonempty")
    d = min(dist.sample(rng), k)
    idx = rng.choice(k, size=d, replace=False)
    idx = tuple(sorted(int(i) for i in idx))
    acc = 0
    n = len(source[0])
    for i in idx:
        acc ^= int.from_bytes(source[i], "little")
    return EncodedSymbol(idx, acc.to_bytes(n, "little"))


class IncrementalPeeler:
    """Streaming peeling decoder over k source symbols with integer payloads.

    ``add`` folds in one equation and peels as far as possible.  When the
    ripple dies, ``try_elimination`` solves the residual system densely; this
    is what keeps decode overhead near the maximum-likelihood limit instead
    of the several-percent overhead of pure peeling.
    """

    def __init__(self, k: int, payload_size: int = 1):
        self.k = k
        self.payload_size = payload_size
        self.values = [None] * k
        self.resolved = 0
        self.equations = []  # list of [set(neighbors), payload_int] or None
        self.index = [set() for _ in range(k)]  # unknown -> live equation ids
        self.xor_ops = 0

    def done(self) -> bool:
        return self.resolved == self.k

    def symbols(self) -> list:
        if not self.done():
            raise ValueError("not fully decoded")
        n = self.payload_size
        return [v.to_bytes(n, "little") for v in self.values]

    def add(self, neighbors, payload_int: int) -> None:
        """Insert one equation (XOR of the given source indices = payload)."""
        nb = set()
        val = payload_int
        for i in neighbors:
            v = self.values[i]
            if v is None:
                nb.add(i)
            else:
                val ^= v
                self.xor_ops += 1
        eq_id = len(self.equations)
        if not nb:
            if val != 0:
                raise InconsistentSymbols(f"zero equation with payload {val}")
            self.equations.append(None)
            return
        self.equations.append([nb, val])
        for i in nb:
            self.index[i].add(eq_id)
        if len(nb) == 1:
            self._peel(deque([eq_id]))

    def _peel(self, ripple: deque) -> None:
        while ripple:
            eq_id = ripple.popleft()
            eq = self.equations[eq_id]
            if eq is None or len(eq[0]) != 1:
                continue
            (i,) = eq[0]
            self._resolve(i, eq[1], ripple)

    def _resolve(self, i: int, val: int, ripple: deque) -> None:
        if self.values[i] is not None:
            if self.values[i] != val:
                raise InconsistentSymbols(f"index {i} resolved twice differently")
            return
        self.values[i] = val
        self.resolved += 1
        for eq_id in list(self.index[i]):
            eq = self.equations[eq_id]
            if eq is None:
                continue
            eq[0].discard(i)
            eq[1] ^= val
            self.xor_ops += 1
            if not eq[0]:
                if eq[1] != 0:
                    raise InconsistentSymbols("conflicting equations")
                self.equations[eq_id] = None
            elif len(eq[0]) == 1:
                ripple.append(eq_id)
        self.index[i] = set()

    def try_elimination(self) -> bool:
        """Attempt to finish via dense elimination of the residual system.

        Returns True when every source symbol is now resolved.  Partial rank
        progress is kept: any unknown pinned down uniquely by the residual
        system is folded back in and peeling resumes.
        """
        if self.done():
            return True
        live = [(eid, eq) for eid, eq in enumerate(self.equations) if eq is not None]
        unknowns = sorted({i for _, eq in live for i in eq[0]})
        if len(live) < len(unknowns) or self.resolved + len(unknowns) < self.k:
            return False
        col = {u: j for j, u in enumerate(unknowns)}
        ncols = len(unknowns)
        wc = max((ncols + 63) >> 6, 1)
        naug = max((self.payload_size * 8 + 63) >> 6, 1)
        M = np.zeros((len(live), wc + naug), dtype=np.uint64)
        for r, (_, eq) in enumerate(live):
            for i in eq[0]:
                j = col[i]
                M[r, j >> 6] |= np.uint64(1) << np.uint64(j & 63)
            val = eq[1]
            for a in range(naug):
                M[r, wc + a] = np.uint64((val >> (64 * a)) & 0xFFFFFFFFFFFFFFFF)
        rank, pivots = gf2_eliminate_rev(M, ncols)
        self.xor_ops += len(live) * wc
        if not gf2_rows_zero(M, rank, wc, wc + naug):
            raise InconsistentSymbols("residual system inconsistent")
        if rank < ncols:
            return False
        sol = gf2_back_substitute(M, pivots, rank, ncols, wc)
        ripple = deque()
        for u in unknowns:
            val = 0
            for a in range(naug):
                val |= int(sol[col[u], a]) << (64 * a)
            self._resolve(u, val, ripple)
        self._peel(ripple)
        return self.done()


def peel_decode(received, k: int):
    """Pure peeling decode; list of payload byte strings, or Incomplete."""
    if k < 1:
        raise ValueError("k must be >= 1")
    size = len(received[0].payload) if received else 1
    peeler = IncrementalPeeler(k, size)
    for sym in received:
        peeler.add(sym.neighbors, int.from_bytes(sym.payload, "little"))
    if peeler.done():
        return peeler.symbols()
    n = peeler.payload_size
    partial = {
        i: v.to_bytes(n, "little") for i, v in enumerate(peeler.values) if v is not None
    }
    return Incomplete(partial)


def gaussian_fallback_decode(received, k: int):
    """Maximum-likelihood decode via dense elimination of the incidence
    matrix; list of payload byte strings, or None when rank deficient."""
    if k < 1:
        raise ValueError("k must be >= 1")
    size = len(received[0].payload) if received else 1
    peeler = IncrementalPeeler(k, size)
    for sym in received:
        peeler.add(sym.neighbors, int.from_bytes(sym.payload, "little"))
    if peeler.done() or peeler.try_elimination():
        return peeler.symbols()
    return None


def systematic_parity(
    source: list, m: int, dist: DegreeDistribution, rng: np.random.Generator
) -> list:
    """m parity symbols over the source block; duplicate incidence rows are
    re-sampled so all parities are pairwise distinct."""
    if m < 0:
        raise ValueError("m must be >= 0")
    out = []
    seen = set()
    k = len(source)
    n = len(source[0]) if source else 1
    while len(out) < m:
        sym = lt_encode_next(source, dist, rng)
        if sym.neighbors in seen and len(seen) < (1 << min(k, 30)) - 1:
            continue
        seen.add(sym.neighbors)
        out.append(sym)
    return out
