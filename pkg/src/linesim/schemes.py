"""Node-processing strategies for line networks.

Seven schemes: plain forwarding, perfect-feedback ARQ, complete decode and
re-encode, systematic relaying with fixed or sparse random parities, greedy
GF(2) random combinations, and a dense GF(q) random-combination baseline.

Each scheme contributes a source node, zero or more relay nodes, and a
destination-side receiver.  Nodes expose ``emit(slot)`` returning at most one
Packet, ``receive(pkt, slot)``, and ``memory()`` counting live payload
buffers.  Receivers expose ``receive``, ``maybe_decode(slot)``,
``decoded_symbols()`` and ``received_count``.

Receivers may hold read-only references to upstream node state (reception
logs and parity incidence) in place of shipping that metadata inside every
packet; the equivalent index lists are part of the packet wire format and
are excluded from the memory metric either way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import gf2
from ._kernels import (
    gf2_back_substitute,
    gf2_eliminate_rev,
    gf2_kernel_basis,
    gf2_rows_zero,
    gf2_xor_select,
)
from .channel import Packet
from .fountain import (
    DegreeDistribution,
    InconsistentSymbols,
    IncrementalPeeler,
    robust_soliton,
)
from .gfq import field, gfq_solve_stage

__all__ = ["SchemeParams", "SCHEMES", "build", "canonical_name", "is_adaptable"]

_M64 = 0xFFFFFFFFFFFFFFFF
_E = math.e


@dataclass(frozen=True)
class SchemeParams:
    """Tunable constants shared across schemes.

    c: log-overhead constant for elimination-based stop rules (> 1).
    delta: slack of the sparse-parity density p = (1+delta) ln(eps k)/(eps k).
    q: field size for the dense GF(q) scheme; one of 2, 4, 16, 256 (the
        symbol width must divide a byte so payload bytes pack evenly).
    overhead_l: extra receptions before the first decode attempt of
        elimination-based receivers; None selects the built-in rule.
    c_rs, delta_rs: robust-soliton parameters for fountain-based schemes.
    n1_margin: fractional surplus on the systematic source's emission count.
    """

    c: float = 2.0
    delta: float = 0.5
    q: int = 256
    overhead_l: int | None = None
    c_rs: float = 0.03
    delta_rs: float = 0.5
    n1_margin: float = 0.05

    def __post_init__(self):
        if self.c <= 1:
            raise ValueError("c must be > 1")
        if self.delta <= 0:
            raise ValueError("delta must be > 0")
        if self.q not in (2, 4, 16, 256):
            raise ValueError("q must be one of 2, 4, 16, 256")
        if self.overhead_l is not None and self.overhead_l < 0:
            raise ValueError("overhead_l must be >= 0")


def _nwords(ncols: int) -> int:
    return max((ncols + 63) >> 6, 1)


def _naug(payload_size: int) -> int:
    return max((payload_size * 8 + 63) >> 6, 1)


def _int_to_words(v: int, naug: int) -> np.ndarray:
    return np.array([(v >> (64 * a)) & _M64 for a in range(naug)], dtype=np.uint64)


def _words_to_int(w) -> int:
    v = 0
    for a in range(len(w)):
        v |= int(w[a]) << (64 * a)
    return v


def default_overhead(k: int, eps: float, params: SchemeParams) -> int:
    """Extra receptions l before the first decode attempt: the greedy-scheme
    overhead 2*sqrt(k eps ln(k eps)) when erasures dominate, else the
    lower-triangular ensemble's ceil(c log2 k)."""
    if eps * k > _E:
        return math.ceil(2.0 * math.sqrt(k * eps * math.log(k * eps)))
    return gf2.extra_rows(k, params.c) if k > 1 else 1


class _GrowMatrix:
    """Row-appendable uint64 matrix growing in both dimensions."""

    __slots__ = ("data", "rows")

    def __init__(self, words: int, cap: int = 64):
        self.data = np.zeros((cap, words), dtype=np.uint64)
        self.rows = 0

    def append(self, row: np.ndarray) -> None:
        if self.rows == self.data.shape[0]:
            grown = np.zeros((2 * self.data.shape[0], self.data.shape[1]), dtype=np.uint64)
            grown[: self.rows] = self.data
            self.data = grown
        if row.shape[0] > self.data.shape[1]:
            grown = np.zeros((self.data.shape[0], 2 * row.shape[0]), dtype=np.uint64)
            grown[:, : self.data.shape[1]] = self.data
            self.data = grown
        self.data[self.rows, : row.shape[0]] = row
        self.rows += 1


# ---------------------------------------------------------------------------
# Source nodes
# ---------------------------------------------------------------------------


class FountainSource:
    """Rateless LT fountain source.

    Deliberately non-systematic: an uncoded prefix plus a coded tail decodes
    k/(1-eps) times slower under erasures, because symbols erased during the
    prefix are covered only at the tail's uniform-sampling rate.
    """

    def __init__(self, symbols, payload_size, dist, rng, stop_after=None):
        self.k = len(symbols)
        self.ps = payload_size
        self.values = [int.from_bytes(s, "little") for s in symbols]
        self.dist = dist
        self.rng = rng
        self.stop_after = stop_after
        self.sent = 0
        self.xor_ops = 0

    def emit(self, slot):
        if self.stop_after is not None and self.sent >= self.stop_after:
            return None
        seq = self.sent
        self.sent += 1
        d = min(self.dist.sample(self.rng), self.k)
        idx = self.rng.choice(self.k, size=d, replace=False)
        idx = tuple(sorted(int(i) for i in idx))
        acc = 0
        for i in idx:
            acc ^= self.values[i]
        self.xor_ops += d
        return Packet(0, seq, "lt", idx, acc)

    def receive(self, pkt, slot):  # pragma: no cover - sources receive nothing
        raise RuntimeError("source does not receive")

    def memory(self):
        return self.k


class DenseGF2Source:
    """Emits fair-coin GF(2) combinations of all k source symbols; the
    all-zero draw is suppressed (no packet that slot)."""

    def __init__(self, symbols, payload_size, rng):
        self.k = len(symbols)
        self.ps = payload_size
        na = _naug(payload_size)
        self.naug = na
        self.pay = np.zeros((self.k, na), dtype=np.uint64)
        for i, s in enumerate(symbols):
            self.pay[i] = _int_to_words(int.from_bytes(s, "little"), na)
        self.rng = rng
        self.coins = gf2.CoinRows(rng)
        self.sent = 0
        self.xor_ops = 0

    def emit(self, slot):
        row = self.coins.next(self.k)
        if not row.any():
            return None
        seq = self.sent
        self.sent += 1
        return Packet(0, seq, "comb", (row, self.k), None)

    def materialize(self, pkt):
        row, nsel = pkt.inc
        out = np.zeros(self.naug, dtype=np.uint64)
        gf2_xor_select(self.pay, row, nsel, out)
        self.xor_ops += nsel
        pkt.payload = _words_to_int(out)

    def memory(self):
        return self.k


class GFqSource:
    """Emits uniform GF(q) combinations of all k source symbols."""

    def __init__(self, symbols, payload_size, q, rng):
        self.k = len(symbols)
        self.ps = payload_size
        self.gf = field(q)
        self.q = q
        self.pay = np.zeros((self.k, payload_size), dtype=np.uint8)
        for i, s in enumerate(symbols):
            self.pay[i] = np.frombuffer(s, dtype=np.uint8)
        self.rng = rng
        self.sent = 0
        self.xor_ops = 0

    def emit(self, slot):
        coeffs = self.rng.integers(0, self.q, self.k, dtype=np.int64).astype(np.uint8)
        if not coeffs.any():
            return None
        seq = self.sent
        self.sent += 1
        return Packet(0, seq, "qcomb", coeffs, None)

    def materialize(self, pkt):
        pkt.payload = self.gf.dot(pkt.inc, self.pay)
        self.xor_ops += self.k

    def memory(self):
        return self.k


class FeedbackSource:
    """Repeats the head-of-line source symbol until the per-slot ACK."""

    def __init__(self, symbols):
        self.k = len(symbols)
        self.values = [int.from_bytes(s, "little") for s in symbols]
        self.next_seq = 0
        self.done_slot = None
        self.xor_ops = 0

    @property
    def done(self):
        return self.next_seq >= self.k

    def emit(self, slot):
        if self.done:
            return None
        seq = self.next_seq
        return Packet(0, seq, "sys", (seq,), self.values[seq])

    def on_ack(self, delivered):
        if delivered and not self.done:
            self.next_seq += 1

    def memory(self):
        return self.k - self.next_seq


# ---------------------------------------------------------------------------
# Relay nodes
# ---------------------------------------------------------------------------


class ForwardRelay:
    """Forwards the oldest unforwarded packet; keeps nothing afterwards."""

    def __init__(self, node_id):
        self.node_id = node_id
        self.queue = []
        self.head = 0
        self.received = 0
        self.xor_ops = 0

    def receive(self, pkt, slot):
        self.queue.append(pkt)
        self.received += 1

    def emit(self, slot):
        if self.head < len(self.queue):
            pkt = self.queue[self.head]
            self.queue[self.head] = None
            self.head += 1
            return pkt
        return None

    def memory(self):
        return len(self.queue) - self.head


class FeedbackRelay:
    """ARQ relay: queue of received packets, head retransmitted until ACKed.
    The queue length is the reflected-random-walk state of the scheme."""

    def __init__(self, node_id, source):
        self.node_id = node_id
        self.queue = []
        self.head = 0
        self.source = source
        self.extras = {}
        self.xor_ops = 0

    def receive(self, pkt, slot):
        self.queue.append(pkt)

    def emit(self, slot):
        if self.source is not None and self.source.done and "queue_at_source_done" not in self.extras:
            self.extras["queue_at_source_done"] = self.memory()
            self.extras["source_done_slot"] = slot
        if self.head < len(self.queue):
            return self.queue[self.head]
        return None

    def on_ack(self, delivered):
        if delivered and self.head < len(self.queue):
            self.queue[self.head] = None
            self.head += 1

    def memory(self):
        return len(self.queue) - self.head


class DecodeReencodeRelay:
    """Forwards arrivals verbatim while decoding in the background; once
    decoded, fills otherwise idle slots with a fresh fountain stream."""

    def __init__(self, node_id, k, payload_size, dist, rng, params):
        self.node_id = node_id
        self.k = k
        self.ps = payload_size
        self.dist = dist
        self.rng = rng
        self.queue = []
        self.head = 0
        self.peeler = IncrementalPeeler(k, payload_size)
        self.decoded = None
        self.received = 0
        self.next_attempt = k + max(k // 200, 10)
        self.interval = max(k // 500, 8)
        self.fresh_sent = 0

    @property
    def xor_ops(self):
        return self.peeler.xor_ops + self.fresh_sent

    def receive(self, pkt, slot):
        self.queue.append(pkt)
        self.received += 1
        if self.decoded is None:
            self.peeler.add(pkt.inc, pkt.payload)
            if self.peeler.done():
                self.decoded = [v for v in self.peeler.values]
            elif self.received >= self.next_attempt:
                self.next_attempt = self.received + self.interval
                if self.peeler.try_elimination():
                    self.decoded = [v for v in self.peeler.values]

    def emit(self, slot):
        if self.head < len(self.queue):
            pkt = self.queue[self.head]
            self.queue[self.head] = None
            self.head += 1
            return pkt
        if self.decoded is None:
            return None
        d = min(self.dist.sample(self.rng), self.k)
        idx = self.rng.choice(self.k, size=d, replace=False)
        idx = tuple(sorted(int(i) for i in idx))
        acc = 0
        for i in idx:
            acc ^= self.decoded[i]
        self.fresh_sent += d
        seq = self.k + self.fresh_sent
        return Packet(self.node_id, seq, "lt", idx, acc)

    def memory(self):
        live_queue = len(self.queue) - self.head
        if self.decoded is not None:
            return self.k + live_queue
        return self.received


class SystematicRelay:
    """Forwards arrivals and accumulates parity combinations; after the
    source's emission window it transmits parities round-robin.

    ``mode`` selects the parity ensemble: "fixed" draws a degree per parity
    from the fountain distribution over the expected reception count and
    thins arrivals at rate degree/expected, "sparse" thins every arrival
    into every parity at the flat rate p = (1+delta) ln(eps k)/(eps k).
    """

    def __init__(self, node_id, k, payload_size, eps_out, mode, params, dist, rng, n1):
        self.node_id = node_id
        self.k = k
        self.ps = payload_size
        self.rng = rng
        self.n1 = n1
        khat = max(int(round(n1 * 1.0)), 1)  # positions indexed by arrival order
        if mode == "sparse":
            ek = eps_out * k
            if ek <= _E:
                raise ValueError(
                    f"systematic_sparse needs eps*k > e, got {ek:.3f}"
                )
            self.m = math.ceil(k * eps_out / (1.0 - eps_out) * 1.03)
            p = (1.0 + params.delta) * math.log(ek) / ek
            self.probs = np.full(self.m, min(p, 1.0))
            self.p = p
        elif mode == "fixed":
            self.m = math.ceil(k * eps_out / (1.0 - eps_out))
            # degree targets follow a robust soliton over the expected number
            # of positions the destination will miss, so the parity set
            # restricted to those positions peels like a fountain code
            expected = max(int(round(n1 * (1.0 - eps_out))), 1)
            l_exp = max(math.ceil(eps_out * expected), 2)
            pdist = robust_soliton(l_exp, params.c_rs, params.delta_rs)
            degs = np.array([pdist.sample(rng) for _ in range(max(self.m, 1))], dtype=np.float64)
            self.probs = np.minimum(degs / l_exp, 1.0)[: self.m]
            self.p = None
        else:
            raise ValueError(f"unknown systematic mode {mode!r}")
        self.acc = np.zeros((max(self.m, 1), payload_size), dtype=np.uint8)
        self.pmat = np.zeros((max(self.m, 1), _nwords(khat)), dtype=np.uint64)
        self.log_neighbors = []
        self.log_values = []
        self.queue = []
        self.head = 0
        self.parity_cursor = 0
        self.xor_ops = 0

    @property
    def count(self):
        return len(self.log_neighbors)

    def receive(self, pkt, slot):
        pos = self.count
        self.log_neighbors.append(pkt.inc)
        self.log_values.append(pkt.payload)
        if self.m:
            wi = pos >> 6
            if wi >= self.pmat.shape[1]:
                grown = np.zeros((self.pmat.shape[0], 2 * self.pmat.shape[1]), dtype=np.uint64)
                grown[:, : self.pmat.shape[1]] = self.pmat
                self.pmat = grown
            mask = self.rng.random(self.m) < self.probs
            if mask.any():
                pay = np.frombuffer(
                    pkt.payload.to_bytes(self.ps, "little"), dtype=np.uint8
                )
                self.acc[mask] ^= pay
                self.pmat[mask, wi] |= np.uint64(1) << np.uint64(pos & 63)
                self.xor_ops += int(mask.sum())
        self.queue.append((pos, pkt))

    def in_parity_phase(self, slot):
        return slot > self.n1 and self.head >= len(self.queue)

    def emit(self, slot):
        if self.head < len(self.queue):
            pos, pkt = self.queue[self.head]
            self.queue[self.head] = None
            self.head += 1
            return Packet(self.node_id, pos, "sys", pkt.inc, pkt.payload)
        if slot <= self.n1 or self.m == 0:
            return None
        j = self.parity_cursor % self.m
        self.parity_cursor += 1
        val = int.from_bytes(self.acc[j].tobytes(), "little")
        return Packet(self.node_id, j, "par", None, val)

    def memory(self):
        return self.m + (len(self.queue) - self.head)


class RandomCombRelay:
    """Greedy GF(2) relay: buffers every received payload and emits a
    fair-coin combination of the whole buffer each slot."""

    def __init__(self, node_id, payload_size, rng, prev_width):
        self.node_id = node_id
        self.ps = payload_size
        self.naug = _naug(payload_size)
        self.rng = rng
        self.coins = gf2.CoinRows(rng)
        self.pay = _GrowMatrix(self.naug)
        self.arrivals = _GrowMatrix(_nwords(prev_width))
        self.xor_ops = 0
        self.sent = 0

    @property
    def count(self):
        return self.pay.rows

    def receive(self, pkt, slot):
        row, nsel = pkt.inc
        self.arrivals.append(row)
        self.pay.append(_int_to_words(pkt.payload, self.naug))

    def emit(self, slot):
        r = self.count
        if r == 0:
            return None
        row = self.coins.next(r)
        if not row.any():
            return None
        seq = self.sent
        self.sent += 1
        return Packet(self.node_id, seq, "comb", (row, r), None)

    def materialize(self, pkt):
        row, nsel = pkt.inc
        out = np.zeros(self.naug, dtype=np.uint64)
        gf2_xor_select(self.pay.data, row, nsel, out)
        self.xor_ops += nsel
        pkt.payload = _words_to_int(out)

    def memory(self):
        return self.count


class GFqRelay:
    """Dense GF(q) relay: uniform random combination of the whole buffer."""

    def __init__(self, node_id, payload_size, q, rng):
        self.node_id = node_id
        self.ps = payload_size
        self.gf = field(q)
        self.q = q
        self.rng = rng
        self.pay_rows = []
        self.arrival_rows = []
        self.xor_ops = 0
        self.sent = 0

    @property
    def count(self):
        return len(self.pay_rows)

    def receive(self, pkt, slot):
        self.arrival_rows.append(pkt.inc)
        self.pay_rows.append(np.asarray(pkt.payload, dtype=np.uint8))

    def emit(self, slot):
        r = self.count
        if r == 0:
            return None
        coeffs = self.rng.integers(0, self.q, r, dtype=np.int64).astype(np.uint8)
        if not coeffs.any():
            return None
        seq = self.sent
        self.sent += 1
        return Packet(self.node_id, seq, "qcomb", coeffs, None)

    def materialize(self, pkt):
        pay = np.stack(self.pay_rows[: len(pkt.inc)])
        pkt.payload = self.gf.dot(pkt.inc, pay)
        self.xor_ops += len(pkt.inc)

    def memory(self):
        return self.count


# ---------------------------------------------------------------------------
# Receivers
# ---------------------------------------------------------------------------


class PeelingReceiver:
    """Destination decoder for streams whose packets carry source-index
    combinations: incremental peeling plus scheduled dense elimination."""

    def __init__(self, k, payload_size, params):
        self.k = k
        self.peeler = IncrementalPeeler(k, payload_size)
        self.received_count = 0
        self.next_attempt = k + max(k // 200, 10)
        self.interval = max(k // 500, 8)
        self.extras = {}
        self._decoded = None

    @property
    def xor_ops(self):
        return self.peeler.xor_ops

    def receive(self, pkt, slot):
        self.received_count += 1
        if self._decoded is None:
            self.peeler.add(pkt.inc, pkt.payload)

    def maybe_decode(self, slot):
        if self._decoded is not None:
            return True
        if self.peeler.done():
            self._decoded = self.peeler.symbols()
            return True
        if self.received_count >= self.next_attempt:
            self.next_attempt = self.received_count + self.interval
            if self.peeler.try_elimination():
                self._decoded = self.peeler.symbols()
                return True
        return False

    def decoded_symbols(self):
        return self._decoded


class FeedbackReceiver:
    """Collects the k ARQ-delivered symbols in order."""

    def __init__(self, k, payload_size):
        self.k = k
        self.ps = payload_size
        self.values = [None] * k
        self.have = 0
        self.received_count = 0
        self.extras = {}
        self.xor_ops = 0

    def receive(self, pkt, slot):
        self.received_count += 1
        seq = pkt.seq
        if self.values[seq] is None:
            self.values[seq] = pkt.payload
            self.have += 1

    def maybe_decode(self, slot):
        return self.have == self.k

    def decoded_symbols(self):
        if self.have != self.k:
            return None
        return [v.to_bytes(self.ps, "little") for v in self.values]


def _gf2_stage(M, ncols, naug):
    """Eliminate an augmented packed system in place; return the affine
    solution set (y0, kernel basis K, free column indices) over the first
    ``ncols`` columns, or None when inconsistent."""
    wc = M.shape[1] - naug
    r, piv = gf2_eliminate_rev(M, ncols)
    if not gf2_rows_zero(M, r, wc, wc + naug):
        return None
    y0 = gf2_back_substitute(M, piv, r, ncols, wc)
    is_piv = np.zeros(ncols, dtype=bool)
    for i in range(r):
        is_piv[piv[i]] = True
    free = np.flatnonzero(~is_piv).astype(np.int64)
    if free.size == 0:
        return y0, np.zeros((ncols, 1), dtype=np.uint64), free
    K = gf2_kernel_basis(M, piv, r, ncols, free)
    return y0, K, free


def _place_packed(dst, wc_limit, bit_offset, src):
    """OR packed rows ``src`` into ``dst`` starting at ``bit_offset``."""
    kw = src.shape[1]
    w0 = bit_offset >> 6
    sh = bit_offset & 63
    if sh == 0:
        dst[:, w0 : w0 + kw] |= src
        return
    sh64 = np.uint64(sh)
    inv = np.uint64(64 - sh)
    for t in range(kw):
        if w0 + t < wc_limit:
            dst[:, w0 + t] |= src[:, t] << sh64
        if w0 + t + 1 < wc_limit:
            dst[:, w0 + t + 1] |= src[:, t] >> inv

class StagedGF2Receiver:
    """Destination decoder for GF(2) random-combination chains.

    Received rows address the last relay's reception order; the decoder
    eliminates stage by stage back to the source, carrying the affine
    solution set (particular solution plus kernel basis) between stages.
    """

    def __init__(self, k, payload_size, params, relays, eps_rule):
        self.k = k
        self.ps = payload_size
        self.naug = _naug(payload_size)
        self.relays = relays
        if params.overhead_l is not None:
            self.l_target = params.overhead_l
        else:
            self.l_target = default_overhead(k, eps_rule, params)
        self.rows = _GrowMatrix(_nwords(k))
        self.pay = _GrowMatrix(self.naug)
        self.max_ref = 0
        self.received_count = 0
        self.next_attempt = k + self.l_target
        self.interval = max(8, math.ceil(0.25 * max(self.l_target, 1)))
        self.extras = {}
        self.xor_ops = 0
        self._decoded = None

    @property
    def count(self):
        return self.rows.rows

    def receive(self, pkt, slot):
        self.received_count += 1
        row, nsel = pkt.inc
        self.rows.append(row)
        self.pay.append(_int_to_words(pkt.payload, self.naug))
        if nsel > self.max_ref:
            self.max_ref = nsel

    def maybe_decode(self, slot):
        if self._decoded is not None:
            return True
        if self.received_count >= self.next_attempt:
            self.next_attempt = self.received_count + self.interval
            got = self._attempt()
            if got is not None:
                self._decoded = got
                return True
        return False

    def _attempt(self):
        r2 = self.count
        na = self.naug
        width = self.max_ref if self.relays else self.k
        wc = _nwords(width)
        # rows in reverse arrival order: arrival streams are staircase
        # matrices (support grows with time), and the descending-column
        # elimination finds pivots immediately when wide rows come first
        M = np.zeros((r2, wc + na), dtype=np.uint64)
        M[:, :wc] = self.rows.data[r2 - 1 :: -1, :wc]
        M[:, wc:] = self.pay.data[r2 - 1 :: -1]
        self.xor_ops += r2 * wc
        res = _gf2_stage(M, width, na)
        if res is None:
            return None
        y0, K, free = res
        ncols = width
        for level in range(len(self.relays) - 1, -1, -1):
            relay = self.relays[level]
            prev_width = self.relays[level - 1].count if level > 0 else self.k
            nfree = free.size
            cols = prev_width + nfree
            wc2 = _nwords(cols)
            wcp = _nwords(prev_width)
            M2 = np.zeros((ncols, wc2 + na), dtype=np.uint64)
            M2[:, :wcp] = relay.arrivals.data[ncols - 1 :: -1, :wcp]
            if nfree:
                _place_packed(M2, wc2, prev_width, K[ncols - 1 :: -1])
            M2[:, wc2:] = y0[ncols - 1 :: -1]
            self.xor_ops += ncols * wc2
            res = _gf2_stage(M2, cols, na)
            if res is None:
                return None
            y0, K, free = res
            ncols = prev_width
        if free.size:
            return None
        return [_words_to_int(y0[i]).to_bytes(self.ps, "little") for i in range(self.k)]

    def decoded_symbols(self):
        return self._decoded


class SystematicReceiver:
    """Destination decoder for systematic relaying.

    Forwarded packets feed a source-space peeler directly.  Each distinct
    parity packet is rewritten as a source-space equation by XOR-ing the
    fountain equations of the relay receptions it combines; the shared
    peeler plus its dense-elimination fallback then finishes the decode.
    """

    def __init__(self, k, payload_size, params, relay):
        self.k = k
        self.ps = payload_size
        self.relay = relay
        self.peeler = IncrementalPeeler(k, payload_size)
        self.naug = _naug(payload_size)
        self.have = {}  # relay reception position -> payload int
        self.parities = {}  # parity index -> payload int
        self.received_count = 0
        self.next_attempt = 0
        self.interval = 16
        self.sys_next_attempt = k + max(k // 200, 10)
        self.sys_interval = max(k // 500, 8)
        self.recovered = False
        self.extras = {}
        self._decoded = None

    @property
    def xor_ops(self):
        return self.peeler.xor_ops

    def receive(self, pkt, slot):
        self.received_count += 1
        if pkt.kind == "par":
            if pkt.seq not in self.parities:
                self.parities[pkt.seq] = pkt.payload
        elif pkt.seq not in self.have:
            self.have[pkt.seq] = pkt.payload
            if self._decoded is None:
                self.peeler.add(pkt.inc, pkt.payload)

    def _recover_missing(self):
        """Solve the parity system over the relay receptions the forwarding
        pass lost; on full rank, feed the recovered fountain equations to
        the source-space peeler.  Each parity is first reduced by the
        receptions that did arrive, leaving a sparse system over only the
        missing positions."""
        relay = self.relay
        count = relay.count
        wc = _nwords(count)
        havearr = np.zeros(count, dtype=bool)
        havearr[np.fromiter(self.have.keys(), dtype=np.int64, count=len(self.have))] = True
        missing = np.flatnonzero(~havearr)
        l = missing.size
        js = sorted(self.parities)
        bits = gf2.unpack_rows(relay.pmat[js, :wc], count).astype(bool)
        wcl = _nwords(l)
        na = self.naug
        M = np.zeros((len(js), wcl + na), dtype=np.uint64)
        M[:, :wcl] = gf2.pack_rows(bits[:, missing])
        for r, j in enumerate(js):
            v = self.parities[j]
            for pos in np.flatnonzero(bits[r] & havearr):
                v ^= self.have[pos]
            self.peeler.xor_ops += 1
            M[r, wcl:] = _int_to_words(v, na)
        rank, piv = gf2_eliminate_rev(M, l)
        self.peeler.xor_ops += len(js) * wcl
        if rank < l:
            return False
        if not gf2_rows_zero(M, rank, wcl, wcl + na):
            raise InconsistentSymbols("parity system inconsistent")
        sol = gf2_back_substitute(M, piv, rank, l, wcl)
        for idx, pos in enumerate(missing):
            self.peeler.add(relay.log_neighbors[pos], _words_to_int(sol[idx]))
        return True

    def _fallback_source_space(self):
        """Rank-deficient parity system: rewrite every parity as a source-space
        equation (XOR of the fountain equations it accumulated) and let the
        joint elimination exploit redundancy among the received fountain rows
        as well.  Slower, but strictly stronger; only reached once all
        distinct parities are in hand."""
        relay = self.relay
        count = relay.count
        wc = _nwords(count)
        for j, v in self.parities.items():
            bits = gf2.unpack_rows(relay.pmat[j : j + 1, :wc], count)[0]
            nb = set()
            for pos in np.flatnonzero(bits):
                nb.symmetric_difference_update(relay.log_neighbors[pos])
            if nb:
                self.peeler.add(tuple(nb), v)

    def maybe_decode(self, slot):
        if self._decoded is not None:
            return True
        if self.peeler.done():
            self._decoded = self.peeler.symbols()
            return True
        if not self.relay.in_parity_phase(slot):
            if self.received_count >= self.sys_next_attempt:
                self.sys_next_attempt = self.received_count + self.sys_interval
                if self.peeler.try_elimination():
                    self._decoded = self.peeler.symbols()
                    return True
            return False
        if self.received_count < self.next_attempt:
            return False
        self.next_attempt = self.received_count + self.interval
        if not self.recovered:
            l = self.relay.count - len(self.have)
            if l > 0:
                margin = math.ceil(2 * math.log2(max(l, 2)))
                if len(self.parities) < min(l + margin, self.relay.m):
                    return False
                if not self._recover_missing():
                    if len(self.parities) < self.relay.m:
                        return False  # more distinct parities may still arrive
                    self._fallback_source_space()
            self.recovered = True
        if self.peeler.done() or self.peeler.try_elimination():
            self._decoded = self.peeler.symbols()
            return True
        # once recovery ran, the parity phase carries no new information
        self.next_attempt = float("inf")
        return False

    def decoded_symbols(self):
        return self._decoded


class GFqStagedReceiver:
    """Destination decoder for the dense GF(q) chain; same staged affine
    elimination as the GF(2) receiver but over byte matrices."""

    def __init__(self, k, payload_size, params, relays, q, eps_rule):
        self.k = k
        self.ps = payload_size
        self.gf = field(q)
        self.relays = relays
        if params.overhead_l is not None:
            self.l_target = params.overhead_l
        elif q >= 16:
            self.l_target = 10
        else:
            self.l_target = default_overhead(k, eps_rule, params)
        self.rows = []
        self.pays = []
        self.received_count = 0
        self.next_attempt = k + self.l_target
        self.interval = max(8, math.ceil(0.25 * max(self.l_target, 1)))
        self.extras = {}
        self.xor_ops = 0
        self._decoded = None

    def receive(self, pkt, slot):
        self.received_count += 1
        self.rows.append(pkt.inc)
        self.pays.append(np.asarray(pkt.payload, dtype=np.uint8))

    def maybe_decode(self, slot):
        if self._decoded is not None:
            return True
        if self.received_count >= self.next_attempt:
            self.next_attempt = self.received_count + self.interval
            got = self._attempt()
            if got is not None:
                self._decoded = got
                return True
        return False

    def _attempt(self):
        r2 = len(self.rows)
        ps = self.ps
        width = max(len(row) for row in self.rows) if self.relays else self.k
        M = np.zeros((r2, width + ps), dtype=np.uint8)
        for i, row in enumerate(self.rows):
            M[i, : len(row)] = row
            M[i, width:] = self.pays[i]
        self.xor_ops += r2 * width
        res = gfq_solve_stage(M, width, self.gf)
        if res is None:
            return None
        y0, K, free = res
        ncols = width
        for level in range(len(self.relays) - 1, -1, -1):
            relay = self.relays[level]
            prev_width = self.relays[level - 1].count if level > 0 else self.k
            nfree = free.size
            cols = prev_width + nfree
            M2 = np.zeros((ncols, cols + ps), dtype=np.uint8)
            for i in range(ncols):
                row = relay.arrival_rows[i]
                M2[i, : len(row)] = row
            if nfree:
                M2[:, prev_width : prev_width + nfree] = K[:ncols]
            M2[:, cols:] = y0[:ncols]
            self.xor_ops += ncols * cols
            res = gfq_solve_stage(M2, cols, self.gf)
            if res is None:
                return None
            y0, K, free = res
            ncols = prev_width
        if free.size:
            return None
        return [y0[i].tobytes() for i in range(self.k)]

    def decoded_symbols(self):
        return self._decoded


# ---------------------------------------------------------------------------
# Registry and builder
# ---------------------------------------------------------------------------

_ALIASES = {
    "forward": "forward_only",
    "forward_only": "forward_only",
    "feedback": "feedback_optimal",
    "feedback_optimal": "feedback_optimal",
    "decode_reencode": "decode_reencode",
    "systematic_fixed": "systematic_fixed",
    "systematic_sparse": "systematic_sparse",
    "greedy": "greedy_random",
    "greedy_random": "greedy_random",
    "gfq": "gfq_dense",
    "gfq_dense": "gfq_dense",
}

SCHEMES = {
    "forward_only": {"adaptable": True},
    "feedback_optimal": {"adaptable": True},
    "decode_reencode": {"adaptable": True},
    "systematic_fixed": {"adaptable": False},
    "systematic_sparse": {"adaptable": False},
    "greedy_random": {"adaptable": True},
    "gfq_dense": {"adaptable": True},
}


def canonical_name(name: str) -> str:
    key = name.strip().lower().replace("-", "_")
    if key not in _ALIASES:
        raise ValueError(f"unknown scheme {name!r}; choices: {sorted(SCHEMES)}")
    return _ALIASES[key]


def is_adaptable(name: str) -> bool:
    return SCHEMES[canonical_name(name)]["adaptable"]


def build(config, source_symbols, node_seed, recv_seed):
    """Instantiate (nodes, receiver) for one run; nodes[0] is the source."""
    params = config.params if config.params is not None else SchemeParams()
    name = canonical_name(config.scheme)
    L = config.L
    eps = config.epsilons
    k = config.k
    ps = config.payload_size
    node_rngs = [np.random.default_rng(s) for s in node_seed.spawn(L)]
    eps_rule = max(eps)

    if name == "forward_only":
        dist = robust_soliton(k, params.c_rs, params.delta_rs)
        nodes = [FountainSource(source_symbols, ps, dist, node_rngs[0])]
        nodes += [ForwardRelay(i) for i in range(1, L)]
        return nodes, PeelingReceiver(k, ps, params)

    if name == "feedback_optimal":
        src = FeedbackSource(source_symbols)
        nodes = [src]
        for i in range(1, L):
            nodes.append(FeedbackRelay(i, src if i == 1 else None))
        return nodes, FeedbackReceiver(k, ps)

    if name == "decode_reencode":
        dist = robust_soliton(k, params.c_rs, params.delta_rs)
        nodes = [FountainSource(source_symbols, ps, dist, node_rngs[0])]
        for i in range(1, L):
            nodes.append(DecodeReencodeRelay(i, k, ps, dist, node_rngs[i], params))
        return nodes, PeelingReceiver(k, ps, params)

    if name in ("systematic_fixed", "systematic_sparse"):
        mode = "fixed" if name == "systematic_fixed" else "sparse"
        dist = robust_soliton(k, params.c_rs, params.delta_rs)
        if L == 1:
            nodes = [FountainSource(source_symbols, ps, dist, node_rngs[0])]
            return nodes, PeelingReceiver(k, ps, params)
        if L > 2:
            raise ValueError(f"{name} supports at most one intermediate node")
        n1 = math.ceil(k / (1.0 - eps[0]) * (1.0 + params.n1_margin))
        src = FountainSource(source_symbols, ps, dist, node_rngs[0], stop_after=n1)
        relay = SystematicRelay(1, k, ps, eps[1], mode, params, dist, node_rngs[1], n1)
        return [src, relay], SystematicReceiver(k, ps, params, relay)

    if name == "greedy_random":
        nodes = [DenseGF2Source(source_symbols, ps, node_rngs[0])]
        relays = []
        for i in range(1, L):
            prev_width = k if i == 1 else 64
            relay = RandomCombRelay(i, ps, node_rngs[i], prev_width)
            relays.append(relay)
            nodes.append(relay)
        return nodes, StagedGF2Receiver(k, ps, params, relays, eps_rule)

    if name == "gfq_dense":
        q = params.q
        nodes = [GFqSource(source_symbols, ps, q, node_rngs[0])]
        relays = []
        for i in range(1, L):
            relay = GFqRelay(i, ps, q, node_rngs[i])
            relays.append(relay)
            nodes.append(relay)
        return nodes, GFqStagedReceiver(k, ps, params, relays, q, eps_rule)

    raise AssertionError(name)
