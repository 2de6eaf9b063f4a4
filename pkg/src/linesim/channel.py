"""Discrete-time simulation of a line network of erasure links.

One packet per node per slot; a packet offered on link i is delivered with
probability 1 - epsilon_i, independently across slots and links.  Deliveries
within a slot are visible for counting and decoding the same slot; a node's
own emissions are computed from what it held at the end of the previous slot.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "LinkSpec",
    "NetworkConfig",
    "SlotEvent",
    "RunTrace",
    "Packet",
    "run",
    "trace_to_jsonl",
]


@dataclass(frozen=True)
class LinkSpec:
    epsilon: float

    def __post_init__(self):
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError(f"epsilon must be in [0, 1), got {self.epsilon}")


@dataclass(frozen=True)
class NetworkConfig:
    k: int
    links: tuple
    scheme: str
    params: object = None  # SchemeParams; default filled by schemes.build
    payload_size: int = 1
    seed: int = 0
    horizon: int | None = None

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        object.__setattr__(self, "links", tuple(self.links))
        if len(self.links) < 1:
            raise ValueError("need at least one link")
        if self.payload_size < 1:
            raise ValueError("payload_size must be >= 1")
        hz = self.resolved_horizon()
        if hz < self.k:
            raise ValueError(f"horizon {hz} smaller than k={self.k}")

    @property
    def L(self) -> int:
        return len(self.links)

    @property
    def epsilons(self) -> tuple:
        return tuple(l.epsilon for l in self.links)

    def min_cut(self) -> float:
        return min(1.0 - e for e in self.epsilons)

    def resolved_horizon(self) -> int:
        if self.horizon is not None:
            return self.horizon
        worst = max(self.epsilons)
        return math.ceil(4 * self.k / (1.0 - worst)) + 4 * self.L


class Packet:
    """One transmitted information unit.

    ``inc`` identifies the combination this payload carries: a tuple of
    source indices for fountain-style packets, or a packed coefficient row
    over the sender's reception order for random-combination packets.
    ``payload`` may be deferred (None) until the link delivers the packet;
    the simulator then asks the emitting node to materialize it.
    """

    __slots__ = ("origin", "seq", "kind", "inc", "payload")

    def __init__(self, origin, seq, kind, inc, payload=None):
        self.origin = origin
        self.seq = seq
        self.kind = kind
        self.inc = inc
        self.payload = payload

    def __repr__(self):
        return f"Packet(origin={self.origin}, seq={self.seq}, kind={self.kind})"


@dataclass(frozen=True)
class SlotEvent:
    slot: int
    link: int
    sent: tuple | None  # (origin, seq) or None
    delivered: bool
    node_memory_after: tuple


@dataclass
class RunTrace:
    config: NetworkConfig
    completion_slot: int | None  # None means TIMEOUT
    decode_success: bool
    decoded: list | None
    source_symbols: list
    memory_peaks: tuple  # per intermediate node
    sent_counts: tuple  # per node
    received_counts: tuple  # per link (deliveries)
    received_at_success: int | None
    xor_ops: int
    extras: dict = field(default_factory=dict)
    events: list | None = None


class _ErasureStream:
    """Blocked Bernoulli(1 - eps) delivery draws for one link."""

    __slots__ = ("rng", "eps", "buf", "pos")

    def __init__(self, rng, eps, block=4096):
        self.rng = rng
        self.eps = eps
        self.buf = rng.random(block) >= eps
        self.pos = 0

    def next(self) -> bool:
        if self.pos == len(self.buf):
            self.buf = self.rng.random(len(self.buf)) >= self.eps
            self.pos = 0
        v = bool(self.buf[self.pos])
        self.pos += 1
        return v


def run(config: NetworkConfig, record_events: bool = False) -> RunTrace:
    """Simulate one end-to-end transfer; deterministic given config.seed."""
    from . import schemes

    L = config.L
    ss = np.random.SeedSequence(config.seed)
    children = ss.spawn(L + 3)
    sym_rng = np.random.default_rng(children[0])
    erasure_rngs = [np.random.default_rng(children[1 + i]) for i in range(L)]
    node_seed = children[L + 1]
    recv_seed = children[L + 2]

    ps = config.payload_size
    raw = sym_rng.bytes(config.k * ps)
    source_symbols = [raw[i * ps : (i + 1) * ps] for i in range(config.k)]

    nodes, receiver = schemes.build(config, source_symbols, node_seed, recv_seed)
    streams = [_ErasureStream(erasure_rngs[i], config.epsilons[i]) for i in range(L)]

    horizon = config.resolved_horizon()
    events = [] if record_events else None
    mem_peaks = [0] * (L - 1)
    sent_counts = [0] * L
    recv_counts = [0] * L
    completion = None
    received_at_success = None

    for t in range(horizon):
        emissions = [node.emit(t) for node in nodes]
        for i in range(L):
            pkt = emissions[i]
            delivered = False
            if pkt is not None:
                sent_counts[i] += 1
                delivered = streams[i].next()
                if delivered:
                    if pkt.payload is None:
                        nodes[i].materialize(pkt)
                    recv_counts[i] += 1
                    if i + 1 < L:
                        nodes[i + 1].receive(pkt, t)
                    else:
                        receiver.receive(pkt, t)
                acker = getattr(nodes[i], "on_ack", None)
                if acker is not None:
                    acker(delivered)
            if events is not None:
                mems = tuple(nodes[j].memory() for j in range(1, L))
                sent = None if pkt is None else (pkt.origin, pkt.seq)
                events.append(SlotEvent(t, i, sent, delivered, mems))
        for j in range(1, L):
            m = nodes[j].memory()
            if m > mem_peaks[j - 1]:
                mem_peaks[j - 1] = m
        if receiver.maybe_decode(t):
            completion = t + 1
            received_at_success = receiver.received_count
            break

    decoded = receiver.decoded_symbols() if completion is not None else None
    success = completion is not None and decoded == source_symbols
    xor_ops = receiver.xor_ops + sum(getattr(n, "xor_ops", 0) for n in nodes)
    extras = {}
    for n in nodes:
        extras.update(getattr(n, "extras", {}))
    extras.update(getattr(receiver, "extras", {}))
    return RunTrace(
        config=config,
        completion_slot=completion,
        decode_success=success,
        decoded=decoded,
        source_symbols=source_symbols,
        memory_peaks=tuple(mem_peaks),
        sent_counts=tuple(sent_counts),
        received_counts=tuple(recv_counts),
        received_at_success=received_at_success,
        xor_ops=xor_ops,
        extras=extras,
        events=events,
    )


def trace_to_jsonl(trace: RunTrace, fp) -> None:
    """Write one JSON object per slot event, then a summary line."""
    if trace.events is None:
        raise ValueError("trace was recorded without events")
    for ev in trace.events:
        fp.write(
            json.dumps(
                {
                    "slot": ev.slot,
                    "link": ev.link,
                    "sent": list(ev.sent) if ev.sent is not None else None,
                    "delivered": ev.delivered,
                    "node_memory_after": list(ev.node_memory_after),
                }
            )
            + "\n"
        )
    fp.write(
        json.dumps(
            {
                "summary": True,
                "completion_slot": trace.completion_slot,
                "decode_success": trace.decode_success,
                "memory_peaks": list(trace.memory_peaks),
            }
        )
        + "\n"
    )
