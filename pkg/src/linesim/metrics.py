"""Performance metrics derived from run traces, the random-walk oracle for
the feedback scheme's queue law, and the Monte Carlo campaign runner.

The five per-run metrics are: decode success, delay beyond the min-cut ideal,
peak intermediate memory, reception overhead, and achieved rate.  Campaigns
aggregate them over a (scheme, k, links) grid with deterministic per-trial
seeding, emitting CSV or JSON.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import LinkSpec, NetworkConfig, RunTrace, run

__all__ = [
    "MetricsRecord",
    "CampaignCell",
    "CellAggregate",
    "delay",
    "min_cut_rate",
    "record_from_trace",
    "random_walk_oracle",
    "run_experiment",
    "aggregate_to_csv",
    "CSV_COLUMNS",
]

CSV_COLUMNS = (
    "scheme",
    "k",
    "L",
    "eps",
    "trials",
    "success_rate",
    "mean_delay",
    "sd_delay",
    "mean_peak_mem",
    "sd_peak_mem",
    "mean_overhead",
    "mean_rate",
    "xor_ops",
)


@dataclass(frozen=True)
class MetricsRecord:
    """Per-run metrics; delay/rate/overhead are None on TIMEOUT."""

    success: bool
    delay_slots: float | None
    peak_memory: tuple
    overhead: float | None
    achieved_rate: float | None
    xor_ops: int
    extras: dict


def min_cut_rate(eps_list) -> float:
    return min(1.0 - e for e in eps_list)


def delay(trace: RunTrace, k: int, eps_list) -> float | None:
    """Completion slot minus the min-cut ideal k / min(1 - eps); None on
    TIMEOUT traces."""
    if trace.completion_slot is None:
        return None
    return trace.completion_slot - k / min_cut_rate(eps_list)


def record_from_trace(trace: RunTrace) -> MetricsRecord:
    cfg = trace.config
    d = trace.completion_slot
    ok = trace.decode_success
    dl = delay(trace, cfg.k, cfg.epsilons) if ok else None
    ov = None
    rate = None
    if ok:
        ov = (trace.received_at_success - cfg.k) / cfg.k
        rate = cfg.k / d
    return MetricsRecord(
        success=ok,
        delay_slots=dl,
        peak_memory=trace.memory_peaks,
        overhead=ov,
        achieved_rate=rate,
        xor_ops=trace.xor_ops,
        extras=dict(trace.extras),
    )


def random_walk_oracle(steps: int, trials: int, rng: np.random.Generator) -> float:
    """Mean absolute endpoint E|S_n| of a symmetric +-1 walk.

    Exact binomial enumeration for small n (so the n = 1, 2 values are
    exact); vectorized sampling of the endpoint distribution otherwise.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if steps == 0:
        return 0.0
    if steps <= 64:
        total = 0.0
        for j in range(steps + 1):
            total += abs(steps - 2 * j) * math.comb(steps, j)
        return total / (1 << steps)
    heads = rng.binomial(steps, 0.5, size=trials)
    return float(np.mean(np.abs(2 * heads.astype(np.int64) - steps)))


@dataclass(frozen=True)
class CampaignCell:
    scheme: str
    k: int
    eps: tuple
    params: object = None  # SchemeParams or None for defaults
    payload_size: int = 1
    horizon: int | None = None


@dataclass
class CellAggregate:
    cell: CampaignCell
    trials: int
    success_rate: float
    mean_delay: float | None
    sd_delay: float | None
    mean_peak_mem: float
    sd_peak_mem: float
    mean_overhead: float | None
    mean_rate: float | None
    mean_xor_ops: float
    records: list


def _cell_seed(master_seed: int, cell_index: int, trial: int):
    # entropy tuple keyed by (master, cell, trial): reproducible regardless
    # of execution order, and independent across cells and trials
    return (master_seed, cell_index, trial)


def run_trial(cell: CampaignCell, master_seed: int, cell_index: int, trial: int) -> MetricsRecord:
    cfg = NetworkConfig(
        k=cell.k,
        links=tuple(LinkSpec(e) for e in cell.eps),
        scheme=cell.scheme,
        params=cell.params,
        payload_size=cell.payload_size,
        seed=_cell_seed(master_seed, cell_index, trial),
        horizon=cell.horizon,
    )
    return record_from_trace(run(cfg))


def run_experiment(cells, trials: int, master_seed: int) -> list:
    """Run every (cell, trial) pair; deterministic given master_seed.

    TIMEOUT trials lower the cell's success rate but never abort the
    campaign.  Delay/overhead/rate aggregates are over successful trials.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    cells = list(cells)
    if not cells:
        raise ValueError("empty campaign grid")
    out = []
    for ci, cell in enumerate(cells):
        records = [run_trial(cell, master_seed, ci, t) for t in range(trials)]
        succ = [r for r in records if r.success]
        delays = np.array([r.delay_slots for r in succ], dtype=np.float64)
        peaks = np.array(
            [max(r.peak_memory) if r.peak_memory else 0 for r in records], dtype=np.float64
        )
        out.append(
            CellAggregate(
                cell=cell,
                trials=trials,
                success_rate=len(succ) / trials,
                mean_delay=float(delays.mean()) if len(succ) else None,
                sd_delay=float(delays.std()) if len(succ) else None,
                mean_peak_mem=float(peaks.mean()),
                sd_peak_mem=float(peaks.std()),
                mean_overhead=float(np.mean([r.overhead for r in succ])) if len(succ) else None,
                mean_rate=float(np.mean([r.achieved_rate for r in succ])) if len(succ) else None,
                mean_xor_ops=float(np.mean([r.xor_ops for r in records])),
                records=records,
            )
        )
    return out


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return format(x, ".6g")
    return str(x)


def aggregate_to_csv(aggregates) -> str:
    """Fixed-column CSV; byte-identical for identical campaign inputs."""
    lines = [",".join(CSV_COLUMNS)]
    for a in aggregates:
        c = a.cell
        row = (
            c.scheme,
            c.k,
            len(c.eps),
            "|".join(format(e, "g") for e in c.eps),
            a.trials,
            a.success_rate,
            a.mean_delay,
            a.sd_delay,
            a.mean_peak_mem,
            a.sd_peak_mem,
            a.mean_overhead,
            a.mean_rate,
            a.mean_xor_ops,
        )
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def aggregate_to_json(aggregates) -> list:
    out = []
    for a in aggregates:
        c = a.cell
        out.append(
            {
                "scheme": c.scheme,
                "k": c.k,
                "L": len(c.eps),
                "eps": list(c.eps),
                "trials": a.trials,
                "success_rate": a.success_rate,
                "mean_delay": a.mean_delay,
                "sd_delay": a.sd_delay,
                "mean_peak_mem": a.mean_peak_mem,
                "sd_peak_mem": a.sd_peak_mem,
                "mean_overhead": a.mean_overhead,
                "mean_rate": a.mean_rate,
                "xor_ops": a.mean_xor_ops,
            }
        )
    return out
