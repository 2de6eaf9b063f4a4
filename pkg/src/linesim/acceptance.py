"""Statistical acceptance suite: eleven Monte Carlo checks of the coding
schemes' rank bounds, delay/memory growth laws, and the simulator's
determinism, each with a fixed seed and a wall-clock budget.

Every criterion returns a :class:`CriterionResult`; a criterion passes only
if its statistical check holds *and* it finishes within budget.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import gf2
from .metrics import (
    CampaignCell,
    aggregate_to_csv,
    random_walk_oracle,
    run_experiment,
    run_trial,
)
from .schemes import SchemeParams, is_adaptable

__all__ = ["CriterionResult", "CRITERIA", "run_criterion", "run_suite"]

MASTER_SEED = 20240915


@dataclass
class CriterionResult:
    name: str
    passed: bool
    runtime_s: float
    budget_s: float
    details: dict = field(default_factory=dict)

    @property
    def within_budget(self) -> bool:
        return self.runtime_s <= self.budget_s


def _rng(tag: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((MASTER_SEED, tag)))


# --- 1: rank-deficiency bound of the lower-triangular ensemble ------------


def crit_prop1() -> dict:
    rng = _rng(1)
    n = 10_000
    c = 2.0
    details = {}
    ok = True
    for k in (16, 32, 64):
        fails = 0
        for _ in range(n):
            M = gf2.random_lower_triangular(k, c, rng)
            if gf2.rank(M) < k:
                fails += 1
        phat = fails / n
        bound = 1.0 / (2 * k ** (c - 1))
        sigma = math.sqrt(max(phat * (1 - phat), 1e-12) / n)
        ok &= phat <= bound + 3 * sigma
        details[f"k={k}"] = {"phat": phat, "bound": bound, "sigma": sigma}
    return {"passed": ok, **details}


# --- 2: expected kernel surplus of the same ensemble ----------------------


def crit_eq1() -> dict:
    rng = _rng(2)
    n = 100_000
    c = 2.0
    details = {}
    ok = True
    for k in (4, 8, 16):
        surplus = np.empty(n)
        for t in range(n):
            M = gf2.random_lower_triangular(k, c, rng)
            surplus[t] = gf2.kernel_size(M) - 1
        mean = float(surplus.mean())
        target = 1.0 / (2 * k)
        se = float(surplus.std(ddof=1)) / math.sqrt(n)
        ok &= abs(mean - target) <= 3 * se
        details[f"k={k}"] = {"mean": mean, "target": target, "se": se}
    return {"passed": ok, **details}


# --- 3: rank preservation under composition -------------------------------


def _random_full_col_rank(rows: int, cols: int, rng) -> gf2.BitMatrix:
    while True:
        M = gf2.BitMatrix(rows, cols, gf2.random_words(rng, rows, cols))
        if gf2.rank(M) == cols:
            return M


def crit_fullrank() -> dict:
    rng = _rng(3)
    trials = 1000
    bad = 0
    for _ in range(trials):
        cols = int(rng.integers(2, 33))
        rows = cols + int(rng.integers(0, 65 - cols))
        A = _random_full_col_rank(rows, cols, rng)
        # partition, recombine as a direct sum, then chain a product
        cut = int(rng.integers(1, cols))
        left, right = gf2.partition_columns(A, (cut, cols - cut))
        S = gf2.direct_sum(left, right)
        B = _random_full_col_rank(int(rng.integers(S.rows, S.rows + 16)), S.rows, rng)
        C = gf2.multiply(B, S)
        if gf2.rank(C) != cols:
            bad += 1
    return {"passed": bad == 0, "trials": trials, "rank_drops": bad}


# --- 4: feedback queue growth and the random-walk oracle ------------------


def crit_feedback() -> dict:
    eps = 0.25
    trials = 200
    ks = (2500, 10_000, 40_000)
    peaks = []
    qdone = {}
    cells = [CampaignCell("feedback_optimal", k, (eps, eps)) for k in ks]
    for ci, cell in enumerate(cells):
        p = []
        qd = []
        for t in range(trials):
            rec = run_trial(cell, MASTER_SEED + 4, ci, t)
            p.append(max(rec.peak_memory))
            qd.append(rec.extras.get("queue_at_source_done", 0))
        peaks.append(float(np.mean(p)))
        qdone[cell.k] = float(np.mean(qd))
    slope = float(np.polyfit(np.log(ks), np.log(peaks), 1)[0])
    # oracle horizon: the relay queue takes a +-1-ish step only on the
    # 2*eps*(1-eps) fraction of slots where exactly one of its two links
    # succeeds, over the source's n = k/(1-eps) transmission slots
    k_mid = 10_000
    nprime = round(2 * eps * (1 - eps) * k_mid / (1 - eps))
    oracle = random_walk_oracle(nprime, 100_000, _rng(4))
    ratio = qdone[k_mid] / oracle
    ok = 0.35 <= slope <= 0.65 and 0.7 <= ratio <= 1.3
    return {
        "passed": ok,
        "mean_peaks": dict(zip(ks, peaks)),
        "slope": slope,
        "mean_queue_at_source_done": qdone,
        "oracle": oracle,
        "oracle_ratio": ratio,
    }


# --- 5: decode-and-re-encode delay ----------------------------------------


def crit_dr_delay() -> dict:
    k, eps, trials = 10_000, 0.2, 100
    cell = CampaignCell("decode_reencode", k, (eps, eps))
    agg = run_experiment([cell], trials, MASTER_SEED + 5)[0]
    ideal = k * eps / (1 - eps)
    lo, hi = 0.85 * ideal, 1.25 * ideal
    ok = agg.success_rate == 1.0 and lo <= agg.mean_delay <= hi
    return {
        "passed": ok,
        "mean_delay": agg.mean_delay,
        "band": (lo, hi),
        "success_rate": agg.success_rate,
    }


# --- 6: sparse systematic decode and memory -------------------------------


def crit_thm1() -> dict:
    k, eps, trials = 20_000, 0.1, 100
    cell = CampaignCell("systematic_sparse", k, (eps, eps))
    agg = run_experiment([cell], trials, MASTER_SEED + 6)[0]
    mem_bound = 1.05 * k * eps / (1 - eps)
    ok = agg.success_rate >= 0.95 and agg.mean_peak_mem <= mem_bound
    return {
        "passed": ok,
        "success_rate": agg.success_rate,
        "mean_peak_mem": agg.mean_peak_mem,
        "mem_bound": mem_bound,
    }


# --- 7: greedy overhead shrinks with k ------------------------------------


def crit_greedy() -> dict:
    eps, trials = 0.1, 100
    ks = (1000, 4000, 16_000)
    cells = [CampaignCell("greedy_random", k, (eps, eps)) for k in ks]
    aggs = run_experiment(cells, trials, MASTER_SEED + 7)
    rates = [a.success_rate for a in aggs]
    overheads = [a.mean_overhead for a in aggs]
    ok = all(r >= 0.95 for r in rates)
    ok &= overheads[0] > overheads[1] > overheads[2]
    return {
        "passed": ok,
        "success_rates": dict(zip(ks, rates)),
        "mean_overheads": dict(zip(ks, overheads)),
    }


# --- 8: forwarding rate vs the coded min-cut rate -------------------------


def crit_mincut() -> dict:
    k, eps, trials = 10_000, 0.2, 20
    fwd = run_experiment([CampaignCell("forward_only", k, (eps, eps))], trials, MASTER_SEED + 8)[0]
    gre = run_experiment([CampaignCell("greedy_random", k, (eps, eps))], trials, MASTER_SEED + 80)[0]
    e2e = (1 - eps) ** 2
    ok = (
        fwd.success_rate == 1.0
        and abs(fwd.mean_rate - e2e) <= 0.05 * e2e
        and gre.success_rate == 1.0
        and gre.mean_rate >= 0.95 * (1 - eps)
    )
    return {
        "passed": ok,
        "forward_rate": fwd.mean_rate,
        "forward_target": e2e,
        "greedy_rate": gre.mean_rate,
        "greedy_floor": 0.95 * (1 - eps),
    }


# --- 9: cross-scheme memory/delay ordering --------------------------------

TABLE1_SCHEMES = (
    "feedback_optimal",
    "systematic_fixed",
    "systematic_sparse",
    "decode_reencode",
    "greedy_random",
)
TABLE1_ADAPTABLE = {
    "feedback_optimal": True,
    "systematic_fixed": False,
    "systematic_sparse": False,
    "decode_reencode": True,
    "greedy_random": True,
}


def table1_cells(k: int = 10_000, eps: float = 0.1):
    return [CampaignCell(s, k, (eps, eps)) for s in TABLE1_SCHEMES]


def crit_table1() -> dict:
    trials = 10
    aggs = run_experiment(table1_cells(), trials, MASTER_SEED + 9)
    mem = {a.cell.scheme: a.mean_peak_mem for a in aggs}
    dly = {a.cell.scheme: a.mean_delay for a in aggs}
    ok = all(a.success_rate == 1.0 for a in aggs)
    sys_mem = (mem["systematic_fixed"], mem["systematic_sparse"])
    big_mem = (mem["decode_reencode"], mem["greedy_random"])
    # "<" needs a factor-2 gap between groups; "~" allows 1.5x inside one
    ok &= mem["feedback_optimal"] < 0.5 * min(sys_mem)
    ok &= max(sys_mem) < 0.5 * min(big_mem)
    ok &= max(big_mem) <= 1.5 * min(big_mem)
    fast = (dly["feedback_optimal"], dly["greedy_random"])
    slow = (dly["decode_reencode"], dly["systematic_fixed"], dly["systematic_sparse"])
    # "~" between growth-class peers: same order of magnitude
    ok &= max(fast) < 0.5 * min(slow)
    ok &= max(fast) <= 10 * min(fast)
    ok &= max(slow) <= 10 * min(slow)
    flags = {s: is_adaptable(s) for s in TABLE1_SCHEMES}
    ok &= flags == TABLE1_ADAPTABLE
    return {
        "passed": ok,
        "mean_peak_mem": mem,
        "mean_delay": dly,
        "adaptable": flags,
    }


# --- 10: dense GF(256) relaying decodes at minimal overhead ---------------


def crit_gfq() -> dict:
    # single link: reception count measures the code's rank overhead alone
    # (behind a relay, slot-level pipeline variance of ~sqrt(2*eps*k) masks it)
    k, eps, trials = 500, 0.1, 200
    cell = CampaignCell("gfq_dense", k, (eps,), params=SchemeParams(q=256))
    good = 0
    for t in range(trials):
        rec = run_trial(cell, MASTER_SEED + 10, 0, t)
        if rec.success and rec.overhead * k <= 10:
            good += 1
    rate = good / trials
    return {"passed": rate >= 0.99, "success_within_k_plus_10": rate}


# --- 11: byte-identical reruns --------------------------------------------


def crit_determinism() -> dict:
    cells = [
        CampaignCell("greedy_random", 1000, (0.1, 0.1)),
        CampaignCell("feedback_optimal", 2500, (0.25, 0.25)),
        CampaignCell("systematic_sparse", 1000, (0.1, 0.1)),
    ]
    csv1 = aggregate_to_csv(run_experiment(cells, 3, MASTER_SEED + 11))
    csv2 = aggregate_to_csv(run_experiment(cells, 3, MASTER_SEED + 11))
    same = csv1.encode() == csv2.encode()
    return {"passed": same, "bytes": len(csv1)}


CRITERIA = {
    "prop1": (crit_prop1, 60.0),
    "eq1": (crit_eq1, 60.0),
    "fullrank": (crit_fullrank, 30.0),
    "feedback": (crit_feedback, 180.0),
    "dr_delay": (crit_dr_delay, 180.0),
    "thm1": (crit_thm1, 300.0),
    "greedy": (crit_greedy, 300.0),
    "mincut": (crit_mincut, 120.0),
    "table1": (crit_table1, 300.0),
    "gfq": (crit_gfq, 120.0),
    "determinism": (crit_determinism, 60.0),
}


def run_criterion(name: str) -> CriterionResult:
    if name not in CRITERIA:
        raise ValueError(f"unknown criterion {name!r}; choices: {sorted(CRITERIA)}")
    fn, budget = CRITERIA[name]
    t0 = time.perf_counter()
    details = fn()
    elapsed = time.perf_counter() - t0
    passed = bool(details.pop("passed")) and elapsed <= budget
    return CriterionResult(name, passed, elapsed, budget, details)


def run_suite(only=None, report=None) -> list:
    """Run all (or the named) criteria; ``report`` is called with each
    CriterionResult as it completes."""
    names = list(CRITERIA) if only is None else list(only)
    results = []
    for name in names:
        res = run_criterion(name)
        results.append(res)
        if report is not None:
            report(res)
    return results
