"""Command-line entry point: single runs, campaign grids, and the
acceptance suite.

Machine-readable JSON/CSV goes to stdout; diagnostics go to stderr.
Exit codes: 0 success, 1 usage/config error, 2 simulation TIMEOUT,
3 acceptance failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import acceptance, metrics
from .channel import LinkSpec, NetworkConfig, run, trace_to_jsonl
from .schemes import SCHEMES, SchemeParams, canonical_name

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_TIMEOUT = 2
EXIT_ACCEPT_FAIL = 3


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def _build_params(args) -> SchemeParams | None:
    overrides = {}
    for name in ("c", "delta", "q", "overhead_l"):
        v = getattr(args, name, None)
        if v is not None:
            overrides[name] = v
    return SchemeParams(**overrides) if overrides else None


def cmd_run(args) -> int:
    try:
        scheme = canonical_name(args.scheme)
        cfg = NetworkConfig(
            k=args.k,
            links=tuple(LinkSpec(e) for e in args.eps),
            scheme=scheme,
            params=_build_params(args),
            payload_size=args.payload_size,
            seed=args.seed,
            horizon=args.horizon,
        )
    except (ValueError, TypeError) as exc:
        _err(str(exc))
        return EXIT_USAGE
    try:
        trace = run(cfg, record_events=args.trace_out is not None)
    except ValueError as exc:  # scheme-level config rejection, e.g. eps*k <= e
        _err(str(exc))
        return EXIT_USAGE
    if args.trace_out is not None:
        with open(args.trace_out, "w") as fp:
            trace_to_jsonl(trace, fp)
    rec = metrics.record_from_trace(trace)
    out = {
        "scheme": scheme,
        "k": cfg.k,
        "L": cfg.L,
        "eps": list(cfg.epsilons),
        "seed": args.seed,
        "success": rec.success,
        "completion_slot": trace.completion_slot,
        "delay_slots": rec.delay_slots,
        "peak_memory": list(rec.peak_memory),
        "overhead": rec.overhead,
        "achieved_rate": rec.achieved_rate,
        "xor_ops": rec.xor_ops,
    }
    print(json.dumps(out))
    if trace.completion_slot is None:
        _err(f"TIMEOUT after {cfg.resolved_horizon()} slots")
        return EXIT_TIMEOUT
    return EXIT_OK


class SpecError(Exception):
    """Campaign file violates the schema; message names the JSON path."""


def _expect(cond: bool, path: str, msg: str) -> None:
    if not cond:
        raise SpecError(f"{path}: {msg}")


def parse_campaign(doc) -> tuple:
    """Validate a campaign document into (cells, trials, master_seed, fmt)."""
    _expect(isinstance(doc, dict), "$", "expected a JSON object")
    trials = doc.get("trials", 1)
    _expect(isinstance(trials, int) and trials >= 1, "$.trials", "need an integer >= 1")
    seed = doc.get("master_seed", 0)
    _expect(isinstance(seed, int), "$.master_seed", "need an integer")
    fmt = doc.get("format", "csv")
    _expect(fmt in ("csv", "json"), "$.format", "must be 'csv' or 'json'")
    raw_cells = doc.get("cells")
    _expect(isinstance(raw_cells, list) and raw_cells, "$.cells", "need a nonempty list")
    cells = []
    for i, c in enumerate(raw_cells):
        p = f"$.cells[{i}]"
        _expect(isinstance(c, dict), p, "expected an object")
        unknown = set(c) - {"scheme", "k", "eps", "params", "payload_size", "horizon"}
        _expect(not unknown, p, f"unknown keys {sorted(unknown)}")
        _expect("scheme" in c, f"{p}.scheme", "required")
        try:
            scheme = canonical_name(str(c["scheme"]))
        except ValueError as exc:
            raise SpecError(f"{p}.scheme: {exc}") from None
        k = c.get("k")
        _expect(isinstance(k, int) and k >= 1, f"{p}.k", "need an integer >= 1")
        eps = c.get("eps")
        _expect(isinstance(eps, list) and eps, f"{p}.eps", "need a nonempty list")
        for j, e in enumerate(eps):
            _expect(
                isinstance(e, (int, float)) and 0 <= e < 1,
                f"{p}.eps[{j}]",
                "need a probability in [0, 1)",
            )
        params = None
        if "params" in c:
            _expect(isinstance(c["params"], dict), f"{p}.params", "expected an object")
            try:
                params = SchemeParams(**c["params"])
            except (TypeError, ValueError) as exc:
                raise SpecError(f"{p}.params: {exc}") from None
        ps = c.get("payload_size", 1)
        _expect(isinstance(ps, int) and ps >= 1, f"{p}.payload_size", "need an integer >= 1")
        hz = c.get("horizon")
        _expect(
            hz is None or (isinstance(hz, int) and hz >= k),
            f"{p}.horizon",
            "need an integer >= k",
        )
        cells.append(
            metrics.CampaignCell(
                scheme=scheme,
                k=k,
                eps=tuple(float(e) for e in eps),
                params=params,
                payload_size=ps,
                horizon=hz,
            )
        )
    return cells, trials, seed, fmt


def cmd_campaign(args) -> int:
    try:
        with open(args.spec) as fp:
            doc = json.load(fp)
    except OSError as exc:
        _err(str(exc))
        return EXIT_USAGE
    except json.JSONDecodeError as exc:
        _err(f"{args.spec}: invalid JSON: {exc}")
        return EXIT_USAGE
    try:
        cells, trials, seed, fmt = parse_campaign(doc)
    except SpecError as exc:
        _err(str(exc))
        return EXIT_USAGE
    aggs = metrics.run_experiment(cells, trials, seed)
    if fmt == "csv":
        sys.stdout.write(metrics.aggregate_to_csv(aggs))
    else:
        print(json.dumps(metrics.aggregate_to_json(aggs)))
    return EXIT_OK


def cmd_accept(args) -> int:
    only = None
    if args.only:
        unknown = [n for n in args.only if n not in acceptance.CRITERIA]
        if unknown:
            _err(f"unknown criteria {unknown}; choices: {sorted(acceptance.CRITERIA)}")
            return EXIT_USAGE
        only = args.only

    def report(res):
        state = "PASS" if res.passed else "FAIL"
        print(
            f"{res.name:<12} {state}  ({res.runtime_s:.1f}s / budget {res.budget_s:.0f}s)",
            file=sys.stderr,
        )

    results = acceptance.run_suite(only=only, report=report)
    print(
        json.dumps(
            [
                {
                    "criterion": r.name,
                    "passed": r.passed,
                    "runtime_s": round(r.runtime_s, 2),
                    "budget_s": r.budget_s,
                    "details": r.details,
                }
                for r in results
            ]
        )
    )
    failed = [r.name for r in results if not r.passed]
    if failed:
        _err(f"failed criteria: {', '.join(failed)}")
        return EXIT_ACCEPT_FAIL
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="linesim",
        description="Simulate erasure-coding schemes on line networks.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    rp = sub.add_parser("run", help="one simulation, metrics as JSON")
    rp.add_argument("--scheme", required=True, help=f"one of {sorted(SCHEMES)}")
    rp.add_argument("--k", type=int, required=True, help="number of source symbols")
    rp.add_argument(
        "--eps",
        type=float,
        action="append",
        required=True,
        help="link erasure probability; repeat once per link",
    )
    rp.add_argument("--seed", type=int, default=0)
    rp.add_argument("--payload-size", type=int, default=1, help="bytes per symbol")
    rp.add_argument("--trace-out", default=None, help="write per-slot events as JSON lines")
    rp.add_argument("--horizon", type=int, default=None, help="max slots before TIMEOUT")
    rp.add_argument("--c", type=float, default=None, help="log-overhead constant")
    rp.add_argument("--delta", type=float, default=None, help="sparse-parity density slack")
    rp.add_argument("--q", type=int, default=None, help="field size for gfq_dense")
    rp.add_argument("--overhead-l", dest="overhead_l", type=int, default=None)
    rp.set_defaults(fn=cmd_run)

    cp = sub.add_parser("campaign", help="run a JSON campaign grid")
    cp.add_argument("spec", help="campaign JSON file")
    cp.set_defaults(fn=cmd_campaign)

    ap_acc = sub.add_parser("accept", help="run the acceptance suite")
    ap_acc.add_argument(
        "--only",
        action="append",
        default=None,
        help="run only the named criterion; repeatable",
    )
    ap_acc.set_defaults(fn=cmd_accept)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
