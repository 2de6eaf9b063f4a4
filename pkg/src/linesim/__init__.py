"""Simulator for erasure-coded relaying schemes on line networks."""

from . import fountain, general_net, gf2, gfq, metrics, schemes
from .channel import LinkSpec, NetworkConfig, RunTrace, run, trace_to_jsonl
from .general_net import ErasureDag, decompose_paths, end_to_end_matrix, run_multipath
from .metrics import MetricsRecord, random_walk_oracle, run_experiment
from .schemes import SCHEMES, SchemeParams, canonical_name, is_adaptable

__version__ = "0.1.0"

__all__ = [
    "LinkSpec",
    "NetworkConfig",
    "RunTrace",
    "run",
    "trace_to_jsonl",
    "ErasureDag",
    "decompose_paths",
    "end_to_end_matrix",
    "run_multipath",
    "MetricsRecord",
    "random_walk_oracle",
    "run_experiment",
    "SCHEMES",
    "SchemeParams",
    "canonical_name",
    "is_adaptable",
    "gf2",
    "gfq",
    "fountain",
    "schemes",
    "metrics",
    "general_net",
    "__version__",
]
