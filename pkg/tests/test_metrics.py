"""Metrics derivation, the random-walk oracle, and campaign aggregation."""

import math

import numpy as np
import pytest

from linesim import metrics
from linesim.channel import LinkSpec, NetworkConfig, run
from linesim.metrics import (
    CSV_COLUMNS,
    CampaignCell,
    aggregate_to_csv,
    aggregate_to_json,
    random_walk_oracle,
    run_experiment,
)


class TestDelay:
    def test_arithmetic(self):
        cfg = NetworkConfig(k=100, links=(LinkSpec(0.0),), scheme="forward_only", seed=0)
        t = run(cfg)
        d = metrics.delay(t, 100, (0.0,))
        assert d == t.completion_slot - 100

    def test_min_cut_uses_worst_link(self):
        assert metrics.min_cut_rate((0.1, 0.4, 0.2)) == pytest.approx(0.6)

    def test_timeout_is_none(self):
        cfg = NetworkConfig(k=50, links=(LinkSpec(0.99),), scheme="forward_only", horizon=60, seed=1)
        t = run(cfg)
        assert metrics.delay(t, 50, (0.99,)) is None

    def test_record_fields(self):
        cfg = NetworkConfig(
            k=200, links=(LinkSpec(0.1), LinkSpec(0.1)), scheme="greedy_random", seed=2
        )
        rec = metrics.record_from_trace(run(cfg))
        assert rec.success
        assert rec.achieved_rate <= 1
        assert rec.overhead >= 0
        completion = 200 / rec.achieved_rate
        assert rec.delay_slots == pytest.approx(completion - 200 / 0.9)


class TestRandomWalkOracle:
    def test_one_step(self):
        assert random_walk_oracle(1, 10, np.random.default_rng(0)) == 1.0

    def test_two_steps(self):
        assert random_walk_oracle(2, 10, np.random.default_rng(0)) == 1.0

    def test_zero_steps(self):
        assert random_walk_oracle(0, 10, np.random.default_rng(0)) == 0.0

    def test_asymptotic(self):
        est = random_walk_oracle(5000, 100_000, np.random.default_rng(1))
        assert est == pytest.approx(math.sqrt(2 * 5000 / math.pi), rel=0.02)

    def test_validation(self):
        with pytest.raises(ValueError):
            random_walk_oracle(-1, 10, np.random.default_rng(0))
        with pytest.raises(ValueError):
            random_walk_oracle(5, 0, np.random.default_rng(0))


class TestCampaigns:
    def test_singleton_matches_single_record(self):
        cell = CampaignCell("greedy_random", 200, (0.1, 0.1))
        (agg,) = run_experiment([cell], trials=1, master_seed=9)
        (rec,) = agg.records
        assert agg.success_rate == 1.0
        assert agg.mean_delay == rec.delay_slots
        assert agg.mean_peak_mem == max(rec.peak_memory)
        assert agg.sd_delay == 0.0

    def test_deterministic_bytes(self):
        cells = [
            CampaignCell("greedy_random", 150, (0.1, 0.1)),
            CampaignCell("feedback_optimal", 150, (0.2, 0.2)),
        ]
        a = aggregate_to_csv(run_experiment(cells, 3, master_seed=4))
        b = aggregate_to_csv(run_experiment(cells, 3, master_seed=4))
        assert a.encode() == b.encode()

    def test_seed_changes_output(self):
        cell = CampaignCell("greedy_random", 150, (0.1, 0.1))
        a = aggregate_to_csv(run_experiment([cell], 3, master_seed=4))
        b = aggregate_to_csv(run_experiment([cell], 3, master_seed=5))
        assert a != b

    def test_timeout_lowers_success_rate(self):
        cell = CampaignCell("forward_only", 50, (0.99,), horizon=60)
        (agg,) = run_experiment([cell], trials=2, master_seed=6)
        assert agg.success_rate == 0.0
        assert agg.mean_delay is None and agg.mean_rate is None

    def test_csv_header(self):
        cell = CampaignCell("feedback_optimal", 100, (0.1,))
        csv = aggregate_to_csv(run_experiment([cell], 1, master_seed=7))
        lines = csv.splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert lines[1].startswith("feedback_optimal,100,1,0.1,1,")

    def test_json_shape(self):
        cell = CampaignCell("feedback_optimal", 100, (0.1,))
        (doc,) = aggregate_to_json(run_experiment([cell], 1, master_seed=8))
        assert doc["scheme"] == "feedback_optimal"
        assert set(doc) == set(CSV_COLUMNS)

    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError):
            run_experiment([], 1, 0)
        with pytest.raises(ValueError):
            run_experiment([CampaignCell("greedy", 10, (0.1,))], 0, 0)
