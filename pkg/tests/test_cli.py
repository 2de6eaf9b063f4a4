"""CLI surface: flags, exit codes, campaign schema errors, and output
channels."""

import json

import pytest

from linesim import cli


def invoke(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestRun:
    def test_success(self, capsys):
        code, out, err = invoke(
            capsys, "run", "--scheme", "greedy", "--k", "300", "--eps", "0.1", "--eps", "0.1", "--seed", "7"
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["success"] is True
        assert doc["scheme"] == "greedy_random"
        assert doc["L"] == 2

    def test_sparse_precondition(self, capsys):
        code, out, err = invoke(
            capsys, "run", "--scheme", "systematic-sparse", "--k", "100", "--eps", "0.001", "--eps", "0.001"
        )
        assert code == 1
        assert "eps*k" in err
        assert out == ""

    def test_k_zero(self, capsys):
        code, _, err = invoke(capsys, "run", "--scheme", "greedy", "--k", "0", "--eps", "0.1")
        assert code == 1 and "k" in err

    def test_unknown_scheme(self, capsys):
        code, _, err = invoke(capsys, "run", "--scheme", "nope", "--k", "10", "--eps", "0.1")
        assert code == 1 and "unknown scheme" in err

    def test_timeout_exit_code(self, capsys):
        code, out, err = invoke(
            capsys, "run", "--scheme", "greedy", "--k", "50", "--eps", "0.95", "--horizon", "60"
        )
        assert code == 2
        assert json.loads(out)["success"] is False
        assert "TIMEOUT" in err

    def test_trace_out(self, capsys, tmp_path):
        path = tmp_path / "trace.jsonl"
        code, _, _ = invoke(
            capsys, "run", "--scheme", "forward", "--k", "50", "--eps", "0.1", "--trace-out", str(path)
        )
        assert code == 0
        lines = path.read_text().splitlines()
        assert json.loads(lines[-1])["summary"] is True

    def test_missing_required_flag(self, capsys):
        assert cli.main(["run", "--scheme", "greedy"]) == 1


class TestCampaign:
    def write(self, tmp_path, doc):
        p = tmp_path / "spec.json"
        p.write_text(json.dumps(doc))
        return str(p)

    def test_csv_output(self, capsys, tmp_path):
        spec = self.write(
            tmp_path,
            {"trials": 2, "master_seed": 1, "cells": [{"scheme": "greedy", "k": 150, "eps": [0.1]}]},
        )
        code, out, _ = invoke(capsys, "campaign", spec)
        assert code == 0
        header, row = out.strip().splitlines()
        assert header.startswith("scheme,k,L,eps,trials,")
        assert row.startswith("greedy_random,150,1,0.1,2,")

    def test_rerun_byte_identical(self, capsys, tmp_path):
        spec = self.write(
            tmp_path,
            {"trials": 2, "master_seed": 5, "cells": [{"scheme": "feedback", "k": 200, "eps": [0.2, 0.2]}]},
        )
        _, out1, _ = invoke(capsys, "campaign", spec)
        _, out2, _ = invoke(capsys, "campaign", spec)
        assert out1.encode() == out2.encode()

    def test_json_format(self, capsys, tmp_path):
        spec = self.write(
            tmp_path,
            {
                "trials": 1,
                "format": "json",
                "cells": [{"scheme": "feedback", "k": 100, "eps": [0.1]}],
            },
        )
        code, out, _ = invoke(capsys, "campaign", spec)
        assert code == 0
        (doc,) = json.loads(out)
        assert doc["scheme"] == "feedback_optimal"

    def test_schema_error_names_path(self, capsys, tmp_path):
        spec = self.write(
            tmp_path, {"trials": 2, "cells": [{"scheme": "greedy", "k": "x", "eps": [0.1]}]}
        )
        code, out, err = invoke(capsys, "campaign", spec)
        assert code == 1
        assert "$.cells[0].k" in err
        assert out == ""

    def test_bad_eps_path(self, capsys, tmp_path):
        spec = self.write(
            tmp_path, {"cells": [{"scheme": "greedy", "k": 10, "eps": [0.1, 1.5]}]}
        )
        code, _, err = invoke(capsys, "campaign", spec)
        assert code == 1 and "$.cells[0].eps[1]" in err

    def test_missing_file(self, capsys):
        code, _, err = invoke(capsys, "campaign", "/nonexistent/spec.json")
        assert code == 1

    def test_invalid_json(self, capsys, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        code, _, err = invoke(capsys, "campaign", str(p))
        assert code == 1 and "invalid JSON" in err

    def test_params_forwarded(self, capsys, tmp_path):
        spec = self.write(
            tmp_path,
            {
                "trials": 1,
                "cells": [
                    {"scheme": "gfq", "k": 100, "eps": [0.1], "params": {"q": 16}}
                ],
            },
        )
        code, out, _ = invoke(capsys, "campaign", spec)
        assert code == 0 and out.splitlines()[1].startswith("gfq_dense,")

    def test_bad_params_path(self, capsys, tmp_path):
        spec = self.write(
            tmp_path,
            {"cells": [{"scheme": "gfq", "k": 100, "eps": [0.1], "params": {"q": 3}}]},
        )
        code, _, err = invoke(capsys, "campaign", spec)
        assert code == 1 and "$.cells[0].params" in err

    def test_shipped_table1_campaign_parses(self):
        from pathlib import Path

        path = Path(__file__).resolve().parents[1] / "campaigns" / "table1.json"
        with open(path) as fp:
            cells, trials, seed, fmt = cli.parse_campaign(json.load(fp))
        assert len(cells) == 5 and trials >= 1 and fmt == "csv"
        assert {c.scheme for c in cells} == {
            "feedback_optimal",
            "systematic_fixed",
            "systematic_sparse",
            "decode_reencode",
            "greedy_random",
        }


class TestAccept:
    def test_only_filter(self, capsys):
        code, out, err = invoke(capsys, "accept", "--only", "fullrank")
        assert code == 0
        (doc,) = json.loads(out)
        assert doc["criterion"] == "fullrank" and doc["passed"]
        assert "fullrank" in err and "PASS" in err

    def test_unknown_criterion(self, capsys):
        code, _, err = invoke(capsys, "accept", "--only", "bogus")
        assert code == 1 and "bogus" in err
