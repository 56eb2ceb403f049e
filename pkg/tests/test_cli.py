"""CLI stage wiring, counters, manifest bookkeeping, and exit codes."""

from __future__ import annotations

import json
import os

import pytest

from pubmine.cli import main
from pubmine.pipeline import (
    ManifestError,
    load_manifest,
    validate_manifest,
)
from pubmine.rules import save_rules_csv
from pubmine.synth import write_synthetic_marc_file

from conftest import ALA_CHICAGO_RULE
from pubmine.rules import RuleDatabase


def run(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


FOUR_TRANSACTIONS_JSONL = (
    '{"items": ["a", "b"]}\n'
    '{"items": ["b", "c"]}\n'
    '{"items": ["a", "b", "c"]}\n'
    '{"items": ["a", "b"]}\n'
)


class TestExtract:
    def test_bundled_fixture_counters(self, fixture_1000_path, fixture_1000_truth, tmp_path, capsys):
        out = tmp_path / "pairs.csv"
        manifest = tmp_path / "manifest.json"
        code, stdout, _ = run(
            ["extract", fixture_1000_path, "--out", str(out), "--manifest", str(manifest)],
            capsys,
        )
        assert code == 0
        assert "1000 records read" in stdout
        counters = load_manifest(str(manifest))["stages"]["extract"]["counters"]
        assert counters["records_read"] == fixture_1000_truth.records_readable
        assert counters["records_skipped"] == 0
        assert counters["pairs_extracted"] == fixture_1000_truth.pairs
        assert counters["encoding_fallbacks"] == fixture_1000_truth.latin1_records

    def test_corrupt_records_counted(self, tmp_path, capsys):
        fixture = tmp_path / "corrupt.mrc"
        truth = write_synthetic_marc_file(str(fixture), n_records=200, seed=4242, corrupt_fraction=0.1)
        assert truth.records_corrupted == 20
        out = tmp_path / "pairs.csv"
        manifest = tmp_path / "manifest.json"
        code, _, _ = run(
            ["extract", str(fixture), "--out", str(out), "--manifest", str(manifest)],
            capsys,
        )
        assert code == 0
        counters = load_manifest(str(manifest))["stages"]["extract"]["counters"]
        assert counters["records_skipped"] == truth.records_corrupted
        assert counters["records_read"] == truth.records_readable
        assert counters["pairs_extracted"] == truth.pairs

    def test_no_readable_records_fails(self, tmp_path, capsys):
        empty = tmp_path / "empty.mrc"
        empty.write_bytes(b"")
        code, _, stderr = run(["extract", str(empty), "--out", str(tmp_path / "p.csv")], capsys)
        assert code == 1
        assert "no readable records" in stderr

    def test_multiple_inputs_accumulate(self, tmp_path, capsys):
        a = tmp_path / "a.mrc"
        b = tmp_path / "b.mrc"
        ta = write_synthetic_marc_file(str(a), n_records=50, seed=1)
        tb = write_synthetic_marc_file(str(b), n_records=60, seed=2)
        manifest = tmp_path / "m.json"
        code, _, _ = run(
            ["extract", str(a), str(b), "--out", str(tmp_path / "p.csv"), "--manifest", str(manifest)],
            capsys,
        )
        assert code == 0
        counters = load_manifest(str(manifest))["stages"]["extract"]["counters"]
        assert counters["records_read"] == 110
        assert counters["pairs_extracted"] == ta.pairs + tb.pairs


class TestClusterStage:
    def test_counters_and_determinism(self, fixture_1000_path, tmp_path, capsys):
        pairs = tmp_path / "pairs.csv"
        manifest = tmp_path / "manifest.json"
        run(["extract", fixture_1000_path, "--out", str(pairs), "--manifest", str(manifest)], capsys)
        out1 = tmp_path / "run1"
        out2 = tmp_path / "run2"
        code, stdout, _ = run(
            ["cluster", "--pairs", str(pairs), "--out-dir", str(out1), "--manifest", str(manifest)],
            capsys,
        )
        assert code == 0
        counters = load_manifest(str(manifest))["stages"]["cluster"]["counters"]
        assert counters["transactions"] <= counters["pairs_read"]
        assert counters["pairs_read"] == 1002
        code, _, _ = run(["cluster", "--pairs", str(pairs), "--out-dir", str(out2)], capsys)
        assert code == 0
        for name in ("clusters_place.csv", "clusters_name.csv", "transactions.jsonl"):
            with open(out1 / name, "rb") as f1, open(out2 / name, "rb") as f2:
                assert f1.read() == f2.read(), name

    def test_all_bracketed_pairs_warn_but_exit_zero(self, tmp_path, capsys):
        pairs = tmp_path / "pairs.csv"
        pairs.write_text(
            "record_id,place,name\r\nr1,[S.l.],[s.n.]\r\nr2,[x],[y]\r\n",
            encoding="utf-8",
        )
        code, _, stderr = run(
            ["cluster", "--pairs", str(pairs), "--out-dir", str(tmp_path / "out")], capsys
        )
        assert code == 0
        assert "no transactions" in stderr
        assert (tmp_path / "out" / "transactions.jsonl").read_text() == ""


class TestMineStage:
    def test_four_transaction_fixture(self, tmp_path, capsys):
        transactions = tmp_path / "transactions.jsonl"
        transactions.write_text(FOUR_TRANSACTIONS_JSONL)
        itemsets = tmp_path / "itemsets.jsonl"
        rules = tmp_path / "rules.csv"
        manifest = tmp_path / "manifest.json"
        code, stdout, _ = run(
            [
                "mine",
                "--transactions", str(transactions),
                "--min-support", "0.5",
                "--out-itemsets", str(itemsets),
                "--out-rules", str(rules),
                "--manifest", str(manifest),
            ],
            capsys,
        )
        assert code == 0
        lines = itemsets.read_text().splitlines()
        assert [json.loads(line) for line in lines] == [
            {"items": ["b"], "count": 4, "support": 1.0},
            {"items": ["a"], "count": 3, "support": 0.75},
            {"items": ["a", "b"], "count": 3, "support": 0.75},
            {"items": ["b", "c"], "count": 2, "support": 0.5},
            {"items": ["c"], "count": 2, "support": 0.5},
        ]
        assert rules.read_bytes() == (
            b"antecedent,consequent,confidence,lift,support\r\n"
            b"a,b,1.0,1.0,0.75\r\n"
            b"b,a,0.75,1.0,0.75\r\n"
            b"c,b,1.0,1.0,0.5\r\n"
        )
        counters = load_manifest(str(manifest))["stages"]["mine"]["counters"]
        assert counters == {
            "transactions": 4,
            "frequent_itemsets": 5,
            "rule_candidates": 4,
            "rules": 3,
        }

    def test_impossible_support_empty_outputs_exit_zero(self, tmp_path, capsys):
        transactions = tmp_path / "transactions.jsonl"
        transactions.write_text('{"items": ["a"]}\n{"items": ["b"]}\n')
        itemsets = tmp_path / "itemsets.jsonl"
        rules = tmp_path / "rules.csv"
        code, _, _ = run(
            [
                "mine",
                "--transactions", str(transactions),
                "--min-support", "1.0",
                "--out-itemsets", str(itemsets),
                "--out-rules", str(rules),
            ],
            capsys,
        )
        assert code == 0
        assert itemsets.read_text() == ""
        assert rules.read_bytes() == b"antecedent,consequent,confidence,lift,support\r\n"

    def test_empty_transactions_file_fails(self, tmp_path, capsys):
        transactions = tmp_path / "transactions.jsonl"
        transactions.write_text("")
        code, _, stderr = run(
            [
                "mine",
                "--transactions", str(transactions),
                "--out-itemsets", str(tmp_path / "i.jsonl"),
                "--out-rules", str(tmp_path / "r.csv"),
            ],
            capsys,
        )
        assert code == 1
        assert "error" in stderr

    def test_predictions_and_jsonl_outputs(self, tmp_path, capsys):
        transactions = tmp_path / "transactions.jsonl"
        transactions.write_text(FOUR_TRANSACTIONS_JSONL)
        predictions = tmp_path / "predictions.jsonl"
        rules_jsonl = tmp_path / "rules.jsonl"
        code, _, _ = run(
            [
                "mine",
                "--transactions", str(transactions),
                "--min-support", "0.5",
                "--out-itemsets", str(tmp_path / "i.jsonl"),
                "--out-rules", str(tmp_path / "r.csv"),
                "--rules-jsonl", str(rules_jsonl),
                "--predictions", str(predictions),
            ],
            capsys,
        )
        assert code == 0
        assert len(rules_jsonl.read_text().splitlines()) == 3
        predicted = [json.loads(line) for line in predictions.read_text().splitlines()]
        # Of the distinct transactions, only {b,c} has something left to
        # predict: {a,b} matches no applicable rule and {a,b,c} is saturated.
        assert predicted == [
            {
                "items": ["b", "c"],
                "prediction": [{"item": "a", "confidence": 0.75, "lift": 1.0}],
            }
        ]

    def test_workers_flag_does_not_change_output(self, tmp_path, capsys):
        transactions = tmp_path / "transactions.jsonl"
        transactions.write_text(FOUR_TRANSACTIONS_JSONL)
        outputs = []
        for workers in ("1", "8"):
            rules = tmp_path / f"rules-{workers}.csv"
            code, _, _ = run(
                [
                    "--workers", workers,
                    "mine",
                    "--transactions", str(transactions),
                    "--min-support", "0.25",
                    "--out-itemsets", str(tmp_path / f"i-{workers}.jsonl"),
                    "--out-rules", str(rules),
                ],
                capsys,
            )
            assert code == 0
            outputs.append(rules.read_bytes())
        assert outputs[0] == outputs[1]


class TestPredictCommand:
    def test_pinned_rule_output(self, tmp_path, capsys):
        rules = tmp_path / "rules.csv"
        save_rules_csv(RuleDatabase((ALA_CHICAGO_RULE,), None, None), str(rules))
        code, stdout, _ = run(
            ["predict", "--rules", str(rules), "American Library Association"], capsys
        )
        assert code == 0
        body = json.loads(stdout)
        assert body["suggestions"] == [
            {"value": "Chicago", "confidence": 0.954449986873195, "lift": 111.876299789079}
        ]

    def test_malformed_rules_exit_code(self, tmp_path, capsys):
        rules = tmp_path / "rules.csv"
        rules.write_text("antecedent,consequent,confidence,lift,support\r\na,b,x,1,0.1\r\n")
        code, _, stderr = run(["predict", "--rules", str(rules), "a"], capsys)
        assert code == 2
        assert "line 2" in stderr


class TestServeCommand:
    def test_malformed_rules_fail_before_binding(self, tmp_path, capsys):
        rules = tmp_path / "rules.csv"
        rules.write_text("antecedent,consequent,confidence,lift,support\r\na,b,2.0,1.0,0.1\r\n")
        code, _, stderr = run(["serve", "--rules", str(rules)], capsys)
        assert code == 2
        assert "line 2" in stderr


class TestGlobalFlags:
    def test_workers_must_be_positive(self, tmp_path, capsys):
        code, _, stderr = run(
            ["--workers", "0", "extract", "x.mrc", "--out", str(tmp_path / "p.csv")], capsys
        )
        assert code == 2
        assert "--workers" in stderr

    def test_missing_input_file_is_clean_error(self, tmp_path, capsys):
        code, _, stderr = run(
            ["extract", str(tmp_path / "missing.mrc"), "--out", str(tmp_path / "p.csv")], capsys
        )
        assert code == 1
        assert "error" in stderr


class TestManifest:
    def test_three_stages_recorded_with_checksums(self, fixture_1000_path, tmp_path, capsys):
        pairs = tmp_path / "pairs.csv"
        work = tmp_path / "work"
        manifest = tmp_path / "manifest.json"
        run(["extract", fixture_1000_path, "--out", str(pairs), "--manifest", str(manifest)], capsys)
        run(["cluster", "--pairs", str(pairs), "--out-dir", str(work), "--manifest", str(manifest)], capsys)
        run(
            [
                "mine",
                "--transactions", str(work / "transactions.jsonl"),
                "--min-support", "0.005",
                "--out-itemsets", str(work / "itemsets.jsonl"),
                "--out-rules", str(work / "rules.csv"),
                "--manifest", str(manifest),
            ],
            capsys,
        )
        data = load_manifest(str(manifest))
        assert set(data["stages"]) == {"extract", "cluster", "mine"}
        for stage in data["stages"].values():
            for checksum in {**stage["inputs"], **stage["outputs"]}.values():
                assert len(checksum) == 64
        assert data["stages"]["mine"]["params"]["min_support"] == 0.005
        validate_manifest(data)
        extracted = data["stages"]["extract"]["counters"]["pairs_extracted"]
        transactions = data["stages"]["cluster"]["counters"]["transactions"]
        assert transactions <= extracted

    def test_monotonicity_violations_detected(self):
        bad = {
            "stages": {
                "extract": {"counters": {"pairs_extracted": 5}},
                "cluster": {"counters": {"transactions": 6}},
            }
        }
        with pytest.raises(ManifestError):
            validate_manifest(bad)
        bad = {
            "stages": {
                "mine": {"counters": {"rules": 10, "rule_candidates": 4}},
            }
        }
        with pytest.raises(ManifestError):
            validate_manifest(bad)
