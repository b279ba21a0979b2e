"""Report builders: golden layouts and formatting rules."""

import csv
import io
import json

from mgtd import reports
from mgtd.evaluation import ConfusionMatrix, EvalReport, PartitionResult, metrics
from mgtd.reports import (
    characteristic_csv,
    characteristic_markdown,
    display_name,
    eval_reports_csv,
    eval_reports_markdown,
    paired_csv,
    paired_markdown,
    pct,
    per_topic_csv,
    per_topic_markdown,
    write_run_manifest,
)


def part(name, tp, fp, fn, tn) -> PartitionResult:
    cm = ConfusionMatrix(tp, fp, fn, tn)
    return PartitionResult(
        name=name, n=cm.total, confusion=cm,
        positive=metrics(cm, "positive"), weighted=metrics(cm, "weighted"),
    )


LR = EvalReport(
    model_kind="lr", dataset="demo",
    folds=[part("fold1", 4, 1, 0, 5), part("fold2", 5, 0, 1, 4)],
    test=part("test", 9, 1, 2, 8),
)
DT_FAILED = EvalReport(model_kind="dt", dataset="demo", error="ValueError: boom")
LR_AFTER = EvalReport(model_kind="lr", dataset="demo", test=part("test", 6, 4, 5, 5))


class TestFormatting:
    def test_pct(self):
        assert pct(0.7432) == "74.32%"
        assert pct(1.0) == "100.00%"
        assert pct(0.0) == "0.00%"
        assert pct(0.005) == "0.50%"

    def test_display_name(self):
        assert display_name("lr") == "LR"
        assert display_name("mnb") == "MNB"
        assert display_name("mlp") == "MLP"
        assert display_name("custom") == "CUSTOM"


class TestEvalMarkdown:
    GOLDEN = (
        "## Blind test results (weighted averaging)\n"
        "| Model | Acc | P | R | F1 |\n"
        "|---|---|---|---|---|\n"
        "| LR | 85.00% | 85.50% | 85.00% | 85.04% |\n"
        "| DT | error |  |  |  |\n"
        "\n"
        "## Per-fold validation accuracy\n"
        "| Model | fold1 | fold2 | mean |\n"
        "|---|---|---|---|\n"
        "| LR | 90.00% | 90.00% | 90.00% |\n"
        "| DT | error |  |  |\n"
        "\n"
        "## Failures\n"
        "- DT: ValueError: boom\n"
    )

    def test_golden_layout(self):
        assert eval_reports_markdown([LR, DT_FAILED]) == self.GOLDEN

    def test_mode_switch_relabels_header(self):
        out = eval_reports_markdown([LR], mode="positive")
        assert out.startswith("## Blind test results (positive averaging)\n")
        assert "| LR | 85.00% | 90.00% | 81.82% | 85.71% |" in out

    def test_byte_identical_across_calls(self):
        assert eval_reports_markdown([LR, DT_FAILED]) == eval_reports_markdown(
            [LR, DT_FAILED]
        )


class TestEvalCsv:
    def test_structure(self):
        out = eval_reports_csv([LR, DT_FAILED])
        rows = list(csv.reader(io.StringIO(out)))
        assert rows[0] == [
            "model", "dataset", "partition", "mode", "n",
            "accuracy", "precision", "recall", "f1",
            "tp", "fp", "fn", "tn", "error",
        ]
        # lr: (2 folds + test) x 2 modes; dt: one stub row
        assert len(rows) == 1 + 6 + 1
        assert rows[1][:5] == ["lr", "demo", "fold1", "positive", "10"]
        assert rows[6] == [
            "lr", "demo", "test", "weighted", "20",
            "0.8500000000", "0.8550000000", "0.8500000000", "0.8503759398",
            "9", "1", "2", "8", "",
        ]
        assert rows[7][0] == "dt"
        assert rows[7][-1] == "ValueError: boom"

    def test_newline_convention(self):
        out = eval_reports_csv([LR])
        assert "\r" not in out
        assert out.endswith("\n")


CHAR_ROWS = [
    {
        "family": "readability", "metric": "gunning_fog",
        "human_mean": 12.894, "human_sd": 1.5,
        "machine_mean": 10.41, "machine_sd": 1.25,
        "n_human": 4, "n_machine": 4,
        "t": 2.3456, "dof": 5.87, "p": 0.0312, "significant": True,
    },
    {
        "family": "bias", "metric": "hedges",
        "human_mean": 0.0111, "human_sd": 0.002,
        "machine_mean": 0.018, "machine_sd": 0.003,
        "n_human": 4, "n_machine": 4,
        "t": -3.8, "dof": 5.2, "p": 0.011, "significant": True,
    },
]


class TestCharacteristicTables:
    GOLDEN_MD = (
        "## Readability comparison\n"
        "| Metric | Human mean (SD) | Machine mean (SD) | t | p | sig@0.05 |\n"
        "|---|---|---|---|---|---|\n"
        "| gunning_fog | 12.8940 (1.5000) | 10.4100 (1.2500) | 2.346 | 0.0312 | yes |\n"
        "\n"
        "## Bias comparison\n"
        "| Metric | Human mean (SD) | Machine mean (SD) | t | p | sig@0.05 |\n"
        "|---|---|---|---|---|---|\n"
        "| hedges | 0.0111 (0.0020) | 0.0180 (0.0030) | -3.800 | 0.011 | yes |\n"
    )

    def test_golden_markdown(self):
        assert characteristic_markdown(CHAR_ROWS) == self.GOLDEN_MD

    def test_csv(self):
        rows = list(csv.reader(io.StringIO(characteristic_csv(CHAR_ROWS))))
        assert rows[0][:4] == ["family", "metric", "human_mean", "human_sd"]
        assert rows[1][0] == "readability"
        assert rows[1][2] == "12.8940000000"
        assert rows[1][-1] == "true"
        assert rows[2][8] == "-3.8"


class TestPairedTables:
    GOLDEN_MD = (
        "## Original\n"
        "| Model | Acc | P | R | F1 |\n"
        "|---|---|---|---|---|\n"
        "| LR | 85.00% | 85.50% | 85.00% | 85.04% |\n"
        "| DT | error |  |  |  |\n"
        "\n"
        "## Rephrased\n"
        "| Model | Acc | P | R | F1 |\n"
        "|---|---|---|---|---|\n"
        "| LR | 55.00% | 55.50% | 55.00% | 55.11% |\n"
        "\n"
        "## Delta (rephrased minus original)\n"
        "| Model | Acc | P | R | F1 |\n"
        "|---|---|---|---|---|\n"
        "| LR | -30.00 | -30.00 | -30.00 | -29.92 |\n"
        "| DT | n/a |  |  |  |\n"
    )

    def test_golden_markdown(self):
        assert paired_markdown([LR, DT_FAILED], [LR_AFTER]) == self.GOLDEN_MD

    def test_csv_deltas_signed(self):
        out = paired_csv([LR], [LR_AFTER])
        rows = list(csv.reader(io.StringIO(out)))
        assert rows[0][0] == "model"
        assert rows[1][2] == "0.8500000000"
        assert rows[1][6] == "0.5500000000"
        assert rows[1][10] == "-0.3000000000"
        up = paired_csv([LR_AFTER], [LR])
        assert list(csv.reader(io.StringIO(up)))[1][10] == "+0.3000000000"


class TestPerTopicTables:
    ROWS = [
        {"topic": "alpha", "n": 10, "accuracy": 0.9, "precision": 0.8,
         "recall": 1.0, "f1": 8 / 9},
        {"topic": "merged", "n": 20, "accuracy": 0.85, "precision": 0.855,
         "recall": 0.85, "f1": 0.8503759398496241},
    ]

    def test_markdown(self):
        assert per_topic_markdown(self.ROWS) == (
            "| Topic | Acc | P | R | F1 |\n"
            "|---|---|---|---|---|\n"
            "| alpha | 90.00% | 80.00% | 100.00% | 88.89% |\n"
            "| merged | 85.00% | 85.50% | 85.00% | 85.04% |\n"
        )

    def test_csv(self):
        assert per_topic_csv(self.ROWS) == (
            "topic,n,accuracy,precision,recall,f1\n"
            "alpha,10,0.9000000000,0.8000000000,1.0000000000,0.8888888889\n"
            "merged,20,0.8500000000,0.8550000000,0.8500000000,0.8503759398\n"
        )


class TestRunManifest:
    def test_stable_sorted_json(self, tmp_path):
        path = tmp_path / "manifest.json"
        manifest = {"zeta": 1, "alpha": {"b": 2, "a": 1}, "seed": 42}
        write_run_manifest(path, manifest)
        text = path.read_text(encoding="utf-8")
        assert text.endswith("\n")
        assert json.loads(text) == manifest
        assert text.index('"alpha"') < text.index('"seed"') < text.index('"zeta"')

    def test_model_display_covers_every_kind(self):
        from mgtd.models import KINDS

        assert set(reports.MODEL_DISPLAY) == set(KINDS)
