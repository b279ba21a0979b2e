"""Report emission: CSV for machines, Markdown tables for reading.

Every function here is a pure string builder over evaluation results,
so identical inputs give byte-identical output.  Percentages print with
two decimals; the Markdown layouts follow the classic results-table
shape (Model | Acc | P | R | F1) and the characteristic-comparison
shape (metric, per-class mean and SD, test statistics).
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from mgtd.evaluation import EvalReport

MODEL_DISPLAY = {
    "lr": "LR",
    "dt": "DT",
    "rf": "RF",
    "mnb": "MNB",
    "sgd": "SGD",
    "svm": "SVM",
    "vc": "VC",
    "mlp": "MLP",
}
METRIC_COLUMNS = ("accuracy", "precision", "recall", "f1")


def pct(x: float) -> str:
    return f"{100.0 * x:.2f}%"


def display_name(kind: str) -> str:
    return MODEL_DISPLAY.get(kind, kind.upper())


def _md_table(header: list[str], rows: list[list[str]]) -> str:
    lines = [
        "| " + " | ".join(header) + " |",
        "|" + "|".join("---" for _ in header) + "|",
    ]
    lines.extend("| " + " | ".join(row) + " |" for row in rows)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# cross-validation reports


def eval_reports_csv(reports: list[EvalReport]) -> str:
    """One row per (model, partition, averaging mode)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        [
            "model", "dataset", "partition", "mode", "n",
            "accuracy", "precision", "recall", "f1",
            "tp", "fp", "fn", "tn", "error",
        ]
    )
    for report in reports:
        partitions = list(report.folds)
        if report.test is not None:
            partitions.append(report.test)
        if report.error and not partitions:
            writer.writerow(
                [report.model_kind, report.dataset, "", "", 0,
                 "", "", "", "", "", "", "", "", report.error]
            )
            continue
        for part in partitions:
            for mode in ("positive", "weighted"):
                m = getattr(part, mode)
                cm = part.confusion
                writer.writerow(
                    [
                        report.model_kind, report.dataset, part.name, mode,
                        part.n,
                        f"{m['accuracy']:.10f}", f"{m['precision']:.10f}",
                        f"{m['recall']:.10f}", f"{m['f1']:.10f}",
                        cm.tp, cm.fp, cm.fn, cm.tn,
                        report.error or "",
                    ]
                )
    return buf.getvalue()


def _metric_row(label: str, m: dict[str, float]) -> list[str]:
    return [label] + [pct(m[c]) for c in METRIC_COLUMNS]


def eval_reports_markdown(
    reports: list[EvalReport], mode: str = "weighted"
) -> str:
    """Blind-test results table plus a per-fold appendix per model."""
    out = [f"## Blind test results ({mode} averaging)\n"]
    rows = []
    for report in reports:
        name = display_name(report.model_kind)
        if report.error or report.test is None:
            rows.append([name, "error", "", "", ""])
            continue
        rows.append(_metric_row(name, getattr(report.test, mode)))
    out.append(_md_table(["Model", "Acc", "P", "R", "F1"], rows))

    out.append("\n## Per-fold validation accuracy\n")
    fold_names = []
    for report in reports:
        for fold in report.folds:
            if fold.name not in fold_names:
                fold_names.append(fold.name)
    header = ["Model"] + fold_names + ["mean"]
    rows = []
    for report in reports:
        name = display_name(report.model_kind)
        if report.error or not report.folds:
            rows.append([name, "error"] + [""] * len(fold_names))
            continue
        accs = [getattr(f, mode)["accuracy"] for f in report.folds]
        rows.append(
            [name]
            + [pct(a) for a in accs]
            + [pct(sum(accs) / len(accs))]
        )
    out.append(_md_table(header, rows))
    errors = [r for r in reports if r.error]
    if errors:
        out.append("\n## Failures\n")
        for report in errors:
            out.append(f"- {display_name(report.model_kind)}: {report.error}\n")
    return "".join(out)


# ---------------------------------------------------------------------------
# characteristic comparison (per-metric class contrast)


def characteristic_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        [
            "family", "metric",
            "human_mean", "human_sd", "machine_mean", "machine_sd",
            "n_human", "n_machine", "t", "dof", "p", "significant",
        ]
    )
    for row in rows:
        writer.writerow(
            [
                row["family"], row["metric"],
                f"{row['human_mean']:.10f}", f"{row['human_sd']:.10f}",
                f"{row['machine_mean']:.10f}", f"{row['machine_sd']:.10f}",
                row["n_human"], row["n_machine"],
                f"{row['t']:.10g}", f"{row['dof']:.10g}", f"{row['p']:.10g}",
                str(row["significant"]).lower(),
            ]
        )
    return buf.getvalue()


def characteristic_markdown(rows: list[dict]) -> str:
    """One table per family: mean (SD) per class plus the Welch test."""
    out = []
    families = []
    for row in rows:
        if row["family"] not in families:
            families.append(row["family"])
    for family in families:
        out.append(f"## {family.capitalize()} comparison\n")
        table_rows = []
        for row in (r for r in rows if r["family"] == family):
            table_rows.append(
                [
                    row["metric"],
                    f"{row['human_mean']:.4f} ({row['human_sd']:.4f})",
                    f"{row['machine_mean']:.4f} ({row['machine_sd']:.4f})",
                    f"{row['t']:.3f}",
                    f"{row['p']:.4g}",
                    "yes" if row["significant"] else "no",
                ]
            )
        out.append(
            _md_table(
                ["Metric", "Human mean (SD)", "Machine mean (SD)", "t", "p", "sig@0.05"],
                table_rows,
            )
        )
        out.append("\n")
    return "".join(out).rstrip("\n") + "\n"


# ---------------------------------------------------------------------------
# paired before/after robustness reports


def paired_markdown(
    before: list[EvalReport],
    after: list[EvalReport],
    mode: str = "weighted",
) -> str:
    """Original vs rephrased tables plus a per-model delta table."""
    by_kind_after = {r.model_kind: r for r in after}
    out = []
    for title, reports in (("Original", before), ("Rephrased", after)):
        out.append(f"## {title}\n")
        rows = []
        for report in reports:
            name = display_name(report.model_kind)
            if report.error or report.test is None:
                rows.append([name, "error", "", "", ""])
            else:
                rows.append(_metric_row(name, getattr(report.test, mode)))
        out.append(_md_table(["Model", "Acc", "P", "R", "F1"], rows))
        out.append("\n")

    out.append("## Delta (rephrased minus original)\n")
    rows = []
    for b in before:
        a = by_kind_after.get(b.model_kind)
        name = display_name(b.model_kind)
        if a is None or b.error or a.error or b.test is None or a.test is None:
            rows.append([name, "n/a", "", "", ""])
            continue
        mb = getattr(b.test, mode)
        ma = getattr(a.test, mode)
        rows.append(
            [name]
            + [f"{100.0 * (ma[c] - mb[c]):+.2f}" for c in METRIC_COLUMNS]
        )
    out.append(_md_table(["Model", "Acc", "P", "R", "F1"], rows))
    return "".join(out)


def paired_csv(
    before: list[EvalReport],
    after: list[EvalReport],
    mode: str = "weighted",
) -> str:
    by_kind_after = {r.model_kind: r for r in after}
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["model", "mode"]
        + [f"before_{c}" for c in METRIC_COLUMNS]
        + [f"after_{c}" for c in METRIC_COLUMNS]
        + [f"delta_{c}" for c in METRIC_COLUMNS]
    )
    for b in before:
        a = by_kind_after.get(b.model_kind)
        if a is None or b.error or a.error or b.test is None or a.test is None:
            writer.writerow([b.model_kind, mode] + [""] * 12)
            continue
        mb = getattr(b.test, mode)
        ma = getattr(a.test, mode)
        writer.writerow(
            [b.model_kind, mode]
            + [f"{mb[c]:.10f}" for c in METRIC_COLUMNS]
            + [f"{ma[c]:.10f}" for c in METRIC_COLUMNS]
            + [f"{ma[c] - mb[c]:+.10f}" for c in METRIC_COLUMNS]
        )
    return buf.getvalue()


def per_topic_markdown(rows: list[dict]) -> str:
    """Topic breakdown table; the merged row is expected last."""
    table_rows = [
        [row["topic"]] + [pct(row[c]) for c in METRIC_COLUMNS] for row in rows
    ]
    return _md_table(["Topic", "Acc", "P", "R", "F1"], table_rows)


def per_topic_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["topic", "n"] + list(METRIC_COLUMNS))
    for row in rows:
        writer.writerow(
            [row["topic"], row["n"]]
            + [f"{row[c]:.10f}" for c in METRIC_COLUMNS]
        )
    return buf.getvalue()


# ---------------------------------------------------------------------------
# run manifest


def write_run_manifest(path: str | Path, manifest: dict) -> None:
    """Persist the run's seeds and configs as stable, sorted JSON."""
    Path(path).write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
