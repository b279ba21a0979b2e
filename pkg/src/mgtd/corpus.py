"""Corpus ingestion, cleaning, and split planning.

A corpus is an immutable tuple of labeled documents plus a running report
of how many rows were dropped and why.  Cleaning follows a fixed pipeline
(normalize, lowercase, strip special characters, collapse repeated
punctuation and whitespace, drop isolated digits, optional stopword
removal, optional English filter) and is idempotent.  Splits are
stratified by label and fully determined by the seed.
"""

from __future__ import annotations

import csv
import json
import re
import unicodedata
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from mgtd import LABEL_HUMAN, LABEL_MACHINE
from mgtd import assets
from mgtd.errors import (
    EmptyCorpus,
    MalformedRow,
    TooFewDocuments,
)
from mgtd.utils import derive_seed

REPORT_KEYS = (
    "rows_read",
    "rows_dropped_missing",
    "rows_dropped_malformed",
    "rows_dropped_unknown_label",
    "rows_dropped_nonenglish",
    "rows_dropped_empty",
)

# Families whose stopwords are kept during cleaning.
KEEP_STOPWORD_FAMILIES = ("openai", "twitter")
REMOVE_STOPWORD_FAMILIES = ("wiki", "pubmed")

_ALLOWED_PUNCT = ".,!?'-"
_PUNCT_RUN = re.compile(r"([.,!?'-])\1+")
_ISOLATED_DIGIT = re.compile(r"(?<!\S)\d(?!\S)")
_WS = re.compile(r"\s+")
_EDGE_STRIP = re.compile(r"^[^\w]+|[^\w]+$")

ENGLISH_ALPHA_RATIO = 0.9


@dataclass(frozen=True)
class Document:
    """One labeled text with a stable id and a source tag."""

    id: str
    text: str
    label: int
    source: str = ""


@dataclass(frozen=True)
class Corpus:
    documents: tuple[Document, ...]
    report: dict[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        ids = [d.id for d in self.documents]
        if len(set(ids)) != len(ids):
            raise MalformedRow("duplicate document ids in corpus")

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)

    def ids(self) -> list[str]:
        return [d.id for d in self.documents]

    def class_counts(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for doc in self.documents:
            counts[doc.label] = counts.get(doc.label, 0) + 1
        return counts

    def by_id(self) -> dict[str, Document]:
        return {d.id: d for d in self.documents}


@dataclass(frozen=True)
class CleaningConfig:
    remove_stopwords: bool = False
    drop_non_english: bool = True
    collapse_whitespace: bool = True
    strip_special_chars: bool = True
    drop_isolated_digits: bool = True
    stopword_list_id: str = "stopwords"

    @classmethod
    def for_source(cls, source: str) -> "CleaningConfig":
        """Family defaults keyed on the source tag prefix.

        Stopwords stay in for the short-form families (openai, twitter)
        and are removed for the long-form ones (wiki, pubmed).  Unknown
        families keep their stopwords.
        """
        family = source.split("-", 1)[0].lower()
        remove = family in REMOVE_STOPWORD_FAMILIES
        return cls(remove_stopwords=remove)


@dataclass(frozen=True)
class SplitPlan:
    """Partition of a corpus into a test set and CV folds.

    assignments maps document id to 0 (test) or a fold index in
    [1..n_folds].  Fold k serves as the validation share for round k;
    the other folds form that round's training set.
    """

    test_fraction: float
    n_folds: int
    seed: int
    assignments: dict[str, int]

    def test_ids(self) -> list[str]:
        return sorted(i for i, p in self.assignments.items() if p == 0)

    def fold_ids(self, k: int) -> list[str]:
        if not 1 <= k <= self.n_folds:
            raise ValueError(f"fold index {k} outside [1, {self.n_folds}]")
        return sorted(i for i, p in self.assignments.items() if p == k)

    def train_pool_ids(self) -> list[str]:
        return sorted(i for i, p in self.assignments.items() if p != 0)


def _empty_report() -> dict[str, int]:
    return {key: 0 for key in REPORT_KEYS}


def _parse_label(value) -> int:
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, int) and value in (LABEL_HUMAN, LABEL_MACHINE):
        return value
    if isinstance(value, float) and value in (0.0, 1.0):
        return int(value)
    if isinstance(value, str):
        s = value.strip().lower()
        if s in ("0", "human"):
            return LABEL_HUMAN
        if s in ("1", "machine"):
            return LABEL_MACHINE
        try:
            f = float(s)
        except ValueError:
            pass
        else:
            if f in (0.0, 1.0):
                return int(f)
    raise ValueError(f"unrecognized label value {value!r}")


def _iter_csv(path: Path):
    with open(path, encoding="utf-8-sig", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise MalformedRow(f"{path}: empty CSV, no header row")
        yield reader.fieldnames
        yield from reader


def _iter_jsonl(path: Path):
    with open(path, encoding="utf-8-sig") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield line


def load_corpus(
    path: str | Path,
    format: str,
    schema: dict[str, str],
    source: str = "",
) -> Corpus:
    """Read one file into a Corpus, skipping and counting bad rows.

    schema maps the logical fields to column names: {"id": ..., "text":
    ..., "label": ...}.  An id of "synthesize" numbers rows in file
    order.  Rows with missing text or label are dropped and counted;
    unparseable labels and malformed rows likewise.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(path)
    fmt = format.strip().lower()
    if fmt not in ("csv", "jsonl"):
        raise ValueError(f"unsupported format {format!r}")
    for key in ("id", "text", "label"):
        if key not in schema:
            raise MalformedRow(f"schema missing {key!r} mapping")

    if not source:
        source = path.stem
    id_col, text_col, label_col = schema["id"], schema["text"], schema["label"]
    synthesize = id_col == "synthesize"

    report = _empty_report()
    docs: list[Document] = []
    seen: set[str] = set()

    if fmt == "csv":
        rows = _iter_csv(path)
        header = next(rows)
        required = {text_col, label_col} | (set() if synthesize else {id_col})
        missing = required - set(header)
        if missing:
            raise MalformedRow(f"{path}: header lacks columns {sorted(missing)}")
    else:
        rows = _iter_jsonl(path)

    for index, row in enumerate(rows):
        report["rows_read"] += 1
        if fmt == "jsonl":
            try:
                row = json.loads(row)
            except json.JSONDecodeError:
                report["rows_dropped_malformed"] += 1
                continue
            if not isinstance(row, dict):
                report["rows_dropped_malformed"] += 1
                continue
        else:
            # short rows surface as None cells under DictReader
            if None in row or any(v is None for v in row.values()):
                report["rows_dropped_malformed"] += 1
                continue

        text = row.get(text_col)
        label_raw = row.get(label_col)
        if text is None or label_raw is None or not str(text).strip():
            report["rows_dropped_missing"] += 1
            continue
        try:
            label = _parse_label(label_raw)
        except ValueError:
            report["rows_dropped_unknown_label"] += 1
            continue

        if synthesize:
            doc_id = f"{source}-{index:07d}"
        else:
            doc_id = str(row.get(id_col, "")).strip()
            if not doc_id:
                report["rows_dropped_missing"] += 1
                continue
        if doc_id in seen:
            report["rows_dropped_malformed"] += 1
            continue
        seen.add(doc_id)
        docs.append(Document(id=doc_id, text=str(text), label=label, source=source))

    return Corpus(documents=tuple(docs), report=report)


def load_pair(
    human_path: str | Path,
    machine_path: str | Path,
    format: str = "jsonl",
    text_col: str = "text",
    source: str = "",
) -> Corpus:
    """Load a human file and a machine file as one labeled corpus.

    Matches the layout of the GPT-2 output dataset: each file holds one
    side, the label comes from which file a row lives in.
    """
    parts = []
    for path, label in ((human_path, LABEL_HUMAN), (machine_path, LABEL_MACHINE)):
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(path)
        tag = source or path.stem
        half = _load_single_column(path, format, text_col, label, tag)
        parts.append(half)
    report = _empty_report()
    for half in parts:
        for key in REPORT_KEYS:
            report[key] += half.report.get(key, 0)
    return Corpus(documents=parts[0].documents + parts[1].documents, report=report)


def _load_single_column(
    path: Path, format: str, text_col: str, label: int, source: str
) -> Corpus:
    fmt = format.strip().lower()
    report = _empty_report()
    docs: list[Document] = []
    rows = _iter_jsonl(path) if fmt == "jsonl" else _iter_csv(path)
    if fmt == "csv":
        header = next(rows)
        if text_col not in header:
            raise MalformedRow(f"{path}: header lacks column {text_col!r}")
    for index, row in enumerate(rows):
        report["rows_read"] += 1
        if fmt == "jsonl":
            try:
                row = json.loads(row)
            except json.JSONDecodeError:
                report["rows_dropped_malformed"] += 1
                continue
            if not isinstance(row, dict):
                report["rows_dropped_malformed"] += 1
                continue
        text = row.get(text_col)
        if text is None or not str(text).strip():
            report["rows_dropped_missing"] += 1
            continue
        side = "h" if label == LABEL_HUMAN else "m"
        docs.append(
            Document(
                id=f"{path.stem}-{side}-{index:07d}",
                text=str(text),
                label=label,
                source=source,
            )
        )
    return Corpus(documents=tuple(docs), report=report)


def load_paired_columns(
    path: str | Path,
    human_col: str,
    machine_col: str,
    format: str = "csv",
    id_col: str = "synthesize",
    source: str = "",
) -> Corpus:
    """Load a file whose rows each carry a human text and a machine text.

    Every valid row yields two documents with ids "<row>-h" and
    "<row>-m".  Rows missing either side are dropped whole.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(path)
    fmt = format.strip().lower()
    if not source:
        source = path.stem
    report = _empty_report()
    docs: list[Document] = []

    rows = _iter_csv(path) if fmt == "csv" else _iter_jsonl(path)
    if fmt == "csv":
        header = next(rows)
        required = {human_col, machine_col} | (
            set() if id_col == "synthesize" else {id_col}
        )
        missing = required - set(header)
        if missing:
            raise MalformedRow(f"{path}: header lacks columns {sorted(missing)}")

    for index, row in enumerate(rows):
        report["rows_read"] += 1
        if fmt == "jsonl":
            try:
                row = json.loads(row)
            except json.JSONDecodeError:
                report["rows_dropped_malformed"] += 1
                continue
            if not isinstance(row, dict):
                report["rows_dropped_malformed"] += 1
                continue
        elif None in row or any(v is None for v in row.values()):
            report["rows_dropped_malformed"] += 1
            continue
        human = row.get(human_col)
        machine = row.get(machine_col)
        if (
            human is None
            or machine is None
            or not str(human).strip()
            or not str(machine).strip()
        ):
            report["rows_dropped_missing"] += 1
            continue
        if id_col == "synthesize":
            base = f"{source}-{index:07d}"
        else:
            base = str(row.get(id_col, "")).strip()
            if not base:
                report["rows_dropped_missing"] += 1
                continue
        docs.append(Document(f"{base}-h", str(human), LABEL_HUMAN, source))
        docs.append(Document(f"{base}-m", str(machine), LABEL_MACHINE, source))

    return Corpus(documents=tuple(docs), report=report)


def clean_text(
    text: str,
    cfg: CleaningConfig | None = None,
    stopwords: frozenset[str] | None = None,
) -> str:
    """Apply the cleaning pipeline to one string.

    Steps, in order: NFC normalize, lowercase, replace characters outside
    letters/digits/.,!?'-/space with spaces, collapse runs of the same
    punctuation mark, collapse whitespace, drop isolated single-digit
    tokens, then optional stopword removal.  Running the pipeline twice
    gives the same output as running it once.
    """
    cfg = cfg or CleaningConfig()
    text = unicodedata.normalize("NFC", text).lower()
    if cfg.strip_special_chars:
        text = "".join(
            ch
            if (ch.isalpha() or ch.isdigit() or ch in _ALLOWED_PUNCT or ch == " ")
            else " "
            for ch in text
        )
        text = _PUNCT_RUN.sub(r"\1", text)
    if cfg.drop_isolated_digits:
        text = _ISOLATED_DIGIT.sub("", text)
    if cfg.collapse_whitespace:
        text = _WS.sub(" ", text).strip()
    if cfg.remove_stopwords:
        if stopwords is None:
            stopwords = assets.load_stopwords()
        kept = [
            chunk
            for chunk in text.split(" ")
            if chunk and _EDGE_STRIP.sub("", chunk) not in stopwords
        ]
        text = " ".join(kept)
    return text


def _is_english(text: str) -> bool:
    """At least 90 % of the alphabetic characters are ASCII letters."""
    alpha = [ch for ch in text if ch.isalpha()]
    if not alpha:
        return True
    ascii_count = sum(1 for ch in alpha if "a" <= ch <= "z" or "A" <= ch <= "Z")
    return ascii_count / len(alpha) >= ENGLISH_ALPHA_RATIO


def clean(corpus: Corpus, cfg: CleaningConfig | None = None) -> Corpus:
    """Clean every document; drop and count degenerate ones."""
    cfg = cfg or CleaningConfig()
    stopwords = assets.load_stopwords() if cfg.remove_stopwords else frozenset()
    report = _empty_report() | dict(corpus.report)
    docs: list[Document] = []
    for doc in corpus.documents:
        cleaned = clean_text(doc.text, cfg, stopwords)
        if cfg.drop_non_english and not _is_english(cleaned):
            report["rows_dropped_nonenglish"] += 1
            continue
        if not cleaned:
            report["rows_dropped_empty"] += 1
            continue
        docs.append(replace(doc, text=cleaned))
    return Corpus(documents=tuple(docs), report=report)


def make_split(
    corpus: Corpus,
    test_fraction: float = 0.10,
    n_folds: int = 5,
    seed: int = 42,
) -> SplitPlan:
    """Stratified test/fold assignment, deterministic in the seed.

    Per class: ids are sorted, shuffled by a class-specific sub-seed,
    then the test quota (largest-remainder allocation across classes) is
    taken from the front and the rest are dealt round-robin into folds.
    """
    if not 0.0 <= test_fraction < 1.0:
        raise ValueError(f"test_fraction {test_fraction} outside [0, 1)")
    if n_folds < 2:
        raise ValueError(f"n_folds {n_folds} < 2")
    if len(corpus) == 0:
        raise EmptyCorpus("cannot split an empty corpus")

    by_class: dict[int, list[str]] = {}
    for doc in corpus.documents:
        by_class.setdefault(doc.label, []).append(doc.id)
    for label, ids in sorted(by_class.items()):
        if len(ids) < n_folds:
            raise TooFewDocuments(
                f"class {label} has {len(ids)} documents, need >= {n_folds}"
            )

    total_test = round(len(corpus) * test_fraction)
    quotas: dict[int, int] = {}
    remainders: list[tuple[float, int, int]] = []
    for label, ids in sorted(by_class.items()):
        exact = len(ids) * test_fraction
        quotas[label] = int(exact)
        remainders.append((exact - int(exact), len(ids), label))
    shortfall = total_test - sum(quotas.values())
    # hand leftover test slots to the largest fractional remainders
    remainders.sort(key=lambda item: (-item[0], -item[1], item[2]))
    for _, _, label in remainders[: max(shortfall, 0)]:
        quotas[label] += 1

    assignments: dict[str, int] = {}
    for label, ids in sorted(by_class.items()):
        ordered = sorted(ids)
        rng = np.random.Generator(
            np.random.PCG64(derive_seed(seed, "split", f"class{label}"))
        )
        order = rng.permutation(len(ordered))
        shuffled = [ordered[i] for i in order]
        quota = min(quotas[label], len(shuffled))
        for doc_id in shuffled[:quota]:
            assignments[doc_id] = 0
        for offset, doc_id in enumerate(shuffled[quota:]):
            assignments[doc_id] = (offset % n_folds) + 1

    return SplitPlan(
        test_fraction=test_fraction,
        n_folds=n_folds,
        seed=seed,
        assignments=assignments,
    )


def corpus_stats(corpus: Corpus) -> dict[int, dict[str, float]]:
    """Per-label token statistics: mean, population SD, vocab size, n."""
    from mgtd.textstats import tokenize

    if len(corpus) == 0:
        raise EmptyCorpus("corpus_stats needs at least one document")
    token_counts: dict[int, list[int]] = {}
    vocabs: dict[int, set[str]] = {}
    for doc in corpus.documents:
        tokens = tokenize(doc.text)
        token_counts.setdefault(doc.label, []).append(len(tokens))
        vocabs.setdefault(doc.label, set()).update(tokens)
    stats: dict[int, dict[str, float]] = {}
    for label in sorted(token_counts):
        counts = np.asarray(token_counts[label], dtype=float)
        stats[label] = {
            "mean_tokens": float(counts.mean()),
            "sd_tokens": float(counts.std()),
            "vocab": len(vocabs[label]),
            "n": len(counts),
        }
    return stats
