"""Metrics, cross-validation driver, Welch t-tests, characteristic report.

The positive class is always Machine=1.  Metrics come in two averaging
modes because published result tables mix them: "positive" reports the
machine class alone, "weighted" averages both classes by true support.
The t-test p-value uses a continued-fraction regularized incomplete
beta, accurate to well past 10 digits for dof up to 1000.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from mgtd.corpus import Corpus, SplitPlan
from mgtd.errors import (
    EmptyMatrix,
    LengthMismatch,
    SingleClassCorpus,
    TooFewSamples,
)
from mgtd.models import predict_many, train_model
from mgtd.utils import derive_seed
from mgtd.vectorize import TfidfConfig, fit_tfidf, transform_matrix

DEFAULT_MODEL_KINDS = ("lr", "dt", "rf", "mnb", "sgd", "svm", "vc", "mlp")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def as_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}


@dataclass(frozen=True)
class TTestResult:
    t_statistic: float
    dof: float
    p_value: float
    significant_at_005: bool


@dataclass
class PartitionResult:
    """Metrics for one evaluated partition (a fold or the blind test)."""

    name: str
    n: int
    confusion: ConfusionMatrix
    positive: dict[str, float]
    weighted: dict[str, float]

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "n": self.n,
            "confusion": self.confusion.as_dict(),
            "positive": self.positive,
            "weighted": self.weighted,
        }


@dataclass
class EvalReport:
    model_kind: str
    dataset: str
    folds: list[PartitionResult] = field(default_factory=list)
    test: PartitionResult | None = None
    manifest: dict = field(default_factory=dict)
    error: str | None = None

    def as_dict(self) -> dict:
        return {
            "model_kind": self.model_kind,
            "dataset": self.dataset,
            "folds": [f.as_dict() for f in self.folds],
            "test": self.test.as_dict() if self.test else None,
            "manifest": self.manifest,
            "error": self.error,
        }


def confusion(y_true, y_pred) -> ConfusionMatrix:
    y_true = np.asarray(y_true, dtype=np.int64).ravel()
    y_pred = np.asarray(y_pred, dtype=np.int64).ravel()
    if len(y_true) != len(y_pred):
        raise LengthMismatch(f"{len(y_true)} true labels vs {len(y_pred)} predicted")
    if len(y_true) == 0:
        raise LengthMismatch("cannot build a confusion matrix from zero labels")
    tp = int(np.sum((y_true == 1) & (y_pred == 1)))
    fp = int(np.sum((y_true == 0) & (y_pred == 1)))
    fn = int(np.sum((y_true == 1) & (y_pred == 0)))
    tn = int(np.sum((y_true == 0) & (y_pred == 0)))
    return ConfusionMatrix(tp=tp, fp=fp, fn=fn, tn=tn)


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    """Precision, recall, F1 with every 0/0 mapped to 0."""
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    # 2tp/(2tp+fp+fn) is the harmonic mean of P and R in a single division
    denom = 2 * tp + fp + fn
    f1 = 2 * tp / denom if denom else 0.0
    return precision, recall, f1


def metrics(cm: ConfusionMatrix, mode: str = "weighted") -> dict[str, float]:
    if cm.total == 0:
        raise EmptyMatrix("confusion matrix has no entries")
    if mode not in ("positive", "weighted"):
        raise ValueError(f"mode must be 'positive' or 'weighted', got {mode!r}")
    accuracy = (cm.tp + cm.tn) / cm.total
    p1, r1, f1 = _prf(cm.tp, cm.fp, cm.fn)
    if mode == "positive":
        return {"accuracy": accuracy, "precision": p1, "recall": r1, "f1": f1}
    # class 0 viewed as its own positive class
    p0, r0, f0 = _prf(cm.tn, cm.fn, cm.fp)
    support1 = cm.tp + cm.fn
    support0 = cm.tn + cm.fp
    total = support0 + support1
    return {
        "accuracy": accuracy,
        "precision": (support1 * p1 + support0 * p0) / total,
        "recall": (support1 * r1 + support0 * r0) / total,
        "f1": (support1 * f1 + support0 * f0) / total,
    }


# ---------------------------------------------------------------------------
# Welch's t-test with a self-contained incomplete-beta p-value


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 400):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            return h
    raise ArithmeticError(f"incomplete beta failed to converge (a={a}, b={b}, x={x})")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x={x} outside [0,1]")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    front = math.exp(
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_sf2(t: float, dof: float) -> float:
    """Two-sided tail probability of Student's t."""
    if math.isinf(t):
        return 0.0
    if t == 0.0:
        return 1.0
    x = dof / (dof + t * t)
    return regularized_incomplete_beta(dof / 2.0, 0.5, x)


def welch_ttest(a, b) -> TTestResult:
    """Two-sample t-test without the equal-variance assumption.

    Both samples all-constant is not an error: equal means give t=0,
    p=1; unequal means give an infinite t and p=0.  dof falls back to
    na+nb-2 in that degenerate case.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if len(a) < 2 or len(b) < 2:
        raise TooFewSamples(f"need >= 2 samples per side, got {len(a)} and {len(b)}")
    na, nb = len(a), len(b)
    mean_a, mean_b = float(a.mean()), float(b.mean())
    var_a = float(a.var(ddof=1))
    var_b = float(b.var(ddof=1))
    se2 = var_a / na + var_b / nb
    if se2 == 0.0:
        dof = float(na + nb - 2)
        if mean_a == mean_b:
            return TTestResult(0.0, dof, 1.0, False)
        t = math.inf if mean_a > mean_b else -math.inf
        return TTestResult(t, dof, 0.0, True)
    t = (mean_a - mean_b) / math.sqrt(se2)
    dof = se2 * se2 / (
        (var_a / na) ** 2 / (na - 1) + (var_b / nb) ** 2 / (nb - 1)
    )
    p = student_t_sf2(t, dof)
    return TTestResult(t, dof, p, p < 0.05)


# ---------------------------------------------------------------------------
# cross-validation driver


def _labels_for(corpus_map, ids) -> np.ndarray:
    return np.asarray([corpus_map[i].label for i in ids], dtype=np.int64)


def _evaluate(model, X, y, name: str) -> PartitionResult:
    pred, _ = predict_many(model, X)
    cm = confusion(y, pred)
    return PartitionResult(
        name=name,
        n=int(len(y)),
        confusion=cm,
        positive=metrics(cm, "positive"),
        weighted=metrics(cm, "weighted"),
    )


def _majority_source(corpus: Corpus) -> str:
    counts: dict[str, int] = {}
    for doc in corpus:
        counts[doc.source] = counts.get(doc.source, 0) + 1
    return max(sorted(counts), key=counts.get) if counts else ""


def cross_validate(
    corpus: Corpus,
    split: SplitPlan,
    model_cfgs: dict[str, dict] | None = None,
    vectorizer_cfg: TfidfConfig | None = None,
    seed: int = 42,
    dataset: str = "",
) -> list[EvalReport]:
    """K-fold CV plus a final blind-test evaluation per model kind.

    Each fold refits the vectorizer on that fold's training portion
    only; the final model trains on the whole train pool and is scored
    once on the held-out test partition.  A model that fails to train
    yields a report with its error recorded; the others continue.
    """
    if model_cfgs is None:
        model_cfgs = {kind: {} for kind in DEFAULT_MODEL_KINDS}
    vectorizer_cfg = vectorizer_cfg or TfidfConfig()
    dataset = dataset or _majority_source(corpus)
    docs = corpus.by_id()

    fold_ids = [split.fold_ids(k) for k in range(1, split.n_folds + 1)]
    pool_ids = split.train_pool_ids()
    test_ids = split.test_ids()

    manifest_base = {
        "seed": seed,
        "dataset": dataset,
        "n_documents": len(corpus),
        "n_folds": split.n_folds,
        "test_fraction": split.test_fraction,
        "split_seed": split.seed,
        "vectorizer": vectorizer_cfg.as_dict(),
        "fold_sizes": [len(ids) for ids in fold_ids],
        "test_size": len(test_ids),
    }

    reports: list[EvalReport] = []
    for kind, overrides in model_cfgs.items():
        report = EvalReport(
            model_kind=kind,
            dataset=dataset,
            manifest=manifest_base | {"model_config": dict(overrides)},
        )
        try:
            for k in range(1, split.n_folds + 1):
                val_ids = fold_ids[k - 1]
                val_set = set(val_ids)
                train_ids = [i for ids in fold_ids for i in ids if i not in val_set]
                train_docs = [docs[i] for i in train_ids]
                tfidf = fit_tfidf(train_docs, vectorizer_cfg)
                Xtr = transform_matrix(tfidf, train_docs)
                ytr = _labels_for(docs, train_ids)
                model = train_model(
                    kind, Xtr, ytr,
                    seed=derive_seed(seed, "cv", kind, f"fold{k}"),
                    **overrides,
                )
                val_docs = [docs[i] for i in val_ids]
                Xva = transform_matrix(tfidf, val_docs)
                yva = _labels_for(docs, val_ids)
                report.folds.append(_evaluate(model, Xva, yva, f"fold{k}"))

            train_docs = [docs[i] for i in pool_ids]
            tfidf = fit_tfidf(train_docs, vectorizer_cfg)
            Xtr = transform_matrix(tfidf, train_docs)
            ytr = _labels_for(docs, pool_ids)
            final = train_model(
                kind, Xtr, ytr,
                seed=derive_seed(seed, "cv", kind, "final"),
                **overrides,
            )
            test_docs = [docs[i] for i in test_ids]
            Xte = transform_matrix(tfidf, test_docs)
            yte = _labels_for(docs, test_ids)
            report.test = _evaluate(final, Xte, yte, "test")
        except Exception as err:  # noqa: BLE001 - failure isolation per model
            report.error = f"{type(err).__name__}: {err}"
        reports.append(report)
    return reports


# ---------------------------------------------------------------------------
# characteristic report (readability + lexicon families, grouped by label)


def _doc_characteristics(corpus: Corpus, families) -> dict[str, dict[int, list[float]]]:
    from mgtd import assets
    from mgtd.errors import ZeroSentences, ZeroWords
    from mgtd.lexfeatures import (
        bias_features,
        bundled_lexicon,
        moral_features,
        sentiment_features,
    )
    from mgtd.readability import score_text
    from mgtd.textstats import tokenize

    lexicons = {
        "bias": (bundled_lexicon("bias"), bias_features),
        "moral": (bundled_lexicon("moral"), moral_features),
        "sentiment": (bundled_lexicon("sentiment"), sentiment_features),
    }
    familiar = assets.load_familiar_words()

    samples: dict[str, dict[int, list[float]]] = {}

    def push(metric: str, label: int, value: float) -> None:
        samples.setdefault(metric, {0: [], 1: []})[label].append(value)

    for doc in corpus:
        tokens = tokenize(doc.text)
        for family in families:
            if family == "readability":
                try:
                    scores = score_text(doc.text, familiar_words=familiar)
                except (ZeroWords, ZeroSentences):
                    continue
                for metric, value in scores.as_dict().items():
                    push(f"readability/{metric}", doc.label, value)
            else:
                lexicon, extractor = lexicons[family]
                for category, rate in extractor(tokens, lexicon).items():
                    push(f"{family}/{category}", doc.label, rate)
    return samples


def characteristic_report(
    corpus: Corpus,
    families: tuple[str, ...] = ("readability", "bias", "moral", "sentiment"),
) -> list[dict]:
    """Per-metric class comparison rows: means, SDs, Welch test.

    Row order follows the family tuple, then metric name.  SDs are
    sample standard deviations (ddof=1), matching the t-test variance.
    """
    labels_present = {doc.label for doc in corpus}
    if labels_present != {0, 1}:
        raise SingleClassCorpus(
            f"characteristic report needs both classes, found {sorted(labels_present)}"
        )
    unknown = set(families) - {"readability", "bias", "moral", "sentiment"}
    if unknown:
        raise ValueError(f"unknown families {sorted(unknown)}")

    samples = _doc_characteristics(corpus, families)
    rows = []
    for family in families:
        prefix = f"{family}/"
        for metric in sorted(m for m in samples if m.startswith(prefix)):
            human = np.asarray(samples[metric][0], dtype=np.float64)
            machine = np.asarray(samples[metric][1], dtype=np.float64)
            if len(human) < 2 or len(machine) < 2:
                continue
            test = welch_ttest(human, machine)
            rows.append(
                {
                    "family": family,
                    "metric": metric.removeprefix(prefix),
                    "human_mean": float(human.mean()),
                    "human_sd": float(human.std(ddof=1)),
                    "machine_mean": float(machine.mean()),
                    "machine_sd": float(machine.std(ddof=1)),
                    "n_human": len(human),
                    "n_machine": len(machine),
                    "t": test.t_statistic,
                    "dof": test.dof,
                    "p": test.p_value,
                    "significant": test.significant_at_005,
                }
            )
    return rows
