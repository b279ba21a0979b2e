"""Rephrase-attack generation against a chat-completion endpoint.

Generates machine counterparts for human documents under a vocabulary
overlap constraint, audits every endpoint call, and measures how much
detector performance drops when classifiers are retrained and tested on
the rephrased corpus.

The endpoint wire shape is chat-completion compatible: POST JSON
{model, messages, temperature}, answer read from the first choice's
message content.  The API key comes from an environment variable and is
never written to logs, manifests, or result files.
"""

from __future__ import annotations

import json
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import requests

from mgtd import LABEL_HUMAN, LABEL_MACHINE
from mgtd.corpus import Corpus, Document, SplitPlan, make_split
from mgtd.errors import (
    AuthFailure,
    EmptyText,
    EndpointUnreachable,
    MissingPlaceholder,
    RateLimited,
)
from mgtd.evaluation import DEFAULT_MODEL_KINDS, EvalReport, confusion, cross_validate, metrics
from mgtd.models import predict_many, train_model
from mgtd.textstats import tokenize
from mgtd.utils import derive_seed, sha256_text
from mgtd.vectorize import TfidfConfig, fit_tfidf, transform_matrix

TEMPLATE_IDS = ("tweet_generic", "tweet_mimic", "abstract_from_title")

# initial sleep before retrying a 429, doubled per retry; tests shrink this
BACKOFF_BASE_SECONDS = 1.0

_TWEET_GENERIC = (
    "Generate one tweet about the topic below.\n"
    "Topic: {topic}\n"
    "Do not exceed {char_limit} characters. Do not use line breaks."
)
_TWEET_MIMIC = (
    "Rewrite the tweet below as a new tweet that mimics its {style}.\n"
    "Original tweet:\n"
    "<<<\n"
    "{human_text}\n"
    ">>>\n"
    "Reuse at least {overlap_pct}% of the vocabulary from the original tweet.\n"
    "Do not exceed {char_limit} characters. Do not use line breaks."
)
_ABSTRACT_FROM_TITLE = (
    "Write a scientific abstract for a research article with the title "
    "below.\n"
    "Title: {human_text}\n"
    "Reuse at least {overlap_pct}% of the vocabulary from the title."
)


@dataclass(frozen=True)
class RephraseRequest:
    human_text: str
    overlap_threshold: float = 0.6
    max_attempts: int = 5
    char_limit: Optional[int] = None
    style_directives: str = "style, tone, and vocabulary usage"

    def __post_init__(self):
        if not 0.0 <= self.overlap_threshold <= 1.0:
            raise ValueError(
                f"overlap_threshold must be in [0, 1], got {self.overlap_threshold}"
            )
        if self.max_attempts < 1:
            raise ValueError(f"max_attempts must be >= 1, got {self.max_attempts}")


@dataclass(frozen=True)
class CompletionEndpointConfig:
    base_url: str
    model_name: str = "gpt-3.5-turbo"
    api_key_env: str = "MGTD_API_KEY"
    timeout: float = 30.0
    temperature: float = 0.7

    def as_dict(self) -> dict:
        # key env NAME only; the key value itself must never be persisted
        return {
            "base_url": self.base_url,
            "model_name": self.model_name,
            "api_key_env": self.api_key_env,
            "timeout": self.timeout,
            "temperature": self.temperature,
        }


@dataclass(frozen=True)
class RephraseResult:
    """Outcome per document; a rejection is data, not an exception."""

    text: str
    attempts: int
    final_ratio: float
    accepted: bool


def build_prompt(req: RephraseRequest, template_id: str, topic: str = "") -> str:
    if template_id not in TEMPLATE_IDS:
        raise ValueError(f"unknown template {template_id!r}; expected one of {TEMPLATE_IDS}")
    overlap_pct = int(round(req.overlap_threshold * 100))
    if template_id == "tweet_generic":
        if req.char_limit is None:
            raise MissingPlaceholder("tweet_generic requires char_limit")
        if not topic:
            raise MissingPlaceholder("tweet_generic requires a topic")
        return _TWEET_GENERIC.format(topic=topic, char_limit=req.char_limit)
    if template_id == "tweet_mimic":
        if req.char_limit is None:
            raise MissingPlaceholder("tweet_mimic requires char_limit")
        if not req.human_text.strip():
            raise MissingPlaceholder("tweet_mimic requires human_text")
        return _TWEET_MIMIC.format(
            style=req.style_directives,
            human_text=req.human_text,
            overlap_pct=overlap_pct,
            char_limit=req.char_limit,
        )
    if not req.human_text.strip():
        raise MissingPlaceholder("abstract_from_title requires human_text")
    return _ABSTRACT_FROM_TITLE.format(
        human_text=req.human_text, overlap_pct=overlap_pct
    )


def overlap_ratio(
    human_text: str, candidate_text: str, denominator: str = "human"
) -> float:
    """Fraction of the human vocabulary reused by the candidate.

    Vocabulary = set of lowercase token types, stopwords included.  The
    alternative denominator ("candidate") measures what share of the
    candidate's vocabulary came from the human text.
    """
    if denominator not in ("human", "candidate"):
        raise ValueError(f"denominator must be 'human' or 'candidate', got {denominator!r}")
    human_vocab = {t.lower() for t in tokenize(human_text)}
    cand_vocab = {t.lower() for t in tokenize(candidate_text)}
    if not human_vocab:
        raise EmptyText("human text has no tokens")
    if not cand_vocab:
        raise EmptyText("candidate text has no tokens")
    base = human_vocab if denominator == "human" else cand_vocab
    return len(cand_vocab & human_vocab) / len(base)


class AuditLog:
    """Append-only JSONL audit of endpoint calls; single-writer via lock."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self.path.parent.mkdir(parents=True, exist_ok=True)

    def append(self, record: dict) -> None:
        line = json.dumps(record, sort_keys=True)
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")


def _post_chat(endpoint: CompletionEndpointConfig, prompt: str) -> str:
    """One chat-completion round trip with backoff on rate limiting."""
    headers = {"Content-Type": "application/json"}
    key = os.environ.get(endpoint.api_key_env, "")
    if key:
        headers["Authorization"] = f"Bearer {key}"
    body = {
        "model": endpoint.model_name,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": endpoint.temperature,
    }
    delay = BACKOFF_BASE_SECONDS
    for attempt in range(4):
        try:
            resp = requests.post(
                endpoint.base_url, json=body, headers=headers, timeout=endpoint.timeout
            )
        except requests.RequestException as err:
            raise EndpointUnreachable(f"POST {endpoint.base_url} failed: {err}") from err
        if resp.status_code in (401, 403):
            raise AuthFailure(f"endpoint returned {resp.status_code}")
        if resp.status_code == 429:
            if attempt == 3:
                raise RateLimited("still rate limited after 3 retries")
            time.sleep(delay)
            delay *= 2.0
            continue
        if resp.status_code != 200:
            raise EndpointUnreachable(f"endpoint returned {resp.status_code}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as err:
            raise EndpointUnreachable(f"malformed endpoint response: {err}") from err
    raise RateLimited("still rate limited after 3 retries")


def generate_rephrased(
    req: RephraseRequest,
    endpoint: CompletionEndpointConfig,
    template_id: str = "tweet_mimic",
    audit: Optional[AuditLog] = None,
    doc_id: str = "",
) -> RephraseResult:
    """Call the endpoint until a candidate clears the overlap threshold.

    Returns the first accepted candidate, or the best-scoring rejected
    one after max_attempts.  Every call lands in the audit log either
    way, so acceptance rates stay computable.
    """
    prompt = build_prompt(req, template_id)
    prompt_hash = sha256_text(prompt)
    best_text, best_ratio = "", -1.0
    for attempt in range(1, req.max_attempts + 1):
        started = time.monotonic()
        candidate = _post_chat(endpoint, prompt)
        latency_ms = (time.monotonic() - started) * 1000.0
        try:
            ratio = overlap_ratio(req.human_text, candidate)
        except EmptyText:
            ratio = 0.0
        accepted = ratio >= req.overlap_threshold
        if audit is not None:
            audit.append(
                {
                    "doc_id": doc_id,
                    "attempt": attempt,
                    "ratio": ratio,
                    "accepted": accepted,
                    "latency_ms": round(latency_ms, 3),
                    "prompt_sha256": prompt_hash,
                }
            )
        if accepted:
            return RephraseResult(candidate, attempt, ratio, True)
        if ratio > best_ratio:
            best_text, best_ratio = candidate, ratio
    return RephraseResult(best_text, req.max_attempts, best_ratio, False)


def rephrase_corpus(
    corpus: Corpus,
    endpoint: CompletionEndpointConfig,
    template_id: str = "tweet_mimic",
    overlap_threshold: float = 0.6,
    max_attempts: int = 5,
    char_limit: Optional[int] = 280,
    audit_path: Optional[str | Path] = None,
    max_in_flight: int = 4,
    include_rejected: bool = True,
    on_error: str = "raise",
) -> tuple[Corpus, list[dict]]:
    """Regenerate the machine class from the human documents.

    Each human document gets a machine counterpart produced under the
    overlap constraint; original machine documents are discarded.  The
    returned provenance list carries one record per generated document:
    {source_doc_id, attempts, ratio, accepted}.  With on_error="collect"
    a per-document endpoint failure becomes a provenance record with an
    "error" field instead of aborting the whole run.
    """
    if on_error not in ("raise", "collect"):
        raise ValueError(f"on_error must be 'raise' or 'collect', got {on_error!r}")
    humans = [d for d in corpus if d.label == LABEL_HUMAN]
    audit = AuditLog(audit_path) if audit_path is not None else None

    def worker(doc: Document) -> tuple[Document, Optional[RephraseResult], str]:
        req = RephraseRequest(
            human_text=doc.text,
            overlap_threshold=overlap_threshold,
            max_attempts=max_attempts,
            char_limit=char_limit,
        )
        try:
            result = generate_rephrased(
                req, endpoint, template_id=template_id, audit=audit, doc_id=doc.id
            )
        except (AuthFailure, EndpointUnreachable, RateLimited, EmptyText,
                MissingPlaceholder) as err:
            if on_error == "raise":
                raise
            return doc, None, f"{type(err).__name__}: {err}"
        return doc, result, ""

    with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        outcomes = list(pool.map(worker, humans))

    documents = list(humans)
    provenance = []
    for doc, result, error in outcomes:
        if result is None:
            provenance.append({"source_doc_id": doc.id, "error": error})
            continue
        provenance.append(
            {
                "source_doc_id": doc.id,
                "attempts": result.attempts,
                "ratio": result.final_ratio,
                "accepted": result.accepted,
            }
        )
        if result.accepted or include_rejected:
            documents.append(
                Document(
                    id=f"{doc.id}-rephrased",
                    text=result.text,
                    label=LABEL_MACHINE,
                    source=doc.source,
                )
            )
    report = dict(corpus.report)
    rephrased = Corpus(documents=tuple(documents), report=report)
    return rephrased, provenance


# ---------------------------------------------------------------------------
# robustness evaluation


@dataclass
class RobustnessResult:
    before: list[EvalReport]
    after: list[EvalReport]
    per_topic: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "before": [r.as_dict() for r in self.before],
            "after": [r.as_dict() for r in self.after],
            "per_topic": self.per_topic,
        }


def _topic_rows(
    corpus: Corpus, ids: Sequence[str], model, tfidf_model
) -> list[dict]:
    """Weighted metrics per source tag over the given ids, merged row last."""
    lookup = corpus.by_id()
    docs = [lookup[i] for i in sorted(ids)]
    X = transform_matrix(tfidf_model, [d.text for d in docs])
    y_pred = predict_many(model, X)[0].tolist()
    y_true = [d.label for d in docs]
    by_topic: dict[str, list[int]] = {}
    for pos, doc in enumerate(docs):
        by_topic.setdefault(doc.source or "unknown", []).append(pos)
    rows = []
    for topic in sorted(by_topic):
        idx = by_topic[topic]
        cm = confusion([y_true[i] for i in idx], [y_pred[i] for i in idx])
        rows.append({"topic": topic, "n": len(idx)} | metrics(cm, mode="weighted"))
    cm = confusion(y_true, y_pred)
    rows.append({"topic": "merged", "n": len(docs)} | metrics(cm, mode="weighted"))
    return rows


def robustness_eval(
    original: Corpus,
    rephrased: Corpus,
    model_cfgs: Optional[dict[str, dict]] = None,
    vectorizer_cfg: Optional[TfidfConfig] = None,
    seed: int = 42,
    test_fraction: float = 0.10,
    n_folds: int = 5,
    topic_kind: str = "lr",
    original_split: Optional[SplitPlan] = None,
    rephrased_split: Optional[SplitPlan] = None,
) -> RobustnessResult:
    """Retrain on each corpus independently and pair the blind-test results.

    Also breaks the topic_kind model's rephrased-corpus results down by
    source tag for the train pool and the blind test partition.
    """
    if model_cfgs is None:
        model_cfgs = {kind: {} for kind in DEFAULT_MODEL_KINDS}
    if original_split is None:
        original_split = make_split(original, test_fraction, n_folds, seed)
    if rephrased_split is None:
        rephrased_split = make_split(rephrased, test_fraction, n_folds, seed)
    before = cross_validate(
        original, original_split, model_cfgs, vectorizer_cfg, seed=seed,
        dataset="original",
    )
    after = cross_validate(
        rephrased, rephrased_split, model_cfgs, vectorizer_cfg, seed=seed,
        dataset="rephrased",
    )

    per_topic: dict = {}
    if topic_kind in model_cfgs:
        pool_ids = rephrased_split.train_pool_ids()
        lookup = rephrased.by_id()
        pool_docs = [lookup[i] for i in pool_ids]
        tfidf_model = fit_tfidf([d.text for d in pool_docs], vectorizer_cfg)
        X = transform_matrix(tfidf_model, [d.text for d in pool_docs])
        y = [d.label for d in pool_docs]
        # same derived seed as the final model inside cross_validate, so the
        # merged test row here matches the paired after-table row exactly
        model = train_model(
            topic_kind, X, y,
            seed=derive_seed(seed, "cv", topic_kind, "final"),
            **model_cfgs[topic_kind],
        )
        per_topic = {
            "model": topic_kind,
            "train": _topic_rows(rephrased, pool_ids, model, tfidf_model),
            "test": _topic_rows(rephrased, rephrased_split.test_ids(), model, tfidf_model),
        }
    return RobustnessResult(before=before, after=after, per_topic=per_topic)
