"""Shared fixtures and the acceptance-summary terminal hook."""

from __future__ import annotations

import numpy as np
import pytest

from mgtd.corpus import Corpus, Document

# one line per acceptance criterion, replayed after the run so they
# survive pytest's output capture
ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


HUMAN_WORDS = (
    "river", "stone", "walking", "quietly", "forest", "morning",
    "light", "birdsong", "meadow", "gentle", "rain", "harvest",
)
MACHINE_WORDS = (
    "synthesis", "vectorized", "tokenizer", "modeling", "sampled",
    "outputs", "layering", "logits", "decoder", "metrics", "batched",
    "embedding",
)


def build_corpus(
    n_per_class: int = 30,
    seed: int = 0,
    topics: tuple[str, ...] = ("alpha", "beta", "gamma"),
    words_per_doc: int = 14,
    human_words: tuple[str, ...] = HUMAN_WORDS,
    machine_words: tuple[str, ...] = MACHINE_WORDS,
) -> Corpus:
    """Separable two-class corpus with disjoint vocabularies."""
    rng = np.random.default_rng(seed)
    documents = []
    for i in range(n_per_class):
        topic = topics[i % len(topics)]
        h = " ".join(rng.choice(human_words, size=words_per_doc))
        documents.append(Document(id=f"h{i:04d}", text=h, label=0, source=topic))
        m = " ".join(rng.choice(machine_words, size=words_per_doc))
        documents.append(Document(id=f"m{i:04d}", text=m, label=1, source=topic))
    return Corpus(documents=tuple(documents), report={})


def build_confusable_corpus(n_per_class: int = 30, seed: int = 0) -> Corpus:
    """Both classes drawn from one shared vocabulary: near-chance ceiling."""
    shared = HUMAN_WORDS + MACHINE_WORDS
    return build_corpus(
        n_per_class, seed, human_words=shared, machine_words=shared
    )


@pytest.fixture
def separable_corpus() -> Corpus:
    return build_corpus()


@pytest.fixture
def corpus_factory():
    return build_corpus
