"""Lexicon-driven feature rates: bias cues, moral foundations, sentiment.

Each family is a term-to-category lexicon applied to a token list.  The
rate for a category is matched occurrences divided by total tokens, so
texts of different lengths stay comparable.  Multiword entries match
greedily left to right and consume their tokens before unigram lookup.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

from mgtd import assets
from mgtd.errors import ConflictingDuplicate, MalformedLine, MissingCategory

BIAS_CATEGORIES = frozenset(
    {"bias_words", "assertives", "factives", "hedges", "implicatives"}
)
MORAL_CATEGORIES = frozenset(
    {
        "harm",
        "fairness",
        "cheating",
        "loyalty",
        "betrayal",
        "authority",
        "subversion",
        "purity",
        "degradation",
        "morality_general",
    }
)
SENTIMENT_CATEGORIES = frozenset(
    {
        "weak_negative",
        "weak_positive",
        "weak_neutral",
        "strong_negative",
        "strong_positive",
        "strong_neutral",
    }
)


@dataclass(frozen=True)
class LexiconSet:
    """Immutable term-to-category table plus a phrase index for matching."""

    name: str
    entries: dict[str, str]

    @property
    def categories(self) -> frozenset[str]:
        return frozenset(self.entries.values())

    def __len__(self) -> int:
        return len(self.entries)


def load_lexicon(path: str | Path, name: str = "") -> LexiconSet:
    """Parse a `term<TAB>category` file into a LexiconSet.

    Lines starting with # and blank lines are skipped.  A term listed
    twice with different categories is an error; an exact duplicate is
    tolerated.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(path)
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        term, sep, category = line.partition("\t")
        term = term.strip().lower()
        category = category.strip()
        if not sep or not term or not category:
            raise MalformedLine(f"{path.name}:{lineno}: expected term<TAB>category")
        if term in entries and entries[term] != category:
            raise ConflictingDuplicate(
                f"{path.name}:{lineno}: {term!r} maps to both "
                f"{entries[term]!r} and {category!r}"
            )
        entries[term] = category
    if not entries:
        warnings.warn(f"lexicon {path.name} is empty", stacklevel=2)
    return LexiconSet(name=name or path.stem, entries=entries)


def bundled_lexicon(family: str) -> LexiconSet:
    """Load one of the shipped lexicons: bias, moral, or sentiment."""
    return load_lexicon(assets.ASSET_DIR / "lexicons" / f"{family}.tsv", name=family)


def _phrase_index(
    lexicon: LexiconSet,
) -> tuple[dict[str, list[tuple[tuple[str, ...], str]]], dict[str, str]]:
    """Split entries into multiword phrases (keyed by first token) and unigrams.

    The index is built once per LexiconSet and stashed on the instance.
    """
    try:
        return object.__getattribute__(lexicon, "_index")
    except AttributeError:
        pass
    phrases: dict[str, list[tuple[tuple[str, ...], str]]] = {}
    unigrams: dict[str, str] = {}
    for term, category in lexicon.entries.items():
        parts = tuple(term.split(" "))
        if len(parts) > 1:
            phrases.setdefault(parts[0], []).append((parts, category))
        else:
            unigrams[term] = category
    for bucket in phrases.values():
        bucket.sort(key=lambda item: -len(item[0]))
    index = (phrases, unigrams)
    object.__setattr__(lexicon, "_index", index)
    return index


def extract_rates(
    tokens: list[str],
    lexicon: LexiconSet,
    required: frozenset[str] | None = None,
) -> dict[str, float]:
    """Per-category match rates over the token list.

    Longer phrases win over shorter ones at the same position, and a
    matched phrase consumes its tokens.  Empty input gives all zeros.
    """
    if required is not None:
        missing = required - lexicon.categories
        if missing:
            raise MissingCategory(
                f"lexicon {lexicon.name!r} lacks categories {sorted(missing)}"
            )
    categories = sorted(required if required is not None else lexicon.categories)
    counts = {category: 0 for category in categories}

    phrases, unigrams = _phrase_index(lexicon)
    i = 0
    n = len(tokens)
    while i < n:
        token = tokens[i]
        matched = False
        for parts, category in phrases.get(token, ()):
            if tuple(tokens[i : i + len(parts)]) == parts:
                if category in counts:
                    counts[category] += 1
                i += len(parts)
                matched = True
                break
        if matched:
            continue
        category = unigrams.get(token)
        if category is not None and category in counts:
            counts[category] += 1
        i += 1

    if n == 0:
        return {category: 0.0 for category in categories}
    return {category: counts[category] / n for category in categories}


def bias_features(tokens: list[str], lexicon: LexiconSet) -> dict[str, float]:
    return extract_rates(tokens, lexicon, BIAS_CATEGORIES)


def moral_features(tokens: list[str], lexicon: LexiconSet) -> dict[str, float]:
    return extract_rates(tokens, lexicon, MORAL_CATEGORIES)


def sentiment_features(tokens: list[str], lexicon: LexiconSet) -> dict[str, float]:
    return extract_rates(tokens, lexicon, SENTIMENT_CATEGORIES)
