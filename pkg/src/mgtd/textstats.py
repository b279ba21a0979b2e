"""Tokenization, sentence segmentation, and syllable/word/letter counting.

These counts feed the readability formulas and the vocabulary-overlap check,
so they are deliberately dependency-free and deterministic.
"""

import re
from dataclasses import dataclass
from typing import FrozenSet, Iterable, List, Optional

_VOWELS = frozenset("aeiouy")

_TERMINATOR_RE = re.compile(r"[.!?]+(?=\s|$)")
_TRAILING_WORD_RE = re.compile(r"([A-Za-z]+(?:\.[A-Za-z]+)*)$")


@dataclass(frozen=True)
class TextCounts:
    words: int
    sentences: int
    letters: int
    syllables: int
    complex_words: int
    difficult_words: int


def tokenize(text: str) -> List[str]:
    """Whitespace-split tokens with edge punctuation stripped.

    Internal apostrophes and hyphens survive ("state-of-the-art", "isn't");
    tokens that are pure punctuation are dropped.
    """
    tokens = []
    for raw in text.split():
        start, end = 0, len(raw)
        while start < end and not raw[start].isalnum():
            start += 1
        while end > start and not raw[end - 1].isalnum():
            end -= 1
        if end > start:
            tokens.append(raw[start:end])
    return tokens


def split_sentences(text: str, abbreviations: Optional[FrozenSet[str]] = None) -> List[str]:
    """Split on . ! ? followed by whitespace, protecting known abbreviations.

    Non-empty text always yields at least one sentence.
    """
    if abbreviations is None:
        from mgtd import assets

        abbreviations = assets.load_abbreviations()
    stripped = text.strip()
    if not stripped:
        return []
    cuts = []
    for m in _TERMINATOR_RE.finditer(text):
        if "!" not in m.group() and "?" not in m.group():
            prev = _TRAILING_WORD_RE.search(text[: m.start()])
            if prev and prev.group(1).lower() in abbreviations:
                continue
        cuts.append(m.end())
    sentences = []
    last = 0
    for cut in cuts:
        piece = text[last:cut].strip()
        if piece:
            sentences.append(piece)
        last = cut
    tail = text[last:].strip()
    if tail:
        sentences.append(tail)
    return sentences if sentences else [stripped]


def _syllables_letters(word: str) -> int:
    """Vowel-run count over one hyphen-free part; 0 if it has no letters."""
    letters = "".join(c for c in word.lower() if c.isalpha())
    if not letters:
        return 0
    runs = 0
    prev_vowel = False
    for c in letters:
        is_vowel = c in _VOWELS
        if is_vowel and not prev_vowel:
            runs += 1
        prev_vowel = is_vowel
    # terminal silent "e", except the consonant-"le" ending ("table", "bottle")
    if letters.endswith("e") and runs > 1:
        keeps_le = (
            len(letters) >= 3
            and letters.endswith("le")
            and letters[-3] not in _VOWELS
        )
        if not keeps_le:
            runs -= 1
    return max(runs, 1)


def count_syllables(word: str) -> int:
    """Heuristic syllable count, never below 1. Hyphen parts counted separately."""
    total = sum(_syllables_letters(part) for part in word.split("-"))
    return max(total, 1)


def is_complex_word(token: str) -> bool:
    """Three or more syllables; hyphenated compounds need one such part."""
    if "-" in token:
        return any(_syllables_letters(p) >= 3 for p in token.split("-"))
    return count_syllables(token) >= 3


def _familiar(token: str, familiar_words: FrozenSet[str]) -> bool:
    t = token.lower()
    if t in familiar_words:
        return True
    candidates = []
    if t.endswith("'s"):
        candidates.append(t[:-2])
    if t.endswith("s") and len(t) > 3:
        candidates.append(t[:-1])
    if t.endswith("es") and len(t) > 4:
        candidates.append(t[:-2])
    if t.endswith("ed") and len(t) > 4:
        candidates.append(t[:-2])
        candidates.append(t[:-2] + "e")
    if t.endswith("ing") and len(t) > 5:
        candidates.append(t[:-3])
        candidates.append(t[:-3] + "e")
    return any(c in familiar_words for c in candidates)


def text_counts(text: str, familiar_words: Optional[Iterable[str]] = None) -> TextCounts:
    """Aggregate the word/sentence/letter/syllable counts for one text."""
    familiar = frozenset(w.lower() for w in familiar_words) if familiar_words else frozenset()
    tokens = tokenize(text)
    letters = sum(1 for c in text if c.isalpha())
    if not tokens:
        return TextCounts(0, len(split_sentences(text)), letters, 0, 0, 0)
    syllables = sum(count_syllables(t) for t in tokens)
    complex_words = sum(1 for t in tokens if is_complex_word(t))
    difficult = sum(
        1
        for t in tokens
        if any(c.isalpha() for c in t) and not _familiar(t, familiar)
    )
    return TextCounts(
        words=len(tokens),
        sentences=len(split_sentences(text)),
        letters=letters,
        syllables=syllables,
        complex_words=complex_words,
        difficult_words=difficult,
    )
