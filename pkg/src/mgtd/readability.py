"""Five classic readability indices computed from TextCounts.

Formula constants are pinned here and regression-locked by hand-computed
fixtures in the test suite:

    gunning_fog        0.4 * (words/sentences + 100 * complex/words)
    smog               1.0430 * sqrt(complex * 30/sentences) + 3.1291
    dale_chall         0.1579 * (100*difficult/words) + 0.0496 * (words/sentences)
                       (+ 3.6365 when difficult/words > 0.05)
    flesch             206.835 - 1.015 * (words/sentences) - 84.6 * (syllables/words)
    coleman_liau       0.0588*L - 0.296*S - 15.8,  L = 100*letters/words,
                       S = 100*sentences/words
"""

import math
from dataclasses import dataclass
from typing import Iterable, Optional

from mgtd.errors import ZeroSentences, ZeroWords
from mgtd.textstats import TextCounts, text_counts


@dataclass(frozen=True)
class ReadabilityScores:
    gunning_fog: float
    smog: float
    dale_chall: float
    flesch_reading_ease: float
    coleman_liau: float

    def as_dict(self) -> dict:
        return {
            "gunning_fog": self.gunning_fog,
            "smog": self.smog,
            "dale_chall": self.dale_chall,
            "flesch_reading_ease": self.flesch_reading_ease,
            "coleman_liau": self.coleman_liau,
        }


def _require_words(c: TextCounts) -> None:
    if c.words < 1:
        raise ZeroWords("text has no words")


def _require_sentences(c: TextCounts) -> None:
    if c.sentences < 1:
        raise ZeroSentences("text has no sentences")


def gunning_fog(c: TextCounts) -> float:
    _require_words(c)
    _require_sentences(c)
    return 0.4 * (c.words / c.sentences + 100.0 * c.complex_words / c.words)


def smog(c: TextCounts) -> float:
    """Applied without the 30-sentence floor; short texts get the extrapolation."""
    _require_sentences(c)
    return 1.0430 * math.sqrt(c.complex_words * 30.0 / c.sentences) + 3.1291


def dale_chall(c: TextCounts) -> float:
    _require_words(c)
    _require_sentences(c)
    difficult_share = c.difficult_words / c.words
    score = 0.1579 * (100.0 * difficult_share) + 0.0496 * (c.words / c.sentences)
    if difficult_share > 0.05:
        score += 3.6365
    return score


def flesch_reading_ease(c: TextCounts) -> float:
    _require_words(c)
    _require_sentences(c)
    return 206.835 - 1.015 * (c.words / c.sentences) - 84.6 * (c.syllables / c.words)


def coleman_liau(c: TextCounts) -> float:
    _require_words(c)
    letters_per_100 = 100.0 * c.letters / c.words
    sentences_per_100 = 100.0 * c.sentences / c.words
    return 0.0588 * letters_per_100 - 0.296 * sentences_per_100 - 15.8


def score_counts(c: TextCounts) -> ReadabilityScores:
    return ReadabilityScores(
        gunning_fog=gunning_fog(c),
        smog=smog(c),
        dale_chall=dale_chall(c),
        flesch_reading_ease=flesch_reading_ease(c),
        coleman_liau=coleman_liau(c),
    )


def score_text(text: str, familiar_words: Optional[Iterable[str]] = None) -> ReadabilityScores:
    """Convenience wrapper: count, then score. Raises ZeroWords on empty text."""
    return score_counts(text_counts(text, familiar_words))
