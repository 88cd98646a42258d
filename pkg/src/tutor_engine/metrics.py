"""Feedback quality metrics: reading ease, response time, specificity.

All three are computed over the final voted feedback text. Reading ease and
specificity exclude code (fenced blocks and inline spans) first, so a wall
of code neither inflates the sentence count nor tanks the readability score.

The syllable counter is a fixed heuristic, not dictionary syllabification:
maximal vowel groups (a, e, i, o, u, y), with a trailing silent 'e' dropped
unless the word ends in consonant+"le", minimum one syllable. Golden test
values depend on this exact rule; change it and they move.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources

from .errors import NoProse
from .textutil import strip_code

NO_PROSE_WARNING = "no-prose"

_VOWEL_GROUP = re.compile(r"[aeiouy]+")
_SENTENCE_END = re.compile(r"[.!?](?=\s|$)")
_STRIP_EDGE = re.compile(r"^[^0-9a-zA-Z]+|[^0-9a-zA-Z]+$")
_HAS_ALNUM = re.compile(r"[0-9a-zA-Z]")


@dataclass(frozen=True)
class TextStats:
    sentences: int
    words: int
    syllables: int


@dataclass(frozen=True)
class MetricReading:
    fkrs: float | None
    response_time_ms: float
    specificity_sentences: int
    tier: str
    task_id: str
    warnings: tuple[str, ...] = ()


def count_syllables(word: str) -> int:
    """Syllables of one word by the documented vowel-group heuristic.

    Tokens that are not purely alphabetic after edge-stripping (identifiers,
    numbers, contractions) count as one syllable: domain terms stay cheap.
    """
    token = _STRIP_EDGE.sub("", word)
    if not token or not token.isalpha():
        return 1
    lower = token.lower()
    if lower.endswith("e") and not (
        len(lower) >= 3
        and lower.endswith("le")
        and lower[-3] not in "aeiouy"
    ):
        lower = lower[:-1]
    groups = _VOWEL_GROUP.findall(lower)
    return max(1, len(groups))


def split_sentences_excluding_code(text: str) -> list[str]:
    """Sentences of the prose part of the text.

    Code is stripped first, then the prose is split on '.', '!' or '?'
    followed by whitespace or end of text. Segments with no alphanumeric
    content are discarded.
    """
    prose, _ = strip_code(text)
    return _split_prose(prose)


def _split_prose(prose: str) -> list[str]:
    segments = _SENTENCE_END.split(prose)
    return [seg.strip() for seg in segments if _HAS_ALNUM.search(seg)]


def _words(prose: str) -> list[str]:
    return [tok for tok in prose.split() if _HAS_ALNUM.search(tok)]


def text_stats(text: str) -> tuple[TextStats, list[str]]:
    """Sentence/word/syllable counts over code-excluded text, plus warnings."""
    prose, warnings = strip_code(text)
    sentences = _split_prose(prose)
    words = _words(prose)
    syllables = sum(count_syllables(w) for w in words)
    return TextStats(len(sentences), len(words), syllables), warnings


def _reading_ease(stats: TextStats) -> float:
    return (
        206.835
        - 1.015 * (stats.words / stats.sentences)
        - 84.6 * (stats.syllables / stats.words)
    )


def flesch_reading_ease(text: str) -> float:
    """Reading-ease score over code-excluded text; raises NoProse if empty.

    The raw formula value is reported unclamped: trivial prose legitimately
    scores above 100, and clamping would destroy the golden-value oracles.
    """
    stats, _ = text_stats(text)
    if stats.sentences == 0:
        raise NoProse("text has no sentences once code is excluded")
    return _reading_ease(stats)


def _load_bands() -> list[dict]:
    raw = resources.files("tutor_engine.data").joinpath("bands.json").read_text("utf-8")
    return json.loads(raw)


_BANDS = _load_bands()


def interpret_band(score: float) -> str:
    """Named readability band for a score, from the shipped band table."""
    for band in _BANDS:
        low, high = band["min"], band["max"]
        if low is not None:
            if score < low or (score == low and not band["min_inclusive"]):
                continue
        if high is not None:
            if score > high or (score == high and not band["max_inclusive"]):
                continue
        return band["label"]
    raise ValueError(f"no band covers score {score}")  # band table is total


def measure(vote, tier, task_id: str) -> MetricReading:
    """MetricReading for a finished self-consistency round.

    Response time is the round's total latency (batch wall-clock plus
    voting); specificity is the prose sentence count of the chosen text.
    An all-code feedback yields a null reading-ease with a warning instead
    of failing the round.
    """
    tier_label = getattr(tier, "value", tier)
    stats, warnings = text_stats(vote.chosen)
    if stats.sentences == 0:
        fkrs = None
        warnings = list(warnings) + [NO_PROSE_WARNING]
    else:
        fkrs = _reading_ease(stats)
    return MetricReading(
        fkrs=fkrs,
        response_time_ms=vote.total_latency,
        specificity_sentences=stats.sentences,
        tier=tier_label,
        task_id=task_id,
        warnings=tuple(warnings),
    )
