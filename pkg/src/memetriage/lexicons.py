"""Lexicon-backed text scoring and the fixed 13-value engineered vector.

Profanity, slur and dogwhistle lists plus sentiment and emotion tables live
in plain text files so deployments can drop in vetted lists without code
changes; a small starter set ships with the package. All scoring is
deterministic and pure.

The engineered vector layout is fixed: five emotion scores, two sentiment
scores, the three NLI probabilities, then the three lexicon counts.
"""

from __future__ import annotations

import re
from dataclasses import astuple, dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .corpus import AnnotationBundle, MemeRecord
from .errors import DataValidationError

ENGINEERED_NAMES = (
    "emotion_happy",
    "emotion_sad",
    "emotion_fear",
    "emotion_surprise",
    "emotion_angry",
    "sentiment_polarity",
    "sentiment_subjectivity",
    "nli_contradiction",
    "nli_neutral",
    "nli_entailment",
    "profanity_count",
    "slur_count",
    "hate_word_count",
)
ENGINEERED_DIM = len(ENGINEERED_NAMES)

NEGATORS = frozenset({"not", "no", "never"})

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize_basic(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric boundaries, order-preserving."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class LexiconSet:
    """Immutable bundle of term lists and scoring tables, all keys lowercase."""

    profanity: frozenset[str]
    slurs: frozenset[str]
    hate_words: frozenset[str]
    sentiment: dict[str, tuple[float, float]]
    emotion: dict[str, tuple[float, float, float, float, float]]

    def __post_init__(self):
        for name in ("profanity", "slurs", "hate_words"):
            for term in getattr(self, name):
                _check_term(name, term)
        for term, (polarity, subjectivity) in self.sentiment.items():
            _check_term("sentiment", term)
            if not -1.0 <= polarity <= 1.0:
                raise DataValidationError(f"sentiment polarity for {term!r} outside [-1, 1]")
            if not 0.0 <= subjectivity <= 1.0:
                raise DataValidationError(f"sentiment subjectivity for {term!r} outside [0, 1]")
        for term, weights in self.emotion.items():
            _check_term("emotion", term)
            if len(weights) != 5 or any(w < 0 for w in weights):
                raise DataValidationError(f"emotion weights for {term!r} must be 5 nonnegative values")


def _check_term(source: str, term: str) -> None:
    if not term or term != term.strip() or term != term.lower():
        raise DataValidationError(f"{source} term {term!r} must be lowercase with no surrounding whitespace")


def _read_terms(path: Path) -> frozenset[str]:
    terms = set()
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        terms.add(line)
    return frozenset(terms)


def _read_rows(path: Path, n_values: int) -> dict[str, tuple[float, ...]]:
    rows: dict[str, tuple[float, ...]] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != n_values + 1:
            raise DataValidationError(
                f"{path}:{lineno}: expected term plus {n_values} values, got {len(parts)} fields"
            )
        rows[parts[0]] = tuple(float(v) for v in parts[1:])
    return rows


def load_lexicons(directory) -> LexiconSet:
    """Load the five lexicon files from a directory."""
    directory = Path(directory)
    return LexiconSet(
        profanity=_read_terms(directory / "profanity.txt"),
        slurs=_read_terms(directory / "slurs.txt"),
        hate_words=_read_terms(directory / "hate_words.txt"),
        sentiment=_read_rows(directory / "sentiment.tsv", 2),
        emotion=_read_rows(directory / "emotion.tsv", 5),
    )


def bundled_lexicons() -> LexiconSet:
    """The starter lexicons shipped inside the package."""
    root = resources.files("memetriage").joinpath("data/lexicons")
    with resources.as_file(root) as directory:
        return load_lexicons(directory)


def count_lexicon_hits(tokens: list[str], lexicon: frozenset[str] | set[str]) -> int:
    """Occurrences (with multiplicity) of tokens whose exact form is in the set."""
    return sum(1 for tok in tokens if tok in lexicon)


def score_sentiment(tokens: list[str], lexicons: LexiconSet) -> tuple[float, float]:
    """Mean polarity and subjectivity over lexicon hits, (0, 0) when none.

    A negator ("not", "no", "never") immediately before a matched token flips
    that token's polarity; subjectivity is unaffected.
    """
    polarities = []
    subjectivities = []
    for i, tok in enumerate(tokens):
        entry = lexicons.sentiment.get(tok)
        if entry is None:
            continue
        polarity, subjectivity = entry
        if i > 0 and tokens[i - 1] in NEGATORS:
            polarity = -polarity
        polarities.append(polarity)
        subjectivities.append(subjectivity)
    if not polarities:
        return (0.0, 0.0)
    return (sum(polarities) / len(polarities), sum(subjectivities) / len(subjectivities))


def score_emotion(tokens: list[str], lexicons: LexiconSet) -> np.ndarray:
    """L1-normalized sum of matched emotion weight vectors; zeros when no match."""
    total = np.zeros(5)
    for tok in tokens:
        weights = lexicons.emotion.get(tok)
        if weights is not None:
            total += np.asarray(weights, dtype=np.float64)
    mass = total.sum()
    if mass > 0:
        total /= mass
    return total


@dataclass(frozen=True)
class EngineeredVector:
    """The fixed-order 13-value engineered feature block."""

    emotion_happy: float
    emotion_sad: float
    emotion_fear: float
    emotion_surprise: float
    emotion_angry: float
    sentiment_polarity: float
    sentiment_subjectivity: float
    nli_contradiction: float
    nli_neutral: float
    nli_entailment: float
    profanity_count: float
    slur_count: float
    hate_word_count: float

    def to_array(self) -> np.ndarray:
        return np.asarray(astuple(self), dtype=np.float64)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(ENGINEERED_NAMES, astuple(self)))


def build_engineered(
    record: MemeRecord, bundle: AnnotationBundle, lexicons: LexiconSet
) -> EngineeredVector:
    """Assemble the 13-vector from meme text scoring plus the NLI annotation."""
    if record.id != bundle.id:
        raise DataValidationError(
            f"record id {record.id!r} does not match annotation id {bundle.id!r}"
        )
    tokens = tokenize_basic(record.text)
    emotion = score_emotion(tokens, lexicons)
    polarity, subjectivity = score_sentiment(tokens, lexicons)
    return EngineeredVector(
        emotion_happy=float(emotion[0]),
        emotion_sad=float(emotion[1]),
        emotion_fear=float(emotion[2]),
        emotion_surprise=float(emotion[3]),
        emotion_angry=float(emotion[4]),
        sentiment_polarity=polarity,
        sentiment_subjectivity=subjectivity,
        nli_contradiction=bundle.nli[0],
        nli_neutral=bundle.nli[1],
        nli_entailment=bundle.nli[2],
        profanity_count=float(count_lexicon_hits(tokens, lexicons.profanity)),
        slur_count=float(count_lexicon_hits(tokens, lexicons.slurs)),
        hate_word_count=float(count_lexicon_hits(tokens, lexicons.hate_words)),
    )
