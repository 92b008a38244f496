"""Joint sparse tf-idf over all text channels, plus final input assembly.

Meme text, caption, detected objects and web entities are tokenized into one
joint token stream; named entities additionally become synthetic
``ent_<surface>_<category>`` tokens in the same stream, so entity features
live in the same embedded space as ordinary terms. The tf-idf variant is
fixed bit-exactly: raw term counts, idf = ln((1+N)/(1+df)) + 1, L2
normalization.

The final classifier input places the 13 engineered values at indices
[0, 13) and shifts tf-idf columns up by 13.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import AnnotationBundle, MemeRecord
from .errors import DataValidationError, ParseError
from .lexicons import ENGINEERED_DIM, ENGINEERED_NAMES, EngineeredVector, tokenize_basic

VOCAB_FORMAT = "memetriage-vocabulary"
VOCAB_VERSION = 1


@dataclass(frozen=True)
class SparseVector:
    """Sorted (index, value) pairs with an explicit logical dimension."""

    pairs: tuple[tuple[int, float], ...]
    dim: int

    def __post_init__(self):
        prev = -1
        for index, value in self.pairs:
            if index <= prev:
                raise DataValidationError("sparse indices must be strictly increasing")
            if index >= self.dim:
                raise DataValidationError(f"sparse index {index} >= dimension {self.dim}")
            if value == 0.0 or not math.isfinite(value):
                raise DataValidationError(f"sparse value at {index} must be finite and nonzero")
            prev = index

    def to_dict(self) -> dict[int, float]:
        return dict(self.pairs)

    def l2_norm(self) -> float:
        return math.sqrt(sum(v * v for _, v in self.pairs))


@dataclass(frozen=True)
class Vocabulary:
    """Term -> contiguous column index plus document frequencies from fitting."""

    index: dict[str, int]
    df: dict[str, int]
    n_docs: int

    def __post_init__(self):
        if set(self.index) != set(self.df):
            raise DataValidationError("vocabulary index and df must cover the same terms")
        indices = sorted(self.index.values())
        if indices != list(range(len(indices))):
            raise DataValidationError("vocabulary indices must form a contiguous 0-based range")
        for term, count in self.df.items():
            if not 1 <= count <= self.n_docs:
                raise DataValidationError(
                    f"df for {term!r} must be within [1, {self.n_docs}], got {count}"
                )

    @property
    def size(self) -> int:
        return len(self.index)

    def idf(self, term: str) -> float:
        return math.log((1 + self.n_docs) / (1 + self.df[term])) + 1.0

    def terms_by_index(self) -> list[str]:
        ordered = [""] * self.size
        for term, i in self.index.items():
            ordered[i] = term
        return ordered


def entity_token(surface: str, category: str) -> str:
    """Synthetic joint-channel token for a named entity, e.g. ent_jews_norp."""
    parts = surface.lower().split()
    return "ent_" + "_".join(parts) + "_" + category.lower()


def compose_joint_text(record: MemeRecord, bundle: AnnotationBundle) -> list[str]:
    """One token stream over all text channels, entity tokens last."""
    if record.id != bundle.id:
        raise DataValidationError(
            f"record id {record.id!r} does not match annotation id {bundle.id!r}"
        )
    tokens = tokenize_basic(record.text)
    tokens += tokenize_basic(bundle.caption)
    for obj in bundle.objects:
        tokens += tokenize_basic(obj)
    for entity in bundle.web_entities:
        tokens += tokenize_basic(entity)
    for surface, category in bundle.named_entities:
        if surface.strip():
            tokens.append(entity_token(surface, category))
    return tokens


def fit_vocabulary(
    token_lists: list[list[str]],
    min_df: int = 2,
    max_features: int | None = None,
) -> Vocabulary:
    """Fit on training documents only; deterministic.

    Terms below min_df are dropped; when max_features is set the highest-df
    terms are kept with lexicographic tie-break. Column indices are assigned
    in lexicographic term order.
    """
    if not token_lists:
        raise DataValidationError("cannot fit a vocabulary on an empty collection")
    df: dict[str, int] = {}
    for tokens in token_lists:
        for term in set(tokens):
            df[term] = df.get(term, 0) + 1
    retained = [t for t, c in df.items() if c >= min_df]
    if max_features is not None and len(retained) > max_features:
        retained.sort(key=lambda t: (-df[t], t))
        retained = retained[:max_features]
    retained.sort()
    return Vocabulary(
        index={t: i for i, t in enumerate(retained)},
        df={t: df[t] for t in retained},
        n_docs=len(token_lists),
    )


def transform_tfidf(tokens: list[str], vocab: Vocabulary) -> SparseVector:
    """tf * idf with L2 normalization; out-of-vocabulary tokens are ignored."""
    counts: dict[int, int] = {}
    idfs: dict[int, float] = {}
    for term in tokens:
        col = vocab.index.get(term)
        if col is None:
            continue
        counts[col] = counts.get(col, 0) + 1
        if col not in idfs:
            idfs[col] = vocab.idf(term)
    values = {col: tf * idfs[col] for col, tf in counts.items()}
    norm = math.sqrt(sum(v * v for v in values.values()))
    if norm > 0:
        values = {col: v / norm for col, v in values.items()}
    return SparseVector(
        pairs=tuple((col, values[col]) for col in sorted(values)),
        dim=vocab.size,
    )


def assemble_input(engineered: EngineeredVector, tfidf: SparseVector) -> SparseVector:
    """Engineered block at [0, 13), tf-idf shifted by 13; zeros omitted."""
    pairs = [
        (i, v) for i, v in enumerate(engineered.to_array().tolist()) if v != 0.0
    ]
    pairs += [(ENGINEERED_DIM + i, v) for i, v in tfidf.pairs]
    return SparseVector(pairs=tuple(pairs), dim=ENGINEERED_DIM + tfidf.dim)


def feature_names(vocab: Vocabulary) -> list[str]:
    """Column names of the assembled input: engineered block then vocab terms."""
    return list(ENGINEERED_NAMES) + vocab.terms_by_index()


def save_vocabulary(vocab: Vocabulary, path) -> None:
    lines = [f"{VOCAB_FORMAT}\t{VOCAB_VERSION}\t{vocab.n_docs}\t{vocab.size}"]
    for i, term in enumerate(vocab.terms_by_index()):
        lines.append(f"{term}\t{i}\t{vocab.df[term]}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_vocabulary(path) -> Vocabulary:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ParseError(f"{path}: empty vocabulary file")
    header = lines[0].split("\t")
    if len(header) != 4 or header[0] != VOCAB_FORMAT:
        raise ParseError(f"{path}: not a {VOCAB_FORMAT} file")
    if int(header[1]) != VOCAB_VERSION:
        raise ParseError(f"{path}: unsupported vocabulary version {header[1]}")
    n_docs = int(header[2])
    size = int(header[3])
    index: dict[str, int] = {}
    df: dict[str, int] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ParseError(f"{path}:{lineno}: expected term<TAB>index<TAB>df")
        term, col, count = parts[0], int(parts[1]), int(parts[2])
        index[term] = col
        df[term] = count
    if len(index) != size:
        raise ParseError(f"{path}: header claims {size} terms, found {len(index)}")
    return Vocabulary(index=index, df=df, n_docs=n_docs)
