"""Shared orchestration: corpus featurization and model training/evaluation.

The CLI commands and the review service both go through these helpers so
that a model trained on the command line scores memes identically when
served.
"""

from __future__ import annotations

import numpy as np

from .corpus import Corpus, MemeRecord
from .errors import DataValidationError, InsufficientDataError
from .gbdt import GbdtModel, GbdtParams, train_gbdt
from .lexicons import LexiconSet, build_engineered
from .lstm import LstmModel, LstmParams, train_lstm
from .metrics import EvalReport, evaluate_scores
from .vectorizer import (
    Vocabulary,
    assemble_input,
    compose_joint_text,
    feature_names,
    fit_vocabulary,
    transform_tfidf,
)


def usable_records(corpus: Corpus, split: str | None = None) -> list[MemeRecord]:
    """Labeled records with an annotation bundle, optionally in one split."""
    records = [
        r for r in corpus.labeled_records() if r.id in corpus.annotations
    ]
    if split is not None:
        records = [r for r in records if r.split == split]
    return records


def fit_corpus_vocabulary(
    corpus: Corpus,
    lexicons: LexiconSet,
    ids: list[str],
    min_df: int = 2,
    max_features: int | None = None,
) -> Vocabulary:
    """Fit the joint-channel vocabulary on the given record ids only."""
    token_lists = []
    for meme_id in ids:
        record = corpus.record_by_id(meme_id)
        bundle = corpus.bundle_for(meme_id)
        if record is None or bundle is None:
            raise DataValidationError(f"cannot fit vocabulary: meme {meme_id!r} unusable")
        token_lists.append(compose_joint_text(record, bundle))
    return fit_vocabulary(token_lists, min_df=min_df, max_features=max_features)


def build_row(record: MemeRecord, corpus: Corpus, lexicons: LexiconSet, vocab: Vocabulary):
    bundle = corpus.bundle_for(record.id)
    if bundle is None:
        raise DataValidationError(f"meme {record.id!r} has no annotation bundle")
    engineered = build_engineered(record, bundle, lexicons)
    tfidf = transform_tfidf(compose_joint_text(record, bundle), vocab)
    return assemble_input(engineered, tfidf)


def build_rows(records: list[MemeRecord], corpus: Corpus, lexicons: LexiconSet, vocab: Vocabulary):
    rows = [build_row(r, corpus, lexicons, vocab) for r in records]
    labels = [r.label for r in records]
    return rows, labels


def train_gbdt_on_corpus(
    corpus: Corpus,
    lexicons: LexiconSet,
    params: GbdtParams,
    min_df: int = 2,
    max_features: int | None = None,
    train_ids: list[str] | None = None,
) -> tuple[GbdtModel, Vocabulary]:
    """Fit vocabulary and boosted trees on the train split (or explicit ids)."""
    if train_ids is None:
        train_records = usable_records(corpus, "train")
    else:
        train_records = [corpus.record_by_id(mid) for mid in train_ids]
    if not train_records:
        raise InsufficientDataError("no usable training records (labeled + annotated)")
    ids = [r.id for r in train_records]
    vocab = fit_corpus_vocabulary(corpus, lexicons, ids, min_df=min_df, max_features=max_features)
    rows, labels = build_rows(train_records, corpus, lexicons, vocab)
    model = train_gbdt(rows, labels, params, feature_names(vocab))
    return model, vocab


def gbdt_scores(
    records: list[MemeRecord],
    corpus: Corpus,
    lexicons: LexiconSet,
    model: GbdtModel,
    vocab: Vocabulary,
) -> list[float]:
    return [model.predict_proba(build_row(r, corpus, lexicons, vocab)) for r in records]


def evaluate_gbdt(
    corpus: Corpus,
    lexicons: LexiconSet,
    model: GbdtModel,
    vocab: Vocabulary,
    split: str,
    threshold: float = 0.5,
) -> EvalReport:
    records = usable_records(corpus, split)
    if not records:
        raise InsufficientDataError(f"no usable records in split {split!r}")
    scores = gbdt_scores(records, corpus, lexicons, model, vocab)
    return evaluate_scores(scores, [r.label for r in records], threshold)


def sequences_for(records: list[MemeRecord], corpus: Corpus) -> list[np.ndarray]:
    seqs = []
    for record in records:
        bundle = corpus.bundle_for(record.id)
        if bundle is None:
            raise DataValidationError(f"meme {record.id!r} has no annotation bundle")
        seqs.append(bundle.embedding_seq)
    return seqs


def train_lstm_on_corpus(
    corpus: Corpus,
    params: LstmParams,
    train_ids: list[str] | None = None,
) -> LstmModel:
    if train_ids is None:
        train_records = usable_records(corpus, "train")
    else:
        train_records = [corpus.record_by_id(mid) for mid in train_ids]
    if not train_records:
        raise InsufficientDataError("no usable training records (labeled + annotated)")
    sequences = sequences_for(train_records, corpus)
    return train_lstm(sequences, [r.label for r in train_records], params)


def lstm_scores(records: list[MemeRecord], corpus: Corpus, model: LstmModel) -> list[float]:
    return [model.predict_proba(seq) for seq in sequences_for(records, corpus)]


def evaluate_lstm(
    corpus: Corpus,
    model: LstmModel,
    split: str,
    threshold: float = 0.5,
) -> EvalReport:
    records = usable_records(corpus, split)
    if not records:
        raise InsufficientDataError(f"no usable records in split {split!r}")
    scores = lstm_scores(records, corpus, model)
    return evaluate_scores(scores, [r.label for r in records], threshold)
