"""Human-facing meme augmentation: score, predicted label, top features.

Each flagged meme is annotated with the boosted-tree model's probability and
the features that pushed the prediction, tagged by channel so a moderator can
tell an engineered signal (e.g. hate_word_count) from a tf-idf term or a
named-entity token.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .corpus import AnnotationBundle, MemeRecord
from .errors import DataValidationError
from .gbdt import GbdtModel, attribute_prediction
from .lexicons import ENGINEERED_DIM, LexiconSet, build_engineered
from .vectorizer import Vocabulary, assemble_input, compose_joint_text, transform_tfidf

CHANNEL_ENGINEERED = "engineered"
CHANNEL_TEXT_TERM = "text-term"
CHANNEL_NAMED_ENTITY = "named-entity"


def channel_for(index: int, name: str) -> str:
    """Channel tag from the assembled-input index layout."""
    if index < ENGINEERED_DIM:
        return CHANNEL_ENGINEERED
    if name.startswith("ent_"):
        return CHANNEL_NAMED_ENTITY
    return CHANNEL_TEXT_TERM


@dataclass(frozen=True)
class FeatureContribution:
    name: str
    channel: str
    contribution: float


@dataclass(frozen=True)
class AugmentedMeme:
    id: str
    score: float
    predicted_label: int
    top_features: list[FeatureContribution]
    engineered: dict[str, float]
    caption: str

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "score": self.score,
            "predicted_label": self.predicted_label,
            "top_features": [
                {"name": f.name, "channel": f.channel, "contribution": f.contribution}
                for f in self.top_features
            ],
            "engineered": self.engineered,
            "caption": self.caption,
        }


def augment_meme(
    record: MemeRecord,
    bundle: AnnotationBundle,
    model: GbdtModel,
    vocab: Vocabulary,
    lexicons: LexiconSet,
    top_k: int = 8,
    threshold: float = 0.5,
) -> AugmentedMeme:
    """Full pipeline for one meme: featurize, score, attribute, tag channels."""
    if record.id != bundle.id:
        raise DataValidationError(
            f"record id {record.id!r} does not match annotation id {bundle.id!r}"
        )
    engineered = build_engineered(record, bundle, lexicons)
    tfidf = transform_tfidf(compose_joint_text(record, bundle), vocab)
    row = assemble_input(engineered, tfidf)
    attribution = attribute_prediction(model, row, top_k=top_k)
    score = model.predict_proba(row)
    return AugmentedMeme(
        id=record.id,
        score=score,
        predicted_label=int(score >= threshold),
        top_features=[
            FeatureContribution(
                name=e.name,
                channel=channel_for(e.index, e.name),
                contribution=e.contribution,
            )
            for e in attribution.entries
        ],
        engineered=engineered.as_dict(),
        caption=bundle.caption,
    )


def export_augmented(augmented: list[AugmentedMeme], path) -> int:
    """Write one JSON object per meme; returns the record count."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for item in augmented:
            fh.write(json.dumps(item.to_dict(), ensure_ascii=False) + "\n")
    return len(augmented)
