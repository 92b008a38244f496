"""HTTP review service: flagged-meme queue, label submission, agreement stats.

State is split from transport so the contract is testable without HTTP: a
ReviewState owns the scored items and the durable label log, and the FastAPI
app is a thin layer over it. The label store is an append-only JSONL log
replayed at startup, so human decisions survive restarts and stay auditable.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import FileResponse
from pydantic import BaseModel, Field

from . import __version__
from .augment import AugmentedMeme, augment_meme
from .corpus import Corpus
from .errors import MemetriageError
from .gbdt import GbdtModel
from .lexicons import LexiconSet
from .vectorizer import Vocabulary


class UnknownItemError(MemetriageError):
    """The meme id is not in the review set."""


class LabelConflictError(MemetriageError):
    """A different label was already stored for this meme."""


@dataclass
class ReviewItem:
    id: str
    augmented: AugmentedMeme
    img: str
    text: str = ""
    status: str = "pending"
    human_label: int | None = None
    labeled_at: str | None = None
    annotator: str | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "augmented": self.augmented.to_dict(),
            "img": self.img,
            "text": self.text,
            "status": self.status,
            "human_label": self.human_label,
            "labeled_at": self.labeled_at,
            "annotator": self.annotator,
        }


@dataclass
class AgreementStats:
    n_reviewed: int
    agreement_rate: float
    human_positive_rate: float
    model_positive_rate: float
    confusion: dict[str, int]

    def to_dict(self) -> dict:
        return {
            "n_reviewed": self.n_reviewed,
            "agreement_rate": self.agreement_rate,
            "human_positive_rate": self.human_positive_rate,
            "model_positive_rate": self.model_positive_rate,
            "confusion": self.confusion,
        }


class ReviewState:
    """Scored review items plus the durable label log. Thread-safe writes."""

    def __init__(
        self,
        corpus: Corpus,
        model: GbdtModel,
        vocab: Vocabulary,
        lexicons: LexiconSet,
        threshold: float = 0.5,
        top_k: int = 8,
        label_log: str | os.PathLike | None = None,
    ):
        self.threshold = threshold
        self.corpus = corpus
        self._lock = threading.Lock()
        self._label_log = Path(label_log) if label_log is not None else None
        self.items: dict[str, ReviewItem] = {}
        for record in corpus.annotated_records():
            bundle = corpus.bundle_for(record.id)
            augmented = augment_meme(
                record, bundle, model, vocab, lexicons, top_k=top_k, threshold=threshold
            )
            self.items[record.id] = ReviewItem(
                id=record.id, augmented=augmented, img=record.img, text=record.text
            )
        if self._label_log is not None and self._label_log.exists():
            self._replay_log()

    def _replay_log(self) -> None:
        for line in self._label_log.read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line:
                continue
            entry = json.loads(line)
            item = self.items.get(entry["id"])
            if item is None or (item.status == "labeled" and item.human_label != entry["label"]):
                continue
            item.status = "labeled"
            item.human_label = int(entry["label"])
            item.labeled_at = entry.get("labeled_at")
            item.annotator = entry.get("annotator")

    def _append_log(self, entry: dict) -> None:
        if self._label_log is None:
            return
        with self._label_log.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry, ensure_ascii=False) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def build_queue(self, threshold: float | None = None, sort: str = "score") -> list[ReviewItem]:
        """Flagged items (score >= threshold), deterministically ordered."""
        cutoff = self.threshold if threshold is None else threshold
        flagged = [item for item in self.items.values() if item.augmented.score >= cutoff]
        if sort == "id":
            flagged.sort(key=lambda item: item.id)
        else:
            flagged.sort(key=lambda item: (-item.augmented.score, item.id))
        return flagged

    def get_item(self, meme_id: str) -> ReviewItem:
        item = self.items.get(meme_id)
        if item is None:
            raise UnknownItemError(f"unknown meme id {meme_id!r}")
        return item

    def submit_label(self, meme_id: str, label: int, annotator: str | None = None) -> ReviewItem:
        """Store a human decision durably; identical re-submission is a no-op."""
        with self._lock:
            item = self.get_item(meme_id)
            if item.status == "labeled":
                if item.human_label == label:
                    return item
                raise LabelConflictError(
                    f"meme {meme_id!r} already labeled {item.human_label}"
                )
            stamped = datetime.now(timezone.utc).isoformat()
            self._append_log(
                {"id": meme_id, "label": label, "annotator": annotator, "labeled_at": stamped}
            )
            item.status = "labeled"
            item.human_label = label
            item.labeled_at = stamped
            item.annotator = annotator
            return item

    def agreement_stats(self) -> AgreementStats:
        """Human-vs-model agreement over labeled items at the queue threshold."""
        labeled = [item for item in self.items.values() if item.status == "labeled"]
        confusion = {
            "model_0_human_0": 0,
            "model_0_human_1": 0,
            "model_1_human_0": 0,
            "model_1_human_1": 0,
        }
        for item in labeled:
            model_label = int(item.augmented.score >= self.threshold)
            confusion[f"model_{model_label}_human_{item.human_label}"] += 1
        n = len(labeled)
        agree = confusion["model_0_human_0"] + confusion["model_1_human_1"]
        human_pos = confusion["model_0_human_1"] + confusion["model_1_human_1"]
        model_pos = confusion["model_1_human_0"] + confusion["model_1_human_1"]
        return AgreementStats(
            n_reviewed=n,
            agreement_rate=agree / n if n else 0.0,
            human_positive_rate=human_pos / n if n else 0.0,
            model_positive_rate=model_pos / n if n else 0.0,
            confusion=confusion,
        )


class LabelSubmission(BaseModel):
    label: int = Field(ge=0, le=1)
    annotator: str | None = None


def create_app(state: ReviewState, image_root: str | os.PathLike) -> FastAPI:
    app = FastAPI(title="memetriage review service")
    image_root = Path(image_root)

    @app.get("/api/health")
    def health():
        return {"status": "ok", "version": __version__, "memes": len(state.items)}

    @app.get("/api/queue")
    def queue(threshold: float | None = None, sort: str = "score"):
        return [item.to_dict() for item in state.build_queue(threshold=threshold, sort=sort)]

    @app.get("/api/memes/{meme_id}")
    def meme_detail(meme_id: str):
        try:
            return state.get_item(meme_id).to_dict()
        except UnknownItemError as exc:
            raise HTTPException(status_code=404, detail=str(exc))

    @app.get("/api/memes/{meme_id}/image")
    def meme_image(meme_id: str):
        try:
            item = state.get_item(meme_id)
        except UnknownItemError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        path = image_root / item.img
        if not path.is_file():
            raise HTTPException(status_code=404, detail=f"image {item.img!r} not found")
        return FileResponse(path)

    @app.post("/api/memes/{meme_id}/label")
    def submit(meme_id: str, body: LabelSubmission):
        try:
            item = state.submit_label(meme_id, body.label, body.annotator)
        except UnknownItemError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except LabelConflictError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return item.to_dict()

    @app.get("/api/stats/agreement")
    def agreement():
        return state.agreement_stats().to_dict()

    return app
