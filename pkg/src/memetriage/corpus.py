"""Meme corpus loading, validation, split assignment, and CV folds.

On disk a corpus is two line-delimited JSON files. The memes file carries one
object per line with keys ``id``, ``img``, ``text`` and an optional binary
``label`` (1 = hateful), matching the public Hateful Memes JSONL layout so the
licensed dataset drops in unchanged; an optional ``split`` key is written back
by the split command and tolerated on load. The annotations sidecar carries
the precomputed perception outputs per meme: caption, detected objects, web
entities, named entities, an NLI probability triple and a sequence of
768-dimensional encoder vectors.

Records without an annotation bundle still load (the review UI can show
them) but are rejected by the feature builders downstream.
"""

from __future__ import annotations

import json
import math
import random
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import DataValidationError, InsufficientDataError, ParseError

EMBEDDING_DIM = 768
NLI_ORDER = ("contradiction", "neutral", "entailment")
SPLITS = ("train", "validation", "test", "unassigned")

_ENTITY_CATEGORY_RE = re.compile(r"^[A-Z0-9]+$")


@dataclass(frozen=True)
class MemeRecord:
    """One meme: overlay text plus an opaque image path. Never opens the image."""

    id: str
    text: str
    img: str
    label: int | None = None
    split: str = "unassigned"

    def __post_init__(self):
        if not self.id:
            raise DataValidationError("meme id must be non-empty")
        if self.label is not None and self.label not in (0, 1):
            raise DataValidationError(f"meme {self.id!r}: label must be 0 or 1, got {self.label!r}")
        if self.split not in SPLITS:
            raise DataValidationError(f"meme {self.id!r}: unknown split {self.split!r}")


@dataclass(eq=False)
class AnnotationBundle:
    """Precomputed perception outputs for one meme.

    ``nli`` is ordered (contradiction, neutral, entailment) and must lie on
    the probability simplex within 1e-6. ``embedding_seq`` is a (T, 768)
    float array with T >= 1.
    """

    id: str
    caption: str
    objects: list[str]
    web_entities: list[str]
    named_entities: list[tuple[str, str]]
    nli: tuple[float, float, float]
    embedding_seq: np.ndarray

    def __post_init__(self):
        if not self.id:
            raise DataValidationError("annotation id must be non-empty")
        if len(self.nli) != 3:
            raise DataValidationError(f"annotation {self.id!r}: nli must have 3 components")
        for p in self.nli:
            if not (0.0 <= p <= 1.0):
                raise DataValidationError(
                    f"annotation {self.id!r}: nli component {p!r} outside [0, 1]"
                )
        if abs(sum(self.nli) - 1.0) > 1e-6:
            raise DataValidationError(
                f"annotation {self.id!r}: nli probabilities sum to {sum(self.nli)!r}, expected 1"
            )
        for surface, category in self.named_entities:
            if not _ENTITY_CATEGORY_RE.match(category):
                raise DataValidationError(
                    f"annotation {self.id!r}: entity category {category!r} must be uppercase alphanumeric"
                )
        seq = np.asarray(self.embedding_seq, dtype=np.float64)
        if seq.ndim != 2 or seq.shape[0] < 1 or seq.shape[1] != EMBEDDING_DIM:
            raise DataValidationError(
                f"annotation {self.id!r}: embedding_seq must be (T>=1, {EMBEDDING_DIM}), "
                f"got shape {seq.shape}"
            )
        if not np.all(np.isfinite(seq)):
            raise DataValidationError(f"annotation {self.id!r}: embedding_seq has non-finite values")
        self.embedding_seq = seq


@dataclass
class Corpus:
    """Immutable-after-load collection of records plus their annotation sidecar."""

    records: list[MemeRecord]
    annotations: dict[str, AnnotationBundle]
    split_seed: int | None = None

    def __post_init__(self):
        seen = set()
        for rec in self.records:
            if rec.id in seen:
                raise DataValidationError(f"duplicate meme id {rec.id!r}")
            seen.add(rec.id)

    def record_by_id(self, meme_id: str) -> MemeRecord | None:
        for rec in self.records:
            if rec.id == meme_id:
                return rec
        return None

    def bundle_for(self, meme_id: str) -> AnnotationBundle | None:
        return self.annotations.get(meme_id)

    def labeled_records(self) -> list[MemeRecord]:
        return [r for r in self.records if r.label is not None]

    def annotated_records(self) -> list[MemeRecord]:
        """Records usable as model input: an annotation bundle exists."""
        return [r for r in self.records if r.id in self.annotations]

    def records_in_split(self, split: str) -> list[MemeRecord]:
        if split not in SPLITS:
            raise DataValidationError(f"unknown split {split!r}")
        return [r for r in self.records if r.split == split]


def _parse_line(path, lineno: int, line: str) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{lineno}: invalid JSON: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise ParseError(f"{path}:{lineno}: expected an object, got {type(obj).__name__}")
    return obj


def _require(obj: dict, key: str, path, lineno: int):
    if key not in obj:
        raise ParseError(f"{path}:{lineno}: missing required key {key!r}")
    return obj[key]


def load_memes(path) -> list[MemeRecord]:
    path = Path(path)
    records = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            obj = _parse_line(path, lineno, line)
            meme_id = str(_require(obj, "id", path, lineno))
            if meme_id in seen:
                raise DataValidationError(f"{path}:{lineno}: duplicate meme id {meme_id!r}")
            seen.add(meme_id)
            label = obj.get("label")
            if label is not None:
                if label not in (0, 1):
                    raise DataValidationError(
                        f"{path}:{lineno}: label must be 0 or 1, got {label!r}"
                    )
                label = int(label)
            try:
                records.append(
                    MemeRecord(
                        id=meme_id,
                        text=str(_require(obj, "text", path, lineno)),
                        img=str(_require(obj, "img", path, lineno)),
                        label=label,
                        split=obj.get("split", "unassigned"),
                    )
                )
            except DataValidationError as exc:
                raise DataValidationError(f"{path}:{lineno}: {exc}") from exc
    return records


def load_annotations(path) -> dict[str, AnnotationBundle]:
    path = Path(path)
    bundles: dict[str, AnnotationBundle] = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            obj = _parse_line(path, lineno, line)
            meme_id = str(_require(obj, "id", path, lineno))
            if meme_id in bundles:
                raise DataValidationError(f"{path}:{lineno}: duplicate annotation id {meme_id!r}")
            nli_obj = _require(obj, "nli", path, lineno)
            if not isinstance(nli_obj, dict) or set(NLI_ORDER) - set(nli_obj):
                raise ParseError(
                    f"{path}:{lineno}: nli must be an object with keys {NLI_ORDER}"
                )
            entities = []
            for ent in obj.get("named_entities", []):
                if not isinstance(ent, dict) or "text" not in ent or "label" not in ent:
                    raise ParseError(
                        f"{path}:{lineno}: named_entities entries need 'text' and 'label'"
                    )
                entities.append((str(ent["text"]), str(ent["label"])))
            try:
                bundles[meme_id] = AnnotationBundle(
                    id=meme_id,
                    caption=str(obj.get("caption", "")),
                    objects=[str(o) for o in obj.get("objects", [])],
                    web_entities=[str(w) for w in obj.get("web_entities", [])],
                    named_entities=entities,
                    nli=tuple(float(nli_obj[k]) for k in NLI_ORDER),
                    embedding_seq=np.asarray(_require(obj, "embedding_seq", path, lineno), dtype=np.float64),
                )
            except DataValidationError as exc:
                raise DataValidationError(f"{path}:{lineno}: {exc}") from exc
    return bundles


def load_corpus(memes_path, annotations_path) -> Corpus:
    """Load and validate both files. Records lacking annotations are kept."""
    records = load_memes(memes_path)
    annotations = load_annotations(annotations_path)
    return Corpus(records=records, annotations=annotations)


def save_memes(corpus: Corpus, memes_path) -> None:
    with Path(memes_path).open("w", encoding="utf-8") as fh:
        for rec in corpus.records:
            obj: dict = {"id": rec.id, "img": rec.img, "text": rec.text}
            if rec.label is not None:
                obj["label"] = rec.label
            if rec.split != "unassigned":
                obj["split"] = rec.split
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def save_annotations(corpus: Corpus, annotations_path) -> None:
    with Path(annotations_path).open("w", encoding="utf-8") as fh:
        for rec in corpus.records:
            bundle = corpus.annotations.get(rec.id)
            if bundle is None:
                continue
            obj = {
                "id": bundle.id,
                "caption": bundle.caption,
                "objects": bundle.objects,
                "web_entities": bundle.web_entities,
                "named_entities": [{"text": s, "label": c} for s, c in bundle.named_entities],
                "nli": dict(zip(NLI_ORDER, bundle.nli)),
                "embedding_seq": bundle.embedding_seq.tolist(),
            }
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def save_corpus(corpus: Corpus, memes_path, annotations_path) -> None:
    """Write both files back out; a load of the result is structurally equal."""
    save_memes(corpus, memes_path)
    save_annotations(corpus, annotations_path)


def _largest_remainder_allocation(class_sizes: dict[int, int], total: int) -> dict[int, int]:
    """Split `total` across classes proportionally, exact by largest remainder."""
    n = sum(class_sizes.values())
    quotas = {c: total * size / n for c, size in class_sizes.items()}
    alloc = {c: math.floor(q) for c, q in quotas.items()}
    leftover = total - sum(alloc.values())
    by_remainder = sorted(class_sizes, key=lambda c: (-(quotas[c] - alloc[c]), c))
    for c in by_remainder[:leftover]:
        alloc[c] += 1
    # never allocate more than a class holds
    for c in list(alloc):
        alloc[c] = min(alloc[c], class_sizes[c])
    return alloc


def assign_splits(
    corpus: Corpus,
    seed: int,
    test_fraction: float = 0.1,
    validation_fraction: float = 0.1,
) -> Corpus:
    """Assign labeled records to train/validation/test, stratified by label.

    10% (by default) of labeled records go to test and the remaining pool is
    further split into train and validation. Pure function of the labeled
    (id, label) set and the seed: record order in the corpus is irrelevant.
    Unlabeled records stay unassigned.
    """
    labeled = corpus.labeled_records()
    if len(labeled) < 10:
        raise InsufficientDataError(
            f"split assignment needs >= 10 labeled records, got {len(labeled)}"
        )
    by_class: dict[int, list[str]] = {}
    for rec in labeled:
        by_class.setdefault(rec.label, []).append(rec.id)
    for ids in by_class.values():
        ids.sort()
    rng = random.Random(seed)
    for cls in sorted(by_class):
        rng.shuffle(by_class[cls])

    n_labeled = len(labeled)
    class_sizes = {c: len(ids) for c, ids in by_class.items()}
    test_alloc = _largest_remainder_allocation(class_sizes, round(test_fraction * n_labeled))

    assignment: dict[str, str] = {}
    pool_sizes: dict[int, int] = {}
    for cls in sorted(by_class):
        ids = by_class[cls]
        n_test = test_alloc[cls]
        for meme_id in ids[:n_test]:
            assignment[meme_id] = "test"
        pool_sizes[cls] = len(ids) - n_test
    n_pool = sum(pool_sizes.values())
    val_alloc = _largest_remainder_allocation(pool_sizes, round(validation_fraction * n_pool))
    for cls in sorted(by_class):
        ids = by_class[cls]
        n_test = test_alloc[cls]
        n_val = val_alloc[cls]
        for meme_id in ids[n_test : n_test + n_val]:
            assignment[meme_id] = "validation"
        for meme_id in ids[n_test + n_val :]:
            assignment[meme_id] = "train"

    new_records = [
        replace(rec, split=assignment.get(rec.id, "unassigned")) for rec in corpus.records
    ]
    return Corpus(records=new_records, annotations=corpus.annotations, split_seed=seed)


def make_folds(corpus: Corpus, k: int, seed: int) -> list[tuple[list[str], list[str]]]:
    """Partition non-test labeled record ids into k stratified CV folds.

    Returns (train_ids, holdout_ids) per fold; holdouts are pairwise disjoint
    and their union is the participating set. Deterministic in the seed.
    """
    if k < 2:
        raise DataValidationError(f"k must be >= 2, got {k}")
    participating = [r for r in corpus.labeled_records() if r.split != "test"]
    if k > len(participating):
        raise InsufficientDataError(
            f"k={k} exceeds the {len(participating)} participating records"
        )
    by_class: dict[int, list[str]] = {}
    for rec in participating:
        by_class.setdefault(rec.label, []).append(rec.id)
    rng = random.Random(seed)
    holdouts: list[list[str]] = [[] for _ in range(k)]
    for cls in sorted(by_class):
        ids = sorted(by_class[cls])
        rng.shuffle(ids)
        for i, meme_id in enumerate(ids):
            holdouts[i % k].append(meme_id)
    all_ids = {r.id for r in participating}
    folds = []
    for holdout in holdouts:
        holdout_sorted = sorted(holdout)
        train_sorted = sorted(all_ids.difference(holdout))
        folds.append((train_sorted, holdout_sorted))
    return folds
