"""Synthetic corpus generator with planted, recoverable signals.

Produces a dataset directory (memes.jsonl, annotations.jsonl, planted.jsonl,
img/) whose hateful class is separable three ways: dogwhistle terms from the
bundled lexicons in the meme text, fictional named entities that become
ent_* tokens in the joint channel, and a class-dependent mean shift in the
embedding sequences. planted.jsonl records, per meme, the feature names a
correct attribution should surface, for use by verification harnesses.

All content is fictional; entity names are deliberately not real groups.
"""

from __future__ import annotations

import json
import random
import struct
import zlib
from pathlib import Path

import numpy as np

from .corpus import EMBEDDING_DIM
from .lexicons import bundled_lexicons
from .vectorizer import entity_token

_FILLER = (
    "when you me that this they out look just like one day every time "
    "nobody who says about them here there what makes people think then "
    "still really never always literally actually meanwhile friend school "
    "work monday morning coffee cat dog face moment feeling again because "
    "why how much wow top ten best new old big little"
).split()

_HAPPY_WORDS = ("happy", "smile", "laugh", "party", "celebrate", "sunshine", "joy")
_POSITIVE_WORDS = ("great", "good", "nice", "wonderful", "awesome", "cute", "sweet")
_ANGRY_WORDS = ("rage", "furious", "hate", "destroy", "attack", "revenge")
_FEAR_WORDS = ("fear", "scared", "terror", "threat", "danger", "panic")
_NEGATIVE_WORDS = ("terrible", "awful", "disgusting", "vile", "nasty", "worthless")

_HATE_ENTITIES = (("morlocks", "NORP"), ("drakonians", "NORP"), ("grimble", "PERSON"))
_BENIGN_ENTITIES = (("paris", "GPE"), ("nasa", "ORG"), ("everest", "LOC"))

_CAPTIONS = (
    "a group of people standing on a beach",
    "a cat sitting on a wooden table",
    "a man holding a sign in the street",
    "two dogs running through a field",
    "a crowd at an outdoor concert",
    "a person looking at a phone screen",
    "an old photo of a city square",
    "a child eating ice cream in a park",
)

_OBJECTS = ("person", "dog", "cat", "sign", "table", "phone", "tree", "car", "hat")
_WEB_ENTITIES = ("meme", "humor", "internet culture", "photo caption", "viral image")


def _tiny_png(rgb: tuple[int, int, int]) -> bytes:
    def chunk(tag: bytes, data: bytes) -> bytes:
        return (
            struct.pack(">I", len(data))
            + tag
            + data
            + struct.pack(">I", zlib.crc32(tag + data) & 0xFFFFFFFF)
        )

    ihdr = struct.pack(">IIBBBBB", 1, 1, 8, 2, 0, 0, 0)
    raw = b"\x00" + bytes(rgb)
    return (
        b"\x89PNG\r\n\x1a\n"
        + chunk(b"IHDR", ihdr)
        + chunk(b"IDAT", zlib.compress(raw))
        + chunk(b"IEND", b"")
    )


def _simplex_triple(rng: random.Random, heavy: int) -> dict[str, float]:
    """Random NLI triple with most mass on the `heavy` component."""
    weights = [rng.uniform(0.02, 0.25) for _ in range(3)]
    weights[heavy] = rng.uniform(0.55, 0.9)
    total = sum(weights)
    probs = [w / total for w in weights]
    return {"contradiction": probs[0], "neutral": probs[1], "entailment": probs[2]}


def generate_corpus(
    out_dir,
    n: int = 400,
    seed: int = 0,
    hateful_fraction: float = 0.37,
    embedding_shift: float = 0.25,
) -> dict:
    """Write a synthetic dataset under out_dir; returns a small summary."""
    out_dir = Path(out_dir)
    (out_dir / "img").mkdir(parents=True, exist_ok=True)
    rng = random.Random(seed)
    np_rng = np.random.default_rng(seed)
    lexicons = bundled_lexicons()
    hate_terms = sorted(lexicons.hate_words)
    slur_terms = sorted(lexicons.slurs)

    n_hateful = round(hateful_fraction * n)
    labels = [1] * n_hateful + [0] * (n - n_hateful)
    rng.shuffle(labels)

    memes_lines = []
    ann_lines = []
    planted_lines = []
    for i, label in enumerate(labels):
        meme_id = f"{i:05d}"
        words = rng.choices(_FILLER, k=rng.randint(4, 9))
        planted: list[str] = []
        entities: list[tuple[str, str]] = []
        if label == 1:
            if rng.random() < 0.92:
                picks = rng.choices(hate_terms, k=rng.randint(1, 3))
                words += picks
                planted.append("hate_word_count")
                planted += sorted(set(picks))
            if rng.random() < 0.35:
                words.append(rng.choice(slur_terms))
            if rng.random() < 0.35:
                words.append(rng.choice(_ANGRY_WORDS + _FEAR_WORDS))
            if rng.random() < 0.3:
                words.append(rng.choice(_NEGATIVE_WORDS))
            if rng.random() < 0.7:
                for ent in rng.sample(_HATE_ENTITIES, k=rng.randint(1, 2)):
                    entities.append(ent)
                    planted.append(entity_token(*ent))
            # NLI leans toward contradiction but is noisy: the lexical
            # signals, not this channel, must carry the classification
            heavy = 0 if rng.random() < 0.7 else rng.choice((1, 2))
            nli = _simplex_triple(rng, heavy=heavy)
        else:
            if rng.random() < 0.03:
                words.append(rng.choice(hate_terms))
            if rng.random() < 0.6:
                words.append(rng.choice(_HAPPY_WORDS))
            if rng.random() < 0.5:
                words.append(rng.choice(_POSITIVE_WORDS))
            if rng.random() < 0.5:
                entities.append(rng.choice(_BENIGN_ENTITIES))
            heavy = rng.choice((1, 2)) if rng.random() < 0.7 else 0
            nli = _simplex_triple(rng, heavy=heavy)
        rng.shuffle(words)
        text = " ".join(words)

        img_rel = f"img/{meme_id}.png"
        color = (190, 80, 80) if label == 1 else (80, 160, 110)
        (out_dir / img_rel).write_bytes(_tiny_png(color))
        memes_lines.append(
            json.dumps(
                {"id": meme_id, "img": img_rel, "text": text, "label": label},
                ensure_ascii=False,
            )
        )

        t_len = rng.randint(2, 6)
        shift = embedding_shift if label == 1 else -embedding_shift
        seq = np_rng.normal(shift, 1.0, size=(t_len, EMBEDDING_DIM))
        ann_lines.append(
            json.dumps(
                {
                    "id": meme_id,
                    "caption": rng.choice(_CAPTIONS),
                    "objects": rng.sample(_OBJECTS, k=rng.randint(1, 3)),
                    "web_entities": rng.sample(_WEB_ENTITIES, k=rng.randint(1, 2)),
                    "named_entities": [{"text": s, "label": c} for s, c in entities],
                    "nli": nli,
                    "embedding_seq": np.round(seq, 4).tolist(),
                },
                ensure_ascii=False,
            )
        )
        planted_lines.append(
            json.dumps({"id": meme_id, "label": label, "planted": planted}, ensure_ascii=False)
        )

    (out_dir / "memes.jsonl").write_text("\n".join(memes_lines) + "\n", encoding="utf-8")
    (out_dir / "annotations.jsonl").write_text("\n".join(ann_lines) + "\n", encoding="utf-8")
    (out_dir / "planted.jsonl").write_text("\n".join(planted_lines) + "\n", encoding="utf-8")
    return {
        "n": n,
        "n_hateful": n_hateful,
        "memes": str(out_dir / "memes.jsonl"),
        "annotations": str(out_dir / "annotations.jsonl"),
        "planted": str(out_dir / "planted.jsonl"),
    }
