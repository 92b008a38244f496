import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from memetriage.corpus import EMBEDDING_DIM, AnnotationBundle, Corpus, MemeRecord, assign_splits, load_corpus
from memetriage.gbdt import GbdtParams
from memetriage.lexicons import LexiconSet, bundled_lexicons
from memetriage.pipeline import train_gbdt_on_corpus
from memetriage.synthetic import generate_corpus


def make_bundle(meme_id: str, **overrides) -> AnnotationBundle:
    fields = dict(
        id=meme_id,
        caption="",
        objects=[],
        web_entities=[],
        named_entities=[],
        nli=(0.0, 1.0, 0.0),
        embedding_seq=np.zeros((1, EMBEDDING_DIM)),
    )
    fields.update(overrides)
    return AnnotationBundle(**fields)


def make_record(meme_id: str, text: str = "", label=None, split="unassigned") -> MemeRecord:
    return MemeRecord(id=meme_id, text=text, img=f"img/{meme_id}.png", label=label, split=split)


def make_labeled_corpus(n: int, hateful_fraction: float = 0.37, with_bundles: bool = True) -> Corpus:
    """Deterministic in-memory corpus: first round(frac*n) records hateful."""
    n_pos = round(hateful_fraction * n)
    records = []
    annotations = {}
    for i in range(n):
        meme_id = f"{i:05d}"
        label = 1 if i < n_pos else 0
        records.append(make_record(meme_id, text=f"meme number {i}", label=label))
        if with_bundles:
            annotations[meme_id] = make_bundle(meme_id)
    return Corpus(records=records, annotations=annotations)


@pytest.fixture(scope="session")
def lexicons():
    return bundled_lexicons()


@pytest.fixture(scope="session")
def tiny_lexicons():
    """Hand-sized lexicon with values small enough to verify on paper."""
    return LexiconSet(
        profanity=frozenset({"damn"}),
        slurs=frozenset({"vermin"}),
        hate_words=frozenset({"dishwasher"}),
        sentiment={"great": (0.8, 0.75), "awful": (-1.0, 1.0), "good": (0.7, 0.6)},
        emotion={
            "rage": (0.0, 0.0, 0.0, 0.0, 1.0),
            "terror": (0.0, 0.0, 1.0, 0.0, 0.0),
            "happy": (1.0, 0.0, 0.0, 0.0, 0.0),
        },
    )


@pytest.fixture(scope="session")
def synth_dir(tmp_path_factory):
    """A small generated dataset shared by CLI/service/augment tests."""
    out = tmp_path_factory.mktemp("synth")
    generate_corpus(out, n=120, seed=11)
    return out


@pytest.fixture(scope="session")
def synth_corpus(synth_dir):
    corpus = load_corpus(synth_dir / "memes.jsonl", synth_dir / "annotations.jsonl")
    return assign_splits(corpus, 11)


@pytest.fixture(scope="session")
def trained_gbdt(synth_corpus, lexicons):
    """(model, vocab) fit on the shared synthetic corpus's train split."""
    params = GbdtParams(n_estimators=40, max_depth=8)
    return train_gbdt_on_corpus(synth_corpus, lexicons, params)
