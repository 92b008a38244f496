from concurrent.futures import ThreadPoolExecutor

import pytest
from fastapi.testclient import TestClient

from memetriage.service import (
    LabelConflictError,
    ReviewState,
    UnknownItemError,
    create_app,
)


@pytest.fixture()
def state(synth_corpus, trained_gbdt, lexicons, tmp_path):
    model, vocab = trained_gbdt
    return ReviewState(
        synth_corpus, model, vocab, lexicons, threshold=0.5, label_log=tmp_path / "labels.jsonl"
    )


@pytest.fixture()
def client(state, synth_dir):
    return TestClient(create_app(state, image_root=synth_dir))


class TestQueue:
    def test_threshold_zero_enqueues_every_annotated_meme(self, state, synth_corpus):
        queue = state.build_queue(threshold=0.0)
        assert len(queue) == len(synth_corpus.annotated_records())

    def test_threshold_one_gives_empty_queue(self, state):
        assert state.build_queue(threshold=1.0) == []

    def test_default_sort_is_descending_score(self, state):
        queue = state.build_queue(threshold=0.0)
        scores = [item.augmented.score for item in queue]
        assert scores == sorted(scores, reverse=True)

    def test_id_sort(self, state):
        queue = state.build_queue(threshold=0.0, sort="id")
        ids = [item.id for item in queue]
        assert ids == sorted(ids)

    def test_top_scorers_head_the_queue(self, state):
        queue = state.build_queue(threshold=0.0)
        high = [item for item in queue if item.augmented.score > 0.9]
        assert len(high) >= 3
        assert queue[: len(high)] == high

    def test_queue_is_deterministic_across_rebuilds(
        self, synth_corpus, trained_gbdt, lexicons, tmp_path
    ):
        model, vocab = trained_gbdt
        a = ReviewState(synth_corpus, model, vocab, lexicons, threshold=0.5)
        b = ReviewState(synth_corpus, model, vocab, lexicons, threshold=0.5)
        assert [i.id for i in a.build_queue()] == [i.id for i in b.build_queue()]
        assert [i.augmented.score for i in a.build_queue()] == [
            i.augmented.score for i in b.build_queue()
        ]


class TestLabeling:
    def test_submit_label_marks_item(self, state):
        meme_id = state.build_queue(threshold=0.0)[0].id
        item = state.submit_label(meme_id, 1, annotator="mod1")
        assert item.status == "labeled"
        assert item.human_label == 1
        assert item.annotator == "mod1"
        assert item.labeled_at is not None

    def test_resubmission_same_label_is_idempotent(self, state):
        meme_id = state.build_queue(threshold=0.0)[0].id
        state.submit_label(meme_id, 1)
        item = state.submit_label(meme_id, 1)
        assert item.human_label == 1

    def test_conflicting_label_rejected_and_unchanged(self, state):
        meme_id = state.build_queue(threshold=0.0)[0].id
        state.submit_label(meme_id, 1)
        with pytest.raises(LabelConflictError):
            state.submit_label(meme_id, 0)
        assert state.get_item(meme_id).human_label == 1

    def test_unknown_id_rejected(self, state):
        with pytest.raises(UnknownItemError):
            state.submit_label("does-not-exist", 1)

    def test_labels_survive_restart(self, synth_corpus, trained_gbdt, lexicons, tmp_path):
        model, vocab = trained_gbdt
        log = tmp_path / "labels.jsonl"
        first = ReviewState(synth_corpus, model, vocab, lexicons, label_log=log)
        ids = [item.id for item in first.build_queue(threshold=0.0)[:3]]
        first.submit_label(ids[0], 1, annotator="a")
        first.submit_label(ids[1], 0, annotator="b")
        reborn = ReviewState(synth_corpus, model, vocab, lexicons, label_log=log)
        assert reborn.get_item(ids[0]).human_label == 1
        assert reborn.get_item(ids[1]).human_label == 0
        assert reborn.get_item(ids[1]).annotator == "b"
        assert reborn.get_item(ids[2]).status == "pending"

    def test_concurrent_distinct_submissions_never_lose_writes(self, state):
        ids = [item.id for item in state.build_queue(threshold=0.0)[:12]]
        with ThreadPoolExecutor(max_workers=8) as pool:
            list(pool.map(lambda mid: state.submit_label(mid, 1), ids))
        assert all(state.get_item(mid).human_label == 1 for mid in ids)

    def test_concurrent_conflicts_store_exactly_one_label(self, state):
        meme_id = state.build_queue(threshold=0.0)[0].id
        outcomes = []

        def submit(label):
            try:
                state.submit_label(meme_id, label)
                return ("ok", label)
            except LabelConflictError:
                return ("conflict", label)

        with ThreadPoolExecutor(max_workers=2) as pool:
            outcomes = list(pool.map(submit, [0, 1]))
        statuses = sorted(s for s, _ in outcomes)
        assert statuses == ["conflict", "ok"]
        stored = state.get_item(meme_id).human_label
        winner = next(label for status, label in outcomes if status == "ok")
        assert stored == winner


class TestAgreement:
    def test_zero_reviewed(self, state):
        stats = state.agreement_stats()
        assert stats.n_reviewed == 0
        assert stats.agreement_rate == 0.0
        assert sum(stats.confusion.values()) == 0

    def test_three_of_four_matching(self, state):
        queue = state.build_queue(threshold=0.0)
        items = queue[:4]
        for item in items[:3]:
            state.submit_label(item.id, int(item.augmented.score >= 0.5))
        last = items[3]
        state.submit_label(last.id, 1 - int(last.augmented.score >= 0.5))
        stats = state.agreement_stats()
        assert stats.n_reviewed == 4
        assert stats.agreement_rate == pytest.approx(0.75)
        assert sum(stats.confusion.values()) == 4

    def test_confusion_counts_partition_reviewed(self, state):
        queue = state.build_queue(threshold=0.0)
        for i, item in enumerate(queue[:9]):
            state.submit_label(item.id, i % 2)
        stats = state.agreement_stats()
        assert stats.n_reviewed == 9
        assert sum(stats.confusion.values()) == 9
        assert 0.0 <= stats.human_positive_rate <= 1.0
        assert 0.0 <= stats.model_positive_rate <= 1.0


class TestHttpApi:
    def test_health(self, client, synth_corpus):
        body = client.get("/api/health").json()
        assert body["status"] == "ok"
        assert body["memes"] == len(synth_corpus.annotated_records())

    def test_queue_endpoint_matches_state(self, client, state):
        body = client.get("/api/queue", params={"threshold": 0.0}).json()
        assert [item["id"] for item in body] == [i.id for i in state.build_queue(threshold=0.0)]
        assert "score" in body[0]["augmented"]

    def test_meme_detail_and_404(self, client, state):
        meme_id = state.build_queue(threshold=0.0)[0].id
        assert client.get(f"/api/memes/{meme_id}").status_code == 200
        assert client.get("/api/memes/zzz").status_code == 404

    def test_image_passthrough(self, client, state, synth_dir):
        item = state.build_queue(threshold=0.0)[0]
        response = client.get(f"/api/memes/{item.id}/image")
        assert response.status_code == 200
        assert response.content == (synth_dir / item.img).read_bytes()

    def test_image_missing_file_404(self, client, state):
        item = state.build_queue(threshold=0.0)[0]
        item.img = "img/not-there.png"
        assert client.get(f"/api/memes/{item.id}/image").status_code == 404

    def test_label_endpoint_contract(self, client, state):
        meme_id = state.build_queue(threshold=0.0)[0].id
        ok = client.post(f"/api/memes/{meme_id}/label", json={"label": 1, "annotator": "m"})
        assert ok.status_code == 200
        assert ok.json()["status"] == "labeled"
        again = client.post(f"/api/memes/{meme_id}/label", json={"label": 1})
        assert again.status_code == 200
        conflict = client.post(f"/api/memes/{meme_id}/label", json={"label": 0})
        assert conflict.status_code == 409
        missing = client.post("/api/memes/zzz/label", json={"label": 1})
        assert missing.status_code == 404
        invalid = client.post(f"/api/memes/{meme_id}/label", json={"label": 7})
        assert invalid.status_code == 422

    def test_agreement_endpoint_scripted_session(self, client, state):
        queue = client.get("/api/queue", params={"threshold": 0.0}).json()
        for entry in queue[:5]:
            model_label = int(entry["augmented"]["score"] >= 0.5)
            client.post(f"/api/memes/{entry['id']}/label", json={"label": model_label})
        stats = client.get("/api/stats/agreement").json()
        assert stats["n_reviewed"] == 5
        assert stats["agreement_rate"] == 1.0
