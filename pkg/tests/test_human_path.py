"""End-to-end human-annotation path: the training loop blocks on the
annotation service while a scripted annotator resolves the batch over
HTTP, including one rejected submission that gets corrected."""

import threading

import pytest
from fastapi.testclient import TestClient

from weakparse import dataset as ds, loop, mrlang, service, supervision
from weakparse.service import QueueState, build_app


@pytest.fixture(scope="module")
def corpus():
    return ds.generate_corpus(ds.GenConfig(seed=7, n_train=120, n_dev=30, n_test=30))


def test_scripted_human_session_resolves_batch(corpus, tmp_path_factory):
    tmp_path = tmp_path_factory.mktemp("human")
    train_ds = corpus[0]
    state = QueueState(log_path=tmp_path / "events.jsonl")
    app = build_app(state, train_ds=train_ds)
    loop_client = TestClient(app)
    annotator_client = TestClient(app)

    cfg = loop.ExperimentConfig(
        corpus_dir="mem",
        seed=1,
        budget=10,
        iterations=1,
        heuristic="correctness",
        annotator="http",
        max_epochs_initial=4,
        max_epochs_iteration=3,
        annotator_timeout_s=120.0,
    )
    channel = loop.HttpChannel("http://testserver", client=loop_client,
                               poll_interval=0.05, timeout_s=120.0)
    sink = service.ServiceStatusSink(state)

    result: dict = {}

    def run_loop():
        result["report"] = loop.run_experiment(
            cfg, datasets=corpus, channel=channel, status=sink
        )

    thread = threading.Thread(target=run_loop)
    thread.start()

    # wait until the loop posts its batch and blocks
    import time

    deadline = time.monotonic() + 120
    while time.monotonic() < deadline:
        pending = annotator_client.get("/api/queries/pending").json()["queries"]
        if len(pending) == 10:
            break
        time.sleep(0.05)
    else:
        pytest.fail("loop never posted its batch")

    status = annotator_client.get("/api/experiment/status").json()
    assert status["state"] == "awaiting_annotations"
    assert status["pending_count"] == 10

    by_example = {ex.id: ex for ex in train_ds.examples}
    wrong_done = False
    for query in pending:
        example = by_example[query["example_id"]]
        good_payload = mrlang.print_program(example.gold_mr)
        if not wrong_done:
            # submit a wrong-answer program first: server must refuse with 422
            bad = annotator_client.post(
                f"/api/queries/{query['query_id']}/annotation",
                json={
                    "example_id": example.id,
                    "kind": "full_mr",
                    "payload": "(count all_rows)"
                    if good_payload != "(count all_rows)"
                    else "(maximum all_rows `Year')",
                },
            )
            assert bad.status_code == 422
            assert bad.json()["detail"]
            still_pending = annotator_client.get("/api/queries/pending").json()["queries"]
            assert any(q["query_id"] == query["query_id"] for q in still_pending)
            wrong_done = True
        good = annotator_client.post(
            f"/api/queries/{query['query_id']}/annotation",
            json={"example_id": example.id, "kind": "full_mr", "payload": good_payload},
        )
        assert good.status_code == 200
    assert wrong_done

    thread.join(timeout=300)
    assert not thread.is_alive()
    report = result["report"]
    assert report.queries_total == 10
    assert annotator_client.get("/api/queries/pending").json()["queries"] == []
    final_status = annotator_client.get("/api/experiment/status").json()
    assert final_status["state"] == "done"
    assert final_status["accuracies"] is not None

    # crash recovery over the same event log preserves the resolved state
    restored = QueueState.restore(tmp_path / "events.jsonl")
    assert len(restored.resolutions) == 10
    assert restored.pending_ids_locked() == []


def test_loop_times_out_without_annotators(corpus):
    state = QueueState()
    app = build_app(state, train_ds=corpus[0])
    client = TestClient(app)
    cfg = loop.ExperimentConfig(
        corpus_dir="mem", seed=2, budget=3, iterations=1,
        heuristic="correctness", annotator="http",
        max_epochs_initial=2, max_epochs_iteration=2,
    )
    channel = loop.HttpChannel("http://testserver", client=client,
                               poll_interval=0.05, timeout_s=0.5)
    with pytest.raises(loop.AnnotatorTimeout):
        loop.run_experiment(cfg, datasets=corpus, channel=channel)
