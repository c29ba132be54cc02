import json

import pytest

from weakparse import dataset as ds, loop, model as pm, supervision
from weakparse.loop import (
    ExperimentConfig,
    OracleChannel,
    TrendExpectation,
    build_query_requests,
    compare_experiments,
    run_experiment,
    run_full_supervision,
    split_budget,
    warm_start,
)


@pytest.fixture(scope="module")
def tiny_corpus():
    return ds.generate_corpus(ds.GenConfig(seed=7, n_train=160, n_dev=40, n_test=40))


def make_cfg(**kw) -> ExperimentConfig:
    base = dict(
        corpus_dir="mem",
        seed=1,
        budget=0,
        iterations=1,
        max_epochs_initial=6,
        max_epochs_iteration=4,
    )
    base.update(kw)
    return ExperimentConfig(**base)


def test_split_budget_remainder_to_earliest():
    assert split_budget(100, 3) == [34, 33, 33]
    assert split_budget(0, 3) == [0, 0, 0]
    assert split_budget(7, 1) == [7]
    assert split_budget(5, 5) == [1, 1, 1, 1, 1]


def test_config_validation():
    with pytest.raises(ValueError):
        make_cfg(budget=-1).validate()
    with pytest.raises(ValueError):
        make_cfg(iterations=0).validate()
    with pytest.raises(ValueError):
        make_cfg(heuristic="entropy").validate()
    with pytest.raises(ValueError):
        make_cfg(annotator="crowd").validate()


def test_warm_start_seeds_single_statement_hits(tiny_corpus):
    train = tiny_corpus[0]
    model = pm.ParserModel()
    buffers = pm.MemoryBuffer()
    hits = warm_start(buffers, train, model)
    assert hits > 0
    easy = [ex for ex in train.examples if len(ex.gold_mr) == 1]
    assert easy
    for ex in easy:
        assert not buffers.is_empty(ex.id), ex.id
    # multi-statement answers may stay uncovered, and that is the point
    hard = [ex for ex in train.examples if len(ex.gold_mr) >= 2]
    assert any(buffers.is_empty(ex.id) for ex in hard)


def test_zero_budget_run_is_single_training(tiny_corpus):
    report = run_experiment(make_cfg(budget=0), datasets=tiny_corpus)
    assert len(report.iterations) == 1
    assert report.queries_total == 0
    assert report.final_test_accuracy == report.iterations[0].test_accuracy


def test_experiment_deterministic_under_seed(tiny_corpus):
    a = run_experiment(make_cfg(budget=12), datasets=tiny_corpus)
    b = run_experiment(make_cfg(budget=12), datasets=tiny_corpus)
    assert a.deterministic_dict() == b.deterministic_dict()


def test_budgets_split_and_disjoint_batches(tiny_corpus):
    report = run_experiment(make_cfg(budget=10, iterations=3), datasets=tiny_corpus)
    budgets = [r.budget for r in report.iterations[1:]]
    assert budgets == [4, 3, 3]
    batches = [set(r.batch) for r in report.iterations[1:]]
    for i in range(len(batches)):
        for j in range(i + 1, len(batches)):
            assert not (batches[i] & batches[j])
    assert report.queries_total <= 10


def test_annotations_improve_training_accuracy(tiny_corpus):
    base = run_experiment(make_cfg(budget=0), datasets=tiny_corpus)
    boosted = run_experiment(
        make_cfg(budget=24, max_epochs_iteration=6), datasets=tiny_corpus
    )
    assert boosted.queries_total == 24
    assert boosted.final_train_accuracy > base.final_train_accuracy


def test_sketch_supervision_runs(tiny_corpus):
    report = run_experiment(
        make_cfg(budget=12, supervision_kind=supervision.SKETCH), datasets=tiny_corpus
    )
    assert report.queries_total == 12


def test_baseline_cache_changes_nothing(tiny_corpus):
    loop._BASELINE_CACHE.clear()
    plain = run_experiment(make_cfg(budget=8), datasets=tiny_corpus)
    cached_first = run_experiment(
        make_cfg(budget=8), datasets=tiny_corpus, use_baseline_cache=True
    )
    cached_second = run_experiment(
        make_cfg(budget=8), datasets=tiny_corpus, use_baseline_cache=True
    )
    assert plain.deterministic_dict() == cached_first.deterministic_dict()
    assert plain.deterministic_dict() == cached_second.deterministic_dict()


def test_budget_exhausted_early_flag(tiny_corpus):
    # absurd budget: cannot find that many eligible failures after training
    report = run_experiment(
        make_cfg(budget=10_000, heuristic="correctness"), datasets=tiny_corpus
    )
    assert report.budget_exhausted_early
    assert report.queries_total < 10_000


def test_query_requests_carry_context(tiny_corpus):
    train = tiny_corpus[0]
    model = pm.ParserModel()
    ids = [train.examples[0].id, train.examples[1].id]
    queries = build_query_requests(model, train, ids, iteration=2, allowed_kinds=["full_mr"])
    assert len(queries) == 2
    q = queries[0]
    assert q.example_id == ids[0]
    assert q.iteration == 2
    assert q.candidates and all("text" in c and "probability" in c for c in q.candidates)
    assert len(q.rows) <= 12
    assert q.allowed_kinds == ["full_mr"]
    payload = json.loads(json.dumps(q.to_json()))
    assert payload["query_id"] == q.query_id


def test_oracle_channel_answers_queries(tiny_corpus):
    train = tiny_corpus[0]
    channel = OracleChannel(train, supervision.FULL_MR)
    queries = build_query_requests(
        pm.ParserModel(), train, [train.examples[0].id], iteration=1, allowed_kinds=["full_mr"]
    )
    annotations = channel.request(queries)
    assert len(annotations) == 1
    assert annotations[0].example_id == train.examples[0].id
    assert annotations[0].kind == supervision.FULL_MR


def test_compare_requires_two_configs(tiny_corpus):
    with pytest.raises(ValueError):
        compare_experiments([make_cfg()], seeds=[1], out_dir="/tmp/never")


def test_compare_grid_outputs(tmp_path, tiny_corpus):
    cfgs = [make_cfg(budget=0), make_cfg(budget=16)]
    summary = compare_experiments(
        cfgs,
        seeds=[1, 2],
        out_dir=tmp_path,
        expected_trends=[TrendExpectation("test_accuracy", "budget", "increasing")],
        datasets=tiny_corpus,
    )
    assert (tmp_path / "comparison.json").exists()
    assert (tmp_path / "comparison.csv").exists()
    table = (tmp_path / "comparison.txt").read_text()
    assert "budget" in table and "test acc" in table
    assert len(summary["cells"]) == 2
    csv_lines = (tmp_path / "comparison.csv").read_text().splitlines()
    assert len(csv_lines) == 1 + 4  # header + 2 configs x 2 seeds


def test_full_supervision_beats_weak(tiny_corpus):
    weak = run_experiment(make_cfg(budget=0), datasets=tiny_corpus)
    _, _, full = run_full_supervision(make_cfg(), datasets=tiny_corpus)
    assert full["test_accuracy"] >= weak.final_test_accuracy
