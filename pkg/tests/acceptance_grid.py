"""Grid runner for the acceptance suite.

Runs experiment cells sequentially in-process (sharing the baseline cache)
or across worker processes when WEAKPARSE_TEST_WORKERS is set above 1.
Each cell is deterministic, so the parallel schedule returns identical
numbers to the sequential one.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

from weakparse import dataset as ds, loop

_WORKER_DATASETS = {}


def _load(corpus_dir: str):
    datasets = _WORKER_DATASETS.get(corpus_dir)
    if datasets is None:
        datasets = ds.load_corpus(corpus_dir)
        _WORKER_DATASETS[corpus_dir] = datasets
    return datasets


def run_cell(spec: dict) -> dict:
    """One experiment cell; `spec` is a plain dict so it pickles."""
    corpus_dir = spec.pop("corpus_dir")
    mode = spec.pop("mode", "loop")
    datasets = _load(corpus_dir)
    cfg = loop.ExperimentConfig(corpus_dir=corpus_dir, **spec)
    if mode == "full":
        _, _, summary = loop.run_full_supervision(cfg, datasets=datasets)
        return {
            "kind": "full",
            "seed": cfg.seed,
            "test_accuracy": summary["test_accuracy"],
            "dev_accuracy": summary["dev_accuracy"],
        }
    report = loop.run_experiment(cfg, datasets=datasets, use_baseline_cache=True)
    return {
        "kind": "loop",
        "seed": cfg.seed,
        "heuristic": cfg.heuristic,
        "supervision": cfg.supervision_kind,
        "budget": cfg.budget,
        "start": cfg.start,
        "beam_size": cfg.beam_size,
        "iterations": cfg.iterations,
        "queries": report.queries_total,
        "test_accuracy": report.final_test_accuracy,
        "dev_accuracy": report.final_dev_accuracy,
        "train_accuracy": report.final_train_accuracy,
    }


def run_grid(specs: list[dict]) -> list[dict]:
    workers = int(os.environ.get("WEAKPARSE_TEST_WORKERS", "1"))
    if workers <= 1:
        return [run_cell(dict(spec)) for spec in specs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_cell, [dict(s) for s in specs]))
