"""The iterate-train-query-annotate experiment loop and grid comparisons.

One experiment: train weakly to a stall, pick a budgeted batch of examples
with the configured heuristic, obtain annotations (simulated oracle or a
human behind the annotation service), fold them into the buffers and
constraints, retrain, repeat; finish with one last training round.
"""

from __future__ import annotations

import copy
import csv
import json
import math
import statistics
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Callable, Optional, Protocol, Sequence

from . import active, executor, model as pm, mrlang, supervision
from .dataset import Dataset, Example, load_corpus
from .model import MemoryBuffer, ParserModel, StallCriterion


class AnnotatorTimeout(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    corpus_dir: str
    seed: int = 1
    heuristic: str = "correctness"
    supervision_kind: str = supervision.FULL_MR  # full_mr | sketch
    budget: int = 0
    iterations: int = 1
    annotator: str = "oracle"  # oracle | http
    start: str = "cold"  # cold | warm
    beam_size: int = 32
    learning_rate: float = 0.1
    l2: float = 1e-4
    buffer_capacity: int = 10
    max_epochs_initial: int = 14
    max_epochs_iteration: int = 10
    out_dir: Optional[str] = None
    service_url: str = "http://127.0.0.1:8731"
    annotator_timeout_s: float = 3600.0
    ledger_path: Optional[str] = None

    def hyperparams(self) -> pm.Hyperparams:
        return pm.Hyperparams(
            beam_size=self.beam_size,
            learning_rate=self.learning_rate,
            l2=self.l2,
            buffer_capacity=self.buffer_capacity,
        )

    def validate(self) -> None:
        if self.budget < 0:
            raise ValueError("budget must be nonnegative")
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")
        if self.heuristic not in active.HEURISTICS:
            raise ValueError(f"unknown heuristic {self.heuristic!r}")
        if self.supervision_kind not in (supervision.FULL_MR, supervision.SKETCH):
            raise ValueError(f"unknown supervision kind {self.supervision_kind!r}")
        if self.annotator not in ("oracle", "http"):
            raise ValueError(f"unknown annotator {self.annotator!r}")
        if self.start not in ("cold", "warm"):
            raise ValueError(f"unknown start {self.start!r}")

    def baseline_key(self) -> tuple:
        """Everything the pre-annotation training phase depends on."""
        return (
            self.corpus_dir,
            self.seed,
            self.start,
            self.beam_size,
            self.learning_rate,
            self.l2,
            self.buffer_capacity,
            self.max_epochs_initial,
        )


def split_budget(total: int, iterations: int) -> list[int]:
    """Even split, remainder to the earliest iterations."""
    base = total // iterations
    extra = total % iterations
    return [base + (1 if t < extra else 0) for t in range(iterations)]


def warm_start(buffers: MemoryBuffer, dataset: Dataset, model: ParserModel) -> int:
    """Seed buffers with single-statement programs that already execute to
    the answer (the rule-limited search analog of a warmed-up buffer)."""
    hits = 0
    for ex in dataset.examples:
        env = dataset.env(ex)
        plan = pm.plan_for(ex.tokens, env)
        scorer = pm.Scorer(model, plan)
        score_fn = lambda prog: pm.score_program(scorer, prog)
        for program in executor.enumerate_programs(env, ex.tokens, max_len=1):
            result = executor.execute(program, env)
            if executor.answers_match(result, ex.answer):
                if buffers.insert(ex.id, program, score_fn):
                    hits += 1
    return hits


@dataclass
class QueryRequest:
    """Everything an annotator (human or simulated) sees for one query."""

    query_id: str
    example_id: str
    utterance: str
    table_id: str
    columns: list[dict]
    rows: list[list]
    truncated_rows: int
    answer: object
    candidates: list[dict]  # {"text": ..., "probability": ...}
    allowed_kinds: list[str]
    iteration: int

    def to_json(self) -> dict:
        return asdict(self)


def build_query_requests(
    model: ParserModel,
    dataset: Dataset,
    batch: Sequence[str],
    iteration: int,
    allowed_kinds: Sequence[str],
    constraints: Optional[dict] = None,
    preview_rows: int = 12,
) -> list[QueryRequest]:
    by_id = {ex.id: ex for ex in dataset.examples}
    requests = []
    for n, example_id in enumerate(batch):
        ex = by_id[example_id]
        env = dataset.env(ex)
        derivations = pm.beam_search(
            model, ex.tokens, env, sketch=(constraints or {}).get(ex.id)
        )
        candidates = [
            {
                "text": mrlang.print_program(d.program),
                "probability": math.exp(d.log_prob),
            }
            for d in derivations[:10]
        ]
        requests.append(
            QueryRequest(
                query_id=f"it{iteration}-q{n:04d}-{example_id}",
                example_id=example_id,
                utterance=ex.utterance,
                table_id=env.table_id,
                columns=[{"name": c, "kind": k} for c, k in env.columns],
                rows=[list(r) for r in env.rows[:preview_rows]],
                truncated_rows=max(0, env.n_rows - preview_rows),
                answer=ex.answer,
                candidates=candidates,
                allowed_kinds=list(allowed_kinds),
                iteration=iteration,
            )
        )
    return requests


class AnnotatorChannel(Protocol):
    def request(self, queries: list[QueryRequest]) -> list[supervision.Annotation]:
        ...


class OracleChannel:
    """Synchronous simulated annotator backed by the hidden gold programs."""

    def __init__(self, dataset: Dataset, kind: str):
        self.by_id = {ex.id: ex for ex in dataset.examples}
        self.kind = kind

    def request(self, queries: list[QueryRequest]) -> list[supervision.Annotation]:
        return [
            supervision.oracle_annotate(self.by_id[q.example_id], self.kind, timestamp=0.0)
            for q in queries
        ]


class HttpChannel:
    """Blocks on the annotation service until a batch is fully resolved."""

    def __init__(self, base_url: str, client=None, poll_interval: float = 0.5, timeout_s: float = 3600.0):
        if client is None:
            import httpx

            client = httpx.Client(base_url=base_url, timeout=10.0)
        self.client = client
        self.poll_interval = poll_interval
        self.timeout_s = timeout_s

    def request(self, queries: list[QueryRequest]) -> list[supervision.Annotation]:
        payload = {"queries": [q.to_json() for q in queries]}
        response = self.client.post("/api/queries/batch", json=payload)
        response.raise_for_status()
        wanted = [q.query_id for q in queries]
        deadline = time.monotonic() + self.timeout_s
        while True:
            response = self.client.get("/api/queries/resolutions")
            response.raise_for_status()
            resolved = response.json()["resolutions"]
            if all(qid in resolved for qid in wanted):
                return [
                    supervision.annotation_from_json(resolved[qid]) for qid in wanted
                ]
            if time.monotonic() >= deadline:
                raise AnnotatorTimeout(
                    f"{sum(1 for q in wanted if q not in resolved)} queries still pending"
                )
            time.sleep(self.poll_interval)


@dataclass
class IterationRecord:
    iteration: int
    train_accuracy: float
    dev_accuracy: float
    test_accuracy: float
    buffer_hit_rate: float
    buffered_programs: int
    epochs: int
    stalled: bool
    insertions_last_epoch: int
    budget: int = 0
    queries_spent: int = 0
    batch: list[str] = field(default_factory=list)
    heuristic_diagnostics: dict = field(default_factory=dict)
    confidence_histogram: list[int] = field(default_factory=list)
    wall_time_s: float = 0.0

    def to_dict(self, with_timing: bool = True) -> dict:
        out = asdict(self)
        if not with_timing:
            out.pop("wall_time_s")
        return out


@dataclass
class ExperimentReport:
    config: dict
    iterations: list[IterationRecord] = field(default_factory=list)
    final_train_accuracy: float = 0.0
    final_dev_accuracy: float = 0.0
    final_test_accuracy: float = 0.0
    queries_total: int = 0
    budget_exhausted_early: bool = False
    wall_time_s: float = 0.0

    def to_dict(self, with_timing: bool = True) -> dict:
        out = {
            "config": self.config,
            "iterations": [r.to_dict(with_timing) for r in self.iterations],
            "final_train_accuracy": self.final_train_accuracy,
            "final_dev_accuracy": self.final_dev_accuracy,
            "final_test_accuracy": self.final_test_accuracy,
            "queries_total": self.queries_total,
            "budget_exhausted_early": self.budget_exhausted_early,
        }
        if with_timing:
            out["wall_time_s"] = self.wall_time_s
        return out

    def deterministic_dict(self) -> dict:
        return self.to_dict(with_timing=False)


class StatusSink(Protocol):
    def update(self, **fields) -> None:
        ...


class _NullStatus:
    def update(self, **fields) -> None:
        pass


_BASELINE_CACHE: dict[tuple, tuple] = {}


def _confidence_histogram(ctx: active.SelectionContext) -> list[int]:
    histogram = [0] * 10
    for ex_id in ctx.eligible:
        histogram[min(int(ctx.confidences[ex_id] * 10), 9)] += 1
    return histogram


def run_experiment(
    cfg: ExperimentConfig,
    datasets: Optional[tuple[Dataset, Dataset, Dataset]] = None,
    channel: Optional[AnnotatorChannel] = None,
    status: Optional[StatusSink] = None,
    use_baseline_cache: bool = False,
) -> ExperimentReport:
    """Run one full experiment; bit-reproducible under the oracle annotator.

    With use_baseline_cache, the pre-annotation training phase is reused
    across experiments that share the same corpus, seed, start and model
    settings (the phase is deterministic, so the result is identical to
    recomputing it).
    """
    cfg.validate()
    status = status or _NullStatus()
    started = time.perf_counter()
    if datasets is None:
        datasets = load_corpus(cfg.corpus_dir)
    train_ds, dev_ds, test_ds = datasets

    if channel is None:
        if cfg.annotator == "oracle":
            channel = OracleChannel(train_ds, cfg.supervision_kind)
        else:
            channel = HttpChannel(cfg.service_url, timeout_s=cfg.annotator_timeout_s)

    ledger = (
        supervision.AnnotationLedger(path=Path(cfg.ledger_path))
        if cfg.ledger_path
        else supervision.AnnotationLedger()
    )
    constraints: dict[str, mrlang.Sketch] = {}
    report = ExperimentReport(config=asdict(cfg))

    def train_phase(model, buffers, phase: int, cap: int):
        stop = StallCriterion(max_epochs=cap)
        return pm.train(
            model,
            train_ds,
            dev_ds,
            buffers,
            mode="weak",
            stop=stop,
            seed=cfg.seed * 1000 + phase,
            constraints=constraints,
        )

    def snapshot_record(iteration: int, train_report) -> IterationRecord:
        return IterationRecord(
            iteration=iteration,
            train_accuracy=pm.accuracy(model, train_ds, constraints),
            dev_accuracy=pm.accuracy(model, dev_ds),
            test_accuracy=pm.accuracy(model, test_ds),
            buffer_hit_rate=buffers.nonempty_count() / max(len(train_ds), 1),
            buffered_programs=buffers.total_programs(),
            epochs=len(train_report.epochs),
            stalled=train_report.stalled,
            insertions_last_epoch=(
                train_report.epochs[-1].insertions if train_report.epochs else 0
            ),
        )

    # Phase 0: weak training to the first stall (shared across experiments
    # that only differ in what happens after it).
    cache_key = cfg.baseline_key()
    cached = _BASELINE_CACHE.get(cache_key) if use_baseline_cache else None
    status.update(state="training", iteration=0)
    if cached is not None:
        model, buffers, first_report = copy.deepcopy(cached)
    else:
        model = ParserModel(cfg.hyperparams())
        buffers = MemoryBuffer(capacity=cfg.buffer_capacity)
        if cfg.start == "warm":
            warm_start(buffers, train_ds, model)
        first_report = train_phase(model, buffers, phase=0, cap=cfg.max_epochs_initial)
        if use_baseline_cache:
            _BASELINE_CACHE[cache_key] = copy.deepcopy((model, buffers, first_report))

    t0 = time.perf_counter()
    record = snapshot_record(0, first_report)
    record.wall_time_s = time.perf_counter() - started
    report.iterations.append(record)

    if cfg.budget > 0:
        budgets = split_budget(cfg.budget, cfg.iterations)
        for t in range(1, cfg.iterations + 1):
            iter_started = time.perf_counter()
            status.update(state="training", iteration=t)
            ctx = active.build_selection_context(
                model,
                train_ds,
                buffers,
                annotated=list(ledger.annotations),
                seed=cfg.seed * 1000 + t,
                constraints=constraints,
            )
            batch = active.select_batch(ctx, cfg.heuristic, budgets[t - 1])
            if len(batch.ids) < budgets[t - 1]:
                report.budget_exhausted_early = True
            queries = build_query_requests(
                model,
                train_ds,
                batch.ids,
                iteration=t,
                allowed_kinds=[cfg.supervision_kind],
                constraints=constraints,
            )
            status.update(
                state="awaiting_annotations", iteration=t, pending_count=len(queries)
            )
            annotations = channel.request(queries) if queries else []
            status.update(state="training", iteration=t, pending_count=0)
            for ann in annotations:
                ledger.add(ann)
                supervision.apply_annotation(ann, train_ds, buffers, constraints)
            report.queries_total += len(annotations)

            train_report = train_phase(model, buffers, phase=t, cap=cfg.max_epochs_iteration)
            record = snapshot_record(t, train_report)
            record.budget = budgets[t - 1]
            record.queries_spent = len(annotations)
            record.batch = list(batch.ids)
            record.heuristic_diagnostics = batch.diagnostics
            record.confidence_histogram = _confidence_histogram(ctx)
            record.wall_time_s = time.perf_counter() - iter_started
            report.iterations.append(record)

    last = report.iterations[-1]
    report.final_train_accuracy = last.train_accuracy
    report.final_dev_accuracy = last.dev_accuracy
    report.final_test_accuracy = last.test_accuracy
    report.wall_time_s = time.perf_counter() - started
    status.update(
        state="done",
        iteration=cfg.iterations,
        accuracies={
            "train": report.final_train_accuracy,
            "dev": report.final_dev_accuracy,
            "test": report.final_test_accuracy,
        },
    )
    if cfg.out_dir:
        out_dir = Path(cfg.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        name = f"report-seed{cfg.seed}-{cfg.heuristic}-{cfg.supervision_kind}-b{cfg.budget}.json"
        with open(out_dir / name, "w", encoding="utf-8") as handle:
            json.dump(report.to_dict(), handle, indent=2, sort_keys=True)
    return report


def run_full_supervision(
    cfg: ExperimentConfig,
    datasets: Optional[tuple[Dataset, Dataset, Dataset]] = None,
) -> tuple[ParserModel, MemoryBuffer, dict]:
    """Train with gold programs on every example (the upper-bound mode)."""
    if datasets is None:
        datasets = load_corpus(cfg.corpus_dir)
    train_ds, dev_ds, test_ds = datasets
    model = ParserModel(cfg.hyperparams())
    buffers = MemoryBuffer(capacity=cfg.buffer_capacity)
    train_report = pm.train(
        model,
        train_ds,
        dev_ds,
        buffers,
        mode="full",
        stop=StallCriterion(max_epochs=cfg.max_epochs_initial),
        seed=cfg.seed * 1000,
    )
    summary = {
        "mode": "full",
        "seed": cfg.seed,
        "epochs": len(train_report.epochs),
        "train_accuracy": pm.accuracy(model, train_ds),
        "dev_accuracy": pm.accuracy(model, dev_ds),
        "test_accuracy": pm.accuracy(model, test_ds),
    }
    return model, buffers, summary


# ---------------------------------------------------------------------------
# Grid comparisons


@dataclass
class TrendExpectation:
    """Declarative ordering check: metric should move in `direction` as
    cells are ordered by `order_by`."""

    metric: str  # e.g. "final_test_accuracy"
    order_by: str  # config field, e.g. "budget"
    direction: str = "increasing"


def compare_experiments(
    cfgs: Sequence[ExperimentConfig],
    seeds: Sequence[int],
    out_dir: Path | str,
    expected_trends: Sequence[TrendExpectation] = (),
    datasets: Optional[tuple[Dataset, Dataset, Dataset]] = None,
    use_baseline_cache: bool = True,
    progress: Optional[Callable[[str], None]] = None,
) -> dict:
    """Run a grid of experiments over shared seeds and emit aggregate
    CSV/JSON summaries, flagging violations of the declared trends."""
    if len(cfgs) < 2:
        raise ValueError("comparison needs at least 2 configurations")
    corpus_dirs = {cfg.corpus_dir for cfg in cfgs}
    if len(corpus_dirs) != 1:
        raise ValueError("all configurations must share one corpus")
    if datasets is None:
        datasets = load_corpus(cfgs[0].corpus_dir)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    cells = []
    for cfg in cfgs:
        per_seed = []
        for seed in seeds:
            cell_cfg = copy.deepcopy(cfg)
            cell_cfg.seed = seed
            if progress:
                progress(
                    f"run heuristic={cell_cfg.heuristic} kind={cell_cfg.supervision_kind} "
                    f"budget={cell_cfg.budget} start={cell_cfg.start} seed={seed}"
                )
            report = run_experiment(
                cell_cfg, datasets=datasets, use_baseline_cache=use_baseline_cache
            )
            per_seed.append(report)
            rows.append(
                {
                    "heuristic": cfg.heuristic,
                    "supervision": cfg.supervision_kind,
                    "budget": cfg.budget,
                    "start": cfg.start,
                    "seed": seed,
                    "test_accuracy": report.final_test_accuracy,
                    "dev_accuracy": report.final_dev_accuracy,
                    "train_accuracy": report.final_train_accuracy,
                    "queries": report.queries_total,
                }
            )
        tests = [r.final_test_accuracy for r in per_seed]
        devs = [r.final_dev_accuracy for r in per_seed]
        cells.append(
            {
                "heuristic": cfg.heuristic,
                "supervision": cfg.supervision_kind,
                "budget": cfg.budget,
                "start": cfg.start,
                "test_accuracy_mean": statistics.mean(tests),
                "test_accuracy_stdev": statistics.stdev(tests) if len(tests) > 1 else 0.0,
                "dev_accuracy_mean": statistics.mean(devs),
                "dev_accuracy_stdev": statistics.stdev(devs) if len(devs) > 1 else 0.0,
                "seeds": list(seeds),
            }
        )

    violations = []
    for trend in expected_trends:
        ordered = sorted(cells, key=lambda c: c[trend.order_by])
        values = [c[f"{trend.metric}_mean"] for c in ordered]
        for a, b in zip(values, values[1:]):
            bad = a > b if trend.direction == "increasing" else a < b
            if bad:
                violations.append(
                    {
                        "metric": trend.metric,
                        "order_by": trend.order_by,
                        "direction": trend.direction,
                        "values": values,
                    }
                )
                break

    summary = {"cells": cells, "trend_violations": violations}
    with open(out_dir / "comparison.json", "w", encoding="utf-8") as handle:
        json.dump(summary, handle, indent=2, sort_keys=True)
    with open(out_dir / "comparison.csv", "w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    with open(out_dir / "comparison.txt", "w", encoding="utf-8") as handle:
        handle.write(format_comparison_table(cells))
    return summary


def format_comparison_table(cells: Sequence[dict]) -> str:
    """Plain-text table in the budget-rows / accuracy-columns style."""
    header = f"{'heuristic':<26}{'supervision':<12}{'start':<6}{'budget':>8}  {'test acc':>16}"
    lines = [header, "-" * len(header)]
    for cell in cells:
        acc = f"{cell['test_accuracy_mean']*100:5.1f} ± {cell['test_accuracy_stdev']*100:4.1f}"
        lines.append(
            f"{cell['heuristic']:<26}{cell['supervision']:<12}{cell['start']:<6}"
            f"{cell['budget']:>8}  {acc:>16}"
        )
    return "\n".join(lines) + "\n"
