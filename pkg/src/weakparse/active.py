"""Query-sample selection: which training examples to send to the
annotator when weak training stalls.

Heuristics: uniform random, correctness (examples with no learning
signal), least-confidence uncertainty (optionally restricted to the
correctness-eligible set), failed-word coverage, and k-means clustering
over utterance embeddings.
"""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import executor, model as pm
from .dataset import Dataset, bag_of_words, vocab_of

HEURISTICS = (
    "random",
    "correctness",
    "uncertainty",
    "uncertainty_correctness",
    "failed_words",
    "clustering",
)


@dataclass
class SelectionContext:
    """Snapshot of everything selection needs, computed at the stall point.

    Failure labels are derived from this snapshot's beams and buffers;
    they are never carried over between iterations.
    """

    dataset: Dataset
    seed: int
    annotated: frozenset[str]
    confidences: dict[str, float]
    top1_correct: dict[str, bool]
    beam_correct: dict[str, bool]
    buffer_empty: dict[str, bool]

    @property
    def eligible(self) -> list[str]:
        return [ex.id for ex in self.dataset.examples if ex.id not in self.annotated]

    @property
    def failed(self) -> list[str]:
        """D-minus: empty buffer and wrong top-1 at selection time."""
        return [
            ex_id
            for ex_id in self.eligible
            if self.buffer_empty[ex_id] and not self.top1_correct[ex_id]
        ]

    @property
    def correctness_eligible(self) -> list[str]:
        """No buffered program and nothing in the beam executes correctly:
        the parser has no learning signal at all for these."""
        return [
            ex_id
            for ex_id in self.eligible
            if self.buffer_empty[ex_id] and not self.beam_correct[ex_id]
        ]


def build_selection_context(
    model: pm.ParserModel,
    dataset: Dataset,
    buffers: pm.MemoryBuffer,
    annotated: Sequence[str],
    seed: int,
    constraints: Optional[dict] = None,
) -> SelectionContext:
    constraints = constraints or {}
    confidences: dict[str, float] = {}
    top1_correct: dict[str, bool] = {}
    beam_correct: dict[str, bool] = {}
    buffer_empty: dict[str, bool] = {}
    for ex in dataset.examples:
        env = dataset.env(ex)
        derivations = pm.beam_search(
            model, ex.tokens, env, sketch=constraints.get(ex.id)
        )
        buffer_empty[ex.id] = buffers.is_empty(ex.id)
        if not derivations:
            confidences[ex.id] = 0.0
            top1_correct[ex.id] = False
            beam_correct[ex.id] = False
            continue
        confidences[ex.id] = math.exp(derivations[0].log_prob)
        any_correct = False
        top_correct = False
        for rank, deriv in enumerate(derivations):
            result = executor.execute(deriv.program, env)
            ok = executor.answers_match(result, ex.answer)
            if rank == 0:
                top_correct = ok
            if ok:
                any_correct = True
        top1_correct[ex.id] = top_correct
        beam_correct[ex.id] = any_correct
    return SelectionContext(
        dataset=dataset,
        seed=seed,
        annotated=frozenset(annotated),
        confidences=confidences,
        top1_correct=top1_correct,
        beam_correct=beam_correct,
        buffer_empty=buffer_empty,
    )


@dataclass
class QueryBatch:
    ids: tuple[str, ...]
    heuristic: str
    diagnostics: dict = field(default_factory=dict)


def _take(ids: Sequence[str], budget: int) -> tuple[str, ...]:
    return tuple(ids[: max(budget, 0)])


def select_random(ctx: SelectionContext, budget: int) -> QueryBatch:
    rng = random.Random(ctx.seed * 524_287 + 1)
    pool = sorted(ctx.eligible)
    rng.shuffle(pool)
    return QueryBatch(_take(pool, budget), "random")


def select_correctness(ctx: SelectionContext, budget: int) -> QueryBatch:
    """Only examples with no correct-executing beam entry and an empty
    buffer; ordered randomly (seeded), since pure correctness ranks
    nothing within that set."""
    rng = random.Random(ctx.seed * 524_287 + 2)
    pool = sorted(ctx.correctness_eligible)
    rng.shuffle(pool)
    return QueryBatch(
        _take(pool, budget), "correctness", {"eligible": len(pool)}
    )


def select_uncertainty(
    ctx: SelectionContext, budget: int, combine_with_correctness: bool = False
) -> QueryBatch:
    """Least confidence: smallest max-beam-probability first. The combined
    flavor restricts candidates to the correctness-eligible set."""
    pool = ctx.correctness_eligible if combine_with_correctness else ctx.eligible
    ranked = sorted(pool, key=lambda ex_id: (ctx.confidences[ex_id], ex_id))
    name = "uncertainty_correctness" if combine_with_correctness else "uncertainty"
    histogram = [0] * 10
    for ex_id in pool:
        histogram[min(int(ctx.confidences[ex_id] * 10), 9)] += 1
    return QueryBatch(_take(ranked, budget), name, {"confidence_histogram": histogram})


def failed_word_rates(ctx: SelectionContext) -> tuple[tuple[str, ...], list[float]]:
    """P(fail | word) = occurrences in failed examples / occurrences in all
    examples, per vocabulary word (zero when the word never occurs)."""
    vocab = vocab_of(ctx.dataset)
    failed = set(ctx.failed)
    fail_counts = [0] * len(vocab)
    all_counts = [0] * len(vocab)
    for ex in ctx.dataset.examples:
        bag = bag_of_words(ex.tokens, vocab)
        for j, count in enumerate(bag):
            all_counts[j] += count
            if ex.id in failed:
                fail_counts[j] += count
    rates = [f / a if a else 0.0 for f, a in zip(fail_counts, all_counts)]
    return vocab, rates


def select_failed_words(ctx: SelectionContext, budget: int) -> QueryBatch:
    """Prefer utterances whose words historically belong to failed
    examples: score(x) = sum_j count_j(x) * P(fail | word_j)."""
    if not ctx.failed:
        batch = select_random(ctx, budget)
        return QueryBatch(batch.ids, "failed_words", {"fallback": "random"})
    vocab, rates = failed_word_rates(ctx)
    index = {w: j for j, w in enumerate(vocab)}
    scores: dict[str, float] = {}
    for ex in ctx.dataset.examples:
        if ex.id not in ctx.annotated:
            scores[ex.id] = sum(rates[index[t]] for t in ex.tokens if t in index)
    ranked = sorted(scores, key=lambda ex_id: (-scores[ex_id], ex_id))
    return QueryBatch(_take(ranked, budget), "failed_words", {"vocab_size": len(vocab)})


# ---------------------------------------------------------------------------
# Clustering heuristic

EMBED_DIM = 32


def token_embedding(token: str) -> np.ndarray:
    """Deterministic pseudo-random unit vector per token (stable across
    processes, unlike hash())."""
    digest = hashlib.md5(token.encode("utf-8")).digest()
    rng = random.Random(int.from_bytes(digest[:8], "big"))
    vec = np.array([rng.gauss(0.0, 1.0) for _ in range(EMBED_DIM)])
    return vec / np.linalg.norm(vec)


def sentence_embeddings(
    dataset: Dataset, cooccurrence_pass: bool = False
) -> dict[str, np.ndarray]:
    vocab = vocab_of(dataset)
    table = {w: token_embedding(w) for w in vocab}
    if cooccurrence_pass:
        # blend each word toward its observed context words, one pass
        sums = {w: np.zeros(EMBED_DIM) for w in vocab}
        counts = {w: 0 for w in vocab}
        for ex in dataset.examples:
            toks = ex.tokens
            for i, t in enumerate(toks):
                for j in range(max(0, i - 2), min(len(toks), i + 3)):
                    if j != i:
                        sums[t] += table[toks[j]]
                        counts[t] += 1
        for w in vocab:
            if counts[w]:
                blended = table[w] + 0.5 * sums[w] / counts[w]
                table[w] = blended / np.linalg.norm(blended)
    out = {}
    for ex in dataset.examples:
        vecs = [table[t] for t in ex.tokens if t in table]
        out[ex.id] = np.mean(vecs, axis=0) if vecs else np.zeros(EMBED_DIM)
    return out


def kmeans(
    points: np.ndarray, k: int, seed: int, max_iter: int = 100
) -> np.ndarray:
    """Plain k-means with a k-means++-style seeded initialization; returns
    the assignment vector."""
    n = len(points)
    rng = random.Random(seed)
    centers = [points[rng.randrange(n)]]
    while len(centers) < k:
        d2 = np.min(
            [np.sum((points - c) ** 2, axis=1) for c in centers], axis=0
        )
        total = float(d2.sum())
        if total <= 0:
            centers.append(points[rng.randrange(n)])
            continue
        r = rng.random() * total
        idx = int(np.searchsorted(np.cumsum(d2), r))
        centers.append(points[min(idx, n - 1)])
    centers = np.array(centers)
    assign = np.zeros(n, dtype=int)
    for _ in range(max_iter):
        dists = np.linalg.norm(points[:, None, :] - centers[None, :, :], axis=2)
        new_assign = np.argmin(dists, axis=1)
        if np.array_equal(new_assign, assign) and _ > 0:
            break
        assign = new_assign
        for c in range(k):
            members = points[assign == c]
            if len(members):
                centers[c] = members.mean(axis=0)
    return assign


def select_clustering(
    ctx: SelectionContext,
    budget: int,
    k: Optional[int] = None,
    cooccurrence_pass: bool = False,
) -> QueryBatch:
    """Cluster eligible utterances, drop the smallest fifth of the clusters
    as outliers, then sample evenly from the survivors."""
    eligible = sorted(ctx.eligible)
    if budget <= 0 or not eligible:
        return QueryBatch((), "clustering")
    if k is None:
        k = max(2, math.isqrt(len(eligible)))
    k = min(k, len(eligible))
    embeddings = sentence_embeddings(ctx.dataset, cooccurrence_pass)
    points = np.array([embeddings[ex_id] for ex_id in eligible])
    assign = kmeans(points, k, seed=ctx.seed * 524_287 + 3)
    clusters: list[list[str]] = [[] for _ in range(k)]
    for ex_id, c in zip(eligible, assign):
        clusters[c].append(ex_id)
    nonempty = sum(1 for c in clusters if c)
    if nonempty < 2:
        batch = select_random(ctx, budget)
        return QueryBatch(batch.ids, "clustering", {"fallback": "degenerate"})
    order = sorted(range(k), key=lambda c: (-len(clusters[c]), c))
    dropped = len(order) // 5
    survivors = order[: len(order) - dropped] if dropped else order
    survivors = [c for c in survivors if clusters[c]]
    per_cluster = math.ceil(budget / len(survivors))
    rng = random.Random(ctx.seed * 524_287 + 4)
    chosen: list[str] = []
    for c in survivors:
        members = clusters[c]
        take = min(per_cluster, len(members))
        chosen.extend(rng.sample(members, take))
    return QueryBatch(
        _take(chosen, budget),
        "clustering",
        {"clusters": [len(c) for c in clusters], "dropped": dropped},
    )


def select_batch(ctx: SelectionContext, heuristic: str, budget: int, **kwargs) -> QueryBatch:
    if heuristic == "random":
        return select_random(ctx, budget)
    if heuristic == "correctness":
        return select_correctness(ctx, budget)
    if heuristic == "uncertainty":
        return select_uncertainty(ctx, budget, combine_with_correctness=False)
    if heuristic == "uncertainty_correctness":
        return select_uncertainty(ctx, budget, combine_with_correctness=True)
    if heuristic == "failed_words":
        return select_failed_words(ctx, budget)
    if heuristic == "clustering":
        return select_clustering(ctx, budget, **kwargs)
    raise ValueError(f"unknown heuristic {heuristic!r}")
