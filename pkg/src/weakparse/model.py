"""Log-linear semantic parser over the decoding grammar, plus the memory
buffer of discovered high-reward programs and the training loops.

The model scores each decoding step with a sparse dot product and
normalizes locally over the type-valid actions, so the probabilities of
all complete programs for an utterance sum to one. Training maximizes the
marginal likelihood of the programs cached in the per-example buffer.
"""

from __future__ import annotations

import json
import math
import random
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

from . import executor, mrlang
from .executor import TableEnv
from .mrlang import (
    EOF_ACTION,
    FUNCTIONS,
    MAX_PROGRAM_LEN,
    Action,
    DecodeState,
    GrammarContext,
    Program,
    Sketch,
)

START = "<s>"


class DerivationError(ValueError):
    """A program that the decoding grammar cannot produce for this example."""


class EmptyBuffer(ValueError):
    pass


@dataclass
class Hyperparams:
    beam_size: int = 32
    learning_rate: float = 0.1
    l2: float = 1e-4
    buffer_capacity: int = 10
    max_epochs: int = 50
    adagrad_eps: float = 1e-8


class ParserModel:
    """Sparse weight vector over feature ids; absent id means weight zero."""

    def __init__(self, hp: Optional[Hyperparams] = None):
        self.hp = hp or Hyperparams()
        self.weights: dict[str, float] = {}
        self._adagrad: dict[str, float] = {}

    def score(self, fids: Iterable[str]) -> float:
        w = self.weights
        return sum(w.get(f, 0.0) for f in fids)

    def set_weight(self, fid: str, value: float) -> None:
        if value == 0.0:
            self.weights.pop(fid, None)
        else:
            self.weights[fid] = value

    def apply_gradient(self, grad: dict[str, float]) -> None:
        """One adagrad step along -grad with lazy L2 on the touched ids."""
        hp = self.hp
        w = self.weights
        acc = self._adagrad
        for fid, g in grad.items():
            g = g + hp.l2 * w.get(fid, 0.0)
            if g == 0.0:
                continue
            a = acc.get(fid, 0.0) + g * g
            acc[fid] = a
            w[fid] = w.get(fid, 0.0) - hp.learning_rate * g / (math.sqrt(a) + hp.adagrad_eps)

    def copy(self) -> "ParserModel":
        clone = ParserModel(Hyperparams(**vars(self.hp)))
        clone.weights = dict(self.weights)
        clone._adagrad = dict(self._adagrad)
        return clone


def save_model(model: ParserModel, path: Path | str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        header = {"format": "weakparse-model", "version": 1, "hyperparams": vars(model.hp)}
        handle.write(json.dumps(header, sort_keys=True) + "\n")
        for fid in sorted(model.weights):
            handle.write(f"{fid}\t{model.weights[fid]!r}\n")


def load_model(path: Path | str) -> ParserModel:
    with open(path, encoding="utf-8") as handle:
        header = json.loads(handle.readline())
        if header.get("format") != "weakparse-model":
            raise ValueError(f"{path} is not a model checkpoint")
        model = ParserModel(Hyperparams(**header["hyperparams"]))
        for line in handle:
            fid, _, weight = line.rstrip("\n").partition("\t")
            model.weights[fid] = float(weight)
    return model


# ---------------------------------------------------------------------------
# Feature templates
#
# Head actions carry utterance unigrams/bigrams crossed with the chosen
# operator, the previous operator and the statement position; stopping
# carries a per-length bias. Column and literal choices carry indicators
# for overlap with the utterance; row-source choices carry their kind.

_FID_CACHE: dict[tuple, str] = {}


def _fid(*parts) -> str:
    key = parts
    fid = _FID_CACHE.get(key)
    if fid is None:
        fid = sys.intern(":".join(str(p) for p in parts))
        _FID_CACHE[key] = fid
    return fid


def _rows_kind(var_index: int, pos: int) -> str:
    if var_index < 0:
        return "all"
    return "last" if var_index == pos - 1 else "far"


def _head_base_fids(tokens: Sequence[str], func: str) -> tuple[str, ...]:
    fids = [_fid("u", w, func) for w in sorted(set(tokens))]
    bigrams = sorted(set(zip(tokens, tokens[1:]))) if len(tokens) > 1 else []
    fids.extend(_fid("b", a, b, func) for a, b in bigrams)
    return tuple(fids)


def _column_overlaps(tokens: Sequence[str], env: TableEnv) -> frozenset[str]:
    token_set = set(tokens)
    return frozenset(
        name for name in env.column_names() if set(executor.tokenize(name)) & token_set
    )


def featurize(
    tokens: Sequence[str], env: TableEnv, state: DecodeState, action: Action
) -> tuple[str, ...]:
    """Reference feature function for one (state, action) pair."""
    if state.step == "head":
        if action == EOF_ACTION:
            return (_fid("len", state.pos),)
        func = action[1]
        prev = state.prev_func or START
        return _head_base_fids(tokens, func) + (
            _fid("p", prev, func),
            _fid("i", state.pos, func),
        )
    if state.step == "rows":
        return (_fid("r", _rows_kind(action[1], state.pos), state.func),)
    if state.step == "col":
        if action[1] in _column_overlaps(tokens, env):
            return (_fid("cm", state.func),)
        return ()
    if state.step == "lit":
        pool_match = executor._value_in_utterance(action[1], tuple(tokens))
        return (_fid("lm"),) if pool_match else ()
    raise AssertionError(state.step)


class DecodePlan:
    """Per-example cache: grammar context plus factored feature pieces.

    Feature vectors are represented as tuples of fid-tuples so the large
    unigram/bigram block is shared across all contexts that mention the
    same operator.
    """

    def __init__(self, tokens: Sequence[str], env: TableEnv, max_len: int = MAX_PROGRAM_LEN):
        self.tokens = tuple(tokens)
        self.env = env
        self.gc = executor.grammar_context(env, self.tokens, max_len)
        self.func_base = {f: _head_base_fids(self.tokens, f) for f in FUNCTIONS}
        self.overlap_cols = _column_overlaps(self.tokens, env)
        self.lit_match = {
            (col, value)
            for col, pool in self.gc.literal_pool.items()
            for value in pool
            if executor._value_in_utterance(value, self.tokens)
        }
        self._contexts: dict[tuple, tuple[tuple[Action, ...], tuple]] = {}
        # Lazily-built transition graph over grammar positions, so the beam
        # never constructs DecodeState objects in its inner loop. A node is
        # [context_key, actions, successor node ids (-1 = finished)].
        self._nodes: list[list] = []
        self._node_states: list[DecodeState] = []
        self._node_ids: dict[tuple, int] = {}
        self.root = self._node_id(DecodeState())
        self._steps_memo: dict[str, list[tuple[int, int]]] = {}

    def decode_steps(self, program: Program, text: Optional[str] = None) -> list[tuple[int, int]]:
        """Memoized force_decode; buffers re-derive the same programs every
        epoch, so caching the step lists pays for itself quickly."""
        if text is None:
            text = mrlang.print_program(program)
        steps = self._steps_memo.get(text)
        if steps is None:
            steps = force_decode(self, program)
            self._steps_memo[text] = steps
        return steps

    def context(self, key: tuple) -> tuple[tuple[Action, ...], tuple]:
        """(actions, per-action feature parts) for a context key."""
        cached = self._contexts.get(key)
        if cached is not None:
            return cached
        kind = key[0]
        gc = self.gc
        actions: list[Action] = []
        feats: list[tuple] = []
        if kind == "head":
            _, pos, prev = key
            prev = prev or START
            if pos >= 1:
                actions.append(EOF_ACTION)
                feats.append(((_fid("len", pos),),))
            if pos < gc.max_len:
                for f in FUNCTIONS:
                    if gc.func_available(f):
                        actions.append(("func", f))
                        feats.append((self.func_base[f], (_fid("p", prev, f), _fid("i", pos, f))))
        elif kind == "rows":
            _, pos, func, rows_vars = key
            for j in (-1,) + rows_vars:
                actions.append(("rows", j))
                feats.append(((_fid("r", _rows_kind(j, pos), func),),))
        elif kind == "col":
            func = key[1]
            cols = gc.columns_for(func)
            if mrlang.LITERAL in mrlang.SIGNATURES[func][0]:
                cols = tuple(c for c in cols if gc.literal_pool.get(c))
            for c in cols:
                actions.append(("col", c))
                feats.append(((_fid("cm", func),),) if c in self.overlap_cols else ())
        elif kind == "lit":
            col = key[1]
            for v in gc.literal_pool[col]:
                actions.append(("lit", v))
                feats.append(((_fid("lm"),),) if (col, v) in self.lit_match else ())
        else:
            raise AssertionError(kind)
        entry = (tuple(actions), tuple(feats))
        self._contexts[key] = entry
        return entry

    @staticmethod
    def _state_signature(state: DecodeState) -> tuple:
        # everything transition-relevant except the concrete statements
        return (state.step, state.pos, state.prev_func, state.rows_vars, state.func, state.col)

    def _node_id(self, state: DecodeState) -> int:
        sig = self._state_signature(state)
        nid = self._node_ids.get(sig)
        if nid is None:
            nid = len(self._nodes)
            self._node_ids[sig] = nid
            key = state.context_key()
            self._nodes.append([key, self.context(key)[0], None])
            self._node_states.append(state)
        return nid

    def node(self, nid: int) -> list:
        node = self._nodes[nid]
        if node[2] is None:
            state = self._node_states[nid]
            succs = []
            for action in node[1]:
                nxt, done = mrlang.advance(state, action)
                succs.append(-1 if done is not None else self._node_id(nxt))
            node[2] = succs
        return node

    def replay(self, action_indices: Sequence[int]) -> tuple[Program, list[tuple[int, int]]]:
        """Rebuild (program, [(node_id, action_idx), ...]) from a path of
        action indices starting at the root node."""
        steps = []
        nid = self.root
        stmts: list[mrlang.Expr] = []
        func = rows_arg = col = lit = None
        for idx in action_indices:
            key, actions, succs = self.node(nid)
            steps.append((nid, idx))
            action = actions[idx]
            tag = action[0]
            if tag == "func":
                func, rows_arg, col, lit = action[1], None, None, None
            elif tag == "rows":
                rows_arg = mrlang.ALL_ROWS if action[1] < 0 else mrlang.VarRef(action[1])
            elif tag == "col":
                col = action[1]
            elif tag == "lit":
                lit = action[1]
            if succs[idx] < 0:
                return Program(tuple(stmts)), steps
            next_key = self._nodes[succs[idx]][0]
            if next_key[0] == "head":
                arg_kinds, _ = mrlang.SIGNATURES[func]
                args: list = [rows_arg]
                if mrlang.LITERAL in arg_kinds:
                    args.extend([mrlang.Literal(lit), mrlang.ColumnName(col)])
                elif mrlang.COLUMN in arg_kinds:
                    args.append(mrlang.ColumnName(col))
                stmts.append(mrlang.Expr(func, tuple(args)))
            nid = succs[idx]
        raise AssertionError("action path did not finish a program")


_PLAN_CACHE: dict[tuple, DecodePlan] = {}


def plan_for(tokens: Sequence[str], env: TableEnv, max_len: int = MAX_PROGRAM_LEN) -> DecodePlan:
    key = (id(env), tuple(tokens), max_len)
    plan = _PLAN_CACHE.get(key)
    if plan is None:
        plan = DecodePlan(tokens, env, max_len)
        _PLAN_CACHE[key] = plan
    return plan


class Scorer:
    """Softmax tables over a plan for a fixed weight snapshot.

    Create one, use it, drop it: results are stale once the model's
    weights change.
    """

    def __init__(self, model: ParserModel, plan: DecodePlan):
        self.model = model
        self.plan = plan
        self._base_scores: Optional[dict[str, float]] = None
        self._tables: dict[tuple, tuple[float, ...]] = {}
        self._node_tables: dict[int, tuple[float, ...]] = {}

    def _score_action(self, parts: tuple) -> float:
        if not parts:
            return 0.0
        w = self.model.weights
        total = 0.0
        for part in parts:
            for fid in part:
                total += w.get(fid, 0.0)
        return total

    def logprobs(self, key: tuple) -> tuple[float, ...]:
        table = self._tables.get(key)
        if table is not None:
            return table
        actions, feats = self.plan.context(key)
        if key[0] == "head":
            if self._base_scores is None:
                self._base_scores = {
                    f: self.model.score(fids) for f, fids in self.plan.func_base.items()
                }
            w = self.model.weights
            scores = []
            for action, parts in zip(actions, feats):
                if action == EOF_ACTION:
                    scores.append(w.get(parts[0][0], 0.0))
                else:
                    extras = parts[1]
                    scores.append(
                        self._base_scores[action[1]]
                        + w.get(extras[0], 0.0)
                        + w.get(extras[1], 0.0)
                    )
        else:
            scores = [self._score_action(parts) for parts in feats]
        m = max(scores)
        exps = [math.exp(s - m) for s in scores]
        z = sum(exps)
        log_z = m + math.log(z)
        table = tuple(s - log_z for s in scores)
        self._tables[key] = table
        return table

    def probs(self, key: tuple) -> tuple[float, ...]:
        return tuple(math.exp(lp) for lp in self.logprobs(key))

    def node_logprobs(self, nid: int) -> tuple[float, ...]:
        table = self._node_tables.get(nid)
        if table is None:
            table = self.logprobs(self.plan._nodes[nid][0])
            self._node_tables[nid] = table
        return table


@dataclass(frozen=True)
class Derivation:
    program: Program
    log_prob: float
    step_log_probs: tuple[float, ...]


def beam_search(
    model: ParserModel,
    tokens: Sequence[str],
    env: TableEnv,
    K: Optional[int] = None,
    sketch: Optional[Sketch] = None,
    plan: Optional[DecodePlan] = None,
    scorer: Optional[Scorer] = None,
) -> list[Derivation]:
    """Top-K derivations under the constrained grammar, deterministic.

    With a sketch, only the sketch's operator survives at each statement
    and the program length is pinned to the sketch length; scores are
    still the unconstrained per-step softmaxes.
    """
    K = K if K is not None else model.hp.beam_size
    if K < 1:
        raise ValueError("K must be at least 1")
    if plan is None:
        plan = plan_for(tokens, env)
    if scorer is None:
        scorer = Scorer(model, plan)

    sketch_funcs = sketch.funcs if sketch is not None else None
    # item: (neg log prob, insertion sequence, node id, reversed index path)
    frontier = [(0.0, 0, plan.root, None)]
    finished: list[tuple[float, int, tuple]] = []
    seq = 1
    while frontier:
        if len(finished) >= K:
            # extensions only lower log probability, so once the K-th best
            # finished program beats the whole frontier nothing deeper can
            # make the cut
            kth = sorted(finished)[K - 1][0]
            frontier = [item for item in frontier if item[0] < kth]
            if not frontier:
                break
        candidates = []
        for neg_lp, _, nid, hist in frontier:
            key, actions, succs = plan.node(nid)
            if not actions:
                continue
            logps = scorer.node_logprobs(nid)
            if sketch_funcs is not None and key[0] == "head":
                pos = key[1]
                if pos < len(sketch_funcs):
                    wanted: Action = ("func", sketch_funcs[pos])
                else:
                    wanted = EOF_ACTION
                indices = [i for i, a in enumerate(actions) if a == wanted]
            else:
                indices = range(len(actions))
            for idx in indices:
                entry = (neg_lp - logps[idx], seq, succs[idx], (idx, hist))
                seq += 1
                if succs[idx] < 0:
                    finished.append((entry[0], entry[1], entry[3]))
                else:
                    candidates.append(entry)
        candidates.sort()
        frontier = candidates[:K]
    finished.sort()

    results = []
    for neg_lp, _, hist in finished[:K]:
        indices = []
        while hist is not None:
            indices.append(hist[0])
            hist = hist[1]
        indices.reverse()
        program, steps = plan.replay(indices)
        lps = tuple(scorer.node_logprobs(n)[i] for n, i in steps)
        results.append(Derivation(program, -neg_lp, lps))
    results.sort(key=lambda d: (-d.log_prob, mrlang.print_program(d.program)))
    return results


def force_decode(plan: DecodePlan, program: Program) -> list[tuple[int, int]]:
    """The derivation of a program as (node id, action index) steps."""
    actions = mrlang.actions_of_program(plan.gc, program)
    if actions is None:
        raise DerivationError(
            f"program not reachable in this example's grammar: {mrlang.print_program(program)}"
        )
    steps = []
    nid = plan.root
    for action in actions:
        _, node_actions, succs = plan.node(nid)
        idx = node_actions.index(action)
        steps.append((nid, idx))
        nid = succs[idx]
    return steps


def score_program(scorer: Scorer, program: Program) -> float:
    return sum(
        scorer.node_logprobs(nid)[idx] for nid, idx in force_decode(scorer.plan, program)
    )


def derivation_of(model: ParserModel, tokens: Sequence[str], env: TableEnv, program: Program) -> Derivation:
    plan = plan_for(tokens, env)
    scorer = Scorer(model, plan)
    steps = force_decode(plan, program)
    lps = tuple(scorer.logprobs(key)[idx] for key, idx in steps)
    return Derivation(program, sum(lps), lps)


# ---------------------------------------------------------------------------
# Memory buffer


class MemoryBuffer:
    """Per-example cache of programs that executed to the gold answer.

    Annotation can replace an example's set outright and lock it against
    further exploration.
    """

    def __init__(self, capacity: int = 10):
        self.capacity = capacity
        self._programs: dict[str, dict[str, Program]] = {}
        self._locked: set[str] = set()

    def programs(self, example_id: str) -> list[Program]:
        return [p for _, p in sorted(self._programs.get(example_id, {}).items())]

    def texts(self, example_id: str) -> list[str]:
        return sorted(self._programs.get(example_id, {}))

    def is_locked(self, example_id: str) -> bool:
        return example_id in self._locked

    def is_empty(self, example_id: str) -> bool:
        return not self._programs.get(example_id)

    def insert(
        self,
        example_id: str,
        program: Program,
        score_fn: Optional[Callable[[Program], float]] = None,
    ) -> bool:
        if example_id in self._locked:
            return False
        text = mrlang.print_program(program)
        entries = self._programs.setdefault(example_id, {})
        if text in entries:
            return False
        entries[text] = program
        if len(entries) > self.capacity:
            if score_fn is None:
                raise ValueError("buffer over capacity and no score function given")
            scored = sorted(entries.items(), key=lambda kv: (score_fn(kv[1]), kv[0]))
            evicted_text = scored[0][0]
            del entries[evicted_text]
            if evicted_text == text:
                return False
        return True

    def merge(
        self,
        example_id: str,
        candidates: dict[str, Program],
        score_fn: Callable[[Program], float],
    ) -> int:
        """Insert many candidates at once, keeping the capacity-best of the
        union by model probability. Returns how many new programs remain."""
        if example_id in self._locked or not candidates:
            return 0
        entries = self._programs.setdefault(example_id, {})
        fresh = {t: p for t, p in candidates.items() if t not in entries}
        if not fresh:
            return 0
        entries.update(fresh)
        if len(entries) > self.capacity:
            ranked = sorted(entries.items(), key=lambda kv: (-score_fn(kv[1]), kv[0]))
            kept = dict(ranked[: self.capacity])
            self._programs[example_id] = kept
            return sum(1 for t in fresh if t in kept)
        return len(fresh)

    def set_only(self, example_id: str, program: Program, lock: bool = True) -> None:
        self._programs[example_id] = {mrlang.print_program(program): program}
        if lock:
            self._locked.add(example_id)

    def filter_sketch(self, example_id: str, sketch: Sketch) -> None:
        entries = self._programs.get(example_id, {})
        kept = {
            text: prog
            for text, prog in entries.items()
            if mrlang.sketch_of(prog) == sketch
        }
        self._programs[example_id] = kept

    def nonempty_count(self) -> int:
        return sum(1 for e in self._programs.values() if e)

    def total_programs(self) -> int:
        return sum(len(e) for e in self._programs.values())

    def state_signature(self) -> list[tuple[str, tuple[str, ...], bool]]:
        """Deterministic full description, for equality checks in reports."""
        return [
            (ex_id, tuple(sorted(entries)), ex_id in self._locked)
            for ex_id, entries in sorted(self._programs.items())
            if entries or ex_id in self._locked
        ]


def explore_and_update_buffer(
    model: ParserModel,
    example,
    env: TableEnv,
    buffer: MemoryBuffer,
    K: Optional[int] = None,
    sketch: Optional[Sketch] = None,
) -> int:
    """Beam-search the example and insert correct-executing derivations.

    Annotation-locked buffers are left untouched. Returns how many
    programs were newly added.
    """
    if buffer.is_locked(example.id):
        return 0
    plan = plan_for(example.tokens, env)
    scorer = Scorer(model, plan)
    derivations = beam_search(
        model, example.tokens, env, K=K, sketch=sketch, plan=plan, scorer=scorer
    )
    candidates: dict[str, Program] = {}
    for deriv in derivations:
        if sketch is not None and mrlang.sketch_of(deriv.program) != sketch:
            continue
        result = executor.execute(deriv.program, env)
        if executor.answers_match(result, example.answer):
            candidates[mrlang.print_program(deriv.program)] = deriv.program
    score_fn = lambda prog: sum(
        scorer.node_logprobs(nid)[idx] for nid, idx in plan.decode_steps(prog)
    )
    return buffer.merge(example.id, candidates, score_fn)


# ---------------------------------------------------------------------------
# Marginal-likelihood loss


def _data_gradient(
    scorer: Scorer, programs: Sequence[Program]
) -> tuple[float, dict[str, float]]:
    """log marginal likelihood and its gradient (no regularizer).

    Returns (log_marginal, dlogm) where dlogm maps fid to the derivative
    of the log marginal; callers negate for a loss gradient.
    """
    plan = scorer.plan
    step_lists = [plan.decode_steps(p) for p in programs]
    logps = []
    for steps in step_lists:
        logps.append(sum(scorer.node_logprobs(nid)[idx] for nid, idx in steps))
    m = max(logps)
    z = sum(math.exp(lp - m) for lp in logps)
    log_marginal = m + math.log(z)
    posteriors = [math.exp(lp - log_marginal) for lp in logps]

    # Aggregate posterior mass per context so the expected-feature term is
    # computed once per context rather than once per derivation step.
    ctx_mass: dict[int, float] = {}
    chosen_mass: dict[int, dict[int, float]] = {}
    for q, steps in zip(posteriors, step_lists):
        for nid, idx in steps:
            ctx_mass[nid] = ctx_mass.get(nid, 0.0) + q
            per = chosen_mass.setdefault(nid, {})
            per[idx] = per.get(idx, 0.0) + q

    grad: dict[str, float] = {}
    for nid, mass in ctx_mass.items():
        _, feats = plan.context(plan._nodes[nid][0])
        logps_here = scorer.node_logprobs(nid)
        chosen = chosen_mass[nid]
        for idx, parts in enumerate(feats):
            if not parts:
                continue
            coef = chosen.get(idx, 0.0) - mass * math.exp(logps_here[idx])
            if coef == 0.0:
                continue
            for part in parts:
                for fid in part:
                    grad[fid] = grad.get(fid, 0.0) + coef
    return log_marginal, grad


def mml_loss_and_grad(
    model: ParserModel, example, env: TableEnv, programs: Sequence[Program]
) -> tuple[float, dict[str, float]]:
    """Negative log marginal likelihood over the buffered programs, with L2,
    and its exact gradient."""
    if not programs:
        raise EmptyBuffer(f"no buffered programs for example {example.id}")
    plan = plan_for(example.tokens, env)
    scorer = Scorer(model, plan)
    log_marginal, dlogm = _data_gradient(scorer, programs)
    l2 = model.hp.l2
    loss = -log_marginal + 0.5 * l2 * sum(w * w for w in model.weights.values())
    grad = {fid: -g for fid, g in dlogm.items()}
    for fid, w in model.weights.items():
        grad[fid] = grad.get(fid, 0.0) + l2 * w
    return loss, grad


def posterior_over_buffer(
    model: ParserModel, example, env: TableEnv, programs: Sequence[Program]
) -> list[float]:
    if not programs:
        raise EmptyBuffer(f"no buffered programs for example {example.id}")
    plan = plan_for(example.tokens, env)
    scorer = Scorer(model, plan)
    logps = [score_program(scorer, p) for p in programs]
    m = max(logps)
    z = sum(math.exp(lp - m) for lp in logps)
    return [math.exp(lp - m) / z for lp in logps]


# ---------------------------------------------------------------------------
# Evaluation


def top1(
    model: ParserModel,
    tokens: Sequence[str],
    env: TableEnv,
    sketch: Optional[Sketch] = None,
) -> Optional[Program]:
    derivations = beam_search(model, tokens, env, sketch=sketch)
    return derivations[0].program if derivations else None


def accuracy(model: ParserModel, dataset, constraints: Optional[dict] = None) -> float:
    """Fraction of examples whose top-1 program executes to the answer;
    execution errors count as wrong."""
    if not dataset.examples:
        return 0.0
    correct = 0
    for ex in dataset.examples:
        env = dataset.env(ex)
        sketch = constraints.get(ex.id) if constraints else None
        program = top1(model, ex.tokens, env, sketch=sketch)
        if program is None:
            continue
        if executor.answers_match(executor.execute(program, env), ex.answer):
            correct += 1
    return correct / len(dataset.examples)


# ---------------------------------------------------------------------------
# Training


@dataclass
class StallCriterion:
    """Stop once exploration finds nothing for a whole epoch and dev
    accuracy moved less than min_delta over the last `window` epochs."""

    max_epochs: int = 50
    min_delta: float = 0.001  # 0.1 accuracy points
    window: int = 2

    def should_stop(self, epoch: int, insertions: int, dev_accs: Sequence[float]) -> bool:
        if insertions > 0 or epoch < self.window:
            return False
        return dev_accs[-1] - dev_accs[-1 - self.window] < self.min_delta


@dataclass
class EpochStats:
    epoch: int
    insertions: int
    dev_accuracy: float
    buffered_examples: int
    buffered_programs: int


@dataclass
class TrainReport:
    mode: str
    seed: int
    epochs: list[EpochStats] = field(default_factory=list)
    stalled: bool = False
    wall_time_s: float = 0.0

    @property
    def final_dev_accuracy(self) -> float:
        return self.epochs[-1].dev_accuracy if self.epochs else 0.0

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "seed": self.seed,
            "stalled": self.stalled,
            "epochs": [vars(e) for e in self.epochs],
            "final_dev_accuracy": self.final_dev_accuracy,
            "wall_time_s": self.wall_time_s,
        }


def train(
    model: ParserModel,
    train_ds,
    dev_ds,
    buffers: MemoryBuffer,
    mode: str = "weak",
    stop: Optional[StallCriterion] = None,
    seed: int = 0,
    constraints: Optional[dict] = None,
) -> TrainReport:
    """Alternate exploration and marginal-likelihood updates until stall.

    In full mode the buffers are set (and locked) to each example's gold
    program and no exploration runs.
    """
    if mode not in ("weak", "full"):
        raise ValueError(f"unknown mode {mode!r}")
    stop = stop or StallCriterion(max_epochs=model.hp.max_epochs)
    constraints = constraints or {}
    started = time.perf_counter()

    if mode == "full":
        for ex in train_ds.examples:
            if ex.gold_mr is None:
                raise ValueError(f"full supervision requires gold_mr on {ex.id}")
            buffers.set_only(ex.id, ex.gold_mr, lock=True)

    report = TrainReport(mode=mode, seed=seed)
    rng = random.Random(seed * 9_176_867 + 13)
    dev_accs: list[float] = []
    for epoch in range(stop.max_epochs):
        insertions = 0
        if mode == "weak":
            for ex in train_ds.examples:
                insertions += explore_and_update_buffer(
                    model,
                    ex,
                    train_ds.env(ex),
                    buffers,
                    K=model.hp.beam_size,
                    sketch=constraints.get(ex.id),
                )
        order = list(range(len(train_ds.examples)))
        rng.shuffle(order)
        for idx in order:
            ex = train_ds.examples[idx]
            programs = buffers.programs(ex.id)
            if not programs:
                continue
            plan = plan_for(ex.tokens, train_ds.env(ex))
            scorer = Scorer(model, plan)
            _, dlogm = _data_gradient(scorer, programs)
            model.apply_gradient({fid: -g for fid, g in dlogm.items()})
        dev_accs.append(accuracy(model, dev_ds))
        report.epochs.append(
            EpochStats(
                epoch=epoch,
                insertions=insertions,
                dev_accuracy=dev_accs[-1],
                buffered_examples=buffers.nonempty_count(),
                buffered_programs=buffers.total_programs(),
            )
        )
        if stop.should_stop(epoch, insertions, dev_accs):
            report.stalled = True
            break
    report.wall_time_s = time.perf_counter() - started
    return report
