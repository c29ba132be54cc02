"""Synthetic question/table/answer corpus: generation, persistence and
vocabulary utilities.

Each example pairs a templated utterance with a hidden gold program whose
execution result is the example's answer. Tables are small and deliberately
contain repeated values so that programs other than the gold one can hit
the right answer.
"""

from __future__ import annotations

import json
import random
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import executor, mrlang
from .executor import Answer, ExecError, TableEnv, normalize_answer, tokenize
from .mrlang import Program, Sketch

SPLITS = ("train", "dev", "test")


class ParseError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


class InvariantViolation(ValueError):
    def __init__(self, example_id: str, message: str):
        super().__init__(f"example {example_id}: {message}")
        self.example_id = example_id


class InvalidConfig(ValueError):
    pass


@dataclass
class Example:
    id: str
    utterance: str
    table_id: str
    answer: Answer
    gold_mr: Optional[Program] = None
    tokens: tuple[str, ...] = field(init=False)

    def __post_init__(self):
        self.tokens = tokenize(self.utterance)

    @property
    def gold_sketch(self) -> Optional[Sketch]:
        return mrlang.sketch_of(self.gold_mr) if self.gold_mr is not None else None


@dataclass
class Dataset:
    split: str
    examples: list[Example]
    tables: dict[str, TableEnv]

    def env(self, example: Example) -> TableEnv:
        return self.tables[example.table_id]

    def __len__(self) -> int:
        return len(self.examples)


# ---------------------------------------------------------------------------
# Corpus generation


@dataclass
class GenConfig:
    seed: int = 7
    n_train: int = 2000
    n_dev: int = 400
    n_test: int = 400
    min_rows: int = 4
    max_rows: int = 12
    hard_fraction: float = 0.5
    distractor_rate: float = 0.35
    rare_phrase_rate: float = 0.05
    examples_per_table: int = 8
    unseen_tables: bool = True
    # relative weights of the hard template families
    hard_mix: dict = field(
        default_factory=lambda: {
            "filter_count": 0.30,
            "filter_filter_hop": 0.25,
            "comparative_hop": 0.25,
            "superlative_hop": 0.20,
        }
    )

    def validate(self) -> None:
        if min(self.n_train, self.n_dev, self.n_test) < 1:
            raise InvalidConfig("split sizes must be at least 1")
        if not 0.0 <= self.hard_fraction <= 1.0:
            raise InvalidConfig("hard_fraction must lie in [0, 1]")
        if self.min_rows < 2 or self.max_rows < self.min_rows:
            raise InvalidConfig("bad row range")
        if abs(sum(self.hard_mix.values()) - 1.0) > 1e-9:
            raise InvalidConfig("hard_mix weights must sum to 1")


def cold_start_stress(cfg: GenConfig) -> GenConfig:
    """Preset that makes the corpus mostly multi-statement questions."""
    cfg.hard_fraction = 0.8
    return cfg


# Column pools per theme: (name, kind, value pool or numeric range).
# Numeric ranges overlap across columns on purpose, so a number mentioned in
# an utterance is often a plausible literal for several columns. Theme
# vocabularies are kept distinct so one annotation does not teach the
# whole corpus at once.
_DOMAINS = [
    {
        "noun": "countries",
        "text": [
            ("Country", ["norway", "canada", "china", "france", "kenya", "brazil", "japan", "italy", "spain", "ghana", "peru", "egypt"]),
            ("City", ["oslo", "turin", "athens", "sydney", "lima", "cairo", "denver", "hanoi"]),
            ("League", ["alpha", "beta"]),
        ],
        "num": [
            ("Gold", 0, 14),
            ("Silver", 0, 14),
            ("Year", 1996, 2014),
            ("Rank", 1, 12),
        ],
    },
    {
        "noun": "drivers",
        "text": [
            ("Driver", ["smith", "keller", "ortega", "novak", "banks", "reyes", "osei", "marsh", "liang", "petrov", "abara", "quinn"]),
            ("Team", ["falcons", "comets", "rovers", "wolves", "hornets", "larks"]),
            ("Series", ["sprint", "endurance"]),
        ],
        "num": [
            ("Points", 0, 40),
            ("Wins", 0, 9),
            ("Year", 1998, 2014),
            ("Car", 1, 40),
        ],
    },
    {
        "noun": "products",
        "text": [
            ("Product", ["lamp", "desk", "chair", "stool", "shelf", "bench", "cabinet", "mirror", "easel", "crate", "rug"]),
            ("Region", ["north", "south", "east", "west", "central"]),
            ("Season", ["spring", "autumn"]),
        ],
        "num": [
            ("Units", 2, 40),
            ("Price", 5, 40),
            ("Year", 2000, 2014),
            ("Stores", 1, 12),
        ],
    },
    {
        "noun": "athletes",
        "text": [
            ("Athlete", ["ivanov", "costa", "mbeki", "tanaka", "weber", "rossi", "dubois", "larsen", "moreno", "okafor"]),
            ("Event", ["relay", "hurdles", "marathon", "sprint", "jump"]),
            ("Division", ["junior", "senior"]),
        ],
        "num": [
            ("Medals", 0, 10),
            ("Score", 4, 40),
            ("Year", 1995, 2013),
            ("Heat", 1, 8),
        ],
    },
    {
        "noun": "movies",
        "text": [
            ("Title", ["horizon", "eclipse", "voyager", "summit", "harbor", "willow", "ember", "cascade", "lumen"]),
            ("Studio", ["apex", "borealis", "cinder", "delta"]),
            ("Genre", ["drama", "comedy"]),
        ],
        "num": [
            ("Awards", 0, 9),
            ("Screens", 3, 40),
            ("Year", 1994, 2012),
            ("Weeks", 1, 20),
        ],
    },
    {
        "noun": "ships",
        "text": [
            ("Vessel", ["meridian", "aurora", "petrel", "corsair", "osprey", "zephyr", "galatea", "triton"]),
            ("Port", ["rotterdam", "santos", "mombasa", "keelung", "valencia"]),
            ("Class", ["cargo", "tanker"]),
        ],
        "num": [
            ("Tonnage", 10, 44),
            ("Crew", 6, 18),
            ("Year", 1996, 2012),
            ("Berth", 1, 10),
        ],
    },
    {
        "noun": "bridges",
        "text": [
            ("Bridge", ["ironway", "kestrel", "solway", "marrow", "penrose", "calder", "ashford"]),
            ("County", ["devon", "orkney", "lothian", "tyrone", "clare"]),
            ("Material", ["steel", "stone"]),
        ],
        "num": [
            ("Span", 12, 46),
            ("Lanes", 1, 8),
            ("Year", 1960, 1978),
            ("Toll", 0, 12),
        ],
    },
    {
        "noun": "volcanoes",
        "text": [
            ("Volcano", ["krenok", "tavura", "mosfell", "ulawun", "parinac", "semeru", "lascar"]),
            ("Island", ["luzon", "honshu", "flores", "iceland", "sicily"]),
            ("Status", ["dormant", "active"]),
        ],
        "num": [
            ("Height", 8, 42),
            ("Eruptions", 0, 12),
            ("Year", 1990, 2008),
            ("Vents", 1, 9),
        ],
    },
    {
        "noun": "orchards",
        "text": [
            ("Orchard", ["millbrook", "fernlea", "duncree", "hartwell", "bexley", "ravenor"]),
            ("Variety", ["gala", "braeburn", "pippin", "russet", "bramley"]),
            ("Soil", ["loam", "clay"]),
        ],
        "num": [
            ("Acres", 2, 16),
            ("Trees", 8, 44),
            ("Year", 1988, 2004),
            ("Yield", 3, 17),
        ],
    },
    {
        "noun": "stations",
        "text": [
            ("Station", ["northgate", "brookfield", "eastvale", "kingsmoor", "ferndale", "wexford", "latchmere"]),
            ("Line", ["crimson", "cobalt", "amber", "jade"]),
            ("Zone", ["inner", "outer"]),
        ],
        "num": [
            ("Platforms", 1, 9),
            ("Riders", 5, 40),
            ("Year", 1984, 2002),
            ("Exits", 1, 7),
        ],
    },
]

# Surface phrase banks. Families deliberately share their unigram
# vocabulary (what/which/how many/highest/most/than ...) so weakly-trained
# models confuse them, while each hard family carries many variants whose
# decisive cues live in bigrams; covering a family therefore takes several
# annotations rather than one. "rare" variants are sampled at
# cfg.rare_phrase_rate.
_PHRASES = {
    "count_rows": {
        "common": [
            "how many {noun} are there",
            "how many {noun} are listed",
            "what is the total number of {noun}",
            "count the {noun} in this table",
            "how many {noun} does the table show",
        ],
        "rare": ["state the tally of {noun}"],
    },
    "maximum": {
        "common": [
            "what is the highest {col}",
            "what is the largest {col}",
            "what is the biggest {col} listed",
            "what is the maximum {col} recorded",
            "what is the most {col} seen",
            "what is the top {col}",
        ],
        "rare": ["what is the peak {col} figure"],
    },
    "minimum": {
        "common": [
            "what is the lowest {col}",
            "what is the smallest {col}",
            "what is the fewest {col} listed",
            "what is the minimum {col} recorded",
            "what is the least {col} seen",
        ],
        "rare": ["what is the floor {col} figure"],
    },
    "filter_count": {
        "common": [
            "how many {noun} have a {col} of {val}",
            "how many {noun} are listed with {val} as {col}",
            "how many {noun} show {val} under {col}",
            "how many {noun} carry {col} {val}",
            "how many {noun} with {col} {val} are there",
            "how many {noun} match {val} on {col}",
            "how many {noun} hold {val} in the {col} column",
            "how many {noun} give {val} for {col}",
        ],
        "rare": ["state the tally of {noun} whose {col} equals {val}"],
    },
    "filter_filter_hop": {
        "common": [
            "what {target} is shown for the entry with {col1} {val1} and {col2} {val2}",
            "what {target} goes with {col1} {val1} and {col2} {val2}",
            "what {target} is listed where {col1} is {val1} and {col2} is {val2}",
            "for {col1} {val1} and {col2} {val2} what is the {target}",
            "what {target} matches {col1} {val1} with {col2} {val2}",
            "given {col1} {val1} and {col2} {val2} what is the {target}",
            "what {target} appears when {col1} shows {val1} and {col2} shows {val2}",
            "what {target} belongs to {col1} {val1} under {col2} {val2}",
        ],
        "rare": ["what {target} is recorded where {col1} reads {val1} and {col2} reads {val2}"],
    },
    "comparative_hop_greater": {
        "common": [
            "what {target} has a {col} greater than {val}",
            "what {target} has a {col} later than {val}",
            "what {target} comes after {val} in {col}",
            "what {target} is listed above {val} for {col}",
            "what {target} shows more than {val} in {col}",
            "what {target} has {col} over {val}",
            "what {target} carries a {col} higher than {val}",
        ],
        "rare": ["what {target} is past {val} on {col}"],
    },
    "comparative_hop_less": {
        "common": [
            "what {target} has a {col} less than {val}",
            "what {target} has a {col} earlier than {val}",
            "what {target} comes before {val} in {col}",
            "what {target} is listed below {val} for {col}",
            "what {target} shows fewer than {val} in {col}",
            "what {target} has {col} under {val}",
            "what {target} carries a {col} lower than {val}",
        ],
        "rare": ["what {target} is short of {val} on {col}"],
    },
    "superlative_hop_max": {
        "common": [
            "which {target} has the highest {col}",
            "which {target} shows the largest {col}",
            "what {target} is listed with the biggest {col}",
            "what {target} holds the maximum {col}",
            "which {target} has the most {col}",
            "what is the {target} with the top {col}",
        ],
        "rare": ["which {target} is the number one {col} winner"],
    },
    "superlative_hop_min": {
        "common": [
            "which {target} has the lowest {col}",
            "which {target} shows the smallest {col}",
            "what {target} is listed with the fewest {col}",
            "what {target} holds the minimum {col}",
            "which {target} has the least {col}",
        ],
        "rare": ["which {target} is the last place {col} holder"],
    },
}

_DISTRACTOR_PREFIX = [
    "please tell me",
    "overall",
    "according to this table",
    "can you tell me",
    "just checking",
    "from these records",
]
_DISTRACTOR_SUFFIX = [
    "exactly",
    "for this season",
    "in total",
    "if any",
    "right now",
    "as recorded",
]


def _make_table(rng: random.Random, table_id: str, domain: dict, cfg: GenConfig) -> TableEnv:
    n_rows = rng.randint(cfg.min_rows, cfg.max_rows)
    text_cols = rng.sample(domain["text"], rng.randint(2, min(3, len(domain["text"]))))
    num_cols = rng.sample(domain["num"], rng.randint(2, min(3, len(domain["num"]))))
    columns: list[tuple[str, str]] = []
    col_values: list[list] = []
    for name, pool in text_cols:
        # sample from a narrowed pool so values repeat within the column
        narrowed = rng.sample(pool, min(len(pool), max(2, (n_rows * 2) // 3)))
        columns.append((name, executor.TEXT_KIND))
        col_values.append([rng.choice(narrowed) for _ in range(n_rows)])
    for j, (name, lo, hi) in enumerate(num_cols):
        # shift ranges apart so a number rarely belongs to two columns of
        # the same table; repetition stays within each column
        offset = 0 if "year" in name.lower() else j * 60
        columns.append((name, executor.NUMBER_KIND))
        col_values.append([rng.randint(lo, hi) + offset for _ in range(n_rows)])
    order = list(range(len(columns)))
    rng.shuffle(order)
    columns = [columns[i] for i in order]
    col_values = [col_values[i] for i in order]
    rows = tuple(tuple(col_values[c][r] for c in range(len(columns))) for r in range(n_rows))
    return TableEnv(table_id, tuple(columns), rows)


def _phrase(rng: random.Random, family: str, cfg: GenConfig) -> str:
    bank = _PHRASES[family]
    if bank["rare"] and rng.random() < cfg.rare_phrase_rate:
        return rng.choice(bank["rare"])
    return rng.choice(bank["common"])


def _decorate(rng: random.Random, utterance: str, cfg: GenConfig) -> str:
    if rng.random() < cfg.distractor_rate:
        if rng.random() < 0.5:
            return rng.choice(_DISTRACTOR_PREFIX) + " " + utterance
        return utterance + " " + rng.choice(_DISTRACTOR_SUFFIX)
    return utterance


def _prog(*stmts: mrlang.Expr) -> Program:
    return Program(tuple(stmts))


def _filter_eq(rows, value, column) -> mrlang.Expr:
    return mrlang.Expr(
        "filter_eq", (rows, mrlang.Literal(value), mrlang.ColumnName(column))
    )


def _one_col(f: str, rows, column) -> mrlang.Expr:
    return mrlang.Expr(f, (rows, mrlang.ColumnName(column)))


def _build_example(
    rng: random.Random, env: TableEnv, noun: str, hard: bool, cfg: GenConfig
) -> Optional[tuple[str, Program]]:
    """Pick a template family, fill its slots against the table, and return
    (utterance, gold program), or None when the table cannot host it."""
    num_cols = list(env.numeric_column_names())
    all_cols = list(env.column_names())

    if not hard:
        family = rng.choice(["count_rows", "maximum", "minimum"])
        if family == "count_rows":
            utt = _phrase(rng, family, cfg).format(noun=noun)
            return utt, _prog(mrlang.Expr("count", (mrlang.ALL_ROWS,)))
        col = rng.choice(num_cols)
        func = "maximum" if family == "maximum" else "minimum"
        utt = _phrase(rng, family, cfg).format(col=col.lower())
        return utt, _prog(_one_col(func, mrlang.ALL_ROWS, col))

    family = rng.choices(list(cfg.hard_mix), weights=list(cfg.hard_mix.values()), k=1)[0]

    if family == "filter_count":
        col = rng.choice(all_cols)
        val = rng.choice(env.column_values(col))
        utt = _phrase(rng, family, cfg).format(noun=noun, col=col.lower(), val=val)
        return utt, _prog(_filter_eq(mrlang.ALL_ROWS, val, col), mrlang.Expr("count", (mrlang.VarRef(0),)))

    if family == "filter_filter_hop":
        for _ in range(12):
            c1, c2 = rng.sample(all_cols, 2)
            targets = [c for c in all_cols if c not in (c1, c2)]
            if not targets:
                continue
            target = rng.choice(targets)
            row = rng.randrange(env.n_rows)
            v1, v2 = env.cell(row, c1), env.cell(row, c2)
            utt = _phrase(rng, family, cfg).format(
                target=target.lower(), col1=c1.lower(), val1=v1, col2=c2.lower(), val2=v2
            )
            prog = _prog(
                _filter_eq(mrlang.ALL_ROWS, v1, c1),
                _filter_eq(mrlang.VarRef(0), v2, c2),
                _one_col("hop", mrlang.VarRef(1), target),
            )
            return utt, prog
        return None

    if family == "comparative_hop":
        greater = rng.random() < 0.5
        for _ in range(12):
            col = rng.choice(num_cols)
            values = env.column_values(col)
            val = rng.choice(values)
            keeps = [v for v in values if (v > val if greater else v < val)]
            if not keeps:
                continue
            target = rng.choice([c for c in all_cols if c != col])
            key = "comparative_hop_greater" if greater else "comparative_hop_less"
            utt = _phrase(rng, key, cfg).format(target=target.lower(), col=col.lower(), val=val)
            func = "filter_greater" if greater else "filter_less"
            prog = _prog(
                mrlang.Expr(func, (mrlang.ALL_ROWS, mrlang.Literal(val), mrlang.ColumnName(col))),
                _one_col("hop", mrlang.VarRef(0), target),
            )
            return utt, prog
        return None

    if family == "superlative_hop":
        is_max = rng.random() < 0.5
        col = rng.choice(num_cols)
        target = rng.choice([c for c in all_cols if c != col])
        key = "superlative_hop_max" if is_max else "superlative_hop_min"
        utt = _phrase(rng, key, cfg).format(target=target.lower(), col=col.lower())
        func = "argmax" if is_max else "argmin"
        prog = _prog(_one_col(func, mrlang.ALL_ROWS, col), _one_col("hop", mrlang.VarRef(0), target))
        return utt, prog

    raise AssertionError(family)


def _make_tables(
    cfg: GenConfig, split: str, salt: int, n_examples: int
) -> tuple[dict[str, TableEnv], dict[str, str]]:
    rng = random.Random(cfg.seed * 1_000_003 + salt)
    n_tables = max(1, n_examples // cfg.examples_per_table)
    tables: dict[str, TableEnv] = {}
    nouns: dict[str, str] = {}
    for t in range(n_tables):
        domain = _DOMAINS[rng.randrange(len(_DOMAINS))]
        tid = f"{split}-t{t:04d}"
        tables[tid] = _make_table(rng, tid, domain, cfg)
        nouns[tid] = domain["noun"]
    return tables, nouns


def _make_examples(
    split: str,
    n: int,
    cfg: GenConfig,
    tables: dict[str, TableEnv],
    nouns: dict[str, str],
) -> list[Example]:
    rng = random.Random(cfg.seed * 7_368_787 + (SPLITS.index(split) + 1) * 104_729)
    table_ids = sorted(tables)
    examples: list[Example] = []
    i = 0
    while len(examples) < n:
        hard = rng.random() < cfg.hard_fraction
        tid = None
        built = None
        for _ in range(20):
            tid = rng.choice(table_ids)
            built = _build_example(rng, tables[tid], nouns[tid], hard, cfg)
            if built is not None:
                break
        if built is None:
            continue
        utterance, gold = built
        utterance = _decorate(rng, utterance, cfg)
        env = tables[tid]
        result = executor.execute(gold, env)
        if isinstance(result, (ExecError, executor.RowSet)):
            continue
        answer = normalize_answer(result)
        example = Example(
            id=f"{split}-{i:05d}",
            utterance=utterance,
            table_id=tid,
            answer=answer,
            gold_mr=gold,
        )
        if not _gold_reachable(example, env):
            continue
        examples.append(example)
        i += 1
    return examples


def _gold_reachable(example: Example, env: TableEnv) -> bool:
    """The gold program must live inside the constrained action space so
    full supervision is always consistent with search."""
    gc = executor.grammar_context(env, example.tokens, max_len=len(example.gold_mr))
    return mrlang.actions_of_program(gc, example.gold_mr) is not None


def generate_corpus(cfg: GenConfig) -> tuple[Dataset, Dataset, Dataset]:
    """Deterministically generate train/dev/test datasets."""
    cfg.validate()
    sizes = {"train": cfg.n_train, "dev": cfg.n_dev, "test": cfg.n_test}
    out = []
    shared: Optional[tuple[dict, dict]] = None
    for salt, split in enumerate(SPLITS):
        if cfg.unseen_tables:
            tables, nouns = _make_tables(cfg, split, salt, sizes[split])
        else:
            if shared is None:
                shared = _make_tables(cfg, "train", 0, sizes["train"])
            tables, nouns = shared
        out.append(Dataset(split, _make_examples(split, sizes[split], cfg, tables, nouns), tables))
    return tuple(out)  # type: ignore[return-value]


# ---------------------------------------------------------------------------
# Persistence


def _answer_to_json(answer: Answer):
    return answer if not isinstance(answer, list) else list(answer)


def save_dataset(dataset: Dataset, out_dir: Path | str) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{dataset.split}.jsonl"
    with open(path, "w", encoding="utf-8") as handle:
        for ex in dataset.examples:
            record = {
                "id": ex.id,
                "utterance": ex.utterance,
                "table_id": ex.table_id,
                "answer": _answer_to_json(ex.answer),
            }
            if ex.gold_mr is not None:
                record["gold_mr"] = mrlang.print_program(ex.gold_mr)
            handle.write(json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n")
    return path


def save_corpus(datasets: Sequence[Dataset], out_dir: Path | str) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tables: dict[str, TableEnv] = {}
    for ds in datasets:
        save_dataset(ds, out_dir)
        tables.update(ds.tables)
    executor.save_tables(tables, out_dir / "tables.json")


def load_dataset(path: Path | str, tables: dict[str, TableEnv], split: str) -> Dataset:
    examples: list[Example] = []
    seen_ids: set[str] = set()
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(str(exc), line_no) from exc
            for key in ("id", "utterance", "table_id", "answer"):
                if key not in record:
                    raise ParseError(f"missing field {key!r}", line_no)
            gold = None
            if record.get("gold_mr"):
                try:
                    gold = mrlang.parse_program(record["gold_mr"])
                except mrlang.MRError as exc:
                    raise ParseError(f"bad gold_mr: {exc}", line_no) from exc
            try:
                answer = normalize_answer(record["answer"])
            except executor.TableError as exc:
                raise ParseError(str(exc), line_no) from exc
            ex = Example(
                id=record["id"],
                utterance=record["utterance"],
                table_id=record["table_id"],
                answer=answer,
                gold_mr=gold,
            )
            if ex.id in seen_ids:
                raise InvariantViolation(ex.id, "duplicate id")
            seen_ids.add(ex.id)
            if ex.table_id not in tables:
                raise InvariantViolation(ex.id, f"unknown table {ex.table_id}")
            if gold is not None:
                result = executor.execute(gold, tables[ex.table_id])
                if not executor.answers_match(result, ex.answer):
                    raise InvariantViolation(ex.id, "gold_mr does not execute to the answer")
            examples.append(ex)
    return Dataset(split, examples, tables)


def load_corpus(corpus_dir: Path | str) -> tuple[Dataset, Dataset, Dataset]:
    corpus_dir = Path(corpus_dir)
    tables = executor.load_tables(corpus_dir / "tables.json")
    out = tuple(
        load_dataset(corpus_dir / f"{split}.jsonl", tables, split) for split in SPLITS
    )
    return out  # type: ignore[return-value]


# ---------------------------------------------------------------------------
# Vocabulary


def vocab_of(dataset: Dataset) -> tuple[str, ...]:
    """Sorted distinct tokens of the dataset's examples."""
    if not dataset.examples:
        raise InvalidConfig("empty dataset has no vocabulary")
    seen: set[str] = set()
    for ex in dataset.examples:
        seen.update(ex.tokens)
    return tuple(sorted(seen))


def bag_of_words(tokens: Sequence[str], vocab: Sequence[str]) -> list[int]:
    """Occurrence counts per vocabulary word; unknown tokens are ignored."""
    counts = Counter(tokens)
    return [counts.get(word, 0) for word in vocab]
