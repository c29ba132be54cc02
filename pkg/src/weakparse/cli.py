"""Command-line entry point.

Subcommands: gen (corpus generation), train (weak/full), loop (iterative
active-annotation training), eval (accuracy of a checkpoint), compare
(experiment grids), serve (annotation service + UI), spuriousness
(per-example spurious-program counts).

Every flag can also come from an INI config file (section per module) and
from WEAKPARSE_* environment variables; the command line wins.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
import threading
import time
from dataclasses import asdict
from pathlib import Path

from . import active, dataset as ds, executor, loop, model as pm, supervision

EXIT_USAGE = 2
EXIT_SERVICE_UNREACHABLE = 3

_CONFIG_KEYS = {
    # section, key, type
    "seed": ("run", "seed", int),
    "corpus": ("run", "corpus", str),
    "out": ("run", "out", str),
    "n_train": ("dataset", "n_train", int),
    "n_dev": ("dataset", "n_dev", int),
    "n_test": ("dataset", "n_test", int),
    "hard_fraction": ("dataset", "hard_fraction", float),
    "heuristic": ("active", "heuristic", str),
    "supervision": ("supervision", "kind", str),
    "budget": ("loop", "budget", int),
    "iterations": ("loop", "iterations", int),
    "annotator": ("loop", "annotator", str),
    "start": ("loop", "start", str),
    "beam_size": ("model", "beam_size", int),
    "learning_rate": ("model", "learning_rate", float),
    "l2": ("model", "l2", float),
    "buffer_capacity": ("model", "buffer_capacity", int),
    "max_epochs": ("model", "max_epochs", int),
    "service_url": ("service", "url", str),
    "port": ("service", "port", int),
}


def _config_defaults(path: str | None) -> dict:
    """Defaults from the INI file, then WEAKPARSE_* environment overrides."""
    out: dict = {}
    if path:
        parser = configparser.ConfigParser()
        read = parser.read(path)
        if not read:
            raise FileNotFoundError(path)
        for flag, (section, key, cast) in _CONFIG_KEYS.items():
            if parser.has_option(section, key):
                out[flag] = cast(parser.get(section, key))
    for flag, (_, _, cast) in _CONFIG_KEYS.items():
        env_key = f"WEAKPARSE_{flag.upper()}"
        if env_key in os.environ:
            out[flag] = cast(os.environ[env_key])
    return out


def _banner(args: argparse.Namespace, command: str) -> None:
    effective = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "json")}
    print(f"# weakparse {command} " + json.dumps(effective, sort_keys=True, default=str))


def _emit(args, payload: dict) -> None:
    if getattr(args, "json", False):
        print(json.dumps(payload, sort_keys=True, default=str))
    else:
        for key, value in payload.items():
            print(f"{key}: {value}")


def _load_corpus(path: str):
    return ds.load_corpus(path)


def cmd_gen(args) -> int:
    cfg = ds.GenConfig(
        seed=args.seed,
        n_train=args.n_train,
        n_dev=args.n_dev,
        n_test=args.n_test,
        hard_fraction=args.hard_fraction,
    )
    if args.preset == "cold-start-stress":
        ds.cold_start_stress(cfg)
    try:
        cfg.validate()
    except ds.InvalidConfig as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    datasets = ds.generate_corpus(cfg)
    ds.save_corpus(datasets, args.out)
    train = datasets[0]
    families: dict[str, int] = {}
    for ex in train.examples:
        name = "+".join(ex.gold_sketch.funcs)
        families[name] = families.get(name, 0) + 1
    spurious = 0
    probe = train.examples[:: max(1, len(train.examples) // 100)]
    for ex in probe:
        if executor.first_spurious(
            train.env(ex), ex.tokens, ex.answer, ex.gold_mr,
            max_len=len(ex.gold_mr) + 1, budget=100_000,
        ):
            spurious += 1
    _emit(
        args,
        {
            "out": args.out,
            "sizes": f"{len(datasets[0])}/{len(datasets[1])}/{len(datasets[2])}",
            "template_mix": json.dumps(families, sort_keys=True),
            "spurious_rate_probe": round(spurious / len(probe), 3),
        },
    )
    return 0


def cmd_train(args) -> int:
    datasets = _load_corpus(args.corpus)
    cfg = _experiment_config(args, budget_override=0)
    if args.mode == "weak":
        model, buffers, report = train_weak_only(cfg, datasets)
        payload = weak_training_summary(cfg, datasets, model, report)
    else:
        model, buffers, payload = loop.run_full_supervision(cfg, datasets=datasets)
    if args.out:
        pm.save_model(model, args.out)
        payload["checkpoint"] = args.out
    _emit(args, payload)
    return 0


def train_weak_only(cfg: loop.ExperimentConfig, datasets):
    """Plain weak training, seeded identically to the loop's first phase."""
    model = pm.ParserModel(cfg.hyperparams())
    buffers = pm.MemoryBuffer(capacity=cfg.buffer_capacity)
    if cfg.start == "warm":
        loop.warm_start(buffers, datasets[0], model)
    report = pm.train(
        model,
        datasets[0],
        datasets[1],
        buffers,
        mode="weak",
        stop=pm.StallCriterion(max_epochs=cfg.max_epochs_initial),
        seed=cfg.seed * 1000,
    )
    return model, buffers, report


def weak_training_summary(cfg, datasets, model, report) -> dict:
    return {
        "mode": "weak",
        "seed": cfg.seed,
        "epochs": len(report.epochs),
        "stalled": report.stalled,
        "train_accuracy": pm.accuracy(model, datasets[0]),
        "dev_accuracy": pm.accuracy(model, datasets[1]),
        "test_accuracy": pm.accuracy(model, datasets[2]),
    }


def cmd_eval(args) -> int:
    datasets = _load_corpus(args.corpus)
    split = {"train": 0, "dev": 1, "test": 2}[args.split]
    model = pm.load_model(args.model) if args.model else pm.ParserModel()
    acc = pm.accuracy(model, datasets[split])
    _emit(args, {"split": args.split, "accuracy": round(acc, 4)})
    return 0


def _experiment_config(args, budget_override=None) -> loop.ExperimentConfig:
    return loop.ExperimentConfig(
        corpus_dir=args.corpus,
        seed=args.seed,
        heuristic=getattr(args, "heuristic", "correctness"),
        supervision_kind=getattr(args, "supervision", supervision.FULL_MR),
        budget=budget_override if budget_override is not None else args.budget,
        iterations=getattr(args, "iterations", 1),
        annotator=getattr(args, "annotator", "oracle"),
        start=getattr(args, "start", "cold"),
        beam_size=args.beam_size,
        learning_rate=args.learning_rate,
        l2=args.l2,
        buffer_capacity=args.buffer_capacity,
        max_epochs_initial=args.max_epochs,
        max_epochs_iteration=getattr(args, "max_epochs_iteration", 10),
        out_dir=getattr(args, "out", None),
        service_url=getattr(args, "service_url", "http://127.0.0.1:8731"),
    )


def _parse_seeds(text: str) -> list[int]:
    return [int(s) for s in text.split(",") if s.strip()]


def cmd_loop(args) -> int:
    datasets = _load_corpus(args.corpus)
    seeds = _parse_seeds(args.seeds)
    channel = None
    if args.annotator == "http":
        import httpx

        try:
            httpx.get(args.service_url + "/api/experiment/status", timeout=3.0)
        except Exception as exc:
            print(f"error: annotation service unreachable at {args.service_url}: {exc}",
                  file=sys.stderr)
            return EXIT_SERVICE_UNREACHABLE
    reports = []
    for seed in seeds:
        cfg = _experiment_config(args)
        cfg.seed = seed
        report = loop.run_experiment(cfg, datasets=datasets, channel=channel)
        reports.append(report)
        _emit(
            args,
            {
                "seed": seed,
                "budget": cfg.budget,
                "heuristic": cfg.heuristic,
                "supervision": cfg.supervision_kind,
                "queries": report.queries_total,
                "final_test_accuracy": round(report.final_test_accuracy, 4),
            },
        )
    if args.out and len(reports) > 1:
        import statistics

        mean = statistics.mean(r.final_test_accuracy for r in reports)
        stdev = statistics.stdev(r.final_test_accuracy for r in reports)
        aggregate = {"seeds": seeds, "test_accuracy_mean": mean, "test_accuracy_stdev": stdev}
        with open(Path(args.out) / "aggregate.json", "w", encoding="utf-8") as handle:
            json.dump(aggregate, handle, indent=2, sort_keys=True)
    return 0


def cmd_compare(args) -> int:
    if len(args.budgets) < 2 and len(args.heuristics) < 2 and len(args.kinds) < 2:
        print("error: compare needs at least two configurations "
              "(vary --budgets, --heuristics or --kinds)", file=sys.stderr)
        return EXIT_USAGE
    datasets = _load_corpus(args.corpus)
    cfgs = []
    for heuristic in args.heuristics:
        for kind in args.kinds:
            for budget in args.budgets:
                cfg = _experiment_config(args, budget_override=budget)
                cfg.heuristic = heuristic
                cfg.supervision_kind = kind
                cfgs.append(cfg)
    if len(cfgs) < 2:
        print("error: compare needs at least 2 configurations", file=sys.stderr)
        return EXIT_USAGE
    trends = []
    if args.expect_budget_increasing:
        trends.append(loop.TrendExpectation("test_accuracy", "budget", "increasing"))
    summary = loop.compare_experiments(
        cfgs,
        seeds=_parse_seeds(args.seeds),
        out_dir=args.out,
        expected_trends=trends,
        datasets=datasets,
        progress=lambda msg: print(f"# {msg}", file=sys.stderr),
    )
    print((Path(args.out) / "comparison.txt").read_text(), end="")
    if summary["trend_violations"]:
        print(f"trend violations: {json.dumps(summary['trend_violations'])}")
    return 0


def cmd_serve(args) -> int:
    from . import service as svc

    data_dir = Path(args.data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    state = svc.QueueState.restore(data_dir / "events.jsonl")
    train_ds = None
    datasets = None
    if args.corpus:
        datasets = _load_corpus(args.corpus)
        train_ds = datasets[0]
    static_dir = Path(args.static_dir) if args.static_dir else None
    app = svc.build_app(state, train_ds=train_ds, static_dir=static_dir)

    if args.demo_experiment:
        if datasets is None:
            print("error: --demo-experiment requires --corpus", file=sys.stderr)
            return EXIT_USAGE
        cfg = _experiment_config(args)
        cfg.annotator = "http"
        cfg.service_url = f"http://127.0.0.1:{args.port}"

        def run_demo():
            # give uvicorn a moment to bind
            time.sleep(1.0)
            loop.run_experiment(
                cfg,
                datasets=datasets,
                status=svc.ServiceStatusSink(state),
                channel=loop.HttpChannel(cfg.service_url, timeout_s=cfg.annotator_timeout_s),
            )

        threading.Thread(target=run_demo, daemon=True).start()

    import uvicorn

    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_spuriousness(args) -> int:
    datasets = _load_corpus(args.corpus)
    train = datasets[0]
    rows = ["example_id,family,hits,spurious"]
    spurious_examples = 0
    counted = 0
    for ex in train.examples:
        if args.limit and counted >= args.limit:
            break
        counted += 1
        max_len = len(ex.gold_mr) + 1 if ex.gold_mr else 2
        if args.exact:
            hits, spurious = executor.count_spurious(
                train.env(ex), ex.tokens, ex.answer, ex.gold_mr, max_len
            )
        else:
            found = executor.first_spurious(
                train.env(ex), ex.tokens, ex.answer, ex.gold_mr, max_len,
                budget=args.budget_programs,
            )
            hits, spurious = (1, 1) if found is not None else (0, 0)
        family = "+".join(ex.gold_sketch.funcs) if ex.gold_sketch else ""
        rows.append(f"{ex.id},{family},{hits},{spurious}")
        if spurious >= 1:
            spurious_examples += 1
    if args.out:
        Path(args.out).write_text("\n".join(rows) + "\n")
    rate = spurious_examples / counted if counted else 0.0
    _emit(args, {"examples": counted, "spurious_rate": round(rate, 4), "csv": args.out or ""})
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="weakparse",
        description="weakly-supervised table-question parsing with active annotation",
    )
    parser.add_argument("--config", help="INI config file")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, corpus_required=False):
        p.add_argument("--corpus", required=corpus_required, default=None,
                       help="corpus directory")
        p.add_argument("--seed", type=int, default=1)
        p.add_argument("--json", action="store_true", help="machine-readable output")
        p.add_argument("--beam-size", type=int, default=32, dest="beam_size")
        p.add_argument("--learning-rate", type=float, default=0.1, dest="learning_rate")
        p.add_argument("--l2", type=float, default=1e-4)
        p.add_argument("--buffer-capacity", type=int, default=10, dest="buffer_capacity")
        p.add_argument("--max-epochs", type=int, default=14, dest="max_epochs")

    p = sub.add_parser("gen", help="generate a synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--n-train", type=int, default=2000, dest="n_train")
    p.add_argument("--n-dev", type=int, default=400, dest="n_dev")
    p.add_argument("--n-test", type=int, default=400, dest="n_test")
    p.add_argument("--hard-fraction", type=float, default=0.5, dest="hard_fraction")
    p.add_argument("--preset", choices=["cold-start-stress"], default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train weakly or with full supervision")
    common(p)
    p.add_argument("--mode", choices=["weak", "full"], default="weak")
    p.add_argument("--start", choices=["cold", "warm"], default="cold")
    p.add_argument("--out", help="model checkpoint path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("loop", help="iterative training with annotation queries")
    common(p)
    p.add_argument("--heuristic", choices=list(active.HEURISTICS), default="correctness")
    p.add_argument("--supervision", choices=[supervision.FULL_MR, supervision.SKETCH],
                   default=supervision.FULL_MR)
    p.add_argument("--budget", type=int, default=100)
    p.add_argument("--iterations", type=int, default=3)
    p.add_argument("--annotator", choices=["oracle", "http"], default="oracle")
    p.add_argument("--start", choices=["cold", "warm"], default="cold")
    p.add_argument("--seeds", default="1", help="comma-separated model seeds")
    p.add_argument("--service-url", default="http://127.0.0.1:8731", dest="service_url")
    p.add_argument("--max-epochs-iteration", type=int, default=10, dest="max_epochs_iteration")
    p.add_argument("--out", help="report output directory")
    p.set_defaults(func=cmd_loop)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a split")
    common(p)
    p.add_argument("--model", help="checkpoint path (default: zero weights)")
    p.add_argument("--split", choices=["train", "dev", "test"], default="test")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="run an experiment grid")
    common(p)
    p.add_argument("--budgets", type=int, nargs="+", default=[0, 100])
    p.add_argument("--heuristics", nargs="+", default=["correctness"],
                   choices=list(active.HEURISTICS))
    p.add_argument("--kinds", nargs="+", default=[supervision.FULL_MR],
                   choices=[supervision.FULL_MR, supervision.SKETCH])
    p.add_argument("--seeds", default="1,2,3,4,5")
    p.add_argument("--iterations", type=int, default=1)
    p.add_argument("--start", choices=["cold", "warm"], default="cold")
    p.add_argument("--out", required=True)
    p.add_argument("--expect-budget-increasing", action="store_true",
                   dest="expect_budget_increasing")
    p.add_argument("--max-epochs-iteration", type=int, default=10, dest="max_epochs_iteration")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("serve", help="serve the annotation API and UI")
    p.add_argument("--corpus", help="corpus directory (enables server-side validation)")
    p.add_argument("--data-dir", default="./annotation-data", dest="data_dir")
    p.add_argument("--static-dir", default=None, dest="static_dir",
                   help="built UI assets to serve at /")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8731)
    p.add_argument("--json", action="store_true")
    p.add_argument("--demo-experiment", action="store_true", dest="demo_experiment",
                   help="also run a small human-annotated experiment against this service")
    p.add_argument("--out", help="report output directory for the demo experiment")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--heuristic", choices=list(active.HEURISTICS), default="correctness")
    p.add_argument("--supervision", choices=[supervision.FULL_MR, supervision.SKETCH],
                   default=supervision.FULL_MR)
    p.add_argument("--budget", type=int, default=10)
    p.add_argument("--iterations", type=int, default=1)
    p.add_argument("--start", choices=["cold", "warm"], default="cold")
    p.add_argument("--beam-size", type=int, default=32, dest="beam_size")
    p.add_argument("--learning-rate", type=float, default=0.1, dest="learning_rate")
    p.add_argument("--l2", type=float, default=1e-4)
    p.add_argument("--buffer-capacity", type=int, default=10, dest="buffer_capacity")
    p.add_argument("--max-epochs", type=int, default=14, dest="max_epochs")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("spuriousness", help="count spurious programs per example")
    p.add_argument("--corpus", default=None)
    p.add_argument("--out", help="CSV output path")
    p.add_argument("--limit", type=int, default=0, help="only the first N examples")
    p.add_argument("--exact", action="store_true", help="full counts instead of existence probe")
    p.add_argument("--budget-programs", type=int, default=300_000, dest="budget_programs")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_spuriousness)

    return parser


def main(argv=None) -> int:
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config")
    probe_args, _ = probe.parse_known_args(argv)
    try:
        defaults = _config_defaults(probe_args.config)
    except FileNotFoundError as exc:
        print(f"error: config file not found: {exc}", file=sys.stderr)
        return EXIT_USAGE
    parser = build_parser()
    for group_action in parser._subparsers._group_actions:
        for sub in group_action.choices.values():
            known = {action.dest for action in sub._actions}
            sub.set_defaults(**{k: v for k, v in defaults.items() if k in known})
    args = parser.parse_args(argv)
    if getattr(args, "corpus", "unset") is None:
        print("error: --corpus is required (flag or config)", file=sys.stderr)
        return EXIT_USAGE
    _banner(args, args.command)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
