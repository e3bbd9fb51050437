"""Command-line front end: ``actsel {select,synthesize,evaluate,run,mock-serve}``.

Precedence for every setting is flag > ``--config`` file > built-in default.
Exit codes: 0 ok, 2 configuration error, 3 input validation error, 4 teacher
exhausted (nothing could be generated).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys

import numpy as np

from . import __version__
from .clustering import default_k, dump_clusters, kmeans
from .core import load_seed_dataset, load_templates
from .errors import ActselError, BudgetExceedsPool, ConfigError, TeacherError, ValidationError
from .evaluation import evaluate, load_records
from .logs import LEVELS, setup_logging
from .pipeline import RunConfig, load_config, manifest_path, run, selection_matrix
from .selectors import STRATEGIES, base_strategy, make_selector
from .synthesis import OUTPUT_FORMATS, _atomic_write_text, derive_seed, persist, synthesize_item
from .teacher import API_KEY_ENV, build_teacher, make_mock_server

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_INPUT, EXIT_TEACHER = 0, 2, 3, 4

STRATEGY_HELP = "selection strategy, one of: " + ", ".join(STRATEGIES)


# --- config merging ----------------------------------------------------------------

# flag dest -> RunConfig field
_TOP = {
    "strategy": "strategy",
    "budget_rounds": "budget_rounds",
    "batch_per_round": "batch_per_round",
    "queries_per_item": "queries_per_item",
    "lam": "lam",
    "k_clusters": "kmeans_k",
    "seed": "seed",
    "format": "output_format",
    "recluster": "recluster",
    "normalize": "normalize",
    "fusion": "fusion",
}
_PATHS = {
    "seed_data": "seed",
    "templates": "templates",
    "review_emb": "review_emb",
    "metadata_emb": "metadata_emb",
    "user_emb": "user_emb",
    "output": "output",
    "dump_clusters": "dump_clusters",
}
_TEACHER = {
    "teacher": "provider",
    "endpoint": "endpoint",
    "model": "model",
    "temperature": "temperature",
    "max_in_flight": "max_in_flight",
}


def effective_config(args) -> RunConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else RunConfig()

    def picked(mapping):
        return {
            field: getattr(args, dest)
            for dest, field in mapping.items()
            if getattr(args, dest, None) is not None
        }

    paths = dataclasses.replace(cfg.paths, **{k: str(v) for k, v in picked(_PATHS).items()})
    teacher = dataclasses.replace(cfg.teacher, **picked(_TEACHER))
    return dataclasses.replace(cfg, paths=paths, teacher=teacher, **picked(_TOP))


# --- subcommands -----------------------------------------------------------------------


def cmd_select(args) -> int:
    cfg = effective_config(args)
    budget = args.budget if args.budget is not None else cfg.budget_rounds * cfg.batch_per_round
    if not cfg.paths.seed:
        raise ConfigError("--seed-data is required")
    dataset = load_seed_dataset(cfg.paths.seed)
    if budget < 0 or budget > len(dataset):
        raise BudgetExceedsPool(budget, len(dataset))
    X = selection_matrix(cfg, dataset)
    clustering = None
    if base_strategy(cfg.strategy) == "js":
        k = min(cfg.kmeans_k or default_k(len(dataset)), len(dataset))
        clustering = kmeans(X, k, seed=cfg.seed, max_iter=cfg.kmeans_max_iter, tol=cfg.kmeans_tol)
        if cfg.paths.dump_clusters:
            dump_clusters(clustering, dataset.item_ids, cfg.paths.dump_clusters)

    selector = make_selector(cfg.strategy, X, clustering, cfg.lam, cfg.seed)
    remaining = set(range(len(dataset)))
    lines = []
    for rank in range(1, budget + 1):
        i, scores = selector.next(remaining)
        remaining.discard(i)
        lines.append(
            json.dumps({"rank": rank, "index": i, "item_id": dataset[i].item_id, "scores": scores}) + "\n"
        )
    out = args.output or cfg.paths.output
    _atomic_write_text(out, "".join(lines))
    log.info("selected %d items", budget, extra={"fields": {"strategy": cfg.strategy, "output": str(out)}})
    return EXIT_OK


def _read_selected(path) -> list[str]:
    ids = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if line.strip():
                try:
                    ids.append(json.loads(line)["item_id"])
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise ValidationError(f"{path}:{line_no}: expected a select output line") from exc
    return ids


def cmd_synthesize(args) -> int:
    cfg = effective_config(args)
    teacher = build_teacher(cfg.teacher, cfg.seed)
    dataset = load_seed_dataset(cfg.paths.seed)
    templates = load_templates(cfg.paths.templates)
    index = {s.item_id: i for i, s in enumerate(dataset.samples)}
    ids = _read_selected(args.selected)
    missing = [i for i in ids if i not in index]
    if missing:
        raise ValidationError(f"selected ids not in seed data: {missing}")

    pairs, failures = [], []
    for item_id in ids:
        i = index[item_id]
        res = synthesize_item(
            dataset[i], templates, teacher, cfg.queries_per_item,
            rng=np.random.default_rng(derive_seed(cfg.seed, args.round, i)), round=args.round, seed=cfg.seed,
        )
        pairs.extend(res.pairs)
        failures.extend(res.failures)
    persist(pairs, cfg.paths.output, cfg.output_format)
    manifest = {
        "config": cfg.to_dict(),
        "selected": ids,
        "teacher_calls": dict(teacher.stats),
        "pairs_total": len(pairs),
        "failures": failures,
    }
    _atomic_write_text(manifest_path(cfg.paths.output), json.dumps(manifest, indent=2) + "\n")
    if ids and not pairs:
        print(f"actsel: error: teacher produced no pairs ({len(failures)} failures)", file=sys.stderr)
        return EXIT_TEACHER
    return EXIT_OK


def _parse_ks(text: str) -> list[int]:
    try:
        ks = [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"--k expects comma-separated integers, got {text!r}") from exc
    if not ks or min(ks) < 1:
        raise ConfigError("--k needs at least one integer >= 1")
    return ks


def cmd_evaluate(args) -> int:
    ks = _parse_ks(args.k)
    records = load_records(args.pred, args.ref)
    report = evaluate(records, ks, strip_year=not args.no_strip_year, truncate_ideal=args.truncated_idcg)
    _atomic_write_text(args.output, json.dumps(report.to_json(), indent=2) + "\n")
    print(report.table())
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = effective_config(args)
    output, manifest = run(cfg)
    print(json.dumps({"dataset": str(output), "manifest": str(manifest_path(output)), "pairs": manifest["pairs_total"]}))
    if manifest["pairs_total"] == 0 and manifest["failures"]:
        print("actsel: error: teacher produced no pairs", file=sys.stderr)
        return EXIT_TEACHER
    return EXIT_OK


def cmd_mock_serve(args) -> int:
    server = make_mock_server(args.host, args.port, args.seed)
    host, port = server.server_address[:2]
    print(f"mock teacher listening on http://{host}:{port}/v1/chat/completions", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


# --- parser -------------------------------------------------------------------------------


def _common(parser, with_config=True):
    parser.add_argument("--log-level", choices=list(LEVELS), default=None, help="log verbosity (default warn)")
    if with_config:
        parser.add_argument("--config", help="run config JSON; flags override its values")


def _selection_flags(p):
    p.add_argument("--seed-data", help="seed corpus JSONL")
    p.add_argument("--review-emb", help="review embedding JSONL")
    p.add_argument("--metadata-emb", help="metadata embedding JSONL (metadata_* strategies)")
    p.add_argument("--user-emb", help="user-signal embedding JSONL (user_* strategies)")
    p.add_argument("--strategy", choices=STRATEGIES, metavar="STRATEGY", help=STRATEGY_HELP)
    p.add_argument("--lambda", dest="lam", type=float, help="weight of the JS term (default 1.0)")
    p.add_argument("--k-clusters", type=int, help="K-means cluster count (default min(32, N))")
    p.add_argument("--seed", type=int, help="PRNG seed (default 0)")
    p.add_argument("--fusion", choices=["concat", "weighted_sum"], help="fusion of auxiliary embeddings")
    p.add_argument("--normalize", action="store_true", default=None, help="L2-normalize rows of X")
    p.add_argument("--dump-clusters", help="write K-means centers and assignments as JSONL")


def _teacher_flags(p):
    p.add_argument("--teacher", choices=["mock", "http"], help=f"teacher provider; http reads ${API_KEY_ENV}")
    p.add_argument("--endpoint", help="OpenAI-compatible chat-completions URL")
    p.add_argument("--model", help="teacher model name")
    p.add_argument("--temperature", type=float, help="sampling temperature (default 0.8)")
    p.add_argument("--max-in-flight", type=int, help="concurrent request cap (default 4)")
    p.add_argument("--queries-per-item", type=int, help="queries generated per item (default 5)")
    p.add_argument("--format", choices=OUTPUT_FORMATS, help="output schema: raw pairs or SFT prompt/completion")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="actsel",
        description="Budgeted active sample selection and synthetic conversation generation.",
        epilog="strategies: " + ", ".join(STRATEGIES),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("select", help="greedily select seed items", epilog="strategies: " + ", ".join(STRATEGIES))
    _common(p)
    _selection_flags(p)
    p.add_argument("--budget", type=int, help="number of items to select")
    p.add_argument("--output", help="output JSONL of picks")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("synthesize", help="generate query/ground-truth pairs for selected items")
    _common(p)
    p.add_argument("--seed-data", help="seed corpus JSONL")
    p.add_argument("--templates", help="query template file, one per line")
    p.add_argument("--selected", required=True, help="output of `actsel select`")
    p.add_argument("--seed", type=int, help="PRNG seed (default 0)")
    p.add_argument("--round", type=int, default=1, help="round number stamped on pairs")
    p.add_argument("--output", help="synthetic dataset JSONL")
    _teacher_flags(p)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("evaluate", help="Recall@k / NDCG@k of ranked predictions")
    _common(p, with_config=False)
    p.add_argument("--pred", required=True, help='predictions JSONL {"id", "ranked"}')
    p.add_argument("--ref", required=True, help='references JSONL {"id", "ground_truth"}')
    p.add_argument("--k", default="1,5,10,20", help="comma-separated cutoffs")
    p.add_argument("--output", default="report.json", help="report JSON path")
    p.add_argument("--no-strip-year", action="store_true", help="keep trailing (YYYY) when matching titles")
    p.add_argument("--truncated-idcg", action="store_true", help="ideal DCG over min(|gt|, k) hits instead of |gt|")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("run", help="full select/synthesize loop over budget rounds",
                       epilog="strategies: " + ", ".join(STRATEGIES))
    _common(p)
    _selection_flags(p)
    p.add_argument("--templates", help="query template file")
    p.add_argument("--budget-rounds", type=int, help="number of rounds B")
    p.add_argument("--batch-per-round", type=int, help="items selected per round (default 50)")
    p.add_argument("--recluster", action="store_true", default=None, help="recompute K-means each round")
    p.add_argument("--output", help="synthetic dataset JSONL")
    _teacher_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("mock-serve", help="serve the deterministic mock teacher over HTTP")
    _common(p, with_config=False)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8808)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_mock_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level or "warn")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"actsel: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValidationError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"actsel: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except TeacherError as exc:
        print(f"actsel: teacher error: {exc}", file=sys.stderr)
        return EXIT_TEACHER
    except ActselError as exc:
        print(f"actsel: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
