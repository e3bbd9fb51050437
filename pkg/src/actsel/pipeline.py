"""Budgeted rounds of select -> synthesize -> remove -> accumulate."""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .clustering import DEFAULT_MAX_ITER, DEFAULT_TOL, Clustering, default_k, dump_clusters, kmeans
from .core import load_seed_dataset, load_templates
from .embeddings import EmbeddingMatrix, FusionSpec, fuse, load_embeddings, normalized
from .errors import BudgetExceedsPool, ConfigError
from .logs import file_handler
from .selectors import aux_source, base_strategy, make_selector
from .synthesis import (
    DEFAULT_QUERIES_PER_ITEM,
    OUTPUT_FORMATS,
    _atomic_write_text,
    derive_seed,
    persist,
    synthesize_item,
)
from .teacher import TeacherClient, TeacherConfig, build_teacher

log = logging.getLogger(__name__)

PRNG_ALGORITHM = "numpy.random.PCG64"
FINE_TUNING_NOTE = "model fine-tuning not performed; SFT-ready dataset emitted instead"


@dataclass
class PathsConfig:
    seed: str = ""
    templates: str = ""
    review_emb: str = ""
    metadata_emb: Optional[str] = None
    user_emb: Optional[str] = None
    output: str = "synthetic.jsonl"
    dump_clusters: Optional[str] = None

    def resolved(self, base: Path) -> "PathsConfig":
        def r(p):
            if p is None:
                return None
            p = Path(p)
            return str(p if p.is_absolute() else base / p)

        return PathsConfig(**{f.name: r(getattr(self, f.name)) for f in fields(self)})


@dataclass
class RunConfig:
    strategy: str = "js"
    budget_rounds: int = 1
    batch_per_round: int = 50
    queries_per_item: int = DEFAULT_QUERIES_PER_ITEM
    lam: float = 1.0
    kmeans_k: Optional[int] = None
    kmeans_max_iter: int = DEFAULT_MAX_ITER
    kmeans_tol: float = DEFAULT_TOL
    recluster: bool = False
    fusion: str = "concat"
    normalize: bool = False
    seed: int = 0
    output_format: str = "pairs"
    teacher: TeacherConfig = field(default_factory=TeacherConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)

    def __post_init__(self):
        base_strategy(self.strategy)
        if self.budget_rounds < 1:
            raise ConfigError("budget_rounds must be >= 1")
        if self.batch_per_round < 1:
            raise ConfigError("batch_per_round must be >= 1")
        if self.queries_per_item < 1:
            raise ConfigError("queries_per_item must be >= 1")
        if self.lam < 0:
            raise ConfigError("lambda must be >= 0")
        if self.kmeans_k is not None and self.kmeans_k < 1:
            raise ConfigError("kmeans_k must be >= 1")
        if self.output_format not in OUTPUT_FORMATS:
            raise ConfigError(f"output_format must be one of {OUTPUT_FORMATS}")
        FusionSpec(self.fusion)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        d["teacher"] = TeacherConfig.from_dict(d.get("teacher"))
        paths = d.get("paths") or {}
        bad = set(paths) - {f.name for f in fields(PathsConfig)}
        if bad:
            raise ConfigError(f"unknown paths keys: {sorted(bad)}")
        d["paths"] = PathsConfig(**paths)
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d


def load_config(path) -> RunConfig:
    """Read a run config JSON; relative paths resolve against the config's directory."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    cfg = RunConfig.from_dict(raw)
    cfg.paths = cfg.paths.resolved(path.parent)
    return cfg


def manifest_path(output) -> Path:
    return Path(str(output) + ".manifest.json")


def log_path(output) -> Path:
    return Path(str(output) + ".log")


def selection_matrix(cfg: RunConfig, dataset) -> EmbeddingMatrix:
    """Build X for the configured strategy, fusing auxiliary signals when asked."""
    ids = dataset.item_ids
    if not cfg.paths.review_emb:
        raise ConfigError("paths.review_emb is required")
    review = load_embeddings(cfg.paths.review_emb, ids)
    source = aux_source(cfg.strategy)
    if source is None:
        X = review
    else:
        aux_path = cfg.paths.metadata_emb if source == "metadata" else cfg.paths.user_emb
        if not aux_path:
            raise ConfigError(f"strategy {cfg.strategy!r} needs paths.{source}_emb")
        aux = load_embeddings(aux_path, ids)
        X = fuse(review, aux, FusionSpec(cfg.fusion, block_normalize=True))
    return normalized(X) if cfg.normalize else X


def cluster_pool(cfg: RunConfig, X: EmbeddingMatrix, pool, seed) -> Clustering:
    data = X.data[np.asarray(sorted(pool))]
    k = min(cfg.kmeans_k or default_k(len(X)), len(data))
    return kmeans(data, k, seed=seed, max_iter=cfg.kmeans_max_iter, tol=cfg.kmeans_tol)


def _clustering_summary(c: Clustering) -> dict:
    return {"k": c.k, "inertia": c.inertia, "iterations": c.iterations_run, "degenerate": c.degenerate}


def run(cfg: RunConfig, teacher: Optional[TeacherClient] = None):
    """Execute all rounds; returns ``(dataset_path, manifest_dict)``."""
    output = Path(cfg.paths.output)
    output.parent.mkdir(parents=True, exist_ok=True)
    pkg_log = logging.getLogger("actsel")
    handler = file_handler(log_path(output))
    prev_level = pkg_log.level
    if pkg_log.getEffectiveLevel() > logging.INFO:
        pkg_log.setLevel(logging.INFO)
    pkg_log.addHandler(handler)
    try:
        return _run(cfg, teacher, output)
    finally:
        pkg_log.removeHandler(handler)
        pkg_log.setLevel(prev_level)
        handler.close()


def _run(cfg: RunConfig, teacher: Optional[TeacherClient], output: Path):
    t0 = time.monotonic()
    if teacher is None:
        teacher = build_teacher(cfg.teacher, cfg.seed)
    dataset = load_seed_dataset(cfg.paths.seed)
    templates = load_templates(cfg.paths.templates)
    n = len(dataset)
    total = cfg.budget_rounds * cfg.batch_per_round
    if total > n:
        raise BudgetExceedsPool(total, n)

    X = selection_matrix(cfg, dataset)
    kind = base_strategy(cfg.strategy)
    clustering = None
    if kind == "js":
        clustering = kmeans(
            X, min(cfg.kmeans_k or default_k(n), n), seed=cfg.seed,
            max_iter=cfg.kmeans_max_iter, tol=cfg.kmeans_tol,
        )
        if cfg.paths.dump_clusters:
            dump_clusters(clustering, dataset.item_ids, cfg.paths.dump_clusters)
    selector = make_selector(cfg.strategy, X, clustering, cfg.lam, cfg.seed)

    log.info("run start", extra={"fields": {"strategy": cfg.strategy, "n": n, "dim": X.dim}})
    remaining = set(range(n))
    pairs = []
    rounds = []
    failures = []
    clusterings = [_clustering_summary(clustering)] if clustering is not None else []

    for t in range(1, cfg.budget_rounds + 1):
        rt = time.monotonic()
        if t > 1 and cfg.recluster and kind == "js":
            clustering = cluster_pool(cfg, X, remaining, derive_seed(cfg.seed, "recluster", t))
            selector.recluster(X, clustering)
            clusterings.append(_clustering_summary(clustering))

        picks, scores = [], []
        for _ in range(cfg.batch_per_round):
            i, s = selector.next(remaining)
            remaining.discard(i)
            picks.append(i)
            scores.append(s)

        def work(i, t=t):
            return synthesize_item(
                dataset[i], templates, teacher, cfg.queries_per_item,
                rng=np.random.default_rng(derive_seed(cfg.seed, t, i)), round=t, seed=cfg.seed,
            )

        with ThreadPoolExecutor(max_workers=cfg.teacher.max_in_flight) as pool:
            results = list(pool.map(work, picks))  # map keeps submission order

        round_pairs = [p for r in results for p in r.pairs]
        pairs.extend(round_pairs)
        for r in results:
            failures.extend(r.failures)
        rounds.append(
            {
                "round": t,
                "selected": picks,
                "item_ids": [dataset[i].item_id for i in picks],
                "scores": scores,
                "pairs": len(round_pairs),
                "items_failed": [r.item_id for r in results if len(r.pairs) < cfg.queries_per_item],
                "flags": {r.item_id: r.flags for r in results if r.flags},
            }
        )
        log.info(
            "round done",
            extra={"fields": {"round": t, "pairs": len(round_pairs), "seconds": round(time.monotonic() - rt, 4)}},
        )

    persist(pairs, output, cfg.output_format)
    manifest = {
        "tool": {"name": "actsel", "version": __version__},
        "config": cfg.to_dict(),
        "prng": PRNG_ALGORITHM,
        "fine_tuning": FINE_TUNING_NOTE,
        "pool_size": n,
        "dim": X.dim,
        "clustering": clusterings,
        "rounds": rounds,
        "teacher_calls": dict(teacher.stats),
        "pairs_total": len(pairs),
        "failures": failures,
        "outputs": {"dataset": output.name, "log": log_path(output).name},
    }
    _atomic_write_text(manifest_path(output), json.dumps(manifest, indent=2, ensure_ascii=False) + "\n")
    log.info(
        "run done",
        extra={"fields": {"pairs": len(pairs), "failures": len(failures), "seconds": round(time.monotonic() - t0, 4)}},
    )
    return output, manifest
