"""Per-item synthetic query generation with 20-title ground truth."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import GROUND_TRUTH_SIZE, QueryTemplateSet, SeedSample, SyntheticPair
from .errors import ConfigError, TeacherError, TooFewTitles
from .prompts import N_REVIEWS, N_SAMPLE_QUERIES, render_query_prompt, render_recommendation_prompt

log = logging.getLogger(__name__)

OUTPUT_FORMATS = ("pairs", "sft")
DEFAULT_QUERIES_PER_ITEM = 5
TITLE_REPROMPTS = 1

_ENUM = re.compile(r"^\s*\d+[\.\)]\s*")
_BULLET = re.compile(r"^\s*[-*]\s*")


@dataclass
class ParsedTitleList:
    titles: list[str]
    raw: str


def _strip_marker(line: str) -> str:
    # one marker per line, so parse -> render -> parse is a fixed point
    stripped, n = _ENUM.subn("", line, count=1)
    if not n:
        stripped = _BULLET.sub("", line, count=1)
    return stripped.strip()


def parse_title_list(text: str, expected: int = GROUND_TRUTH_SIZE) -> ParsedTitleList:
    titles = [t for t in (_strip_marker(line) for line in text.splitlines()) if t]
    if len(titles) < expected:
        raise TooFewTitles(len(titles), expected)
    return ParsedTitleList(titles[:expected], text)


def render_title_list(titles) -> str:
    return "\n".join(f"{i}. {t}" for i, t in enumerate(titles, start=1))


def derive_seed(*parts) -> int:
    """Stable 63-bit seed from arbitrary parts (independent of PYTHONHASHSEED)."""
    h = hashlib.sha256("\x1f".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(h[:8], "big") >> 1


@dataclass
class ItemSynthesis:
    item_id: str
    pairs: list[SyntheticPair] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)
    templates_used: list[int] = field(default_factory=list)
    reviews_used: list[int] = field(default_factory=list)


def _clean_query(text: str) -> str:
    q = text.strip()
    if len(q) >= 2 and q[0] == q[-1] and q[0] in "\"'":
        q = q[1:-1].strip()
    return q


def synthesize_item(
    sample: SeedSample,
    templates: QueryTemplateSet,
    teacher,
    queries_per_item: int = DEFAULT_QUERIES_PER_ITEM,
    rng: np.random.Generator | None = None,
    round: int = 1,
    seed: int = 0,
) -> ItemSynthesis:
    """Generate up to ``queries_per_item`` (query, 20 titles) pairs for one item.

    Five templates and three reviews are drawn once per item and reused for
    every query. Items with fewer than three reviews are sampled with
    replacement and flagged. A failing query slot is logged and skipped; the
    other slots still run.
    """
    if queries_per_item < 1:
        raise ConfigError("queries_per_item must be >= 1")
    if rng is None:
        rng = np.random.default_rng(derive_seed(seed, round, sample.item_id))
    out = ItemSynthesis(sample.item_id)

    t_idx = rng.choice(len(templates.templates), N_SAMPLE_QUERIES, replace=False)
    short = len(sample.reviews) < N_REVIEWS
    r_idx = rng.choice(len(sample.reviews), N_REVIEWS, replace=short)
    if short:
        out.flags.append("reviews_sampled_with_replacement")
    out.templates_used = [int(i) for i in t_idx]
    out.reviews_used = [int(i) for i in r_idx]

    query_prompt = render_query_prompt(
        [templates.templates[i] for i in t_idx], [sample.reviews[i] for i in r_idx]
    )

    for k in range(1, queries_per_item + 1):
        try:
            res = teacher.complete(query_prompt, seed=derive_seed(seed, round, sample.item_id, k, "query"))
            query = _clean_query(res.text)
            if not query:
                raise TeacherError("teacher returned an empty query")
            rec_prompt = render_recommendation_prompt(query)
            for attempt in range(TITLE_REPROMPTS + 1):
                res = teacher.complete(
                    rec_prompt, seed=derive_seed(seed, round, sample.item_id, k, "titles", attempt)
                )
                try:
                    parsed = parse_title_list(res.text)
                    break
                except TooFewTitles:
                    if attempt == TITLE_REPROMPTS:
                        raise
                    log.info("item %s k=%d: too few titles, re-prompting", sample.item_id, k)
        except TeacherError as exc:
            log.warning("item %s k=%d failed: %s", sample.item_id, k, exc)
            out.failures.append({"item_id": sample.item_id, "round": round, "k": k, "error": f"{type(exc).__name__}: {exc}"})
            continue
        out.pairs.append(SyntheticPair(query, parsed.titles, sample.item_id, round, k, list(out.flags)))
    return out


def to_sft(pair: SyntheticPair) -> dict:
    return {
        "prompt": render_recommendation_prompt(pair.query),
        "completion": render_title_list(pair.ground_truth),
    }


def _atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def persist(pairs, path, fmt: str = "pairs") -> None:
    """Write pairs as JSONL in the given order, atomically."""
    if fmt not in OUTPUT_FORMATS:
        raise ConfigError(f"output format must be one of {OUTPUT_FORMATS}, got {fmt!r}")
    encode = to_sft if fmt == "sft" else SyntheticPair.to_json
    lines = [json.dumps(encode(p), ensure_ascii=False) + "\n" for p in pairs]
    _atomic_write_text(path, "".join(lines))


def load_pairs(path) -> list[SyntheticPair]:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                d = json.loads(line)
                pairs.append(SyntheticPair(d["query"], d["ground_truth"], d["source_item_id"], d["round"], d["k"]))
    return pairs
