"""Domain types and seed-corpus ingestion."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .errors import (
    DuplicateItemId,
    EmptyDataset,
    MalformedLine,
    MissingField,
    TooFewTemplates,
)

MIN_TEMPLATES = 5
GROUND_TRUTH_SIZE = 20


@dataclass(frozen=True)
class SeedSample:
    item_id: str
    metadata: dict[str, str]
    reviews: tuple[str, ...]
    user_ids: tuple[str, ...] = ()

    @property
    def title(self) -> str:
        return self.metadata["title"]

    def to_json(self) -> dict:
        return {
            "item_id": self.item_id,
            "metadata": dict(self.metadata),
            "reviews": list(self.reviews),
            "user_ids": list(self.user_ids),
        }


@dataclass(frozen=True)
class SeedDataset:
    samples: tuple[SeedSample, ...]

    def __post_init__(self):
        if not self.samples:
            raise EmptyDataset()
        seen = set()
        for s in self.samples:
            if s.item_id in seen:
                raise DuplicateItemId(s.item_id)
            seen.add(s.item_id)

    def __len__(self) -> int:
        return len(self.samples)

    def __getitem__(self, i: int) -> SeedSample:
        return self.samples[i]

    @property
    def size(self) -> int:
        return len(self.samples)

    @property
    def item_ids(self) -> list[str]:
        return [s.item_id for s in self.samples]


@dataclass(frozen=True)
class QueryTemplateSet:
    templates: tuple[str, ...]

    def __post_init__(self):
        if len(self.templates) < MIN_TEMPLATES:
            raise TooFewTemplates(len(self.templates), MIN_TEMPLATES)

    def __len__(self) -> int:
        return len(self.templates)


@dataclass
class SyntheticPair:
    query: str
    ground_truth: list[str]
    source_item_id: str
    round: int
    k: int
    flags: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "query": self.query,
            "ground_truth": list(self.ground_truth),
            "source_item_id": self.source_item_id,
            "round": self.round,
            "k": self.k,
        }


def _parse_sample(obj, line_no: int) -> SeedSample:
    if not isinstance(obj, dict):
        raise MalformedLine(line_no, "expected a JSON object")

    item_id = obj.get("item_id")
    if not isinstance(item_id, str) or not item_id:
        raise MissingField("item_id", line_no)

    metadata = obj.get("metadata")
    if not isinstance(metadata, dict) or not isinstance(metadata.get("title"), str):
        raise MissingField("metadata", line_no)
    if not all(isinstance(v, str) for v in metadata.values()):
        raise MissingField("metadata", line_no)

    reviews = obj.get("reviews")
    if (
        not isinstance(reviews, list)
        or not reviews
        or not all(isinstance(r, str) and r.strip() for r in reviews)
    ):
        raise MissingField("reviews", line_no)

    user_ids = obj.get("user_ids", [])
    if not isinstance(user_ids, list) or not all(isinstance(u, str) for u in user_ids):
        raise MissingField("user_ids", line_no)

    return SeedSample(item_id, dict(metadata), tuple(reviews), tuple(user_ids))


def load_seed_dataset(path) -> SeedDataset:
    """Read a seed JSONL file. Line numbers in errors are 1-based."""
    samples = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedLine(line_no, exc.msg) from exc
            sample = _parse_sample(obj, line_no)
            if sample.item_id in seen:
                raise DuplicateItemId(sample.item_id)
            seen.add(sample.item_id)
            samples.append(sample)
    if not samples:
        raise EmptyDataset()
    return SeedDataset(tuple(samples))


def dump_seed_dataset(dataset: SeedDataset | Iterable[SeedSample], path) -> None:
    samples = dataset.samples if isinstance(dataset, SeedDataset) else dataset
    with open(path, "w", encoding="utf-8") as fh:
        for s in samples:
            fh.write(json.dumps(s.to_json(), ensure_ascii=False) + "\n")


def load_templates(path) -> QueryTemplateSet:
    text = Path(path).read_text(encoding="utf-8")
    templates = tuple(line.strip() for line in text.splitlines() if line.strip())
    return QueryTemplateSet(templates)
