"""Embedding ingestion and fusion of auxiliary signal vectors."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (
    ConfigError,
    DimMismatch,
    DimMismatchForSum,
    DuplicateItemId,
    EmptyDataset,
    IdMisalignment,
    MalformedLine,
    MissingAux,
    MissingField,
    MissingId,
    NonFiniteValue,
)

FUSION_MODES = ("review_only", "concat", "weighted_sum")


@dataclass(frozen=True)
class EmbeddingMatrix:
    data: np.ndarray
    item_ids: tuple[str, ...]

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape[0] == 0 or data.shape[1] == 0:
            raise DimMismatch(0, data.shape, "(N, d) with N, d >= 1")
        if data.shape[0] != len(self.item_ids):
            raise IdMisalignment(min(data.shape[0], len(self.item_ids)))
        bad = np.argwhere(~np.isfinite(data))
        if len(bad):
            raise NonFiniteValue(int(bad[0][0]), int(bad[0][1]))
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "item_ids", tuple(self.item_ids))

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def __len__(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class FusionSpec:
    mode: str = "review_only"
    weights: tuple[float, float] = (1.0, 1.0)
    # L2-normalize each source's rows before combining
    block_normalize: bool = False

    def __post_init__(self):
        if self.mode not in FUSION_MODES:
            raise ConfigError(f"unknown fusion mode {self.mode!r}; choose from {FUSION_MODES}")
        w_r, w_a = self.weights
        if w_r < 0 or w_a < 0 or (w_r == 0 and w_a == 0):
            raise ConfigError(f"fusion weights must be non-negative and not both zero: {self.weights}")


def load_embeddings(path, expected_ids: Sequence[str]) -> EmbeddingMatrix:
    """Read an embedding JSONL file and order its rows like ``expected_ids``.

    Rows for ids not in ``expected_ids`` are ignored. ``d`` is taken from the
    first vector in the file; errors report 0-based file row numbers.
    """
    vectors: dict[str, list] = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        row = -1
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            row += 1
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedLine(line_no, exc.msg) from exc
            if not isinstance(obj, dict) or not isinstance(obj.get("item_id"), str):
                raise MissingField("item_id", line_no)
            vec = obj.get("vector")
            if not isinstance(vec, list) or not vec:
                raise MissingField("vector", line_no)
            if dim is None:
                dim = len(vec)
            elif len(vec) != dim:
                raise DimMismatch(row, len(vec), dim)
            for col, v in enumerate(vec):
                # json accepts NaN/Infinity literals; null and strings land here too
                if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                    raise NonFiniteValue(row, col)
            if obj["item_id"] in vectors:
                raise DuplicateItemId(obj["item_id"])
            vectors[obj["item_id"]] = vec

    if not expected_ids:
        raise EmptyDataset("expected id list")
    rows = []
    for item_id in expected_ids:
        if item_id not in vectors:
            raise MissingId(item_id)
        rows.append(vectors[item_id])
    return EmbeddingMatrix(np.asarray(rows, dtype=np.float64), tuple(expected_ids))


def l2_normalize_rows(data: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(data, axis=1, keepdims=True)
    # zero rows stay zero
    return data / np.where(norms > 0, norms, 1.0)


def normalized(emb: EmbeddingMatrix) -> EmbeddingMatrix:
    return EmbeddingMatrix(l2_normalize_rows(emb.data), emb.item_ids)


def fuse(
    review: EmbeddingMatrix, aux: Optional[EmbeddingMatrix], spec: FusionSpec
) -> EmbeddingMatrix:
    if spec.mode == "review_only":
        return review
    if aux is None:
        raise MissingAux(spec.mode)
    if len(aux) != len(review):
        raise IdMisalignment(min(len(aux), len(review)))
    for row, (a, b) in enumerate(zip(review.item_ids, aux.item_ids)):
        if a != b:
            raise IdMisalignment(row)

    x_r, x_a = review.data, aux.data
    if spec.block_normalize:
        x_r, x_a = l2_normalize_rows(x_r), l2_normalize_rows(x_a)

    if spec.mode == "concat":
        out = np.hstack([x_r, x_a])
    else:
        if review.dim != aux.dim:
            raise DimMismatchForSum(review.dim, aux.dim)
        w_r, w_a = spec.weights
        out = w_r * x_r + w_a * x_a
    return EmbeddingMatrix(out, review.item_ids)
