"""Recall@k and NDCG@k over ranked title lists."""

from __future__ import annotations

import json
import math
import re
import unicodedata
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyRecords, MalformedLine, MissingField, UnmatchedIds, ValidationError

DEFAULT_KS = (1, 5, 10, 20)
METRICS = ("recall", "ndcg")

_YEAR = re.compile(r"\s*\(\d{4}\)$")
_WS = re.compile(r"\s+")


def normalize_title(s: str, strip_year: bool = True) -> str:
    s = unicodedata.normalize("NFC", s).lower()
    s = _WS.sub(" ", s).strip()
    if strip_year:
        s = _YEAR.sub("", s).strip()
    return s


@dataclass
class EvalRecord:
    ranked: list[str]
    ground_truth: list[str]
    id: str = ""

    def __post_init__(self):
        if not self.ranked:
            raise ValidationError(f"record {self.id!r}: empty ranked list")
        if not self.ground_truth:
            raise ValidationError(f"record {self.id!r}: empty ground truth")


def _prepare(ranked, gt, strip_year=True):
    return (
        [normalize_title(t, strip_year) for t in ranked],
        {normalize_title(t, strip_year) for t in gt},
    )


def _hits(ranked_n: Sequence[str], gt_n: set, k: int) -> list[bool]:
    # a reference title counts once, at its first occurrence
    seen = set()
    hits = []
    for t in ranked_n[:k]:
        hit = t in gt_n and t not in seen
        if hit:
            seen.add(t)
        hits.append(hit)
    return hits


def recall_at_k(ranked, gt, k: int, strip_year: bool = True) -> float:
    if k < 1:
        raise ValidationError("k must be >= 1")
    ranked_n, gt_n = _prepare(ranked, gt, strip_year)
    return sum(_hits(ranked_n, gt_n, k)) / len(gt_n)


def ndcg_at_k(ranked, gt, k: int, strip_year: bool = True, truncate_ideal: bool = False) -> float:
    """Binary-relevance NDCG@k.

    The ideal ranking places every reference title at the top, so the score is
    non-decreasing in ``k``. With ``truncate_ideal`` the ideal DCG only counts
    ``min(|gt|, k)`` hits (the common recsys variant, not monotone in ``k``).
    Both agree when ``|gt| == 1``.
    """
    if k < 1:
        raise ValidationError("k must be >= 1")
    ranked_n, gt_n = _prepare(ranked, gt, strip_year)
    dcg = sum(1.0 / math.log2(r + 2) for r, h in enumerate(_hits(ranked_n, gt_n, k)) if h)
    n_ideal = min(len(gt_n), k) if truncate_ideal else len(gt_n)
    idcg = sum(1.0 / math.log2(r + 2) for r in range(n_ideal))
    return dcg / idcg


@dataclass
class EvalReport:
    # cells[k][metric] = {"mean", "se", "n"}
    cells: dict[int, dict[str, dict]]
    flagged: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "metrics": {f"{m}@{k}": self.cells[k][m] for k in sorted(self.cells) for m in METRICS},
            "collapsed_ground_truth": self.flagged,
        }

    def table(self) -> str:
        header = f"{'metric':<12}{'mean':>10}{'se':>10}{'n':>8}"
        rows = [header, "-" * len(header)]
        for k in sorted(self.cells):
            for m in METRICS:
                c = self.cells[k][m]
                rows.append(f"{m + '@' + str(k):<12}{c['mean']:>10.4f}{c['se']:>10.4f}{c['n']:>8d}")
        return "\n".join(rows)


def _mean_se(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=np.float64)
    if v.size < 2:
        return float(v.mean()), 0.0
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))


def evaluate(
    records: Iterable[EvalRecord],
    ks: Sequence[int] = DEFAULT_KS,
    strip_year: bool = True,
    truncate_ideal: bool = False,
) -> EvalReport:
    records = list(records)
    if not records:
        raise EmptyRecords()
    ks = sorted(set(ks))
    if not ks or ks[0] < 1:
        raise ValidationError("ks must be a non-empty list of integers >= 1")

    flagged = []
    for i, rec in enumerate(records):
        distinct = {t.strip() for t in rec.ground_truth}
        if len({normalize_title(t, strip_year) for t in rec.ground_truth}) < len(distinct):
            flagged.append(rec.id or str(i))

    cells = {}
    for k in ks:
        recalls = [recall_at_k(r.ranked, r.ground_truth, k, strip_year) for r in records]
        ndcgs = [ndcg_at_k(r.ranked, r.ground_truth, k, strip_year, truncate_ideal) for r in records]
        cells[k] = {}
        for name, vals in (("recall", recalls), ("ndcg", ndcgs)):
            mean, se = _mean_se(vals)
            cells[k][name] = {"mean": mean, "se": se, "n": len(vals)}
    return EvalReport(cells, flagged)


def _read_jsonl_by_id(path, list_field: str) -> dict[str, list[str]]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedLine(line_no, exc.msg) from exc
            if not isinstance(obj, dict) or not isinstance(obj.get("id"), str):
                raise MissingField("id", line_no)
            vals = obj.get(list_field)
            if not isinstance(vals, list) or not all(isinstance(v, str) for v in vals):
                raise MissingField(list_field, line_no)
            out[obj["id"]] = vals
    return out


def load_records(pred_path, ref_path) -> list[EvalRecord]:
    """Join predictions and references on ``id``; any unmatched id is an error."""
    preds = _read_jsonl_by_id(pred_path, "ranked")
    refs = _read_jsonl_by_id(ref_path, "ground_truth")
    pred_only, ref_only = set(preds) - set(refs), set(refs) - set(preds)
    if pred_only or ref_only:
        raise UnmatchedIds(pred_only, ref_only)
    return [EvalRecord(preds[i], refs[i], i) for i in preds]
