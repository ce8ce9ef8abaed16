"""Explanation extraction and comparison: top-k sentence selection from
per-sentence weights, the random-selection baseline, and overlap statistics
between two models' explanations."""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import Document
from .models import Prediction

DEFAULT_K = 3


@dataclass(frozen=True)
class Explanation:
    doc_id: str
    model: str
    k: int
    ranked: tuple[tuple[int, float], ...]  # (sentence index, weight), best first

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.ranked)

    def to_json(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "model": self.model,
            "k": self.k,
            "sentences": [{"index": i, "weight": w} for i, w in self.ranked],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Explanation":
        return cls(
            doc_id=obj["doc_id"], model=obj["model"], k=obj["k"],
            ranked=tuple((s["index"], s["weight"]) for s in obj["sentences"]))


def extract_top_k(prediction: Prediction, k: int = DEFAULT_K,
                  model: str | None = None) -> Explanation:
    """The min(k, n) highest-weight sentences, ties broken toward the
    earlier sentence."""
    if k < 1:
        raise ValueError("k must be >= 1")
    order = sorted(range(len(prediction.sentence_weights)),
                   key=lambda i: (-prediction.sentence_weights[i], i))
    chosen = order[:k]
    return Explanation(
        doc_id=prediction.doc_id,
        model=model or "model",
        k=k,
        ranked=tuple((i, prediction.sentence_weights[i]) for i in chosen))


def _doc_seed(seed: int, doc_id: str) -> int:
    h = hashlib.sha256(f"{seed}:{doc_id}".encode("utf-8")).digest()
    return int.from_bytes(h[:8], "big")


def random_explanation(doc: Document, k: int = DEFAULT_K,
                       seed: int = 0) -> Explanation:
    """min(k, n) distinct sentence indices drawn uniformly, deterministic
    per (seed, doc id); weights are zero."""
    if k < 1:
        raise ValueError("k must be >= 1")
    n = len(doc.sentences)
    rng = random.Random(_doc_seed(seed, doc.doc_id))
    chosen = rng.sample(range(n), min(k, n))
    return Explanation(doc_id=doc.doc_id, model="random", k=k,
                       ranked=tuple((i, 0.0) for i in chosen))


@dataclass(frozen=True)
class OverlapReport:
    n_documents: int
    share_counts: tuple[int, ...]      # documents sharing 0..k sentences
    share_percent: tuple[float, ...]
    top1_agreement: float              # fraction with the same first sentence

    def to_json(self) -> dict:
        return {
            "n_documents": self.n_documents,
            "share_counts": list(self.share_counts),
            "share_percent": list(self.share_percent),
            "top1_agreement": self.top1_agreement,
        }

    def render_text(self) -> str:
        lines = ["shared  docs  percent", "------  ----  -------"]
        for s, (cnt, pct) in enumerate(zip(self.share_counts, self.share_percent)):
            lines.append(f"{s:>6}  {cnt:>4}  {pct:6.1f}%")
        lines.append(f"top-1 agreement: {self.top1_agreement * 100:.1f}%")
        return "\n".join(lines)


def overlap_stats(expls_a: Sequence[Explanation],
                  expls_b: Sequence[Explanation]) -> OverlapReport:
    """Distribution of |A ∩ B| over aligned explanation pairs, plus the
    rate at which both rank the same sentence first."""
    ids_a = [e.doc_id for e in expls_a]
    ids_b = [e.doc_id for e in expls_b]
    if ids_a != ids_b:
        raise ValueError("explanation sequences are not aligned by document id")
    if not expls_a:
        raise ValueError("no explanations to compare")
    k = max(max(len(e.ranked) for e in expls_a),
            max(len(e.ranked) for e in expls_b))
    counts = [0] * (k + 1)
    top1 = 0
    for ea, eb in zip(expls_a, expls_b):
        shared = len(set(ea.indices) & set(eb.indices))
        counts[shared] += 1
        if ea.indices and eb.indices and ea.indices[0] == eb.indices[0]:
            top1 += 1
    n = len(expls_a)
    return OverlapReport(
        n_documents=n,
        share_counts=tuple(counts),
        share_percent=tuple(round(100.0 * c / n, 1) for c in counts),
        top1_agreement=top1 / n)


def write_explanations(expls: Iterable[Explanation], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for e in expls:
            fh.write(json.dumps(e.to_json()) + "\n")


def read_explanations(path: str | Path) -> list[Explanation]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(Explanation.from_json(json.loads(line)))
    return out
