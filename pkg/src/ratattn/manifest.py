"""Run manifest: one JSON file tying together the artifacts of a pipeline
run (corpus, vocabulary, split, checkpoints, explanations, hits, judgment
log). Paths are stored relative to the manifest's directory; the
RATATTN_DATA_DIR environment variable names a default data directory."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

MANIFEST_NAME = "manifest.json"


@dataclass
class RunManifest:
    root: Path
    corpus: str = "corpus.jsonl"
    vocab: str = "vocab.tsv"
    split: str = "split.json"
    checkpoints: dict[str, str] = field(default_factory=dict)
    metrics: dict[str, str] = field(default_factory=dict)
    explanations: dict[str, str] = field(default_factory=dict)
    hits: str = "hits.jsonl"
    judgments: str = "judgments.log"
    seeds: dict[str, int] = field(default_factory=dict)

    def path(self, rel: str) -> Path:
        p = Path(rel)
        return p if p.is_absolute() else self.root / p

    def corpus_path(self) -> Path:
        return self.path(self.corpus)

    def vocab_path(self) -> Path:
        return self.path(self.vocab)

    def split_path(self) -> Path:
        return self.path(self.split)

    def hits_path(self) -> Path:
        return self.path(self.hits)

    def judgments_path(self) -> Path:
        return self.path(self.judgments)

    def require(self, *rels: str) -> None:
        missing = [str(self.path(r)) for r in rels if not self.path(r).exists()]
        if missing:
            raise FileNotFoundError("missing artifacts: " + ", ".join(missing))

    def save(self) -> Path:
        out = self.root / MANIFEST_NAME
        data = {
            "corpus": self.corpus,
            "vocab": self.vocab,
            "split": self.split,
            "checkpoints": self.checkpoints,
            "metrics": self.metrics,
            "explanations": self.explanations,
            "hits": self.hits,
            "judgments": self.judgments,
            "seeds": self.seeds,
        }
        with open(out, "w", encoding="utf-8") as fh:
            json.dump(data, fh, indent=1)
        return out

    @classmethod
    def load(cls, root: str | Path) -> "RunManifest":
        root = Path(root)
        with open(root / MANIFEST_NAME, encoding="utf-8") as fh:
            data = json.load(fh)
        return cls(root=root, **data)


def resolve_data_dir(flag_value: str | None) -> Path:
    """--data flag wins; RATATTN_DATA_DIR is the fallback."""
    if flag_value:
        return Path(flag_value)
    env = os.environ.get("RATATTN_DATA_DIR")
    if env:
        return Path(env)
    raise FileNotFoundError(
        "no data directory: pass --data or set RATATTN_DATA_DIR")
