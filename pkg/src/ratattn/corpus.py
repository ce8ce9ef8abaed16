"""Movie-review corpus ingestion: JSONL reader/writer, span-to-sentence
rationale labels, vocabulary construction, and the train/dev/test split.
"""

from __future__ import annotations

import json
import random
import re
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

PAD_ID = 0
UNK_ID = 1
MAX_SENTENCE_TOKENS = 60

_TOKEN_RE = re.compile(r"[a-z0-9]+|[^\sa-z0-9]")
_SENT_BOUNDARY_RE = re.compile(r"[.!?]+(?=\s)")


class CorpusError(Exception):
    """Malformed corpus input (bad record, duplicate id, bad span, ...)."""


class Label(str, Enum):
    POS = "pos"
    NEG = "neg"


def tokenize(text: str) -> tuple[str, ...]:
    """Lowercase and split into word/punctuation tokens, capped at
    MAX_SENTENCE_TOKENS (tail truncated)."""
    toks = _TOKEN_RE.findall(text.lower())
    return tuple(toks[:MAX_SENTENCE_TOKENS])


def segment_sentences(text: str) -> list[tuple[int, int]]:
    """Character offsets of sentences split on ., !, ? followed by whitespace.

    Used only when a corpus arrives as flat text; the JSONL format carries
    sentences explicitly.
    """
    bounds = []
    start = 0
    for m in _SENT_BOUNDARY_RE.finditer(text):
        end = m.end()
        if text[start:end].strip():
            bounds.append((start, end))
        start = end
    if text[start:].strip():
        bounds.append((start, len(text)))
    return bounds


@dataclass(frozen=True)
class Sentence:
    raw_text: str
    tokens: tuple[str, ...]
    rationale: bool | None  # None only inside unannotated documents

    @classmethod
    def from_text(cls, text: str, rationale: bool | None) -> "Sentence":
        return cls(raw_text=text, tokens=tokenize(text), rationale=rationale)


@dataclass(frozen=True)
class Document:
    doc_id: str
    label: Label
    sentences: tuple[Sentence, ...]
    annotated: bool

    def __post_init__(self):
        if not self.sentences:
            raise CorpusError(f"document {self.doc_id!r} has no sentences")
        for s in self.sentences:
            if self.annotated and s.rationale is None:
                raise CorpusError(
                    f"document {self.doc_id!r} is annotated but a sentence "
                    "has no rationale flag")
            if not self.annotated and s.rationale is not None:
                raise CorpusError(
                    f"document {self.doc_id!r} is unannotated but a sentence "
                    "carries a rationale flag")

    @property
    def rationale_count(self) -> int:
        return sum(1 for s in self.sentences if s.rationale)


def _parse_record(obj: dict, lineno: int) -> Document:
    try:
        doc_id = obj["id"]
        label = Label(obj["label"])
        raw_sents = obj["sentences"]
    except (KeyError, ValueError, TypeError) as exc:
        raise CorpusError(f"line {lineno}: bad record: {exc}") from None
    if not isinstance(doc_id, str) or not isinstance(raw_sents, list):
        raise CorpusError(f"line {lineno}: bad record types")

    flags = []
    sentences = []
    for s in raw_sents:
        if not isinstance(s, dict) or "text" not in s or "rationale" not in s:
            raise CorpusError(f"line {lineno}: bad sentence record")
        if s["rationale"] not in (True, False, None):
            raise CorpusError(f"line {lineno}: rationale must be true/false/null")
        sent = Sentence.from_text(s["text"], s["rationale"])
        if not sent.tokens:
            continue  # empty after tokenization: dropped
        flags.append(s["rationale"])
        sentences.append(sent)

    if not sentences:
        raise CorpusError(f"line {lineno}: document {doc_id!r} has no non-empty sentences")
    has_null = any(f is None for f in flags)
    has_flag = any(f is not None for f in flags)
    if has_null and has_flag:
        raise CorpusError(
            f"line {lineno}: document {doc_id!r} mixes annotated and "
            "unannotated sentences")
    try:
        return Document(doc_id=doc_id, label=label,
                        sentences=tuple(sentences), annotated=has_flag)
    except CorpusError as exc:
        raise CorpusError(f"line {lineno}: {exc}") from None


def load_corpus(path: str | Path) -> list[Document]:
    """Read a corpus-JSONL file; document order equals file order.

    Raises CorpusError naming the offending line for malformed records and
    for duplicate document ids.
    """
    docs: list[Document] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {lineno}: invalid JSON: {exc}") from None
            doc = _parse_record(obj, lineno)
            if doc.doc_id in seen:
                raise CorpusError(f"line {lineno}: duplicate document id {doc.doc_id!r}")
            seen.add(doc.doc_id)
            docs.append(doc)
    return docs


def write_corpus(docs: Iterable[Document], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            rec = {
                "id": doc.doc_id,
                "label": doc.label.value,
                "sentences": [
                    {"text": s.raw_text, "rationale": s.rationale}
                    for s in doc.sentences
                ],
            }
            fh.write(json.dumps(rec) + "\n")


def spans_to_sentence_labels(
    doc_text: str,
    sentence_boundaries: Sequence[tuple[int, int]],
    rationale_spans: Sequence[tuple[int, int]],
) -> list[bool]:
    """Mark a sentence as rationale iff it overlaps an annotated span by
    at least one character."""
    n = len(doc_text)
    prev_end = 0
    for start, end in sentence_boundaries:
        if start < prev_end or start > end or end > n:
            raise CorpusError(f"bad sentence boundary ({start}, {end})")
        prev_end = end
    for a, b in rationale_spans:
        if a < 0 or b > n or a > b:
            raise CorpusError(f"rationale span ({a}, {b}) outside document bounds")
    labels = []
    for start, end in sentence_boundaries:
        hit = any(max(start, a) < min(end, b) for a, b in rationale_spans)
        labels.append(hit)
    return labels


@dataclass
class Vocabulary:
    """Dense token-to-id map with ids 0 (padding) and 1 (unknown) reserved."""

    token_to_id: dict[str, int]
    min_count: int = 1

    @property
    def size(self) -> int:
        """Number of ids including the two reserved ones."""
        return len(self.token_to_id) + 2

    def id_for(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)

    def encode(self, tokens: Sequence[str]) -> list[int]:
        return [self.token_to_id.get(t, UNK_ID) for t in tokens]

    def save(self, path: str | Path) -> None:
        items = sorted(self.token_to_id.items(), key=lambda kv: kv[1])
        with open(path, "w", encoding="utf-8") as fh:
            for token, idx in items:
                fh.write(f"{token}\t{idx}\n")

    @classmethod
    def load(cls, path: str | Path, min_count: int = 1) -> "Vocabulary":
        mapping: dict[str, int] = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                try:
                    token, idx = line.split("\t")
                    idx = int(idx)
                except ValueError:
                    raise CorpusError(f"vocab line {lineno}: expected token<TAB>id") from None
                if idx < 2:
                    raise CorpusError(f"vocab line {lineno}: id {idx} is reserved")
                mapping[token] = idx
        ids = sorted(mapping.values())
        if ids != list(range(2, 2 + len(ids))):
            raise CorpusError("vocabulary ids are not dense starting at 2")
        return cls(token_to_id=mapping, min_count=min_count)


def build_vocab(train_docs: Sequence[Document], min_count: int = 2) -> Vocabulary:
    """Assign ids 2.. in descending frequency order (lexicographic on ties)
    to tokens occurring at least min_count times in the training documents."""
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    if not train_docs:
        raise ValueError("train_docs must be non-empty")
    counts: Counter[str] = Counter()
    for doc in train_docs:
        for sent in doc.sentences:
            counts.update(sent.tokens)
    kept = [t for t, c in counts.items() if c >= min_count]
    kept.sort(key=lambda t: (-counts[t], t))
    return Vocabulary(
        token_to_id={t: i + 2 for i, t in enumerate(kept)},
        min_count=min_count,
    )


@dataclass(frozen=True)
class Split:
    train: tuple[str, ...]
    dev: tuple[str, ...]
    test: tuple[str, ...]

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({"train": list(self.train), "dev": list(self.dev),
                       "test": list(self.test)}, fh, indent=1)

    @classmethod
    def load(cls, path: str | Path) -> "Split":
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
        return cls(train=tuple(obj["train"]), dev=tuple(obj["dev"]),
                   test=tuple(obj["test"]))


def make_split(docs: Sequence[Document], dev_fraction: float = 0.1,
               seed: int = 13) -> Split:
    """Test = every unannotated document; dev = a seeded random carve-out of
    floor(dev_fraction * #annotated) annotated documents; train = the rest.

    All three lists keep corpus order.
    """
    if not 0 <= dev_fraction < 1:
        raise ValueError("dev_fraction must be in [0, 1)")
    annotated = [d.doc_id for d in docs if d.annotated]
    test = tuple(d.doc_id for d in docs if not d.annotated)
    n_dev = int(dev_fraction * len(annotated))
    shuffled = list(annotated)
    random.Random(seed).shuffle(shuffled)
    dev_ids = set(shuffled[:n_dev])
    dev = tuple(i for i in annotated if i in dev_ids)
    train = tuple(i for i in annotated if i not in dev_ids)
    return Split(train=train, dev=dev, test=test)
