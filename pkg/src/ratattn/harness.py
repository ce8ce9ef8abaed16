"""Paired-comparison judgment harness: HIT construction with randomized
left/right order, gold-standard questions for worker filtering, task
assignment, majority voting with a tie-breaking extra judgment, and the
result table."""

from __future__ import annotations

import hashlib
import json
import random
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import Document
from .explain import Explanation

CHOICES = ("A", "B", "EQUAL")


class HarnessError(Exception):
    pass


class UnknownWorker(HarnessError):
    pass


class UnknownHit(HarnessError):
    pass


class DuplicateJudgment(HarnessError):
    pass


@dataclass(frozen=True)
class Variant:
    source: str  # "RA" | "AT" | "Random" | "GoldRationale"
    indices: tuple[int, ...]


@dataclass(frozen=True)
class Hit:
    hit_id: str
    doc_id: str
    label: str
    variant_a: Variant
    variant_b: Variant
    order_seed: int
    sentences: tuple[str, ...]
    is_gold: bool = False
    gold_expected: str | None = None  # "A"/"B", in variant space

    def __post_init__(self):
        if self.variant_a.source == self.variant_b.source:
            raise HarnessError(f"hit {self.hit_id}: variant sources must differ")
        if self.is_gold != (self.gold_expected is not None):
            raise HarnessError(f"hit {self.hit_id}: gold flag and expected "
                               "answer must come together")
        n = len(self.sentences)
        for v in (self.variant_a, self.variant_b):
            if any(i < 0 or i >= n for i in v.indices):
                raise HarnessError(f"hit {self.hit_id}: sentence index out of range")

    @property
    def left_is_a(self) -> bool:
        """Which variant renders on the left, fixed by the order seed."""
        return bool(random.Random(self.order_seed).getrandbits(1))

    def choice_from_side(self, side: str) -> str:
        """Map a LEFT/RIGHT/EQUAL submission to variant space."""
        if side == "EQUAL":
            return "EQUAL"
        if side not in ("LEFT", "RIGHT"):
            raise HarnessError(f"bad side {side!r}")
        if (side == "LEFT") == self.left_is_a:
            return "A"
        return "B"

    def to_json(self) -> dict:
        return {
            "hit_id": self.hit_id,
            "doc_id": self.doc_id,
            "label": self.label,
            "variant_a": {"source": self.variant_a.source,
                          "indices": list(self.variant_a.indices)},
            "variant_b": {"source": self.variant_b.source,
                          "indices": list(self.variant_b.indices)},
            "order_seed": self.order_seed,
            "is_gold": self.is_gold,
            "gold_expected": self.gold_expected,
            "sentences": list(self.sentences),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Hit":
        return cls(
            hit_id=obj["hit_id"], doc_id=obj["doc_id"], label=obj["label"],
            variant_a=Variant(obj["variant_a"]["source"],
                              tuple(obj["variant_a"]["indices"])),
            variant_b=Variant(obj["variant_b"]["source"],
                              tuple(obj["variant_b"]["indices"])),
            order_seed=obj["order_seed"],
            sentences=tuple(obj["sentences"]),
            is_gold=obj["is_gold"],
            gold_expected=obj.get("gold_expected"),
        )


@dataclass(frozen=True)
class Judgment:
    hit_id: str
    worker_id: str
    choice: str  # variant space: "A" | "B" | "EQUAL"
    ts: float

    def to_json(self) -> dict:
        return {"hit_id": self.hit_id, "worker_id": self.worker_id,
                "choice": self.choice, "ts": self.ts}


@dataclass
class WorkerRecord:
    worker_id: str
    gold_outcomes: list[bool] = field(default_factory=list)

    @property
    def failed_gold(self) -> bool:
        return any(not ok for ok in self.gold_outcomes)

    @property
    def trusted(self) -> bool:
        """Passed a gold question and never failed one. Only trusted
        workers' judgments count toward majorities."""
        return bool(self.gold_outcomes) and not self.failed_gold


class Resolution(str, Enum):
    A = "A"
    B = "B"
    EQUAL = "EQUAL"
    PENDING = "PENDING"            # fewer than two trusted judgments
    NEEDS_FOURTH = "NEEDS_FOURTH"  # trusted judgments tied; one more needed
    UNRESOLVED = "UNRESOLVED"      # still tied after four trusted judgments


def majority_vote(judgments: Sequence[Judgment],
                  workers: Mapping[str, WorkerRecord]) -> Resolution:
    """Resolve one hit from its judgments: two agreeing trusted workers
    decide; a tie among trusted judgments asks for one more; a tie that
    survives four trusted judgments is terminally unresolved."""
    trusted = [j.choice for j in judgments
               if workers[j.worker_id].trusted]
    counts = Counter(trusted)
    if counts:
        (top, n_top), = counts.most_common(1)
        tied_at_top = [c for c, n in counts.items() if n == n_top]
        if n_top >= 2 and len(tied_at_top) == 1:
            return Resolution(top)
    if len(trusted) >= 4:
        return Resolution.UNRESOLVED
    if len(trusted) >= 2:
        return Resolution.NEEDS_FOURTH
    return Resolution.PENDING


def build_hits(docs: Sequence[Document],
               expls_a: Sequence[Explanation],
               expls_b: Sequence[Explanation],
               seed: int,
               source_a: str = "RA", source_b: str = "AT") -> list[Hit]:
    """One paired hit per document with uniformly random left/right order.

    The displayed label is the document's gold label, which equals both
    models' prediction on both-correct documents.
    """
    by_a = {e.doc_id: e for e in expls_a}
    by_b = {e.doc_id: e for e in expls_b}
    rng = random.Random(seed)
    hits = []
    for doc in docs:
        if doc.doc_id not in by_a:
            raise HarnessError(f"no {source_a} explanation for document {doc.doc_id}")
        if doc.doc_id not in by_b:
            raise HarnessError(f"no {source_b} explanation for document {doc.doc_id}")
        hits.append(Hit(
            hit_id=_hit_id("pair", source_a, source_b, doc.doc_id),
            doc_id=doc.doc_id,
            label=doc.label.value,
            variant_a=Variant(source_a, by_a[doc.doc_id].indices),
            variant_b=Variant(source_b, by_b[doc.doc_id].indices),
            order_seed=rng.getrandbits(32),
            sentences=tuple(s.raw_text for s in doc.sentences),
        ))
    return hits


def build_gold_hits(docs: Sequence[Document], seed: int, count: int,
                    k: int = 3) -> list[Hit]:
    """Gold questions with a known answer: the document's first k human
    rationale sentences against k random non-rationale sentences. Documents
    without k of each are skipped; failing to reach `count` is an error."""
    rng = random.Random(seed)
    hits = []
    for doc in docs:
        if len(hits) == count:
            break
        rat = [i for i, s in enumerate(doc.sentences) if s.rationale]
        non = [i for i, s in enumerate(doc.sentences) if not s.rationale]
        if len(rat) < k or len(non) < k:
            continue
        hits.append(Hit(
            hit_id=_hit_id("gold", doc.doc_id),
            doc_id=doc.doc_id,
            label=doc.label.value,
            variant_a=Variant("GoldRationale", tuple(rat[:k])),
            variant_b=Variant("Random", tuple(sorted(rng.sample(non, k)))),
            order_seed=rng.getrandbits(32),
            sentences=tuple(s.raw_text for s in doc.sentences),
            is_gold=True,
            gold_expected="A",
        ))
    if len(hits) < count:
        raise HarnessError(
            f"only {len(hits)} documents have >= {k} rationale and >= {k} "
            f"non-rationale sentences; cannot build {count} gold hits")
    return hits


def _worker_offset(worker_id: str, n: int) -> int:
    h = hashlib.sha256(worker_id.encode("utf-8")).digest()
    return int.from_bytes(h[:8], "big") % n


def _hit_id(*parts: str) -> str:
    # opaque: ids reach the client and must not hint at gold status or sources
    return "h" + hashlib.sha256(":".join(parts).encode("utf-8")).hexdigest()[:12]


class HarnessState:
    """All judgment-collection state, reconstructible from the hits file
    plus the append-only judgment log (event sourcing)."""

    def __init__(self, hits: Sequence[Hit]):
        self.hits: dict[str, Hit] = {}
        self.order: list[str] = []
        for h in hits:
            if h.hit_id in self.hits:
                raise HarnessError(f"duplicate hit id {h.hit_id}")
            self.hits[h.hit_id] = h
            self.order.append(h.hit_id)
        self.judgments: dict[str, list[Judgment]] = {hid: [] for hid in self.hits}
        self.workers: dict[str, WorkerRecord] = {}

    # -- workers -----------------------------------------------------------

    def register_worker(self, worker_id: str) -> WorkerRecord:
        if not worker_id:
            raise UnknownWorker("empty worker id")
        if worker_id not in self.workers:
            self.workers[worker_id] = WorkerRecord(worker_id)
        return self.workers[worker_id]

    # -- judgments ---------------------------------------------------------

    def check_judgment(self, hit_id: str, worker_id: str, choice: str) -> None:
        if hit_id not in self.hits:
            raise UnknownHit(f"unknown hit {hit_id!r}")
        if worker_id not in self.workers:
            raise UnknownWorker(f"unknown worker {worker_id!r}")
        if choice not in CHOICES:
            raise HarnessError(f"bad choice {choice!r}")
        if any(j.worker_id == worker_id for j in self.judgments[hit_id]):
            raise DuplicateJudgment(
                f"worker {worker_id!r} already judged hit {hit_id!r}")

    def apply_judgment(self, judgment: Judgment) -> None:
        hit = self.hits[judgment.hit_id]
        self.judgments[judgment.hit_id].append(judgment)
        if hit.is_gold:
            passed = judgment.choice == hit.gold_expected
            self.workers[judgment.worker_id].gold_outcomes.append(passed)

    def submit(self, hit_id: str, worker_id: str, choice: str,
               ts: float) -> Judgment:
        self.check_judgment(hit_id, worker_id, choice)
        j = Judgment(hit_id=hit_id, worker_id=worker_id, choice=choice, ts=ts)
        self.apply_judgment(j)
        return j

    # -- assignment --------------------------------------------------------

    def resolution(self, hit_id: str) -> Resolution:
        return majority_vote(self.judgments[hit_id], self.workers)

    def assign_next_hit(self, worker_id: str) -> Hit | None:
        """Gold question first, then open hits this worker hasn't judged.

        Workers who failed gold get nothing; a hit stays assignable while
        its resolution still needs trusted judgments.
        """
        if worker_id not in self.workers:
            raise UnknownWorker(f"unknown worker {worker_id!r}")
        rec = self.workers[worker_id]
        if rec.failed_gold:
            return None
        gold_ids = [hid for hid in self.order if self.hits[hid].is_gold]
        if not rec.gold_outcomes and gold_ids:
            start = _worker_offset(worker_id, len(gold_ids))
            for i in range(len(gold_ids)):
                hid = gold_ids[(start + i) % len(gold_ids)]
                if not any(j.worker_id == worker_id for j in self.judgments[hid]):
                    return self.hits[hid]
            return None
        for hid in self.order:
            hit = self.hits[hid]
            if hit.is_gold:
                continue
            if any(j.worker_id == worker_id for j in self.judgments[hid]):
                continue
            n_trusted = sum(1 for j in self.judgments[hid]
                            if self.workers[j.worker_id].trusted)
            # every hit collects three trusted judgments (even when two
            # already agree), plus a fourth to break a three-way tie
            if n_trusted < 3 or self.resolution(hid) is Resolution.NEEDS_FOURTH:
                return hit
        return None

    # -- aggregate views ----------------------------------------------------

    def votes(self) -> dict[str, Resolution]:
        return {hid: self.resolution(hid) for hid in self.order
                if not self.hits[hid].is_gold}

    # -- persistence --------------------------------------------------------

    @classmethod
    def from_files(cls, hits_path: str | Path,
                   log_path: str | Path | None) -> "HarnessState":
        state = cls(read_hits(hits_path))
        if log_path is not None and Path(log_path).exists():
            with open(log_path, encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    obj = json.loads(line)
                    state.register_worker(obj["worker_id"])
                    state.submit(obj["hit_id"], obj["worker_id"],
                                 obj["choice"], obj["ts"])
        return state


@dataclass(frozen=True)
class ResultTable:
    source_a: str
    source_b: str
    count_a: int
    count_b: int
    count_equal: int
    unresolved: int

    @property
    def total(self) -> int:
        return self.count_a + self.count_b + self.count_equal

    @property
    def percents(self) -> tuple[float, float, float]:
        t = self.total
        return (round(100.0 * self.count_a / t, 2),
                round(100.0 * self.count_b / t, 2),
                round(100.0 * self.count_equal / t, 2))

    def to_json(self) -> dict:
        pa, pb, pe = self.percents
        return {
            "sources": [self.source_a, self.source_b],
            "counts": {self.source_a: self.count_a, self.source_b: self.count_b,
                       "Equal": self.count_equal},
            "percent": {self.source_a: pa, self.source_b: pb, "Equal": pe},
            "unresolved": self.unresolved,
        }

    def render_text(self) -> str:
        pa, pb, pe = self.percents
        heads = [self.source_a, self.source_b, "Equal"]
        cells = [f"{pa:.2f}%", f"{pb:.2f}%", f"{pe:.2f}%"]
        widths = [max(len(h), len(c)) for h, c in zip(heads, cells)]
        head = " | ".join(h.center(w) for h, w in zip(heads, widths))
        rule = "-+-".join("-" * w for w in widths)
        row = " | ".join(c.center(w) for c, w in zip(cells, widths))
        out = f"{head}\n{rule}\n{row}"
        if self.unresolved:
            out += f"\n(unresolved: {self.unresolved})"
        return out


def tabulate(votes: Iterable[Resolution | str],
             labels: tuple[str, str]) -> ResultTable:
    """Percentages over resolved hits, two decimals; terminally unresolved
    hits are excluded from the denominator and reported separately."""
    counts = Counter()
    for v in votes:
        v = Resolution(v)
        if v in (Resolution.PENDING, Resolution.NEEDS_FOURTH):
            raise HarnessError(f"vote {v.value} is not terminal; finish collection first")
        counts[v] += 1
    resolved = counts[Resolution.A] + counts[Resolution.B] + counts[Resolution.EQUAL]
    if resolved == 0:
        raise HarnessError("no resolved votes to tabulate")
    return ResultTable(
        source_a=labels[0], source_b=labels[1],
        count_a=counts[Resolution.A], count_b=counts[Resolution.B],
        count_equal=counts[Resolution.EQUAL],
        unresolved=counts[Resolution.UNRESOLVED])


def write_hits(hits: Iterable[Hit], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for h in hits:
            fh.write(json.dumps(h.to_json()) + "\n")


def read_hits(path: str | Path) -> list[Hit]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(Hit.from_json(json.loads(line)))
    return out
