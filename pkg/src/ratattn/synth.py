"""Synthetic review corpora in corpus-JSONL form.

The real rationale-annotated movie-review corpus is distributed separately;
these generators produce stand-in corpora with the same shape (two balanced
classes, sentence-level rationale flags, ~32 sentences and ~8 rationales per
annotated document) so the full pipeline can be exercised end to end.
"""

from __future__ import annotations

import argparse
import random

from .corpus import Document, Label, Sentence, write_corpus

_POS_WORDS = [
    "excellent", "wonderful", "brilliant", "moving", "gripping", "superb",
    "delightful", "masterful", "hilarious", "breathtaking", "outstanding",
    "charming",
]
_NEG_WORDS = [
    "awful", "boring", "dreadful", "tedious", "clumsy", "lifeless",
    "painful", "incoherent", "forgettable", "laughable", "bland", "hollow",
]
_FILLER = [
    "the", "a", "of", "and", "to", "in", "film", "movie", "scene", "plot",
    "story", "character", "actor", "director", "camera", "script", "music",
    "screen", "audience", "runs", "opens", "follows", "shows", "begins",
    "later", "set", "city", "night", "house", "years", "brother", "agent",
    "case", "letter", "journey", "war", "family", "train", "silence",
] + [f"word{i}" for i in range(200)]


def _sentence(rng: random.Random, length: int, charged: list[str] | None) -> str:
    words = [rng.choice(_FILLER) for _ in range(length)]
    if charged:
        for w in charged:
            words[rng.randrange(len(words))] = w
    words.append(rng.choice([".", ".", ".", "!", "?"]))
    return " ".join(words)


def make_review_corpus(
    n_docs: int = 2000,
    annotated: int = 1800,
    mean_sentences: int = 32,
    mean_rationales: int = 8,
    seed: int = 7,
    noise: float = 0.05,
) -> list[Document]:
    """Balanced pos/neg reviews whose label is carried by sentiment words
    concentrated in the rationale sentences.

    `noise` is the chance a non-rationale sentence carries one
    opposite-sentiment word, keeping the task non-trivial.
    """
    if annotated > n_docs:
        raise ValueError("annotated cannot exceed n_docs")
    rng = random.Random(seed)
    docs = []
    for i in range(n_docs):
        label = Label.POS if i % 2 == 0 else Label.NEG
        own, other = (_POS_WORDS, _NEG_WORDS) if label is Label.POS else (_NEG_WORDS, _POS_WORDS)
        n_sent = max(4, int(rng.gauss(mean_sentences, mean_sentences * 0.2)))
        n_rat = min(n_sent, max(1, int(rng.gauss(mean_rationales, 1.5))))
        rat_idx = set(rng.sample(range(n_sent), n_rat))
        is_annotated = i < annotated
        sentences = []
        for j in range(n_sent):
            length = rng.randint(6, 18)
            if j in rat_idx:
                charged = rng.sample(own, rng.randint(1, 3))
            elif rng.random() < noise:
                charged = [rng.choice(other)]
            else:
                charged = None
            rationale = (j in rat_idx) if is_annotated else None
            sentences.append(Sentence.from_text(_sentence(rng, length, charged), rationale))
        docs.append(Document(doc_id=f"doc{i:04d}", label=label,
                             sentences=tuple(sentences), annotated=is_annotated))
    # interleave annotated/unannotated the way the real corpus mixes them
    rng.shuffle(docs)
    return docs


def make_keyword_corpus(n_docs: int = 20, seed: int = 3,
                        sentences_per_doc: int = 4,
                        annotated: int | None = None) -> list[Document]:
    """Tiny fully separable corpus: a document is positive iff one sentence
    contains the token "good" (negative docs carry "bad" instead). The
    keyword sentence is the rationale; docs past `annotated` are left
    unannotated so they can serve as a test split."""
    if annotated is None:
        annotated = n_docs
    rng = random.Random(seed)
    # small filler pool: every filler word occurs in both classes, so the
    # keyword is the only usable signal even on a handful of documents
    pool = _FILLER[:30]
    docs = []
    for i in range(n_docs):
        label = Label.POS if i % 2 == 0 else Label.NEG
        key = "good" if label is Label.POS else "bad"
        key_at = rng.randrange(sentences_per_doc)
        is_annotated = i < annotated
        sentences = []
        for j in range(sentences_per_doc):
            words = [rng.choice(pool) for _ in range(rng.randint(4, 8))]
            if j == key_at:
                words[rng.randrange(len(words))] = key
            rationale = (j == key_at) if is_annotated else None
            sentences.append(Sentence.from_text(" ".join(words + ["."]), rationale))
        docs.append(Document(doc_id=f"kw{i:03d}", label=label,
                             sentences=tuple(sentences), annotated=is_annotated))
    return docs


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(
        description="Generate a synthetic corpus-JSONL review corpus")
    ap.add_argument("--out", required=True)
    ap.add_argument("--docs", type=int, default=2000)
    ap.add_argument("--annotated", type=int, default=1800)
    ap.add_argument("--mean-sentences", type=int, default=32)
    ap.add_argument("--mean-rationales", type=int, default=8)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--noise", type=float, default=0.05)
    args = ap.parse_args(argv)
    docs = make_review_corpus(
        n_docs=args.docs, annotated=args.annotated,
        mean_sentences=args.mean_sentences,
        mean_rationales=args.mean_rationales,
        seed=args.seed, noise=args.noise)
    write_corpus(docs, args.out)
    n_ann = sum(d.annotated for d in docs)
    print(f"wrote {len(docs)} documents ({n_ann} annotated) to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
