"""Command-line pipeline: prepare, train, eval-acc, explain, overlap,
gen-hits, serve, aggregate. Every verb is a thin wrapper over the library
operations and writes its artifacts under the run's data directory."""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path

from . import corpus as corpus_mod
from . import explain as explain_mod
from . import harness as harness_mod
from . import models as models_mod
from .corpus import CorpusError, Split, Vocabulary, build_vocab, load_corpus, make_split
from .manifest import RunManifest, resolve_data_dir
from .models import ModelKind, ModelCheckpoint, TrainConfig

MODEL_TAGS = {"doc-cnn": "Doc", "at-cnn": "AT", "ra-cnn": "RA",
              "random": "Random"}


def _load_run(args) -> tuple[RunManifest, list, Vocabulary, Split, dict]:
    root = resolve_data_dir(getattr(args, "data", None))
    man = RunManifest.load(root)
    man.require(man.corpus, man.vocab, man.split)
    docs = load_corpus(man.corpus_path())
    vocab = Vocabulary.load(man.vocab_path())
    split = Split.load(man.split_path())
    with open(man.split_path(), encoding="utf-8") as fh:
        extras = json.load(fh)
    return man, docs, vocab, split, extras


def _split_docs(docs, ids):
    by_id = {d.doc_id: d for d in docs}
    return [by_id[i] for i in ids]


def cmd_prepare(args) -> int:
    root = Path(args.out)
    root.mkdir(parents=True, exist_ok=True)
    docs = load_corpus(args.corpus)
    annotated = [d.doc_id for d in docs if d.annotated]
    if args.gold_holdout > len(annotated):
        raise CorpusError("gold holdout larger than the annotated set")
    gold = sorted(random.Random(args.seed).sample(annotated, args.gold_holdout),
                  key=annotated.index)
    gold_set = set(gold)
    remaining = [d for d in docs if d.doc_id not in gold_set]
    split = make_split(remaining, dev_fraction=args.dev_fraction, seed=args.seed)
    by_id = {d.doc_id: d for d in docs}
    vocab = build_vocab([by_id[i] for i in split.train], min_count=args.min_count)

    man = RunManifest(root=root, corpus=str(Path(args.corpus).resolve()))
    vocab.save(man.vocab_path())
    with open(man.split_path(), "w", encoding="utf-8") as fh:
        json.dump({"train": list(split.train), "dev": list(split.dev),
                   "test": list(split.test), "gold": gold}, fh, indent=1)
    man.save()
    print(f"prepared {root}: {len(docs)} documents "
          f"(train {len(split.train)}, dev {len(split.dev)}, "
          f"test {len(split.test)}, gold holdout {len(gold)}), "
          f"vocabulary {vocab.size} ids")
    return 0


def _config_from_args(args, kind: ModelKind, seed: int) -> TrainConfig:
    return TrainConfig(
        kind=kind, epochs=args.epochs, pretrain_epochs=args.pretrain_epochs,
        rationale_weight=args.rationale_weight, lr=args.lr,
        dropout=args.dropout, patience=args.patience, seed=seed,
        embed_dim=args.embed_dim, attn_dim=args.attn_dim,
        widths=tuple(args.widths), maps_per_width=args.maps_per_width)


def cmd_train(args) -> int:
    man, docs, vocab, split, _ = _load_run(args)
    kind = ModelKind(args.model)
    embeddings = None
    if args.embeddings:
        embeddings = models_mod.load_word_vectors(
            args.embeddings, vocab, args.embed_dim, seed=args.seeds[0])
    ckpt_dir = man.root / "checkpoints"
    ckpt_dir.mkdir(exist_ok=True)

    best = None
    for seed in args.seeds:
        cfg = _config_from_args(args, kind, seed)
        metrics_rel = f"checkpoints/metrics-{kind.value}-seed{seed}.jsonl"
        ckpt = models_mod.train(cfg, split, docs, vocab, embeddings=embeddings,
                                metrics_path=man.path(metrics_rel))
        dev_accs = [h["dev_acc"] for h in ckpt.history
                    if h.get("dev_acc") is not None]
        score = max(dev_accs) if dev_accs else 0.0
        rel = f"checkpoints/{kind.value}-seed{seed}.ckpt"
        ckpt.save(man.path(rel), vocab_ref=f"../{man.vocab}")
        print(f"{kind.value} seed {seed}: best dev acc "
              f"{score if dev_accs else 'n/a'} -> {rel}")
        if best is None or score > best[0]:
            best = (score, seed, rel, metrics_rel)

    _, seed, rel, metrics_rel = best
    man.checkpoints[kind.value] = rel
    man.metrics[kind.value] = metrics_rel
    man.seeds[kind.value] = seed
    man.save()
    print(f"registered {kind.value} checkpoint from seed {seed}")
    return 0


def _load_checkpoint(man: RunManifest, tag: str) -> ModelCheckpoint:
    if tag not in man.checkpoints:
        raise FileNotFoundError(
            f"no trained checkpoint for {tag}; run `ratattn train --model {tag}`")
    return ModelCheckpoint.load(man.path(man.checkpoints[tag]))


def cmd_eval_acc(args) -> int:
    man, docs, vocab, split, _ = _load_run(args)
    test_docs = _split_docs(docs, split.test)
    kinds = ([k.value for k in ModelKind] if args.model == "all"
             else [ModelKind(args.model).value])
    names, cells = [], []
    for tag in kinds:
        ckpt = _load_checkpoint(man, tag)
        acc = models_mod.evaluate_accuracy(ckpt, test_docs)
        names.append(tag)
        cells.append(f"{100.0 * acc:.2f}%")
    widths = [max(len(n), len(c)) for n, c in zip(names, cells)]
    print(" | ".join(n.center(w) for n, w in zip(names, widths)))
    print("-+-".join("-" * w for w in widths))
    print(" | ".join(c.center(w) for c, w in zip(cells, widths)))
    return 0


def cmd_explain(args) -> int:
    man, docs, vocab, split, extras = _load_run(args)
    ids = {"test": split.test, "dev": split.dev, "train": split.train,
           "all": tuple(d.doc_id for d in docs)}[args.split]
    target = _split_docs(docs, ids)
    out_dir = man.root / "explanations"
    out_dir.mkdir(exist_ok=True)
    if args.model == "random":
        expls = [explain_mod.random_explanation(d, k=args.k, seed=args.seed)
                 for d in target]
    else:
        ckpt = _load_checkpoint(man, args.model)
        expls = [explain_mod.extract_top_k(models_mod.predict(ckpt, d),
                                           k=args.k, model=args.model)
                 for d in target]
    rel = f"explanations/{args.model}.jsonl"
    explain_mod.write_explanations(expls, man.path(rel))
    man.explanations[args.model] = rel
    man.save()
    print(f"wrote {len(expls)} explanations -> {rel}")
    return 0


def _comparison_docs(man, docs, split, args) -> list:
    """Documents both explanation sources cover, under the both-correct
    filter (or, with --include-misclassified, the models-agree filter)."""
    test_docs = _split_docs(docs, split.test)
    tags = [t for t in (args.a, args.b) if t != "random"]
    ckpts = {t: _load_checkpoint(man, t) for t in tags}
    if not args.include_misclassified:
        keep = {d.doc_id for d in test_docs}
        for ckpt in ckpts.values():
            keep &= {d.doc_id for d in test_docs
                     if models_mod.predict(ckpt, d).label is d.label}
        return [d for d in test_docs if d.doc_id in keep]
    if len(ckpts) >= 2:
        out = []
        for d in test_docs:
            preds = {models_mod.predict(c, d).label for c in ckpts.values()}
            if len(preds) == 1:
                out.append(d)
        return out
    return list(test_docs)


def cmd_overlap(args) -> int:
    man, docs, vocab, split, _ = _load_run(args)
    chosen = {d.doc_id for d in _comparison_docs(man, docs, split, args)}
    ea = [e for e in explain_mod.read_explanations(
        man.path(man.explanations[args.a])) if e.doc_id in chosen]
    eb = [e for e in explain_mod.read_explanations(
        man.path(man.explanations[args.b])) if e.doc_id in chosen]
    report = explain_mod.overlap_stats(ea, eb)
    out = man.path(f"overlap-{args.a}-vs-{args.b}.json")
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(report.to_json(), fh, indent=1)
    print(f"{args.a} vs {args.b} over {report.n_documents} documents")
    print(report.render_text())
    return 0


def cmd_gen_hits(args) -> int:
    man, docs, vocab, split, extras = _load_run(args)
    chosen = _comparison_docs(man, docs, split, args)
    ea = explain_mod.read_explanations(man.path(man.explanations[args.a]))
    eb = explain_mod.read_explanations(man.path(man.explanations[args.b]))
    hits = harness_mod.build_hits(
        chosen, ea, eb, seed=args.seed,
        source_a=MODEL_TAGS[args.a], source_b=MODEL_TAGS[args.b])
    gold_docs = _split_docs(docs, extras.get("gold", []))
    gold = harness_mod.build_gold_hits(gold_docs, seed=args.seed,
                                       count=args.gold_count)
    harness_mod.write_hits(hits + gold, man.hits_path())
    man.judgments_path().touch()
    man.save()
    print(f"wrote {len(hits)} hits + {len(gold)} gold hits -> {man.hits}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    man = RunManifest.load(resolve_data_dir(args.data))
    man.require(man.hits)
    man.judgments_path().touch()
    app = create_app(man.hits_path(), man.judgments_path(),
                     static_dir=args.ui)
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    except (OSError, SystemExit) as exc:
        print(f"serve failed: {exc}", file=sys.stderr)
        return 1
    return 0


def cmd_aggregate(args) -> int:
    man = RunManifest.load(resolve_data_dir(args.data))
    man.require(man.hits)
    state = harness_mod.HarnessState.from_files(man.hits_path(),
                                                man.judgments_path())
    votes = state.votes()
    in_flight = {h: v for h, v in votes.items()
                 if v in (harness_mod.Resolution.PENDING,
                          harness_mod.Resolution.NEEDS_FOURTH)}
    if in_flight:
        print(f"warning: {len(in_flight)} hits still awaiting judgments",
              file=sys.stderr)
    terminal = [v for v in votes.values() if v not in
                (harness_mod.Resolution.PENDING,
                 harness_mod.Resolution.NEEDS_FOURTH)]
    labels = _hit_sources(state)
    table = harness_mod.tabulate(terminal, labels)
    out = man.path("results.json")
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(table.to_json(), fh, indent=1)
    print(table.render_text())
    return 0


def _hit_sources(state: harness_mod.HarnessState) -> tuple[str, str]:
    for hid in state.order:
        h = state.hits[hid]
        if not h.is_gold:
            return (h.variant_a.source, h.variant_b.source)
    return ("A", "B")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ratattn",
        description="Train attention/rationale CNN document classifiers, "
                    "extract sentence explanations, and collect paired "
                    "human judgments")
    sub = ap.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("prepare", help="ingest a corpus, build vocab and split")
    p.add_argument("--corpus", required=True, help="corpus-JSONL file")
    p.add_argument("--out", required=True, help="data directory to create")
    p.add_argument("--min-count", type=int, default=2)
    p.add_argument("--dev-fraction", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=13)
    p.add_argument("--gold-holdout", type=int, default=50,
                   help="annotated documents reserved for gold questions")
    p.set_defaults(fn=cmd_prepare)

    p = sub.add_parser("train", help="train one model (over one or more seeds)")
    p.add_argument("--data", help="data directory (or RATATTN_DATA_DIR)")
    p.add_argument("--model", required=True,
                   choices=[k.value for k in ModelKind])
    p.add_argument("--seeds", type=int, nargs="+", default=[13],
                   help="train once per seed; the best dev seed is registered")
    p.add_argument("--epochs", type=int, default=25)
    p.add_argument("--pretrain-epochs", type=int, default=0)
    p.add_argument("--rationale-weight", type=float, default=1.0)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--dropout", type=float, default=0.5)
    p.add_argument("--patience", type=int, default=5)
    p.add_argument("--embed-dim", type=int, default=50)
    p.add_argument("--attn-dim", type=int, default=100)
    p.add_argument("--widths", type=int, nargs="+", default=[3, 4, 5])
    p.add_argument("--maps-per-width", type=int, default=50)
    p.add_argument("--embeddings", help="word2vec-style text vectors")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval-acc", help="test-set accuracy per model")
    p.add_argument("--data")
    p.add_argument("--model", default="all",
                   choices=["all"] + [k.value for k in ModelKind])
    p.set_defaults(fn=cmd_eval_acc)

    p = sub.add_parser("explain", help="extract top-k sentence explanations")
    p.add_argument("--data")
    p.add_argument("--model", required=True,
                   choices=[k.value for k in ModelKind] + ["random"])
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--seed", type=int, default=13,
                   help="seed for the random baseline")
    p.add_argument("--split", default="test",
                   choices=["test", "dev", "train", "all"])
    p.set_defaults(fn=cmd_explain)

    p = sub.add_parser("overlap", help="overlap statistics for two explanation sets")
    p.add_argument("--data")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--include-misclassified", action="store_true",
                   help="lift the both-correct filter (models-agree instead)")
    p.set_defaults(fn=cmd_overlap)

    p = sub.add_parser("gen-hits", help="build paired hits plus gold questions")
    p.add_argument("--data")
    p.add_argument("--a", required=True, help="explanation tag for variant A")
    p.add_argument("--b", required=True, help="explanation tag for variant B")
    p.add_argument("--seed", type=int, default=13)
    p.add_argument("--gold-count", type=int, default=10)
    p.add_argument("--include-misclassified", action="store_true")
    p.set_defaults(fn=cmd_gen_hits)

    p = sub.add_parser("serve", help="run the judgment-collection service")
    p.add_argument("--data")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8017)
    p.add_argument("--ui", help="directory with the built judge UI")
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("aggregate", help="majority-vote results table")
    p.add_argument("--data")
    p.set_defaults(fn=cmd_aggregate)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (FileNotFoundError, CorpusError, harness_mod.HarnessError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
