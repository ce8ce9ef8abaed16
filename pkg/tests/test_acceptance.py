"""Acceptance suite: one test per acceptance criterion, at the stated
tolerances. Criteria that need the real rationale-annotated movie-review
corpus are skipped (not weakened) when RATATTN_MOVIES_JSONL is unset; the
rest run on bundled synthetic corpora of the same shape."""

import itertools
import json
import math
import os
import time
from collections import Counter

import numpy as np
import pytest
from fastapi.testclient import TestClient

import ratattn.models as models_mod
from ratattn.corpus import build_vocab, load_corpus, make_split
from ratattn.explain import extract_top_k, overlap_stats, random_explanation
from ratattn.harness import (
    HarnessState,
    Judgment,
    Resolution,
    WorkerRecord,
    build_gold_hits,
    build_hits,
    majority_vote,
    read_hits,
    tabulate,
    write_hits,
)
from ratattn.models import (
    ModelKind,
    Prediction,
    TrainConfig,
    both_correct_filter,
    evaluate_accuracy,
    grad_check,
    predict,
    train,
)
from ratattn.service import create_app
from ratattn.synth import make_keyword_corpus

from conftest import small_config

MOVIES = os.environ.get("RATATTN_MOVIES_JSONL")
EMBEDDINGS = os.environ.get("RATATTN_EMBEDDINGS")


def ok(name):
    print(f"\n[PASS] {name}")


@pytest.mark.paper_corpus
@pytest.mark.slow
@pytest.mark.skipif(
    not MOVIES,
    reason="needs the rationale-annotated movie-review corpus; set "
           "RATATTN_MOVIES_JSONL to its corpus-JSONL path (and optionally "
           "RATATTN_EMBEDDINGS to pretrained word2vec-format vectors)")
def test_criterion_table1_reproduction():
    """Best of 5 seeds per model on the 1,800/200 split: accuracy thresholds
    plus the RA > AT > Doc ordering."""
    docs = load_corpus(MOVIES)
    split = make_split(docs, dev_fraction=0.1, seed=13)
    vocab = build_vocab([d for d in docs if d.doc_id in set(split.train)],
                        min_count=2)
    by_id = {d.doc_id: d for d in docs}
    test_docs = [by_id[i] for i in split.test]

    embeddings = None
    if EMBEDDINGS:
        embeddings = models_mod.load_word_vectors(EMBEDDINGS, vocab, dim=50)
    # thresholds relax by 3 points without pretrained embeddings
    relax = 0.0 if EMBEDDINGS else 0.03
    thresholds = {ModelKind.DOC_CNN: 0.83 - relax,
                  ModelKind.AT_CNN: 0.855 - relax,
                  ModelKind.RA_CNN: 0.87 - relax}

    best = {}
    for kind in ModelKind:
        accs = []
        for seed in (1, 2, 3, 4, 5):
            cfg = TrainConfig(kind=kind, seed=seed)
            ckpt = train(cfg, split, docs, vocab, embeddings=embeddings)
            accs.append(evaluate_accuracy(ckpt, test_docs))
        best[kind] = max(accs)
        print(f"{kind.value}: best of 5 seeds = {best[kind]:.4f}")
    for kind, floor in thresholds.items():
        assert best[kind] >= floor, f"{kind.value}: {best[kind]} < {floor}"
    assert best[ModelKind.RA_CNN] > best[ModelKind.AT_CNN] > best[ModelKind.DOC_CNN]
    ok("table-1 reproduction (tolerances and ordering)")


def test_criterion_gradient_correctness():
    """grad_check on all three models' full losses: < 1e-4 against central
    finite differences in under a minute, on fixtures <= 500 parameters."""
    t0 = time.monotonic()
    corpus = make_keyword_corpus(2, seed=21, sentences_per_doc=2)
    vocab = build_vocab(corpus, min_count=1)
    for kind in ModelKind:
        cfg = TrainConfig(kind=kind, embed_dim=3, attn_dim=4, widths=(2, 3),
                          maps_per_width=2, dropout=0.0, seed=11)
        params = models_mod.init_params(cfg, vocab.size)
        assert params.n_values() <= 500, "fixture exceeds 500 parameters"
        err = grad_check(cfg, corpus[0], vocab, epsilon=1e-4)
        print(f"{kind.value}: max relative gradient error {err:.3e}")
        assert err < 1e-4
    elapsed = time.monotonic() - t0
    assert elapsed < 60.0, f"gradient check took {elapsed:.1f}s"
    ok(f"gradient correctness (<1e-4, {elapsed:.1f}s)")


def test_criterion_weight_contracts(trained_pair, review_setup):
    """Zero violations over every document: AT weights sum to 1 +- 1e-6,
    RA weights strictly inside (0,1), Doc-CNN weights uniform."""
    corpus, vocab, split, by_id = review_setup
    doc_cfg = small_config(ModelKind.DOC_CNN, epochs=3)
    doc_ckpt = train(doc_cfg, split, corpus, vocab)
    checkers = {
        ModelKind.AT_CNN:
            lambda w: abs(sum(w) - 1.0) <= 1e-6 and all(x > 0 for x in w),
        ModelKind.RA_CNN:
            lambda w: all(0.0 < x < 1.0 for x in w),
        ModelKind.DOC_CNN:
            lambda w: all(x == 1.0 / len(w) for x in w),
    }
    ckpts = dict(trained_pair)
    ckpts[ModelKind.DOC_CNN] = doc_ckpt
    violations = 0
    for doc in corpus:  # every split, every document
        for kind, ckpt in ckpts.items():
            w = predict(ckpt, doc).sentence_weights
            if len(w) != len(doc.sentences) or not checkers[kind](w):
                violations += 1
    assert violations == 0
    ok(f"weight contracts over {len(corpus)} documents x 3 models")


def test_criterion_explanation_oracle_equivalence(rng):
    """extract_top_k == full-sort oracle on 1,000 weight vectors;
    overlap_stats == set-intersection oracle on 200 explanation pairs."""
    matches = 0
    for t in range(1000):
        n = int(rng.integers(1, 40))
        w = rng.uniform(0, 1, n)
        if t % 3 == 0:
            w = w.round(1)  # force ties
        p = Prediction(doc_id=f"d{t}", label="pos", probs=(0.5, 0.5),
                       sentence_weights=tuple(w))
        got = extract_top_k(p, k=3).indices
        want = tuple(sorted(range(n), key=lambda i: (-w[i], i))[:3])
        matches += got == want
    assert matches == 1000

    from ratattn.explain import Explanation

    def expl(doc_id, idx):
        return Explanation(doc_id, "m", 3, tuple((i, 0.0) for i in idx))

    agree = 0
    for t in range(200):
        ids = [f"d{i}" for i in range(int(rng.integers(2, 30)))]
        ea, eb = [], []
        shared = Counter()
        top1 = 0
        for d in ids:
            ia = tuple(int(x) for x in rng.choice(10, 3, replace=False))
            ib = tuple(int(x) for x in rng.choice(10, 3, replace=False))
            ea.append(expl(d, ia))
            eb.append(expl(d, ib))
            shared[len(set(ia) & set(ib))] += 1
            top1 += ia[0] == ib[0]
        rep = overlap_stats(ea, eb)
        agree += (rep.share_counts == tuple(shared[s] for s in range(4))
                  and rep.top1_agreement == top1 / len(ids))
    assert agree == 200
    ok("explanation oracle equivalence (1000 top-k + 200 overlap cases)")


def test_criterion_aggregation_correctness():
    """majority_vote equals the enumeration truth table on every vote
    multiset of size <= 4; the synthetic 166-vote log tabulates to the
    Table-2 numbers."""
    def oracle(trusted):
        c = Counter(trusted)
        if c:
            top = c.most_common()
            if top[0][1] >= 2 and (len(top) == 1 or top[1][1] < top[0][1]):
                return Resolution(top[0][0])
        if len(trusted) >= 4:
            return Resolution.UNRESOLVED
        if len(trusted) >= 2:
            return Resolution.NEEDS_FOURTH
        return Resolution.PENDING

    cases = 0
    for size in range(5):
        for choices in itertools.product(("A", "B", "EQUAL"), repeat=size):
            for trust in itertools.product((True, False), repeat=size):
                workers = {f"w{i}": WorkerRecord(f"w{i}", [trust[i]])
                           for i in range(size)}
                judgments = [Judgment("h", f"w{i}", c, ts=i)
                             for i, c in enumerate(choices)]
                want = oracle([c for c, t in zip(choices, trust) if t])
                assert majority_vote(judgments, workers) is want
                cases += 1

    votes = ["A"] * 72 + ["B"] * 34 + ["EQUAL"] * 60
    table = tabulate(votes, ("RA-CNN", "AT-CNN"))
    assert table.total == 166
    assert table.percents == (43.37, 20.48, 36.14)
    text = table.render_text()
    assert text.splitlines()[0].split("|")[0].strip() == "RA-CNN"
    assert "43.37%" in text and "20.48%" in text and "36.14%" in text
    ok(f"aggregation correctness ({cases} enumerated vote multisets + "
       "166-vote table)")


def test_criterion_harness_pipeline(tmp_path, trained_pair, review_setup):
    """gen-hits emits exactly the both-correct documents; a scripted
    4-worker run (one failing gold) resolves every hit without counting the
    failed worker, and aggregates survive a service restart."""
    corpus, vocab, split, by_id = review_setup
    test_docs = [by_id[i] for i in split.test]
    ra, at = trained_pair[ModelKind.RA_CNN], trained_pair[ModelKind.AT_CNN]

    both = both_correct_filter(ra, at, test_docs)
    assert both, "fixture models failed to co-classify any test document"
    chosen = [by_id[i] for i in both]
    ea = [extract_top_k(predict(ra, d), 3, model="ra-cnn") for d in chosen]
    eb = [extract_top_k(predict(at, d), 3, model="at-cnn") for d in chosen]
    hits = build_hits(chosen, ea, eb, seed=7)
    assert len(hits) == len(both)

    gold_docs = [by_id[i] for i in split.train[:20]]
    gold = build_gold_hits(gold_docs, seed=7, count=4)
    hits_path, log_path = tmp_path / "hits.jsonl", tmp_path / "judg.log"
    write_hits(hits + gold, hits_path)
    log_path.touch()

    client = TestClient(create_app(hits_path, log_path))
    bank = {h.hit_id: h for h in read_hits(hits_path)}

    def run(worker, fail_gold=False, side="LEFT"):
        while True:
            r = client.get("/api/hits/next", params={"worker_id": worker})
            if r.status_code == 204:
                return
            hit = bank[r.json()["hit_id"]]
            if hit.is_gold:
                good = "LEFT" if (hit.left_is_a == (hit.gold_expected == "A")) \
                    else "RIGHT"
                choice = ("RIGHT" if good == "LEFT" else "LEFT") if fail_gold \
                    else good
            else:
                choice = side
            assert client.post("/api/judgments", json={
                "hit_id": hit.hit_id, "worker_id": worker,
                "choice": choice}).status_code == 201

    run("w1", side="LEFT")
    run("cheat", fail_gold=True)     # excluded after one wrong gold answer
    run("w2", side="RIGHT")
    run("w3", side="EQUAL")          # every hit now splits three ways
    run("w4", side="LEFT")           # the tie-breaking fourth worker

    # the failed worker judged only gold; force raw judgments onto real hits
    for h in hits[:3]:
        client.post("/api/judgments", json={
            "hit_id": h.hit_id, "worker_id": "cheat", "choice": "EQUAL"})

    results = client.get("/api/results").json()
    assert results["pending"] == 0
    assert results["resolved"] == len(hits)
    assert results["unresolved"] == 0

    # the failed worker's judgments influenced nothing: rebuild without them
    state = HarnessState(read_hits(hits_path))
    with open(log_path, encoding="utf-8") as fh:
        for line in fh:
            obj = json.loads(line)
            if obj["worker_id"] == "cheat" and not bank[obj["hit_id"]].is_gold:
                continue
            state.register_worker(obj["worker_id"])
            state.submit(obj["hit_id"], obj["worker_id"], obj["choice"],
                         obj["ts"])
    votes = [v for hid, v in state.votes().items()]
    clean_table = tabulate(votes, ("RA", "AT")).to_json()
    assert clean_table["counts"] == results["table"]["counts"]

    # restart: a new service over the same files reports identical aggregates
    client2 = TestClient(create_app(hits_path, log_path))
    assert client2.get("/api/results").json() == results
    ok(f"harness pipeline ({len(hits)} hits, 4 trusted workers + 1 excluded, "
       "restart-stable)")


def test_criterion_overlap_report_is_qualitative_only(trained_pair, review_setup):
    """The human-judgment percentages and the overlap distribution are not
    desk-reproducible; the trained pair's overlap report is emitted for
    qualitative comparison with its structural invariants checked."""
    corpus, vocab, split, by_id = review_setup
    test_docs = [by_id[i] for i in split.test]
    ra, at = trained_pair[ModelKind.RA_CNN], trained_pair[ModelKind.AT_CNN]
    ea = [extract_top_k(predict(ra, d), 3, model="ra-cnn") for d in test_docs]
    eb = [extract_top_k(predict(at, d), 3, model="at-cnn") for d in test_docs]
    rep = overlap_stats(ea, eb)
    print("\noverlap of trained RA-CNN vs AT-CNN explanations "
          "(synthetic corpus, qualitative only):")
    print(rep.render_text())
    assert sum(rep.share_counts) == rep.n_documents == len(test_docs)
    assert abs(sum(rep.share_percent) - 100.0) <= 0.3
    assert 0.0 <= rep.top1_agreement <= 1.0
    ok("overlap report emitted (values intentionally not asserted against "
       "the paper's human-subject numbers)")
