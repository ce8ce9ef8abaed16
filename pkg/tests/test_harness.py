import itertools
import random
from collections import Counter

import pytest

from ratattn.explain import Explanation
from ratattn.harness import (
    DuplicateJudgment,
    HarnessError,
    HarnessState,
    Hit,
    Judgment,
    Resolution,
    UnknownWorker,
    Variant,
    WorkerRecord,
    build_gold_hits,
    build_hits,
    majority_vote,
    read_hits,
    tabulate,
    write_hits,
)
from ratattn.synth import make_keyword_corpus, make_review_corpus


def expl(doc_id, indices, model="m"):
    return Explanation(doc_id=doc_id, model=model, k=3,
                       ranked=tuple((i, 0.0) for i in indices))


def docs_fixture(n=20):
    return make_review_corpus(n_docs=n, annotated=n, mean_sentences=8,
                              mean_rationales=3, seed=4)


def make_state(n_hits=6, n_gold=2, seed=0):
    docs = docs_fixture(n_hits + n_gold + 14)
    pair_docs = docs[:n_hits]
    ea = [expl(d.doc_id, (0, 1, 2), "ra-cnn") for d in pair_docs]
    eb = [expl(d.doc_id, (1, 2, 3), "at-cnn") for d in pair_docs]
    hits = build_hits(pair_docs, ea, eb, seed=seed)
    gold = build_gold_hits(docs[n_hits:], seed=seed, count=n_gold)
    return HarnessState(hits + gold), hits, gold


def judge(state, worker, hit, correct_gold=True, real="A", ts=0.0):
    state.register_worker(worker)
    if hit.is_gold:
        choice = hit.gold_expected if correct_gold else \
            ("B" if hit.gold_expected == "A" else "A")
    else:
        choice = real
    return state.submit(hit.hit_id, worker, choice, ts)


class TestBuildHits:
    def test_one_hit_per_document(self):
        docs = docs_fixture(8)
        ea = [expl(d.doc_id, (0, 1, 2)) for d in docs]
        eb = [expl(d.doc_id, (1, 2, 3)) for d in docs]
        hits = build_hits(docs, ea, eb, seed=1)
        assert len(hits) == len(docs)
        assert [h.doc_id for h in hits] == [d.doc_id for d in docs]
        assert all(h.label == d.label.value for h, d in zip(hits, docs))

    def test_missing_explanation_names_document(self):
        docs = docs_fixture(3)
        ea = [expl(d.doc_id, (0,)) for d in docs]
        eb = [expl(d.doc_id, (1,)) for d in docs[:-1]]
        with pytest.raises(HarnessError, match=docs[-1].doc_id):
            build_hits(docs, ea, eb, seed=1)

    def test_deterministic_per_seed_and_seed_sensitive(self):
        docs = docs_fixture(12)
        ea = [expl(d.doc_id, (0, 1, 2)) for d in docs]
        eb = [expl(d.doc_id, (1, 2, 3)) for d in docs]
        h1 = build_hits(docs, ea, eb, seed=5)
        h2 = build_hits(docs, ea, eb, seed=5)
        h3 = build_hits(docs, ea, eb, seed=6)
        assert [h.order_seed for h in h1] == [h.order_seed for h in h2]
        assert [h.left_is_a for h in h1] != [h.left_is_a for h in h3]

    def test_left_right_balance_over_many_hits(self):
        docs = docs_fixture(40)
        ea = [expl(d.doc_id, (0, 1, 2)) for d in docs]
        eb = [expl(d.doc_id, (1, 2, 3)) for d in docs]
        lefts = 0
        for seed in range(25):  # 1000 hits total
            lefts += sum(h.left_is_a for h in build_hits(docs, ea, eb, seed=seed))
        # binomial(1000, .5): 3 sigma ~= 47
        assert abs(lefts - 500) < 47

    def test_blind_ids(self):
        docs = docs_fixture(2)
        ea = [expl(d.doc_id, (0,)) for d in docs]
        eb = [expl(d.doc_id, (1,)) for d in docs]
        for h in build_hits(docs, ea, eb, seed=1):
            assert docs[0].doc_id not in h.hit_id
            assert "gold" not in h.hit_id


class TestBuildGoldHits:
    def test_variants_are_rationale_pure(self):
        docs = docs_fixture(50)
        gold = build_gold_hits(docs, seed=3, count=10)
        assert len(gold) == 10
        by_id = {d.doc_id: d for d in docs}
        for h in gold:
            doc = by_id[h.doc_id]
            rat = {i for i, s in enumerate(doc.sentences) if s.rationale}
            assert set(h.variant_a.indices) <= rat
            assert not (set(h.variant_b.indices) & rat)
            assert h.is_gold and h.gold_expected == "A"

    def test_zero_count(self):
        assert build_gold_hits(docs_fixture(5), seed=1, count=0) == []

    def test_insufficient_documents_error(self):
        docs = make_keyword_corpus(6, seed=1)  # only 1 rationale per doc
        with pytest.raises(HarnessError, match="gold"):
            build_gold_hits(docs, seed=1, count=2)


class TestMajorityVote:
    def workers(self, trust_map):
        return {w: WorkerRecord(w, gold_outcomes=[ok]) for w, ok in trust_map.items()}

    def vote(self, choices, trust=None):
        trust = trust or {}
        workers = {}
        judgments = []
        for i, c in enumerate(choices):
            w = f"w{i}"
            workers[w] = WorkerRecord(w, gold_outcomes=[trust.get(i, True)])
            judgments.append(Judgment("h", w, c, ts=i))
        return majority_vote(judgments, workers)

    def test_pair_agreement(self):
        assert self.vote(["A", "A", "EQUAL"]) is Resolution.A

    def test_three_way_split_needs_fourth(self):
        assert self.vote(["A", "B", "EQUAL"]) is Resolution.NEEDS_FOURTH

    def test_untrusted_vote_discarded(self):
        # (A, A, B) with one A-voter untrusted leaves (A, B): a tie
        assert self.vote(["A", "A", "B"], trust={0: False}) is \
            Resolution.NEEDS_FOURTH
        assert self.vote(["A", "A", "B", "A"], trust={0: False}) is Resolution.A

    def test_two_two_after_four_is_unresolved(self):
        assert self.vote(["A", "A", "B", "B"]) is Resolution.UNRESOLVED

    def test_exhaustive_enumeration_oracle(self):
        # every judgment sequence of length <= 4 with every trust pattern
        def oracle(trusted_choices):
            c = Counter(trusted_choices)
            if c:
                top = c.most_common()
                if top[0][1] >= 2 and (len(top) == 1 or top[1][1] < top[0][1]):
                    return Resolution(top[0][0])
            if len(trusted_choices) >= 4:
                return Resolution.UNRESOLVED
            if len(trusted_choices) >= 2:
                return Resolution.NEEDS_FOURTH
            return Resolution.PENDING

        n_checked = 0
        for size in range(5):
            for choices in itertools.product(("A", "B", "EQUAL"), repeat=size):
                for trust in itertools.product((True, False), repeat=size):
                    workers = {f"w{i}": WorkerRecord(f"w{i}", [trust[i]])
                               for i in range(size)}
                    judgments = [Judgment("h", f"w{i}", c, ts=i)
                                 for i, c in enumerate(choices)]
                    got = majority_vote(judgments, workers)
                    want = oracle([c for c, t in zip(choices, trust) if t])
                    assert got is want, (choices, trust)
                    n_checked += 1
        assert n_checked == sum(6 ** k for k in range(5))

    def test_order_independence(self, rng):
        choices = ["A", "B", "EQUAL", "A"]
        workers = {f"w{i}": WorkerRecord(f"w{i}", [True]) for i in range(4)}
        base = None
        for perm in itertools.permutations(range(4)):
            judgments = [Judgment("h", f"w{i}", choices[i], ts=t)
                         for t, i in enumerate(perm)]
            r = majority_vote(judgments, workers)
            base = base or r
            assert r is base


class TestDerandomization:
    def test_choice_from_side_round_trips(self):
        docs = docs_fixture(30)
        ea = [expl(d.doc_id, (0, 1, 2)) for d in docs]
        eb = [expl(d.doc_id, (1, 2, 3)) for d in docs]
        hits = build_hits(docs, ea, eb, seed=11)
        assert {h.left_is_a for h in hits} == {True, False}
        for h in hits:
            left, right = ("A", "B") if h.left_is_a else ("B", "A")
            assert h.choice_from_side("LEFT") == left
            assert h.choice_from_side("RIGHT") == right
            assert h.choice_from_side("EQUAL") == "EQUAL"


class TestAssignment:
    def test_fresh_worker_gets_gold_first(self):
        state, hits, gold = make_state()
        state.register_worker("w1")
        first = state.assign_next_hit("w1")
        assert first.is_gold

    def test_unknown_worker_errors(self):
        state, *_ = make_state()
        with pytest.raises(UnknownWorker):
            state.assign_next_hit("ghost")

    def test_failed_gold_worker_excluded(self):
        state, hits, gold = make_state()
        state.register_worker("bad")
        g = state.assign_next_hit("bad")
        judge(state, "bad", g, correct_gold=False)
        assert state.assign_next_hit("bad") is None

    def test_replay_pool_reaches_three_trusted_judgments(self):
        state, hits, gold = make_state(n_hits=10, n_gold=3)
        workers = [f"w{i}" for i in range(5)]
        rnd = random.Random(0)
        ts = 0.0
        for w in workers:
            state.register_worker(w)
        active = True
        while active:
            active = False
            for w in workers:
                hit = state.assign_next_hit(w)
                if hit is None:
                    continue
                active = True
                judge(state, w, hit, correct_gold=True,
                      real=rnd.choice(["A", "B", "EQUAL"]), ts=ts)
                ts += 1
        for hid, hit in state.hits.items():
            if hit.is_gold:
                continue
            trusted = [j for j in state.judgments[hid]
                       if state.workers[j.worker_id].trusted]
            assert len(trusted) >= 3
            assert state.resolution(hid) not in (Resolution.PENDING,)

    def test_duplicate_judgment_rejected(self):
        state, hits, gold = make_state()
        state.register_worker("w1")
        g = state.assign_next_hit("w1")
        judge(state, "w1", g)
        with pytest.raises(DuplicateJudgment):
            state.submit(g.hit_id, "w1", "A", ts=9.0)


class TestUntrustedInfluence:
    def test_deleting_untrusted_judgments_changes_nothing(self):
        state, hits, gold = make_state(n_hits=8, n_gold=2)
        rnd = random.Random(3)
        ts = 0.0
        for w, ok in [("w1", True), ("w2", True), ("w3", True), ("evil", False)]:
            state.register_worker(w)
            g = state.assign_next_hit(w)
            judge(state, w, g, correct_gold=ok, ts=ts)
            ts += 1
        for w in ("w1", "w2", "w3"):
            while True:
                hit = state.assign_next_hit(w)
                if hit is None:
                    break
                judge(state, w, hit, real=rnd.choice(["A", "B"]), ts=ts)
                ts += 1
        # inject judgments from the failed worker directly (raw API path)
        for hid, hit in state.hits.items():
            if not hit.is_gold and not any(
                    j.worker_id == "evil" for j in state.judgments[hid]):
                state.submit(hid, "evil", "B", ts=ts)
                ts += 1
        with_evil = {hid: state.resolution(hid) for hid in state.hits}

        clean = HarnessState(list(state.hits.values()))
        for hid, js in state.judgments.items():
            for j in js:
                if j.worker_id == "evil":
                    continue
                clean.register_worker(j.worker_id)
                clean.submit(j.hit_id, j.worker_id, j.choice, j.ts)
        without = {hid: clean.resolution(hid) for hid in clean.hits}
        assert with_evil == without


class TestTabulate:
    def test_synthetic_166_vote_table(self):
        votes = ["A"] * 72 + ["B"] * 34 + ["EQUAL"] * 60
        table = tabulate(votes, ("RA-CNN", "AT-CNN"))
        assert table.percents == (43.37, 20.48, 36.14)
        text = table.render_text()
        assert "RA-CNN" in text and "AT-CNN" in text and "Equal" in text
        assert "43.37%" in text and "20.48%" in text and "36.14%" in text

    def test_all_equal(self):
        table = tabulate(["EQUAL"] * 7, ("RA", "AT"))
        assert table.percents == (0.0, 0.0, 100.0)

    def test_percentages_sum_within_rounding(self, rng):
        for _ in range(50):
            votes = (["A"] * int(rng.integers(1, 60))
                     + ["B"] * int(rng.integers(0, 60))
                     + ["EQUAL"] * int(rng.integers(0, 60)))
            table = tabulate(votes, ("RA", "AT"))
            assert abs(sum(table.percents) - 100.0) <= 0.02

    def test_unresolved_excluded_from_denominator(self):
        table = tabulate(["A", "A", "UNRESOLVED", "B"], ("RA", "AT"))
        assert table.total == 3
        assert table.unresolved == 1
        assert table.percents[0] == pytest.approx(66.67)

    def test_empty_errors(self):
        with pytest.raises(HarnessError):
            tabulate([], ("RA", "AT"))

    def test_non_terminal_vote_rejected(self):
        with pytest.raises(HarnessError, match="not terminal"):
            tabulate(["A", "PENDING"], ("RA", "AT"))


def test_hits_file_round_trip(tmp_path):
    state, hits, gold = make_state()
    path = tmp_path / "hits.jsonl"
    write_hits(hits + gold, path)
    again = read_hits(path)
    assert again == hits + gold


def test_state_event_sourcing_round_trip(tmp_path):
    import json
    state, hits, gold = make_state(n_hits=4, n_gold=1)
    log = tmp_path / "judgments.log"
    hits_path = tmp_path / "hits.jsonl"
    write_hits(hits + gold, hits_path)
    entries = []
    for w in ("w1", "w2", "w3"):
        state.register_worker(w)
        for _ in range(5):
            hit = state.assign_next_hit(w)
            if hit is None:
                break
            j = judge(state, w, hit, real="A", ts=len(entries))
            entries.append(j.to_json())
    log.write_text("\n".join(json.dumps(e) for e in entries) + "\n")
    rebuilt = HarnessState.from_files(hits_path, log)
    assert {h: state.resolution(h) for h in state.hits} == \
        {h: rebuilt.resolution(h) for h in rebuilt.hits}
    assert {w: r.trusted for w, r in state.workers.items()} == \
        {w: r.trusted for w, r in rebuilt.workers.items()}
