import numpy as np
import pytest

from ratattn.corpus import Split, build_vocab, make_split
from ratattn.models import ModelKind, TrainConfig, train
from ratattn.synth import make_keyword_corpus, make_review_corpus

# small dims that still learn the synthetic tasks quickly
SMALL = dict(embed_dim=16, attn_dim=12, widths=(2, 3), maps_per_width=8,
             dropout=0.0, lr=2e-3, patience=30)


def small_config(kind, **over):
    base = dict(SMALL, kind=kind, epochs=12, seed=5)
    base.update(over)
    return TrainConfig(**base)


@pytest.fixture(scope="session")
def keyword_corpus():
    # 40 annotated train docs + 10 unannotated for testing
    return make_keyword_corpus(50, seed=3, annotated=40)


@pytest.fixture(scope="session")
def keyword_setup(keyword_corpus):
    vocab = build_vocab(keyword_corpus, min_count=1)
    split = make_split(keyword_corpus, dev_fraction=0.0, seed=1)
    return keyword_corpus, vocab, split


@pytest.fixture(scope="session")
def review_corpus():
    return make_review_corpus(n_docs=120, annotated=100, mean_sentences=10,
                              mean_rationales=3, seed=7)


@pytest.fixture(scope="session")
def review_setup(review_corpus):
    vocab = build_vocab(review_corpus, min_count=1)
    split = make_split(review_corpus, dev_fraction=0.1, seed=13)
    by_id = {d.doc_id: d for d in review_corpus}
    return review_corpus, vocab, split, by_id


@pytest.fixture(scope="session")
def trained_pair(review_setup):
    """RA-CNN and AT-CNN trained on the synthetic review corpus; shared by
    the harness, service, CLI, and acceptance tests."""
    corpus, vocab, split, _ = review_setup
    cfgs = {
        ModelKind.RA_CNN: small_config(ModelKind.RA_CNN, epochs=15,
                                       dropout=0.2, lr=1e-3, seed=5),
        ModelKind.AT_CNN: small_config(ModelKind.AT_CNN, epochs=15,
                                       dropout=0.2, lr=1e-3, seed=5),
    }
    return {kind: train(cfg, split, corpus, vocab)
            for kind, cfg in cfgs.items()}


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
