"""The three document classifiers: a plain sentence-CNN summing sentence
vectors (Doc-CNN), the same encoder with learned softmax attention over
sentences (AT-CNN), and the rationale-supervised variant whose per-sentence
weight is the probability of being a rationale (RA-CNN).

Training is one document per Adam step with early stopping on dev accuracy;
the embedding table is updated row-sparsely.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import Document, Label, Vocabulary
from .tensor import (
    AdamState,
    PackedDoc,
    ParamSet,
    Var,
    adam_step,
    adam_step_rows,
    attention_weights,
    backward,
    check_gradients,
    dropout,
    encode_sentences,
    rationale_logits,
    read_checkpoint,
    sigmoid,
    sigmoid_bce_sum,
    softmax_xent,
    weighted_sum,
    write_checkpoint,
)
from .tensor.ops import add, matvec, scale, sum_rows

LABEL_TO_CLASS = {Label.POS: 0, Label.NEG: 1}
CLASS_TO_LABEL = {0: Label.POS, 1: Label.NEG}


class ModelKind(str, Enum):
    DOC_CNN = "doc-cnn"
    AT_CNN = "at-cnn"
    RA_CNN = "ra-cnn"


@dataclass(frozen=True)
class TrainConfig:
    kind: ModelKind
    epochs: int = 25
    pretrain_epochs: int = 0
    rationale_weight: float = 1.0
    lr: float = 1e-3
    dropout: float = 0.5
    patience: int = 5
    seed: int = 13
    embed_dim: int = 50
    attn_dim: int = 100
    widths: tuple[int, ...] = (3, 4, 5)
    maps_per_width: int = 50
    init_scale: float = 0.05

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.pretrain_epochs < 0:
            raise ValueError("pretrain_epochs must be >= 0")
        if self.rationale_weight < 0:
            raise ValueError("rationale loss weight must be >= 0")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if not self.widths:
            raise ValueError("at least one filter width required")
        object.__setattr__(self, "kind", ModelKind(self.kind))
        object.__setattr__(self, "widths", tuple(sorted(self.widths)))

    @property
    def feature_dim(self) -> int:
        return self.maps_per_width * len(self.widths)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kind"] = self.kind.value
        d["widths"] = list(self.widths)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        d["kind"] = ModelKind(d["kind"])
        d["widths"] = tuple(d["widths"])
        return cls(**d)


@dataclass(frozen=True)
class Prediction:
    doc_id: str
    label: Label
    probs: tuple[float, float]
    sentence_weights: tuple[float, ...]


def init_params(config: TrainConfig, vocab_size: int,
                embeddings: np.ndarray | None = None) -> ParamSet:
    """Seeded uniform(-scale, scale) initialization; the padding embedding
    row is pinned to zero. A pretrained embedding matrix overrides E."""
    rng = np.random.default_rng(config.seed)
    s = config.init_scale
    d, a, M = config.embed_dim, config.attn_dim, config.feature_dim

    E = rng.uniform(-s, s, (vocab_size, d))
    if embeddings is not None:
        if embeddings.shape != (vocab_size, d):
            raise ValueError(
                f"pretrained embeddings shape {embeddings.shape} does not "
                f"match ({vocab_size}, {d})")
        E = embeddings.astype(np.float64).copy()
    E[0] = 0.0

    tensors = {"E": E}
    for w in config.widths:
        tensors[f"F{w}"] = rng.uniform(-s, s, (config.maps_per_width, w * d))
    if config.kind is ModelKind.AT_CNN:
        tensors["W"] = rng.uniform(-s, s, (a, M))
        tensors["b"] = rng.uniform(-s, s, a)
        tensors["u"] = rng.uniform(-s, s, a)
    if config.kind is ModelKind.RA_CNN:
        tensors["v"] = rng.uniform(-s, s, M)
        tensors["c"] = np.float64(rng.uniform(-s, s))
    tensors["U_doc"] = rng.uniform(-s, s, (2, M))
    tensors["b_doc"] = rng.uniform(-s, s, 2)
    return ParamSet(tensors)


def encode_document(doc: Document, vocab: Vocabulary,
                    widths: Sequence[int]) -> PackedDoc:
    sents = [np.asarray(vocab.encode(s.tokens), dtype=np.int64)
             for s in doc.sentences]
    return PackedDoc(sents, tuple(widths))


def _forward(kind: ModelKind, pv: dict[str, Var], packed: PackedDoc,
             config: TrainConfig, train: bool = False,
             rng: np.random.Generator | None = None):
    """Shared forward pass. Returns (logits, sentence weight values,
    rationale logit Var or None)."""
    filters = {w: pv[f"F{w}"] for w in config.widths}
    S = encode_sentences(packed, pv["E"], filters)
    z = None
    if kind is ModelKind.DOC_CNN:
        docvec = sum_rows(S)
        n = packed.n_sentences
        weights = np.full(n, 1.0 / n)
    elif kind is ModelKind.AT_CNN:
        alpha = attention_weights(S, pv["W"], pv["b"], pv["u"])
        docvec = weighted_sum(S, alpha)
        weights = alpha.value
    else:
        z = rationale_logits(S, pv["v"], pv["c"])
        p = sigmoid(z)
        docvec = weighted_sum(S, p)
        weights = p.value
    if train and config.dropout > 0.0:
        assert rng is not None
        docvec = dropout(docvec, config.dropout, rng)
    logits = matvec(pv["U_doc"], docvec, pv["b_doc"])
    return logits, weights, z


def _rationale_targets(doc: Document) -> np.ndarray:
    return np.array([1.0 if s.rationale else 0.0 for s in doc.sentences])


def _rationale_term(pv: dict[str, Var], z: Var, doc: Document) -> Var:
    # averaged over sentences: a summed term grows with document length and
    # its gradient drowns the label loss, collapsing the shared encoder
    return scale(sigmoid_bce_sum(z, _rationale_targets(doc)),
                 1.0 / len(doc.sentences))


def _loss_var(pv: dict[str, Var], packed: PackedDoc, doc: Document,
              config: TrainConfig, train: bool = False,
              rng: np.random.Generator | None = None,
              rationale_only: bool = False) -> Var:
    kind = config.kind
    if rationale_only:
        filters = {w: pv[f"F{w}"] for w in config.widths}
        S = encode_sentences(packed, pv["E"], filters)
        z = rationale_logits(S, pv["v"], pv["c"])
        return _rationale_term(pv, z, doc)
    logits, _, z = _forward(kind, pv, packed, config, train, rng)
    xent, _ = softmax_xent(logits, LABEL_TO_CLASS[doc.label])
    if kind is ModelKind.RA_CNN and doc.annotated and config.rationale_weight > 0:
        rat = _rationale_term(pv, z, doc)
        return add(xent, scale(rat, config.rationale_weight))
    return xent


def loss(kind: ModelKind, doc: Document, params: ParamSet,
         config: TrainConfig, vocab: Vocabulary) -> float:
    """Training objective for one document, dropout disabled: label
    cross-entropy, plus (for RA-CNN on an annotated document) the rationale
    weight times the mean per-sentence binary cross-entropy between the
    rationale probabilities and the human flags."""
    packed = encode_document(doc, vocab, config.widths)
    pv = {n: Var(t) for n, t in params.items()}
    return float(_loss_var(pv, packed, doc, config).value)


@dataclass
class ModelCheckpoint:
    kind: ModelKind
    config: TrainConfig
    params: ParamSet
    vocab: Vocabulary
    history: list[dict] = field(default_factory=list)

    def vocab_digest(self) -> str:
        items = sorted(self.vocab.token_to_id.items(), key=lambda kv: kv[1])
        blob = "\n".join(f"{t}\t{i}" for t, i in items).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()

    def save(self, path: str | Path, vocab_ref: str = "") -> None:
        meta = {
            "kind": self.kind.value,
            "config": self.config.to_dict(),
            "vocab_ref": vocab_ref,
            "vocab_sha256": self.vocab_digest(),
            "history": self.history,
        }
        write_checkpoint(path, meta, self.params)

    @classmethod
    def load(cls, path: str | Path,
             vocab: Vocabulary | None = None) -> "ModelCheckpoint":
        meta, params = read_checkpoint(path)
        config = TrainConfig.from_dict(meta["config"])
        if vocab is None:
            ref = meta.get("vocab_ref")
            if not ref:
                raise ValueError(
                    "checkpoint carries no vocabulary reference; pass vocab=")
            vpath = Path(ref)
            if not vpath.is_absolute():
                vpath = Path(path).parent / vpath
            vocab = Vocabulary.load(vpath)
        ckpt = cls(kind=config.kind, config=config, params=params,
                   vocab=vocab, history=meta.get("history", []))
        want = meta.get("vocab_sha256")
        if want and ckpt.vocab_digest() != want:
            raise ValueError("vocabulary does not match the checkpoint")
        return ckpt


def predict(ckpt: ModelCheckpoint, doc: Document) -> Prediction:
    """Classify one document; sentence weights follow the model convention
    (attention for AT-CNN, rationale probability for RA-CNN, uniform for
    Doc-CNN). Dropout is always disabled."""
    packed = encode_document(doc, ckpt.vocab, ckpt.config.widths)
    pv = {n: Var(t) for n, t in ckpt.params.items()}
    logits, weights, _ = _forward(ckpt.kind, pv, packed, ckpt.config)
    _, probs = softmax_xent(logits, 0)
    cls = int(np.argmax(probs))
    return Prediction(
        doc_id=doc.doc_id,
        label=CLASS_TO_LABEL[cls],
        probs=(float(probs[0]), float(probs[1])),
        sentence_weights=tuple(float(x) for x in weights),
    )


def evaluate_accuracy(ckpt: ModelCheckpoint, docs: Sequence[Document]) -> float:
    if not docs:
        raise ValueError("cannot evaluate accuracy on an empty document set")
    correct = sum(1 for d in docs if predict(ckpt, d).label is d.label)
    return float(Fraction(correct, len(docs)))


def both_correct_filter(ckpt_a: ModelCheckpoint, ckpt_b: ModelCheckpoint,
                        docs: Sequence[Document]) -> list[str]:
    """Ids of documents both models classify correctly, in corpus order."""
    out = []
    for doc in docs:
        if (predict(ckpt_a, doc).label is doc.label
                and predict(ckpt_b, doc).label is doc.label):
            out.append(doc.doc_id)
    return out


def train(config: TrainConfig, split, corpus: Sequence[Document],
          vocab: Vocabulary, embeddings: np.ndarray | None = None,
          metrics_path: str | Path | None = None) -> ModelCheckpoint:
    """Train one model on the split's train documents, early-stopping on dev
    accuracy, and return the best-dev-epoch parameters.

    Deterministic for a given config: a single seeded generator drives
    initialization, epoch shuffles, and dropout masks in a fixed order.
    """
    by_id = {d.doc_id: d for d in corpus}
    train_docs = [by_id[i] for i in split.train]
    dev_docs = [by_id[i] for i in split.dev]
    if not train_docs:
        raise ValueError("empty train set")
    if config.kind is ModelKind.RA_CNN:
        bad = [d.doc_id for d in train_docs if not d.annotated]
        if bad:
            raise ValueError(
                f"RA-CNN requires rationale annotations on every train "
                f"document; missing on {bad[:3]}...")

    params = init_params(config, vocab.size, embeddings)
    rng = np.random.default_rng([config.seed, 1])  # distinct from init stream
    state = AdamState.for_params(params)
    dense = ParamSet({n: p for n, p in params.items() if n != "E"})

    packed = {d.doc_id: encode_document(d, vocab, config.widths)
              for d in train_docs}
    order0 = [d.doc_id for d in train_docs]

    def step(doc: Document, rationale_only: bool) -> float:
        pd = packed[doc.doc_id]
        pv = {n: Var(t) for n, t in params.items()}
        lv = _loss_var(pv, pd, doc, config, train=True, rng=rng,
                       rationale_only=rationale_only)
        grads = backward(lv, params, pv)
        rows = np.unique(pd.ids)
        rows = rows[rows != 0]
        adam_step_rows(params, "E", grads["E"][rows], rows, state, lr=config.lr)
        adam_step(dense, grads, state, lr=config.lr)
        return float(lv.value)

    history: list[dict] = []

    def run_epoch(epoch_no: int, rationale_only: bool) -> float:
        ids = list(order0)
        perm = rng.permutation(len(ids))
        total = 0.0
        for j in perm:
            total += step(by_id[ids[j]], rationale_only)
        return total / len(ids)

    if config.kind is ModelKind.RA_CNN:
        for e in range(1, config.pretrain_epochs + 1):
            tl = run_epoch(e, rationale_only=True)
            history.append({"epoch": e, "phase": "pretrain",
                            "train_loss": tl, "dev_acc": None})

    best_params = params.copy()
    best_acc = -1.0
    best_epoch = 0
    since_best = 0
    last_epoch = 0
    for e in range(1, config.epochs + 1):
        last_epoch = e
        tl = run_epoch(e, rationale_only=False)
        entry = {"epoch": e, "train_loss": tl, "dev_acc": None}
        if dev_docs:
            snapshot = ModelCheckpoint(config.kind, config, params, vocab)
            acc = evaluate_accuracy(snapshot, dev_docs)
            entry["dev_acc"] = acc
            if acc > best_acc:
                best_acc, best_epoch, since_best = acc, e, 0
                best_params = params.copy()
            else:
                since_best += 1
        history.append(entry)
        if dev_docs and since_best >= config.patience:
            break

    if not dev_docs:
        best_params, best_epoch = params.copy(), last_epoch
    history.append({"epoch": best_epoch, "event": "selected",
                    "train_loss": None, "dev_acc": best_acc if dev_docs else None})

    ckpt = ModelCheckpoint(kind=config.kind, config=config,
                           params=best_params, vocab=vocab, history=history)
    if metrics_path is not None:
        with open(metrics_path, "w", encoding="utf-8") as fh:
            for entry in history:
                fh.write(json.dumps(entry) + "\n")
    return ckpt


def grad_check(config: TrainConfig, doc: Document, vocab: Vocabulary,
               epsilon: float = 1e-4) -> float:
    """Max relative error between reverse-mode and central-difference
    gradients of this model's full training loss on one document."""
    cfg = replace(config, dropout=0.0)
    params = init_params(cfg, vocab.size)
    packed = encode_document(doc, vocab, cfg.widths)

    def loss_fn(pv: dict[str, Var]) -> Var:
        return _loss_var(pv, packed, doc, cfg)

    return check_gradients(loss_fn, params, epsilon)


def load_word_vectors(path: str | Path, vocab: Vocabulary, dim: int,
                      seed: int = 13) -> np.ndarray:
    """Read word2vec-style text vectors into a full embedding matrix.

    Tokens absent from the file get seeded uniform(-0.05, 0.05) rows; the
    padding row is zero. An optional `count dim` header line is accepted.
    """
    rng = np.random.default_rng(seed)
    E = rng.uniform(-0.05, 0.05, (vocab.size, dim))
    E[0] = 0.0
    found = 0
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().split()
        lines: Iterable[list[str]] = (ln.split() for ln in fh)
        if len(first) != 2:  # no header: first line is a vector record
            lines = [first] + list(lines)
        for parts in lines:
            if not parts:
                continue
            token, values = parts[0], parts[1:]
            if len(values) != dim:
                raise ValueError(
                    f"vector for {token!r} has {len(values)} dims, expected {dim}")
            idx = vocab.token_to_id.get(token)
            if idx is not None:
                E[idx] = [float(x) for x in values]
                found += 1
    if found == 0:
        raise ValueError("no vocabulary token found in the vector file")
    return E
