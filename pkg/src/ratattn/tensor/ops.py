"""Differentiable operations for the document models.

Exactly the pieces the three classifiers need: embedding lookup,
convolution + max-over-time sentence encoding (single-sentence and a fused
whole-document version), attention weighting, rationale probabilities,
weighted sums, and the two loss heads.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .autodiff import Var

PAD_ID = 0


def _as_int64(ids) -> np.ndarray:
    arr = np.asarray(ids, dtype=np.int64)
    if arr.ndim != 1:
        raise ValueError("token ids must be a 1-D sequence")
    return arr


def embed(token_ids, E: Var) -> Var:
    """Rows of the embedding table for each id; id 0 rows are zero and
    receive no gradient."""
    ids = _as_int64(token_ids)
    vocab = E.value.shape[0]
    if ids.size and (ids.min() < 0 or ids.max() >= vocab):
        raise ValueError(f"token id out of range for vocabulary of {vocab}")
    out = E.value[ids].copy()
    pad = ids == PAD_ID
    out[pad] = 0.0

    def push(g):
        if E.grad is None:
            E.grad = np.zeros_like(E.value)
        keep = ~pad
        np.add.at(E.grad, ids[keep], g[keep])

    return Var(out, (E,), push)


class PackedDoc:
    """Precomputed index structure for one document's sentences.

    Sentences are right-padded with id 0 to at least max(widths); windows
    are addressed by global row indices into the packed token matrix so the
    whole document convolves with one matrix product per filter width.
    """

    __slots__ = ("ids", "bounds", "win_idx", "win_off", "n_sentences", "widths")

    def __init__(self, sentences: list[np.ndarray], widths: tuple[int, ...]):
        if not sentences:
            raise ValueError("a document needs at least one sentence")
        widths = tuple(sorted(widths))
        maxw = widths[-1]
        padded = []
        for s in sentences:
            s = _as_int64(s)
            if s.size == 0:
                raise ValueError("empty sentence")
            if s.size < maxw:
                s = np.concatenate([s, np.zeros(maxw - s.size, dtype=np.int64)])
            padded.append(s)
        lengths = np.array([len(s) for s in padded], dtype=np.int64)
        self.bounds = np.concatenate([[0], np.cumsum(lengths)])
        self.ids = np.concatenate(padded)
        self.n_sentences = len(padded)
        self.widths = widths
        self.win_idx = {}
        self.win_off = {}
        for w in widths:
            counts = lengths - w + 1
            starts = np.concatenate(
                [self.bounds[i] + np.arange(counts[i]) for i in range(len(padded))])
            self.win_idx[w] = np.ascontiguousarray(
                starts[:, None] + np.arange(w, dtype=np.int64)[None, :])
            self.win_off[w] = np.concatenate([[0], np.cumsum(counts)])


def encode_sentences(doc: PackedDoc, E: Var, filters: dict[int, Var]) -> Var:
    """Sentence matrix S (n, M): per sentence, convolution + ReLU +
    max-over-time for each width, feature maps concatenated in ascending
    width order. Fused forward/backward over the whole document."""
    ids = doc.ids
    xp = E.value[ids].copy()
    pad = ids == PAD_ID
    xp[pad] = 0.0

    parts, caches = [], []
    for w in doc.widths:
        F = filters[w]
        cols = kernels.im2col(xp, doc.win_idx[w])
        scores = cols @ F.value.T
        pooled, arg = kernels.segmax_relu(np.ascontiguousarray(scores), doc.win_off[w])
        parts.append(pooled)
        caches.append((F, cols, pooled, arg))
    out = np.hstack(parts)
    parents = (E,) + tuple(filters[w] for w in doc.widths)

    def push(gS):
        dxp = np.zeros_like(xp)
        col = 0
        for w, (F, cols, pooled, arg) in zip(doc.widths, caches):
            m = F.value.shape[0]
            g = np.ascontiguousarray(gS[:, col:col + m] * (pooled > 0.0))
            col += m
            F.accumulate(kernels.conv_filter_grad(g, arg, cols))
            kernels.conv_input_grad(g, arg, doc.win_idx[w], F.value, dxp)
        if E.grad is None:
            E.grad = np.zeros_like(E.value)
        keep = ~pad
        np.add.at(E.grad, ids[keep], dxp[keep])

    return Var(out, parents, push)


def conv_max(X: Var, filters: dict[int, Var], widths) -> Var:
    """Single-sentence convolution + ReLU + max-over-time, concatenated in
    ascending width order. X is one sentence's embedding matrix (L, d)."""
    widths = tuple(sorted(widths))
    maxw = widths[-1]
    L, d = X.value.shape
    if L < maxw:
        xv = np.vstack([X.value, np.zeros((maxw - L, d))])
    else:
        xv = X.value
    Lp = xv.shape[0]

    parts, caches = [], []
    for w in widths:
        F = filters[w]
        idx = np.ascontiguousarray(
            np.arange(Lp - w + 1, dtype=np.int64)[:, None]
            + np.arange(w, dtype=np.int64)[None, :])
        cols = kernels.im2col(np.ascontiguousarray(xv), idx)
        scores = cols @ F.value.T
        off = np.array([0, scores.shape[0]], dtype=np.int64)
        pooled, arg = kernels.segmax_relu(np.ascontiguousarray(scores), off)
        parts.append(pooled[0])
        caches.append((F, idx, cols, pooled, arg))
    out = np.concatenate(parts)
    parents = (X,) + tuple(filters[w] for w in widths)

    def push(gv):
        dxp = np.zeros_like(xv)
        col = 0
        for w, (F, idx, cols, pooled, arg) in zip(widths, caches):
            m = F.value.shape[0]
            g = np.ascontiguousarray(gv[None, col:col + m] * (pooled > 0.0))
            col += m
            F.accumulate(kernels.conv_filter_grad(g, arg, cols))
            kernels.conv_input_grad(g, arg, idx, F.value, dxp)
        X.accumulate(dxp[:L])

    return Var(out, parents, push)


def affine_rows(S: Var, W: Var, b: Var) -> Var:
    """S @ W.T + b, applied row-wise: (n, M) -> (n, a)."""
    out = S.value @ W.value.T + b.value

    def push(g):
        S.accumulate(g @ W.value)
        W.accumulate(g.T @ S.value)
        b.accumulate(g.sum(axis=0))

    return Var(out, (S, W, b), push)


def tanh(x: Var) -> Var:
    y = np.tanh(x.value)
    out = Var(y, (x,), None)
    out._push = lambda g: x.accumulate(g * (1.0 - y * y))
    return out


def sigmoid(x: Var) -> Var:
    y = _sigmoid_values(x.value)
    out = Var(y, (x,), None)
    out._push = lambda g: x.accumulate(g * y * (1.0 - y))
    return out


def _sigmoid_values(z) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    flat = np.atleast_1d(z)
    pos = flat >= 0
    out = np.empty_like(flat)
    out[pos] = 1.0 / (1.0 + np.exp(-flat[pos]))
    ez = np.exp(flat[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out.reshape(z.shape)


def dot_rows(T: Var, u: Var) -> Var:
    """Row-wise dot products: (n, a) @ (a,) -> (n,)."""
    out = T.value @ u.value

    def push(g):
        T.accumulate(np.outer(g, u.value))
        u.accumulate(T.value.T @ g)

    return Var(out, (T, u), push)


def softmax(x: Var) -> Var:
    z = x.value - x.value.max()
    e = np.exp(z)
    y = e / e.sum()
    out = Var(y, (x,), None)
    out._push = lambda g: x.accumulate(y * (g - float(g @ y)))
    return out


def attention_weights(S: Var, W: Var, b: Var, u: Var) -> Var:
    """Softmax over per-sentence scores u . tanh(W s_i + b); sums to one."""
    return softmax(dot_rows(tanh(affine_rows(S, W, b)), u))


def rationale_logits(S: Var, v: Var, c: Var) -> Var:
    """Per-sentence pre-sigmoid rationale scores v . s_i + c."""
    out = S.value @ v.value + c.value

    def push(g):
        S.accumulate(np.outer(g, v.value))
        v.accumulate(S.value.T @ g)
        c.accumulate(np.asarray(g.sum()))

    return Var(out, (S, v, c), push)


def rationale_prob(s: Var, v: Var, c: Var) -> Var:
    """Probability in (0,1) that a single sentence is a rationale."""
    z = float(s.value @ v.value + c.value)
    y = float(_sigmoid_values(z))

    def push(g):
        local = float(g) * y * (1.0 - y)
        s.accumulate(local * v.value)
        v.accumulate(local * s.value)
        c.accumulate(np.asarray(local))

    return Var(y, (s, v, c), push)


def weighted_sum(S: Var, w: Var) -> Var:
    """Document vector sum_i w_i * S_i."""
    if w.value.shape[0] != S.value.shape[0]:
        raise ValueError("weight length must match the number of rows")
    out = S.value.T @ w.value

    def push(g):
        S.accumulate(np.outer(w.value, g))
        w.accumulate(S.value @ g)

    return Var(out, (S, w), push)


def sum_rows(S: Var) -> Var:
    out = S.value.sum(axis=0)

    def push(g):
        S.accumulate(np.broadcast_to(g, S.value.shape))

    return Var(out, (S,), push)


def matvec(A: Var, x: Var, b: Var) -> Var:
    """A @ x + b."""
    out = A.value @ x.value + b.value

    def push(g):
        A.accumulate(np.outer(g, x.value))
        x.accumulate(A.value.T @ g)
        b.accumulate(g)

    return Var(out, (A, x, b), push)


def dropout(x: Var, rate: float, rng: np.random.Generator) -> Var:
    """Inverted dropout with a mask drawn from rng; rate 0 is the identity."""
    if rate == 0.0:
        return x
    mask = (rng.random(x.value.shape) >= rate) / (1.0 - rate)
    out = Var(x.value * mask, (x,), None)
    out._push = lambda g: x.accumulate(g * mask)
    return out


def add(a: Var, b: Var) -> Var:
    if a.value.shape != b.value.shape:
        raise ValueError("add requires matching shapes")
    out = Var(a.value + b.value, (a, b), None)

    def push(g):
        a.accumulate(g)
        b.accumulate(g)

    out._push = push
    return out


def scale(x: Var, k: float) -> Var:
    out = Var(x.value * k, (x,), None)
    out._push = lambda g: x.accumulate(g * k)
    return out


def sigmoid_bce_sum(z: Var, targets) -> Var:
    """Sum over sentences of binary cross-entropy between sigmoid(z_i) and
    target r_i, computed from logits for stability."""
    t = np.asarray(targets, dtype=np.float64)
    zv = z.value
    loss = np.sum(np.maximum(zv, 0.0) - zv * t + np.log1p(np.exp(-np.abs(zv))))

    def push(g):
        z.accumulate(float(g) * (_sigmoid_values(zv) - t))

    return Var(loss, (z,), push)


def softmax_xent(logits: Var, gold: int) -> tuple[Var, np.ndarray]:
    """Cross-entropy of a two-class softmax head; returns (loss, probs)."""
    if gold not in (0, 1):
        raise ValueError("gold class index must be 0 or 1")
    zv = logits.value
    m = zv.max()
    e = np.exp(zv - m)
    probs = e / e.sum()
    loss = float(m + np.log(e.sum()) - zv[gold])

    def push(g):
        d = probs.copy()
        d[gold] -= 1.0
        logits.accumulate(float(g) * d)

    return Var(loss, (logits,), push), probs.copy()
