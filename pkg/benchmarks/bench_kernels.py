"""Benchmark the compiled kernels against the pure-numpy fallback.

Micro-benchmarks each kernel at paper-scale shapes (32-sentence document,
50-dim embeddings, 50 feature maps at widths 3/4/5), then times a full
training step (forward + backward + Adam) per backend.

Run:  python benchmarks/bench_kernels.py [--steps 50]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from ratattn.corpus import build_vocab, make_split
from ratattn.models import ModelKind, TrainConfig, encode_document, init_params
from ratattn.synth import make_review_corpus
from ratattn.tensor import kernels
from ratattn.tensor.kernels import available_backends


def timeit(fn, repeat=200):
    fn()  # warm-up
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn()
    return (time.perf_counter() - t0) / repeat


def micro_case(rng, n_sents=32, tokens=25, m=50, w=4, d=50):
    lens = np.full(n_sents, tokens, dtype=np.int64)
    bounds = np.concatenate([[0], np.cumsum(lens)])
    offsets = np.concatenate([[0], np.cumsum(lens - w + 1)]).astype(np.int64)
    xp = rng.uniform(-1, 1, (int(bounds[-1]), d))
    idx = np.concatenate([
        bounds[i] + np.arange(lens[i] - w + 1, dtype=np.int64)[:, None]
        + np.arange(w, dtype=np.int64)[None, :]
        for i in range(n_sents)])
    filt = rng.uniform(-1, 1, (m, w * d))
    return xp, np.ascontiguousarray(idx), offsets, filt


def run_micro(backends):
    rng = np.random.default_rng(0)
    xp, idx, offsets, filt = micro_case(rng)
    cols = xp[idx.reshape(-1)].reshape(idx.shape[0], -1)
    scores = np.ascontiguousarray(cols @ filt.T)
    pooled, arg = backends["python"].segmax_relu(scores, offsets)
    g = np.ascontiguousarray(rng.uniform(-1, 1, pooled.shape) * (pooled > 0))
    cols = np.ascontiguousarray(cols)

    cases = {
        "im2col": lambda b: b.im2col(xp, idx),
        "segmax_relu": lambda b: b.segmax_relu(scores, offsets),
        "conv_filter_grad": lambda b: b.conv_filter_grad(g, arg, cols),
        "conv_input_grad": lambda b: b.conv_input_grad(
            g, arg, idx, filt, np.zeros_like(xp)),
        "adam_update": lambda b: b.adam_update(
            rng.uniform(-1, 1, 40000), rng.uniform(-1, 1, 40000),
            np.zeros(40000), np.zeros(40000), 3, 1e-3, 0.9, 0.999, 1e-8),
    }
    rows = []
    for name, call in cases.items():
        per = {bn: timeit(lambda b=bmod: call(b)) * 1e6
               for bn, bmod in backends.items()}
        rows.append((name, per))
    return rows


def run_doc_step(backend_mod, steps):
    """Full per-document training steps at paper dimensions."""
    from ratattn.models import _loss_var
    from ratattn.tensor import AdamState, ParamSet, Var, adam_step, adam_step_rows, backward

    docs = make_review_corpus(n_docs=8, annotated=8, mean_sentences=32,
                              mean_rationales=8, seed=2)
    vocab = build_vocab(docs, min_count=1)
    cfg = TrainConfig(kind=ModelKind.RA_CNN, dropout=0.5, seed=1)
    params = init_params(cfg, vocab.size)
    state = AdamState.for_params(params)
    dense = ParamSet({n: p for n, p in params.items() if n != "E"})
    packed = [encode_document(d, vocab, cfg.widths) for d in docs]
    rng = np.random.default_rng(0)

    saved = {name: getattr(kernels, name) for name in
             ("im2col", "segmax_relu", "conv_filter_grad",
              "conv_input_grad", "adam_update")}
    for name in saved:
        setattr(kernels, name, getattr(backend_mod, name))
    try:
        t0 = time.perf_counter()
        for i in range(steps):
            doc, pd = docs[i % len(docs)], packed[i % len(packed)]
            pv = {n: Var(t) for n, t in params.items()}
            lv = _loss_var(pv, pd, doc, cfg, train=True, rng=rng)
            grads = backward(lv, params, pv)
            rows = np.unique(pd.ids)
            rows = rows[rows != 0]
            adam_step_rows(params, "E", grads["E"][rows], rows, state, lr=cfg.lr)
            adam_step(dense, grads, state, lr=cfg.lr)
        return (time.perf_counter() - t0) / steps
    finally:
        for name, fn in saved.items():
            setattr(kernels, name, fn)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", type=int, default=50,
                    help="training steps per backend for the macro benchmark")
    args = ap.parse_args()

    backends = available_backends()
    print(f"backends available: {', '.join(backends)} "
          f"(default: {kernels.BACKEND})\n")

    rows = run_micro(backends)
    names = list(backends)
    header = f"{'kernel':<18}" + "".join(f"{n + ' (us)':>16}" for n in names)
    if len(names) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name, per in rows:
        line = f"{name:<18}" + "".join(f"{per[n]:>16.1f}" for n in names)
        if len(names) == 2:
            line += f"{per['python'] / per['cython']:>9.1f}x"
        print(line)

    print(f"\nfull RA-CNN training step, 32-sentence document "
          f"({args.steps} steps per backend):")
    per = {n: run_doc_step(b, args.steps) * 1e3 for n, b in backends.items()}
    for n, ms in per.items():
        print(f"  {n:<8} {ms:8.2f} ms/doc")
    if len(per) == 2:
        print(f"  speedup  {per['python'] / per['cython']:8.1f}x")


if __name__ == "__main__":
    main()
