"""Pure-numpy kernels: the fallback backend for the hot per-document loops.

Signature-compatible with the compiled backend in _ckernels.pyx; both are
selected in kernels.py. Matrix products stay in BLAS either way; these
kernels cover the gather/scatter/pooling/update steps around them.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"


def im2col(xp: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Gather convolution windows: rows of `xp` indexed by `idx` (R, w),
    flattened to (R, w*d) in token order."""
    r, w = idx.shape
    return xp[idx.reshape(-1)].reshape(r, w * xp.shape[1])


def segmax_relu(scores: np.ndarray, offsets: np.ndarray):
    """Per-segment max-over-time with ReLU applied after pooling.

    Returns (pooled (n, m), arg (n, m)) where arg holds global row indices
    of the raw maxima. ReLU commutes with max, so pooling raw scores and
    clamping afterwards is exact.
    """
    n = len(offsets) - 1
    m = scores.shape[1]
    pooled = np.empty((n, m), dtype=np.float64)
    arg = np.empty((n, m), dtype=np.int64)
    cols = np.arange(m)
    for i in range(n):
        a, b = offsets[i], offsets[i + 1]
        seg = scores[a:b]
        loc = seg.argmax(axis=0)
        pooled[i] = seg[loc, cols]
        arg[i] = a + loc
    np.maximum(pooled, 0.0, out=pooled)
    return pooled, arg


def conv_filter_grad(g: np.ndarray, arg: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """dF[j] = sum_i g[i, j] * cols[arg[i, j]]; `g` is pre-masked where the
    pooled activation was zero."""
    gathered = cols[arg]  # (n, m, w*d)
    return np.einsum("nm,nmk->mk", g, gathered)


def conv_input_grad(g: np.ndarray, arg: np.ndarray, idx: np.ndarray,
                    filt: np.ndarray, dxp: np.ndarray) -> None:
    """Scatter g[i, j] * filt[j] back into the packed token-gradient rows of
    the winning windows. Accumulates into dxp in place."""
    n, m = g.shape
    w = idx.shape[1]
    d = dxp.shape[1]
    rows = idx[arg].reshape(-1)                      # (n*m*w,)
    contrib = g[:, :, None, None] * filt.reshape(1, m, w, d)
    np.add.at(dxp, rows, contrib.reshape(-1, d))


def adam_update(p: np.ndarray, g: np.ndarray, m: np.ndarray, v: np.ndarray,
                t: int, lr: float, beta1: float, beta2: float, eps: float) -> None:
    """One bias-corrected Adam step, element-wise in place on flat views."""
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * g * g
    mhat = m / (1.0 - beta1 ** t)
    vhat = v / (1.0 - beta2 ** t)
    p -= lr * mhat / (np.sqrt(vhat) + eps)
