"""Adam with bias correction, plus a row-sparse variant for the embedding
table (only rows touched by the current document are stepped, with per-row
step counts for the correction terms)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .params import Gradients, ParamSet

BETA1 = 0.9
BETA2 = 0.999
EPS = 1e-8


@dataclass
class AdamState:
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    t: dict[str, int] = field(default_factory=dict)
    row_t: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: ParamSet) -> "AdamState":
        return cls(m={n: np.zeros_like(p) for n, p in params.items()},
                   v={n: np.zeros_like(p) for n, p in params.items()},
                   t={n: 0 for n in params.names()})


def adam_step(params: ParamSet, grads: Gradients, state: AdamState,
              lr: float = 1e-3, beta1: float = BETA1, beta2: float = BETA2,
              eps: float = EPS) -> tuple[ParamSet, AdamState]:
    """One dense update over every parameter; mutates params/state in place
    and returns them."""
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ValueError(
                f"gradient shape {g.shape} does not match parameter "
                f"{name!r} shape {p.shape}")
        state.t[name] += 1
        kernels.adam_update(
            np.ravel(p), np.ravel(g), np.ravel(state.m[name]),
            np.ravel(state.v[name]), state.t[name], lr, beta1, beta2, eps)
    return params, state


def adam_step_rows(params: ParamSet, name: str, grad_rows: np.ndarray,
                   rows: np.ndarray, state: AdamState, lr: float = 1e-3,
                   beta1: float = BETA1, beta2: float = BETA2,
                   eps: float = EPS) -> None:
    """Update only the given rows of a matrix parameter (lazy Adam).

    Rows untouched by a step keep their moments unchanged; each row carries
    its own step count for bias correction.
    """
    p = params[name]
    if grad_rows.shape != (len(rows), p.shape[1]):
        raise ValueError("grad_rows shape does not match selected rows")
    if name not in state.row_t:
        state.row_t[name] = np.zeros(p.shape[0], dtype=np.int64)
    t = state.row_t[name]
    t[rows] += 1
    m, v = state.m[name], state.v[name]
    m[rows] = beta1 * m[rows] + (1.0 - beta1) * grad_rows
    v[rows] = beta2 * v[rows] + (1.0 - beta2) * grad_rows * grad_rows
    tcol = t[rows].astype(np.float64)[:, None]
    mhat = m[rows] / (1.0 - beta1 ** tcol)
    vhat = v[rows] / (1.0 - beta2 ** tcol)
    p[rows] -= lr * mhat / (np.sqrt(vhat) + eps)
