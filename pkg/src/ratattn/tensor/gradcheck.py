"""Gradient verification by central finite differences.

The numeric side re-evaluates the loss from scratch for every perturbed
coordinate, so it stays independent of the reverse-mode implementation;
only fixtures small enough for O(#params) re-evaluations belong here.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .autodiff import Var, backward
from .params import ParamSet

LossFn = Callable[[dict[str, Var]], Var]


def check_gradients(loss_fn: LossFn, params: ParamSet,
                    epsilon: float = 1e-4) -> float:
    """Max over all parameter coordinates of the relative disagreement
    |g_analytic - g_numeric| / max(1e-8, |g_analytic| + |g_numeric|)."""
    pvars = {n: Var(t) for n, t in params.items()}
    loss = loss_fn(pvars)
    grads = backward(loss, params, pvars)

    work = params.copy()

    def evaluate() -> float:
        return float(loss_fn({n: Var(t) for n, t in work.items()}).value)

    worst = 0.0
    for name in params.names():
        flat = np.ravel(work[name])
        gflat = np.ravel(grads[name])
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + epsilon
            f_plus = evaluate()
            flat[i] = orig - epsilon
            f_minus = evaluate()
            flat[i] = orig
            g_num = (f_plus - f_minus) / (2.0 * epsilon)
            g_ana = gflat[i]
            err = abs(g_ana - g_num) / max(1e-8, abs(g_ana) + abs(g_num))
            worst = max(worst, err)
    return worst
