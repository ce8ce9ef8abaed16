"""Minimal reverse-mode differentiation over numpy arrays.

Each differentiable operation returns a Var whose closure knows how to push
the output gradient back to its parent Vars; `backward` walks the recorded
graph in reverse topological order. Only the operations the document models
need exist here and in ops.py.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .params import Gradients, ParamSet


class GraphError(Exception):
    """Backward invoked without a recorded forward pass."""


class Var:
    """A node in the computation graph: a float64 array plus its gradient."""

    __slots__ = ("value", "grad", "_parents", "_push")

    def __init__(self, value, parents: tuple = (),
                 push: Callable[[np.ndarray], None] | None = None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self._parents = parents
        self._push = push

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        self.grad += g

    def item(self) -> float:
        return float(self.value)


def topo_order(root: Var) -> list[Var]:
    """Iterative post-order over the graph reachable from root."""
    order: list[Var] = []
    seen: set[int] = set()
    stack: list[tuple[Var, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def backward(loss: Var, params: ParamSet | None = None,
             param_vars: dict[str, Var] | None = None) -> Gradients:
    """Run reverse-mode accumulation from a scalar loss.

    When `params` and `param_vars` are given, returns a name -> gradient map
    covering every parameter (zeros for those the loss never touched).
    """
    if not loss._parents:
        raise GraphError("backward called without a recorded forward pass")
    if loss.value.size != 1:
        raise GraphError("backward requires a scalar loss")

    order = topo_order(loss)
    for node in order:
        node.grad = None
    loss.grad = np.ones_like(loss.value)
    for node in reversed(order):
        if node.grad is None or node._push is None:
            continue
        node._push(node.grad)

    if params is None:
        return {}
    assert param_vars is not None
    grads: Gradients = {}
    for name in params.names():
        var = param_vars.get(name)
        if var is not None and var.grad is not None:
            grads[name] = var.grad
        else:
            grads[name] = np.zeros_like(params[name])
    return grads
