"""Named parameter tensors and their gradients.

Tensors are dense float64 numpy arrays (row-major); a ParamSet owns one
array per name with shapes fixed at initialization.
"""

from __future__ import annotations

import numpy as np

Gradients = dict[str, np.ndarray]


class ParamSet:
    """Name -> tensor map for trainable parameters."""

    def __init__(self, tensors: dict[str, np.ndarray]):
        self._tensors = {name: np.asarray(t, dtype=np.float64)
                         for name, t in tensors.items()}

    def __getitem__(self, name: str) -> np.ndarray:
        return self._tensors[name]

    def __contains__(self, name: str) -> bool:
        return name in self._tensors

    def __iter__(self):
        return iter(self._tensors)

    def __len__(self) -> int:
        return len(self._tensors)

    def names(self) -> list[str]:
        return list(self._tensors)

    def items(self):
        return self._tensors.items()

    def shapes(self) -> dict[str, tuple[int, ...]]:
        return {n: t.shape for n, t in self._tensors.items()}

    def n_values(self) -> int:
        return sum(t.size for t in self._tensors.values())

    def copy(self) -> "ParamSet":
        return ParamSet({n: t.copy() for n, t in self._tensors.items()})

    def zeros_like(self) -> Gradients:
        return {n: np.zeros_like(t) for n, t in self._tensors.items()}

    def assert_all_finite(self) -> None:
        for n, t in self._tensors.items():
            if not np.all(np.isfinite(t)):
                raise FloatingPointError(f"parameter {n!r} contains NaN/Inf")
