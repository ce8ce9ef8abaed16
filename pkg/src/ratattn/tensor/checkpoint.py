"""Text checkpoint format, frozen so independent implementations can
exchange trained models.

Layout (UTF-8):

    ratattn-ckpt v1
    meta <one-line JSON object>
    param <name> [<dim> ...]
    <values in base-10 scientific notation, whitespace-separated>
    ...

A parameter record lists its dimensions after the name (none for a scalar)
followed by exactly prod(dims) values; matrices are written one row per
line. Values use 17 significant digits, which round-trips float64 exactly.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .params import ParamSet

HEADER = "ratattn-ckpt v1"


class CheckpointError(Exception):
    pass


def _fmt(x: float) -> str:
    return f"{x:.17e}"


def write_checkpoint(path: str | Path, meta: dict, params: ParamSet) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(HEADER + "\n")
        fh.write("meta " + json.dumps(meta) + "\n")
        for name, tensor in params.items():
            dims = " ".join(str(d) for d in tensor.shape)
            fh.write(f"param {name} {dims}".rstrip() + "\n")
            if tensor.ndim <= 1:
                fh.write(" ".join(_fmt(x) for x in np.ravel(tensor)) + "\n")
            else:
                for row in tensor.reshape(tensor.shape[0], -1):
                    fh.write(" ".join(_fmt(x) for x in row) + "\n")


def read_checkpoint(path: str | Path) -> tuple[dict, ParamSet]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != HEADER:
            raise CheckpointError(f"unsupported checkpoint header {header!r}")
        meta_line = fh.readline().rstrip("\n")
        if not meta_line.startswith("meta "):
            raise CheckpointError("missing meta record")
        try:
            meta = json.loads(meta_line[5:])
        except json.JSONDecodeError as exc:
            raise CheckpointError(f"bad meta JSON: {exc}") from None

        tensors: dict[str, np.ndarray] = {}
        tokens: list[str] = []

        def next_tokens(count: int) -> list[str]:
            nonlocal tokens
            while len(tokens) < count:
                line = fh.readline()
                if not line:
                    raise CheckpointError("unexpected end of checkpoint")
                tokens.extend(line.split())
            got, tokens = tokens[:count], tokens[count:]
            return got

        while True:
            if tokens:
                raise CheckpointError("stray values outside a param record")
            line = fh.readline()
            if not line:
                break
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if parts[0] != "param" or len(parts) < 2:
                raise CheckpointError(f"expected param record, got {line!r}")
            name = parts[1]
            if name in tensors:
                raise CheckpointError(f"duplicate parameter {name!r}")
            try:
                shape = tuple(int(d) for d in parts[2:])
            except ValueError:
                raise CheckpointError(f"bad shape in {line!r}") from None
            count = math.prod(shape)
            values = [float(t) for t in next_tokens(count)]
            tensors[name] = np.array(values, dtype=np.float64).reshape(shape)

    return meta, ParamSet(tensors)
