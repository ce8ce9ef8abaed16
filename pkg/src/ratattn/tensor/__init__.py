"""Dense-tensor computation with reverse-mode gradients for the document
models, a finite-difference verifier, Adam, and the text checkpoint format."""

from .adam import AdamState, adam_step, adam_step_rows
from .autodiff import GraphError, Var, backward
from .checkpoint import CheckpointError, read_checkpoint, write_checkpoint
from .gradcheck import check_gradients
from .kernels import BACKEND
from .ops import (
    PackedDoc,
    attention_weights,
    conv_max,
    dropout,
    embed,
    encode_sentences,
    rationale_logits,
    rationale_prob,
    sigmoid,
    sigmoid_bce_sum,
    softmax,
    softmax_xent,
    weighted_sum,
)
from .params import Gradients, ParamSet

__all__ = [
    "AdamState", "adam_step", "adam_step_rows",
    "GraphError", "Var", "backward",
    "CheckpointError", "read_checkpoint", "write_checkpoint",
    "check_gradients", "BACKEND",
    "PackedDoc", "attention_weights", "conv_max", "dropout", "embed",
    "encode_sentences", "rationale_logits", "rationale_prob", "sigmoid",
    "sigmoid_bce_sum", "softmax", "softmax_xent", "weighted_sum",
    "Gradients", "ParamSet",
]
