from . import autodiff as ad
from .autodiff import NEG_SENTINEL, NonScalarLoss, ShapeError, Tensor, no_grad
from .layers import linear, lstm_cell, multi_head_attention
from .params import (
    AdamConfig,
    ParameterStore,
    adam_step,
    load_checkpoint,
    save_checkpoint,
    xavier_uniform,
)


def forward_backward(graph_fn, params: ParameterStore, inputs):
    """Run ``graph_fn(params, inputs)`` and differentiate its scalar loss.

    ``graph_fn`` returns either the loss or ``(loss, aux)``. Returns
    ``(outputs, gradients)`` where ``outputs`` is what ``graph_fn`` returned.
    """
    params.zero_grad()
    outputs = graph_fn(params, inputs)
    loss = outputs[0] if isinstance(outputs, tuple) else outputs
    if loss.data.size != 1:
        raise NonScalarLoss(f"loss must be scalar, got shape {loss.shape}")
    if loss.requires_grad:
        loss.backward()
    return outputs, params.grads()


__all__ = [
    "ad", "NEG_SENTINEL", "NonScalarLoss", "ShapeError", "Tensor", "no_grad",
    "linear", "lstm_cell", "multi_head_attention",
    "AdamConfig", "ParameterStore", "adam_step", "load_checkpoint", "save_checkpoint",
    "xavier_uniform", "forward_backward",
]
