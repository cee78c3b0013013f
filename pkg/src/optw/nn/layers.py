"""Composite layers built from the autodiff primitives."""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import NEG_SENTINEL, ShapeError, Tensor


def linear(x, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """``x @ weight + bias`` with weights stored as (in, out)."""
    out = ad.matmul(x, weight)
    return out if bias is None else out + bias


def lstm_cell(x, h_prev, c_prev, w_ih: Tensor, w_hh: Tensor, bias: Tensor) -> tuple[Tensor, Tensor]:
    """Single LSTM step over a batch of row vectors.

    Gate blocks in the fused weights are ordered input, forget, candidate, output.
    """
    d = ad._value(h_prev).shape[-1]
    if w_ih.shape[-1] != 4 * d or w_hh.shape != (d, 4 * d):
        raise ShapeError(f"LSTM weights {w_ih.shape}, {w_hh.shape} do not match hidden size {d}")
    if ad._value(x).shape[-1] != w_ih.shape[0]:
        raise ShapeError("LSTM input size mismatch")
    z = ad.matmul(x, w_ih) + ad.matmul(h_prev, w_hh) + bias
    i = ad.sigmoid(z[..., :d])
    f = ad.sigmoid(z[..., d:2 * d])
    g = ad.tanh(z[..., 2 * d:3 * d])
    o = ad.sigmoid(z[..., 3 * d:])
    c = f * c_prev + i * g
    h = o * ad.tanh(c)
    return h, c


def _split_heads(x: Tensor, heads: int) -> Tensor:
    b, n, d = x.shape
    return x.reshape(b, n, heads, d // heads).transpose(0, 2, 1, 3)


def _merge_heads(x: Tensor) -> Tensor:
    b, h, n, dk = x.shape
    return x.transpose(0, 2, 1, 3).reshape(b, n, h * dk)


def multi_head_attention(q_in, k_in, v_in, wq: Tensor, wk: Tensor, wv: Tensor, wo: Tensor,
                         heads: int, mask: np.ndarray | None = None,
                         mask_style: str = "neg_inf") -> Tensor:
    """Scaled dot-product attention with ``heads`` heads over (batch, n, d) inputs.

    ``mask[b, i, j]`` allows node i to attend to node j. With ``neg_inf``
    masking, a row with no allowed target attends only to itself, so its
    output is its own value vector. With ``zero`` masking the disallowed
    similarity scores are set to 0 before the softmax.
    """
    d = ad._value(q_in).shape[-1]
    if d % heads:
        raise ShapeError(f"model dim {d} not divisible by {heads} heads")
    dk = d // heads
    # the 1/sqrt(dk) scale is applied to the (smaller) query block
    q = _split_heads(ad.matmul(q_in, wq) * (1.0 / np.sqrt(dk)), heads)
    k = _split_heads(ad.matmul(k_in, wk), heads)
    v = _split_heads(ad.matmul(v_in, wv), heads)
    scores = ad.matmul(q, k.transpose(0, 1, 3, 2))
    if mask is None:
        weights = ad.softmax(scores, axis=-1)
    else:
        m = mask[:, None, :, :]
        if mask_style == "zero":
            weights = ad.softmax(ad.masked_fill(scores, m, 0.0), axis=-1)
        elif mask_style == "neg_inf":
            empty = ~mask.any(axis=-1)
            if empty.any():
                # a row with no target may attend to itself only
                m = mask.copy()
                b, i = np.nonzero(empty)
                m[b, i, i] = True
                m = m[:, None, :, :]
            weights = ad.softmax(ad.masked_fill(scores, m, NEG_SENTINEL), axis=-1)
        else:
            raise ValueError(f"unknown mask_style {mask_style!r}")
    return ad.matmul(_merge_heads(ad.matmul(weights, v)), wo)
