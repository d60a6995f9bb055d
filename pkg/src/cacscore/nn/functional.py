"""Convolution and pooling primitives with hand-written backward passes."""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..tensor import ShapeError, Tensor, _as_tensor, _make

__all__ = ["conv2d_raw", "conv_transpose2d_raw", "avg_pool2d", "conv_output_size"]


def conv_output_size(size: int, k: int, stride: int, dilation: int, padding: int) -> int:
    return (size + 2 * padding - dilation * (k - 1) - 1) // stride + 1


def conv2d_raw(x, weight, bias=None, stride: int = 1, dilation: int = 1, padding: int = 0) -> Tensor:
    """Dilated 2D cross-correlation on NCHW input with zero padding.

    ``weight`` is [out_ch, in_ch, k, k]; ``bias`` is [out_ch] or None.
    """
    x, weight = _as_tensor(x), _as_tensor(weight)
    if x.ndim != 4:
        raise ShapeError(f"conv2d expects NCHW input, got {x.shape}")
    n, c, h, w = x.shape
    oc, ic, kh, kw = weight.shape
    if c != ic:
        raise ShapeError(f"conv2d channel mismatch: input {c}, weight expects {ic}")
    ext_h, ext_w = dilation * (kh - 1) + 1, dilation * (kw - 1) + 1
    if h + 2 * padding < ext_h or w + 2 * padding < ext_w:
        raise ShapeError(f"input {h}x{w} smaller than dilated kernel extent")
    ho = conv_output_size(h, kh, stride, dilation, padding)
    wo = conv_output_size(w, kw, stride, dilation, padding)

    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    # [n, c, Hwin, Wwin, ext_h, ext_w] -> dilated taps -> strided windows
    win = sliding_window_view(xp, (ext_h, ext_w), axis=(2, 3))
    cols = win[:, :, ::stride, ::stride, ::dilation, ::dilation][:, :, :ho, :wo]
    out = np.einsum("nchwij,ocij->nohw", cols, weight.data, optimize=True)
    parents = [x, weight]
    if bias is not None:
        bias = _as_tensor(bias)
        out = out + bias.data[None, :, None, None]
        parents.append(bias)

    def backward(g):
        gw = np.einsum("nchwij,nohw->ocij", cols, g, optimize=True) if weight.requires_grad else None
        gx = None
        if x.requires_grad:
            gcols = np.einsum("nohw,ocij->nchwij", g, weight.data, optimize=True)
            gxp = np.zeros_like(xp)
            for i in range(kh):
                for j in range(kw):
                    r0, c0 = i * dilation, j * dilation
                    gxp[:, :, r0:r0 + stride * ho:stride, c0:c0 + stride * wo:stride] += gcols[..., i, j]
            gx = gxp[:, :, padding:padding + h, padding:padding + w]
        grads = [gx, gw]
        if bias is not None:
            grads.append(g.sum(axis=(0, 2, 3)))
        return grads

    return _make(out, parents, backward)


def conv_transpose2d_raw(x, weight, bias=None, stride: int = 2) -> Tensor:
    """Transposed convolution with kernel size equal to stride (no overlap).

    ``weight`` is [in_ch, out_ch, k, k] with k == stride, so each input pixel
    paints one k x k output tile and spatial dims grow by ``stride``.
    """
    x, weight = _as_tensor(x), _as_tensor(weight)
    if x.ndim != 4:
        raise ShapeError(f"conv_transpose2d expects NCHW input, got {x.shape}")
    n, c, h, w = x.shape
    ic, oc, kh, kw = weight.shape
    if c != ic:
        raise ShapeError(f"conv_transpose2d channel mismatch: input {c}, weight expects {ic}")
    if kh != stride or kw != stride:
        raise ShapeError("conv_transpose2d supports kernel == stride only")
    # tiles[n, o, h, i, w, j] -> [n, o, h*k, w*k]
    tiles = np.einsum("nchw,coij->nohiwj", x.data, weight.data, optimize=True)
    out = tiles.reshape(n, oc, h * kh, w * kw)
    parents = [x, weight]
    if bias is not None:
        bias = _as_tensor(bias)
        out = out + bias.data[None, :, None, None]
        parents.append(bias)

    def backward(g):
        gt = g.reshape(n, oc, h, kh, w, kw)
        gx = np.einsum("nohiwj,coij->nchw", gt, weight.data, optimize=True) if x.requires_grad else None
        gw = np.einsum("nohiwj,nchw->coij", gt, x.data, optimize=True) if weight.requires_grad else None
        grads = [gx, gw]
        if bias is not None:
            grads.append(g.sum(axis=(0, 2, 3)))
        return grads

    return _make(out, parents, backward)


def avg_pool2d(x, size: int = 2) -> Tensor:
    x = _as_tensor(x)
    n, c, h, w = x.shape
    if h % size or w % size:
        raise ShapeError(f"avg_pool2d: {h}x{w} not divisible by {size}")
    out = x.data.reshape(n, c, h // size, size, w // size, size).mean(axis=(3, 5))

    def backward(g):
        up = np.repeat(np.repeat(g, size, axis=2), size, axis=3)
        return (up / (size * size),)

    return _make(out, (x,), backward)
