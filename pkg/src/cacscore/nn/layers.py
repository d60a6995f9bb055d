"""Parameterised layers: convolution, transposed convolution, batch norm, linear."""

from __future__ import annotations

from typing import Iterator

import numpy as np

from .. import tensor as T
from ..tensor import ShapeError, Tensor
from .functional import conv2d_raw, conv_transpose2d_raw

# Gaussian init N(0, 0.01), read as variance 0.01.
INIT_STD = 0.1


def gaussian(rng: np.random.Generator, shape, std: float) -> Tensor:
    return Tensor(rng.normal(0.0, std, size=shape), requires_grad=True)


class Module:
    """Parameter container with train/eval mode propagation.

    Parameters are discovered by walking attributes: ``Tensor`` objects with
    ``requires_grad`` set, child ``Module`` objects, and lists of modules.
    Attribute order is insertion order, so parameter names are stable.
    """

    training = True

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        for name, value in vars(self).items():
            full = f"{prefix}{name}"
            if isinstance(value, Tensor) and value.requires_grad:
                yield full, value
            elif isinstance(value, Module):
                yield from value.named_parameters(full + ".")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{full}.{i}.")

    def parameters(self) -> list[Tensor]:
        return [p for _, p in self.named_parameters()]

    def named_buffers(self, prefix: str = "") -> Iterator[tuple[str, np.ndarray]]:
        for name, value in vars(self).items():
            full = f"{prefix}{name}"
            if isinstance(value, np.ndarray):
                yield full, value
            elif isinstance(value, Module):
                yield from value.named_buffers(full + ".")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_buffers(f"{full}.{i}.")

    def children(self) -> Iterator[Module]:
        for value in vars(self).values():
            if isinstance(value, Module):
                yield value
            elif isinstance(value, (list, tuple)):
                yield from (v for v in value if isinstance(v, Module))

    def train(self, mode: bool = True) -> Module:
        self.training = mode
        for child in self.children():
            child.train(mode)
        return self

    def eval(self) -> Module:
        return self.train(False)

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)


class Conv2dLayer(Module):
    def __init__(self, in_ch: int, out_ch: int, k: int = 3, stride: int = 1,
                 dilation: int = 1, padding: int = 0,
                 rng: np.random.Generator | None = None, std: float = INIT_STD):
        if k < 1 or dilation < 1 or stride < 1:
            raise ValueError("kernel, stride and dilation must be >= 1")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.in_ch, self.out_ch, self.k = in_ch, out_ch, k
        self.stride, self.dilation, self.padding = stride, dilation, padding
        self.weight = gaussian(rng, (out_ch, in_ch, k, k), std)
        self.bias = Tensor(np.zeros(out_ch), requires_grad=True)

    def forward(self, x: Tensor) -> Tensor:
        return conv2d(x, self)


class ConvTranspose2dLayer(Module):
    def __init__(self, in_ch: int, out_ch: int, k: int = 2,
                 rng: np.random.Generator | None = None, std: float = INIT_STD):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.in_ch, self.out_ch, self.k = in_ch, out_ch, k
        self.weight = gaussian(rng, (in_ch, out_ch, k, k), std)
        self.bias = Tensor(np.zeros(out_ch), requires_grad=True)

    def forward(self, x: Tensor) -> Tensor:
        return conv_transpose2d(x, self)


class BatchNormLayer(Module):
    """Per-channel batch norm over (N, H, W).

    ``momentum`` weights the old running value:
    ``running = momentum * running + (1 - momentum) * batch``.
    """

    def __init__(self, ch: int, eps: float = 1e-5, momentum: float = 0.9):
        self.ch, self.eps, self.momentum = ch, eps, momentum
        self.gamma = Tensor(np.ones(ch), requires_grad=True)
        self.beta = Tensor(np.zeros(ch), requires_grad=True)
        self.running_mean = np.zeros(ch)
        self.running_var = np.ones(ch)

    def forward(self, x: Tensor) -> Tensor:
        return batchnorm(x, self)


class Linear(Module):
    def __init__(self, in_f: int, out_f: int, rng: np.random.Generator | None = None,
                 std: float = INIT_STD):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.weight = gaussian(rng, (in_f, out_f), std)
        self.bias = Tensor(np.zeros(out_f), requires_grad=True)

    def forward(self, x: Tensor) -> Tensor:
        return T.matmul(x, self.weight) + self.bias


def conv2d(x: Tensor, layer: Conv2dLayer) -> Tensor:
    return conv2d_raw(x, layer.weight, layer.bias, stride=layer.stride,
                      dilation=layer.dilation, padding=layer.padding)


def conv_transpose2d(x: Tensor, layer: ConvTranspose2dLayer) -> Tensor:
    return conv_transpose2d_raw(x, layer.weight, layer.bias, stride=layer.k)


def batchnorm(x: Tensor, layer: BatchNormLayer) -> Tensor:
    if x.ndim != 4 or x.shape[1] != layer.ch:
        raise ShapeError(f"batchnorm expects [N,{layer.ch},H,W], got {x.shape}")
    n, c, h, w = x.shape
    gamma = layer.gamma.reshape(1, c, 1, 1)
    beta = layer.beta.reshape(1, c, 1, 1)
    if not layer.training:
        mu = layer.running_mean.reshape(1, c, 1, 1)
        inv = 1.0 / np.sqrt(layer.running_var.reshape(1, c, 1, 1) + layer.eps)
        return (x - mu) * inv * gamma + beta
    if n * h * w < 2:
        raise ShapeError("batchnorm in train mode needs at least two values per channel")
    mu = T.mean(x, axis=(0, 2, 3), keepdims=True)
    xc = x - mu
    var = T.mean(xc * xc, axis=(0, 2, 3), keepdims=True)
    y = xc * T.power(var + layer.eps, -0.5) * gamma + beta
    m = layer.momentum
    layer.running_mean = m * layer.running_mean + (1 - m) * mu.data.reshape(c)
    layer.running_var = m * layer.running_var + (1 - m) * var.data.reshape(c)
    return y


relu = T.relu
sigmoid = T.sigmoid
