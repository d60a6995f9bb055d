"""Building blocks of the segmentation network.

Dense layers and blocks, the residual atrous unit (RAU), concurrent
spatial/channel squeeze-excitation (scSE), the extra dense block (EDB) for
the first skip connection, transitions, and decoder modules.
"""

from __future__ import annotations

from typing import Sequence

from .. import tensor as T
from ..tensor import ShapeError, Tensor
from .functional import avg_pool2d
from .layers import INIT_STD, BatchNormLayer, Conv2dLayer, ConvTranspose2dLayer, Linear, Module


class DenseLayer(Module):
    """BN -> ReLU -> 3x3 conv producing ``growth`` channels."""

    def __init__(self, in_ch: int, growth: int, rng=None, std: float = INIT_STD):
        self.bn = BatchNormLayer(in_ch)
        self.conv = Conv2dLayer(in_ch, growth, k=3, padding=1, rng=rng, std=std)

    def forward(self, x: Tensor) -> Tensor:
        return self.conv(T.relu(self.bn(x)))


def dense_block(x: Tensor, layers: Sequence[DenseLayer], growth_rate: int | None = None) -> Tensor:
    """Feed every layer the concatenation of the input and all earlier outputs."""
    features = [x]
    for layer in layers:
        inp = features[0] if len(features) == 1 else T.concat(features, axis=1)
        out = layer(inp)
        if growth_rate is not None and out.shape[1] != growth_rate:
            raise ShapeError(f"dense layer produced {out.shape[1]} channels, expected {growth_rate}")
        features.append(out)
    return features[0] if len(features) == 1 else T.concat(features, axis=1)


class DenseBlock(Module):
    def __init__(self, in_ch: int, n_layers: int, growth: int, rng=None, std: float = INIT_STD):
        self.growth = growth
        self.layers = [DenseLayer(in_ch + i * growth, growth, rng=rng, std=std)
                       for i in range(n_layers)]
        self.out_ch = in_ch + n_layers * growth

    def forward(self, x: Tensor) -> Tensor:
        return dense_block(x, self.layers, self.growth)


class Transition(Module):
    """BN -> ReLU -> 1x1 conv -> 2x2 average pool."""

    def __init__(self, in_ch: int, out_ch: int, rng=None, std: float = INIT_STD):
        self.bn = BatchNormLayer(in_ch)
        self.conv = Conv2dLayer(in_ch, out_ch, k=1, rng=rng, std=std)

    def forward(self, x: Tensor) -> Tensor:
        return avg_pool2d(self.conv(T.relu(self.bn(x))), 2)


class RAU(Module):
    """Residual atrous unit: x + proj(concat(dilated 3x3 branches)).

    Each branch is a 3x3 conv with dilation r and padding r, so spatial
    size is preserved; each emits C/2 channels and the 1x1 projection maps
    the concatenation back to C.
    """

    def __init__(self, ch: int, dilations: Sequence[int] = (2, 4, 8), rng=None,
                 std: float = INIT_STD):
        if ch % 2:
            raise ShapeError(f"RAU needs an even channel count, got {ch}")
        self.ch = ch
        width = ch // 2
        self.branches = [Conv2dLayer(ch, width, k=3, dilation=r, padding=r, rng=rng, std=std)
                         for r in dilations]
        self.proj = Conv2dLayer(width * len(self.branches), ch, k=1, rng=rng, std=std)

    def forward(self, x: Tensor) -> Tensor:
        if x.shape[1] != self.ch:
            raise ShapeError(f"RAU built for {self.ch} channels, got {x.shape[1]}")
        multi = T.concat([b(x) for b in self.branches], axis=1)
        return x + self.proj(multi)


def rau(x: Tensor, unit: RAU) -> Tensor:
    return unit(x)


def fuse_max(cse: Tensor, sse: Tensor) -> Tensor:
    return T.maximum(cse, sse)


class SCSE(Module):
    """Concurrent channel (cSE) and spatial (sSE) recalibration, fused by ``fuse``."""

    def __init__(self, ch: int, reduction: int = 2, rng=None, std: float = INIT_STD, fuse=fuse_max):
        if ch < reduction:
            raise ShapeError(f"scSE needs channels >= reduction ({ch} < {reduction})")
        self.ch = ch
        self.fc1 = Linear(ch, ch // reduction, rng=rng, std=std)
        self.fc2 = Linear(ch // reduction, ch, rng=rng, std=std)
        self.spatial = Conv2dLayer(ch, 1, k=1, rng=rng, std=std)
        self.fuse = fuse

    def forward(self, x: Tensor) -> Tensor:
        n, c = x.shape[:2]
        squeezed = T.mean(x, axis=(2, 3))
        gate_c = T.sigmoid(self.fc2(T.relu(self.fc1(squeezed)))).reshape(n, c, 1, 1)
        gate_s = T.sigmoid(self.spatial(x))
        return self.fuse(x * gate_c, x * gate_s)


def scse(x: Tensor, block: SCSE) -> Tensor:
    return block(x)


class EDB(Module):
    """Two-layer dense block followed by a 1x1 projection back to the input width."""

    def __init__(self, ch: int, growth: int, n_layers: int = 2, rng=None, std: float = INIT_STD):
        self.dense = DenseBlock(ch, n_layers, growth, rng=rng, std=std)
        self.proj = Conv2dLayer(self.dense.out_ch, ch, k=1, rng=rng, std=std)

    def forward(self, x: Tensor) -> Tensor:
        return self.proj(self.dense(x))


def edb(x: Tensor, block: EDB) -> Tensor:
    return block(x)


class ConvBNReLU(Module):
    def __init__(self, in_ch: int, out_ch: int, rng=None, std: float = INIT_STD):
        self.conv = Conv2dLayer(in_ch, out_ch, k=3, padding=1, rng=rng, std=std)
        self.bn = BatchNormLayer(out_ch)

    def forward(self, x: Tensor) -> Tensor:
        return T.relu(self.bn(self.conv(x)))


class DecoderModule(Module):
    """2x transposed conv, concat with skip, two conv-BN-ReLU, then scSE."""

    def __init__(self, in_ch: int, skip_ch: int, out_ch: int, reduction: int = 2, rng=None,
                 std: float = INIT_STD):
        self.up = ConvTranspose2dLayer(in_ch, out_ch, k=2, rng=rng, std=std)
        self.conv1 = ConvBNReLU(out_ch + skip_ch, out_ch, rng=rng, std=std)
        self.conv2 = ConvBNReLU(out_ch, out_ch, rng=rng, std=std)
        self.scse = SCSE(out_ch, reduction, rng=rng, std=std)
        self.out_ch = out_ch

    def forward(self, x: Tensor, skip: Tensor) -> Tensor:
        if skip.shape[2] != 2 * x.shape[2] or skip.shape[3] != 2 * x.shape[3]:
            raise ShapeError(f"skip {skip.shape[2:]} must be twice input {x.shape[2:]}")
        up = self.up(x)
        h = self.conv2(self.conv1(T.concat([up, skip], axis=1)))
        return self.scse(h)


def decoder_module(x: Tensor, skip: Tensor, block: DecoderModule) -> Tensor:
    return block(x, skip)


def zero_weights(module: Module) -> None:
    """Set every parameter of ``module`` except BN scale to zero."""
    for name, p in module.named_parameters():
        if not name.endswith("gamma"):
            p.data[...] = 0.0


__all__ = [
    "DenseLayer", "DenseBlock", "dense_block", "Transition", "RAU", "rau", "SCSE", "scse",
    "fuse_max", "EDB", "edb", "ConvBNReLU", "DecoderModule", "decoder_module", "zero_weights",
]
