"""The assembled encoder/decoder segmentation network."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import tensor as T
from ..tensor import ShapeError, Tensor
from .blocks import EDB, RAU, DecoderModule, DenseBlock, Transition
from .layers import INIT_STD, Conv2dLayer, Module


@dataclass(frozen=True)
class NetConfig:
    """Network widths. The defaults are the toy scale used in tests."""

    growth_rate: int = 4
    stage_layer_counts: tuple[int, int, int] = (2, 2, 2)
    base_channels: int = 8
    input_channels: int = 9
    rau_dilations: tuple[int, ...] = (2, 4, 8)
    decoder_channels: tuple[int, int, int] = (16, 16, 8)
    compression: float = 0.5
    scse_reduction: int = 2
    edb_layers: int = 2
    init_std: float = INIT_STD

    def __post_init__(self):
        if self.input_channels != 9:
            raise ValueError("input_channels must be 9 (nine-slice stacks)")
        if len(self.stage_layer_counts) != 3 or len(self.decoder_channels) != 3:
            raise ValueError("three encoder stages pair with three decoder modules")


class DenseRAUnet(Module):
    """Dense encoder, RAU lateral connections (EDB on the first), scSE decoder.

    Encoder: stem 3x3 conv, then three stages of dense block + transition.
    The pre-pool feature of each stage is a lateral; laterals go through a
    RAU, and the highest-resolution one also through the EDB. The decoder
    consumes laterals deepest first and a 1x1 conv + sigmoid gives per-pixel
    foreground probability at input resolution.
    """

    def __init__(self, cfg: NetConfig = NetConfig(), seed: int = 0):
        rng = np.random.default_rng(seed)
        std = cfg.init_std
        self.cfg = cfg
        self.stem = Conv2dLayer(cfg.input_channels, cfg.base_channels, k=3, padding=1, rng=rng, std=std)
        ch = cfg.base_channels
        self.stages, self.transitions, self.raus = [], [], []
        lateral_ch = []
        for n_layers in cfg.stage_layer_counts:
            block = DenseBlock(ch, n_layers, cfg.growth_rate, rng=rng, std=std)
            self.stages.append(block)
            lateral_ch.append(block.out_ch)
            self.raus.append(RAU(block.out_ch, cfg.rau_dilations, rng=rng, std=std))
            out_ch = max(2, int(block.out_ch * cfg.compression))
            self.transitions.append(Transition(block.out_ch, out_ch, rng=rng, std=std))
            ch = out_ch
        self.edb = EDB(lateral_ch[0], cfg.growth_rate, cfg.edb_layers, rng=rng, std=std)
        self.decoders = []
        for skip_ch, dec_ch in zip(reversed(lateral_ch), cfg.decoder_channels):
            self.decoders.append(DecoderModule(ch, skip_ch, dec_ch, cfg.scse_reduction, rng=rng, std=std))
            ch = dec_ch
        self.head = Conv2dLayer(ch, 1, k=1, rng=rng, std=std)

    def forward(self, x: Tensor) -> Tensor:
        if x.ndim != 4 or x.shape[1] != self.cfg.input_channels:
            raise ShapeError(f"expected [N,9,H,W] input, got {x.shape}")
        if x.shape[2] % 8 or x.shape[3] % 8:
            raise ShapeError(f"H and W must be divisible by 8, got {x.shape[2:]}")
        h = self.stem(x)
        laterals = []
        for block, unit, trans in zip(self.stages, self.raus, self.transitions):
            h = block(h)
            laterals.append(unit(h))
            h = trans(h)
        laterals[0] = self.edb(laterals[0])
        for dec, skip in zip(self.decoders, reversed(laterals)):
            h = dec(h, skip)
        return T.sigmoid(self.head(h))


def denseraunet_forward(stack, model: DenseRAUnet, mode: str = "eval") -> Tensor:
    """Run ``model`` on an [N,9,H,W] array or tensor in ``train`` or ``eval`` mode."""
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    model.train(mode == "train")
    x = stack if isinstance(stack, Tensor) else Tensor(stack)
    return model(x)
