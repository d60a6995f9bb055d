"""Finite-difference checks of every network block and both losses.

Each case builds a block from a seed, reduces its output to a scalar with a
fixed random projection, and compares backward() against central
differences for the input and every parameter.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import nn
from .loss import BootstrapParams, bootstrap_loss, combined_loss, iou_loss
from .tensor import Tensor, finite_diff_grad

RTOL = 1e-4
ATOL = 1e-6
EPS = 1e-6
BLOCK_STD = 0.5


@dataclass
class CaseResult:
    name: str
    seed: int
    max_abs_err: float
    max_excess: float   # max of |a - n| - (atol + rtol |n|); <= 0 means pass
    n_checked: int

    @property
    def passed(self) -> bool:
        return self.max_excess <= 0


@dataclass
class BlockSummary:
    name: str
    n_seeds: int
    max_abs_err: float
    passed: bool
    seconds: float


def _numeric_param_grad(loss_fn: Callable[[], float], p: Tensor, eps: float) -> np.ndarray:
    grad = np.zeros_like(p.data)
    flat, gflat = p.data.reshape(-1), grad.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + eps
        up = loss_fn()
        flat[i] = old - eps
        down = loss_fn()
        flat[i] = old
        gflat[i] = (up - down) / (2 * eps)
    return grad


def _compare(pairs, rtol, atol) -> tuple[float, float, int]:
    max_abs, max_excess, n = 0.0, -np.inf, 0
    for analytic, numeric in pairs:
        diff = np.abs(analytic - numeric)
        max_abs = max(max_abs, float(diff.max(initial=0.0)))
        max_excess = max(max_excess, float((diff - (atol + rtol * np.abs(numeric))).max(initial=-np.inf)))
        n += diff.size
    return max_abs, max_excess, n


def check_module(name: str, module: nn.Module | None, forward: Callable[[Tensor], Tensor],
                 x: np.ndarray, seed: int, rtol: float = RTOL, atol: float = ATOL,
                 eps: float = EPS, projection: bool = True) -> CaseResult:
    rng = np.random.default_rng(seed + 7919)
    proj = None

    def scalar(inp: Tensor) -> Tensor:
        nonlocal proj
        out = forward(inp)
        if not projection:
            return out
        if proj is None:
            proj = rng.normal(size=out.shape)
        return (out * proj).sum()

    xt = Tensor(x, requires_grad=True)
    params = module.parameters() if module is not None else []
    for p in params:
        p.grad = None
    scalar(xt).backward()
    pairs = [(xt.grad, finite_diff_grad(scalar, xt, eps))]
    for p in params:
        analytic = p.grad if p.grad is not None else np.zeros_like(p.data)
        pairs.append((analytic, _numeric_param_grad(lambda: scalar(Tensor(x)).item(), p, eps)))
    return CaseResult(name, seed, *_compare(pairs, rtol, atol))


def _rand(rng, *shape):
    return rng.normal(size=shape)


# each case: seed -> (name, module, forward, input array, projection?)

def _conv_case(dilation: int):
    def build(seed):
        rng = np.random.default_rng(seed)
        layer = nn.Conv2dLayer(3, 2, k=3, dilation=dilation, padding=dilation, rng=rng, std=BLOCK_STD)
        layer.bias.data[...] = rng.normal(size=2)
        return layer, layer, _rand(rng, 1, 3, 6, 6), True
    return build


def _strided_conv(seed):
    rng = np.random.default_rng(seed)
    layer = nn.Conv2dLayer(2, 3, k=3, stride=2, dilation=2, padding=1, rng=rng, std=BLOCK_STD)
    return layer, layer, _rand(rng, 2, 2, 6, 6), True


def _conv_transpose(seed):
    rng = np.random.default_rng(seed)
    layer = nn.ConvTranspose2dLayer(3, 2, k=2, rng=rng, std=BLOCK_STD)
    layer.bias.data[...] = rng.normal(size=2)
    return layer, layer, _rand(rng, 1, 3, 3, 3), True


def _batchnorm(seed):
    rng = np.random.default_rng(seed)
    layer = nn.BatchNormLayer(3)
    layer.gamma.data[...] = rng.uniform(0.5, 1.5, 3)
    layer.beta.data[...] = rng.normal(size=3)
    return layer, layer, _rand(rng, 2, 3, 3, 3) * rng.uniform(0.5, 2.0), True


def _dense_block(seed):
    rng = np.random.default_rng(seed)
    block = nn.DenseBlock(4, 2, 2, rng=rng, std=BLOCK_STD)
    return block, block, _rand(rng, 1, 4, 5, 5), True


def _rau(seed):
    rng = np.random.default_rng(seed)
    unit = nn.RAU(4, (2, 4, 8), rng=rng, std=BLOCK_STD)
    return unit, unit, _rand(rng, 1, 4, 6, 6), True


def _scse(seed):
    rng = np.random.default_rng(seed)
    block = nn.SCSE(4, 2, rng=rng, std=BLOCK_STD)
    for p in (block.fc1.bias, block.fc2.bias, block.spatial.bias):
        p.data[...] = rng.normal(scale=0.3, size=p.shape)
    return block, block, _rand(rng, 1, 4, 3, 3), True


def _edb(seed):
    rng = np.random.default_rng(seed)
    block = nn.EDB(4, 2, rng=rng, std=BLOCK_STD)
    return block, block, _rand(rng, 1, 4, 4, 4), True


def _decoder(seed):
    rng = np.random.default_rng(seed)
    block = nn.DecoderModule(4, 2, 4, reduction=2, rng=rng, std=BLOCK_STD)
    skip = _rand(rng, 1, 2, 4, 4)
    return block, lambda x: block(x, Tensor(skip)), _rand(rng, 1, 4, 2, 2), True


def _loss_inputs(seed, t=0.9):
    rng = np.random.default_rng(seed)
    y = (rng.random((1, 1, 8, 8)) < 0.3).astype(np.uint8)
    y.flat[0], y.flat[1] = 1, 0
    p = rng.uniform(0.02, 0.98, size=y.shape)
    # keep every negative clear of the selection threshold so eps never flips it
    near = np.abs((1 - p) - t) < 1e-3
    p[near] += 2e-3
    return p, y


def _bootstrap(seed):
    p, y = _loss_inputs(seed)
    return None, lambda x: bootstrap_loss(x, y, BootstrapParams()), p, False


def _iou(seed):
    p, y = _loss_inputs(seed)
    return None, lambda x: iou_loss(x, y), p, False


def _combined(seed):
    p, y = _loss_inputs(seed)
    return None, lambda x: combined_loss(x, y).total_tensor, p, False


CASES: dict[str, Callable] = {
    "conv_dilation_1": _conv_case(1),
    "conv_dilation_2": _conv_case(2),
    "conv_dilation_4": _conv_case(4),
    "conv_dilation_8": _conv_case(8),
    "conv_strided": _strided_conv,
    "conv_transpose": _conv_transpose,
    "batchnorm_train": _batchnorm,
    "dense_block": _dense_block,
    "rau": _rau,
    "scse": _scse,
    "edb": _edb,
    "decoder_module": _decoder,
    "bootstrap_loss": _bootstrap,
    "iou_loss": _iou,
    "combined_loss": _combined,
}


def run_case(name: str, seed: int, rtol: float = RTOL, atol: float = ATOL) -> CaseResult:
    module, forward, x, projection = CASES[name](seed)
    if module is not None:
        module.train()
    return check_module(name, module, forward, x, seed, rtol, atol, projection=projection)


def run_suite(seed: int = 0, n_seeds: int = 20, rtol: float = RTOL, atol: float = ATOL,
              names=None) -> list[BlockSummary]:
    out = []
    for name in names or CASES:
        start = time.perf_counter()
        results = [run_case(name, seed + k, rtol, atol) for k in range(n_seeds)]
        out.append(BlockSummary(name, n_seeds, max(r.max_abs_err for r in results),
                                all(r.passed for r in results), time.perf_counter() - start))
    return out
