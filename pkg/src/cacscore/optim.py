"""Momentum SGD, the step-decay learning-rate schedule, and a toy training loop."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .loss import BootstrapParams, combined_loss
from .nn.layers import Module
from .preprocess import Stack2_5D
from .tensor import Tensor

log = logging.getLogger(__name__)

LR0 = 0.001
MOMENTUM = 0.9
DECAY = 0.99
DECAY_EVERY = 2000
EPOCHS = 25


def lr_at(iteration: int, lr0: float = LR0, decay: float = DECAY, every: int = DECAY_EVERY) -> float:
    """``lr0 * decay ** floor(iteration / every)``."""
    if iteration < 0:
        raise ValueError("iteration must be non-negative")
    k = iteration // every
    return lr0 * decay ** k if k else lr0


@dataclass
class SgdState:
    lr0: float = LR0
    momentum: float = MOMENTUM
    velocity: dict[int, np.ndarray] = field(default_factory=dict)
    iteration: int = 0

    def __post_init__(self):
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1)")


def sgd_step(params: Sequence[Tensor], state: SgdState) -> None:
    """``v <- momentum*v + grad; param <- param - lr*v``, then advance the iteration."""
    lr = lr_at(state.iteration, state.lr0)
    for i, p in enumerate(params):
        if p.grad is None:
            raise ValueError(f"parameter {i} has no gradient; call backward() first")
    for i, p in enumerate(params):
        v = state.velocity.get(i)
        v = p.grad.copy() if v is None else state.momentum * v + p.grad
        state.velocity[i] = v
        p.data -= lr * v
    state.iteration += 1


@dataclass(frozen=True)
class LossRecord:
    iteration: int
    bootstrap: float
    iou: float
    total: float
    lr: float


def train_toy(model: Module, dataset: Sequence[Stack2_5D],
              params: BootstrapParams = BootstrapParams(), epochs: int = EPOCHS,
              seed: int = 0, lr0: float = LR0, momentum: float = MOMENTUM,
              max_iters: int | None = None) -> list[LossRecord]:
    """Train with one stack per mini-batch, reshuffling each epoch."""
    if not dataset:
        raise ValueError("dataset is empty")
    rng = np.random.default_rng(seed)
    state = SgdState(lr0=lr0, momentum=momentum)
    plist = model.parameters()
    model.train()
    curve: list[LossRecord] = []
    for epoch in range(epochs):
        for idx in rng.permutation(len(dataset)):
            if max_iters is not None and state.iteration >= max_iters:
                return curve
            stack = dataset[idx]
            x = Tensor(stack.channels[None])
            y = stack.label[None, None]
            model.zero_grad()
            prob = model(x)
            report = combined_loss(prob, y, params)
            if not math.isfinite(report.total):
                raise FloatingPointError(f"non-finite loss at iteration {state.iteration}")
            report.total_tensor.backward()
            lr = lr_at(state.iteration, lr0)
            curve.append(LossRecord(state.iteration, report.bootstrap, report.iou, report.total, lr))
            sgd_step(plist, state)
        log.debug("epoch %d done, last loss %.4f", epoch, curve[-1].total)
    return curve


def format_loss_curve(curve: Sequence[LossRecord]) -> str:
    lines = ["iteration,bootstrap,iou,total,lr"]
    lines += [f"{r.iteration},{r.bootstrap!r},{r.iou!r},{r.total!r},{r.lr!r}" for r in curve]
    return "\n".join(lines) + "\n"


def phantom_stacks(n: int, size: int = 32, seed: int = 0, ranges=None) -> list[Stack2_5D]:
    """One 9-slice stack per random phantom, centred on its most calcified slice."""
    from .phantom import PhantomRanges, make_training_set
    from .preprocess import make_stack

    ranges = ranges or PhantomRanges(dims=(12, size, size))
    stacks = []
    for vol, mask in make_training_set(n, ranges, seed):
        center = int(np.argmax(mask.labels.sum(axis=(1, 2))))
        stacks.append(make_stack(vol, mask, center, size=size))
    return stacks
