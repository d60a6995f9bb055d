"""Hard-negative bootstrap loss, exponential soft-IoU loss and their sum."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .tensor import ShapeError, Tensor

P_CLIP = 1e-7
IOU_EPS = 1e-7


@dataclass(frozen=True)
class BootstrapParams:
    t: float = 0.9
    alpha: float = 8.0
    beta: float = 1.0

    def __post_init__(self):
        if not 0 < self.t < 1:
            raise ValueError(f"t must lie in (0, 1), got {self.t}")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be non-negative")


@dataclass
class LossReport:
    bootstrap: float
    iou: float
    total: float
    n_hard_neg: int
    n_pos: int
    total_tensor: Tensor | None = None


def _check(p: Tensor, y) -> np.ndarray:
    y = np.asarray(y)
    if p.shape != y.shape:
        raise ShapeError(f"prediction {p.shape} and label {y.shape} shapes differ")
    return y


def _selections(p: Tensor, y: np.ndarray, t: float):
    pc = np.clip(p.data, P_CLIP, 1 - P_CLIP)
    hard_neg = (y == 0) & ((1.0 - pc) < t)
    pos = y == 1
    return hard_neg, pos


def bootstrap_loss(p, y, params: BootstrapParams = BootstrapParams()) -> Tensor:
    """Class-weighted cross entropy over hard negatives and all positives.

    A negative pixel is hard while its background probability ``1 - p`` is
    still below ``params.t``; easier negatives are dropped. The selection is
    a constant for differentiation, and an empty selection contributes 0.
    """
    p = T._as_tensor(p)
    y = _check(p, y)
    hard_neg, pos = _selections(p, y, params.t)
    pc = T.clip(p, P_CLIP, 1 - P_CLIP)
    loss = Tensor(0.0)
    n_neg, n_pos = int(hard_neg.sum()), int(pos.sum())
    if n_neg:
        neg_ll = T.sum(T.log(1.0 - pc) * hard_neg) / n_neg
        loss = loss - params.alpha * neg_ll
    if n_pos:
        pos_ll = T.sum(T.log(pc) * pos) / n_pos
        loss = loss - params.beta * pos_ll
    return loss


def iou_loss(p, g, eps: float = IOU_EPS) -> Tensor:
    """``-ln`` of the soft intersection-over-union between ``p`` and ``g``."""
    p = T._as_tensor(p)
    g = _check(p, g).astype(np.float64)
    inter = T.sum(p * g)
    union = T.sum(p) + float(g.sum()) - inter
    return -T.log((inter + eps) / (union + eps))


def combined_loss(p, y, params: BootstrapParams = BootstrapParams()) -> LossReport:
    p = T._as_tensor(p)
    y = _check(p, y)
    boot = bootstrap_loss(p, y, params)
    iou = iou_loss(p, y)
    total = boot + iou
    hard_neg, pos = _selections(p, y, params.t)
    return LossReport(bootstrap=boot.item(), iou=iou.item(), total=total.item(),
                      n_hard_neg=int(hard_neg.sum()), n_pos=int(pos.sum()), total_tensor=total)
