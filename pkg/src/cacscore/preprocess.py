"""Slice resizing, random square crops, HU normalisation and 9-slice stacks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .volume import CtVolume, MaskVolume, check_same_shape

STACK_DEPTH = 9
IMAGE_SIZE = 512
MAX_CROP = 256
MIN_CROP = 128
LABEL_HU_FLOOR = 130
NORM_LO, NORM_HI = -1000.0, 3000.0


@dataclass(frozen=True)
class CropSpec:
    row0: int
    col0: int
    side: int

    def validate(self, shape: tuple[int, int]) -> None:
        h, w = shape
        if self.row0 < 0 or self.col0 < 0 or self.side < 1:
            raise ValueError(f"invalid crop {self}")
        if self.row0 + self.side > h or self.col0 + self.side > w:
            raise ValueError(f"crop {self} falls outside a {h}x{w} image")


@dataclass(frozen=True)
class Stack2_5D:
    channels: np.ndarray   # [9, H, W], values in [0, 1]
    label: np.ndarray      # [H, W], {0, 1}
    center_index: int

    def __post_init__(self):
        if self.channels.ndim != 3 or self.channels.shape[0] != STACK_DEPTH:
            raise ValueError(f"stack must have {STACK_DEPTH} channels, got {self.channels.shape}")
        if self.label.shape != self.channels.shape[1:]:
            raise ValueError("label shape must match channel spatial shape")


def resize_slice(img: np.ndarray, out_h: int, out_w: int, order: int = 1) -> np.ndarray:
    """Resample ``img`` to ``out_h`` x ``out_w`` with corner-aligned sampling.

    Output pixel (i, j) samples the input at (i*(h-1)/(out_h-1), j*(w-1)/(out_w-1)),
    so corners map to corners. ``order=1`` is bilinear, ``order=0`` nearest.
    """
    img = np.asarray(img, dtype=np.float64)
    if out_h < 1 or out_w < 1:
        raise ValueError(f"output dims must be positive, got {out_h}x{out_w}")
    if img.ndim != 2 or min(img.shape) < 1:
        raise ValueError(f"expected a non-empty 2D image, got shape {img.shape}")
    h, w = img.shape
    if (h, w) == (out_h, out_w):
        return img.copy()
    rows = np.linspace(0, h - 1, out_h) if out_h > 1 else np.zeros(1)
    cols = np.linspace(0, w - 1, out_w) if out_w > 1 else np.zeros(1)
    rr, cc = np.meshgrid(rows, cols, indexing="ij")
    return ndimage.map_coordinates(img, [rr, cc], order=order, mode="nearest")


def random_crop_spec(rng: np.random.Generator, size: int = IMAGE_SIZE,
                     min_side: int = MIN_CROP, max_side: int = MAX_CROP) -> CropSpec:
    side = int(rng.integers(min_side, max_side + 1))
    row0 = int(rng.integers(0, size - side + 1))
    col0 = int(rng.integers(0, size - side + 1))
    return CropSpec(row0, col0, side)


def random_crop_resize(img: np.ndarray, spec: CropSpec, out_size: int = IMAGE_SIZE,
                       is_label: bool = False) -> np.ndarray:
    """Cut the ``spec`` window out of ``img`` and resize it to ``out_size`` square.

    Labels use nearest-neighbour sampling so they stay binary.
    """
    img = np.asarray(img)
    spec.validate(img.shape)
    window = img[spec.row0:spec.row0 + spec.side, spec.col0:spec.col0 + spec.side]
    out = resize_slice(window, out_size, out_size, order=0 if is_label else 1)
    return out.astype(img.dtype) if is_label else out


def normalize_hu(img) -> np.ndarray:
    """Linear map of [-1000, 3000] HU onto [0, 1], clipped."""
    img = np.asarray(img, dtype=np.float64)
    return np.clip((img - NORM_LO) / (NORM_HI - NORM_LO), 0.0, 1.0)


def apply_hu_label_floor(label, hu_slice, floor: float = LABEL_HU_FLOOR) -> np.ndarray:
    """Zero every label pixel whose HU value is below ``floor``."""
    label = np.asarray(label)
    hu_slice = np.asarray(hu_slice)
    if label.shape != hu_slice.shape:
        raise ValueError(f"label {label.shape} and HU {hu_slice.shape} shapes differ")
    return (label.astype(bool) & (hu_slice >= floor)).astype(np.uint8)


def stack_indices(center: int, n_slices: int, depth: int = STACK_DEPTH) -> list[int]:
    half = depth // 2
    return [min(max(center + k, 0), n_slices - 1) for k in range(-half, half + 1)]


def make_stack(vol: CtVolume, labels: MaskVolume, center: int, crop: CropSpec | None = None,
               size: int = IMAGE_SIZE) -> Stack2_5D:
    """Nine slices centred on ``center`` with the centre slice's label.

    Out-of-range neighbours repeat the first/last slice. Every channel and
    the label go through the same resize (and crop, if given), and the label
    is cleared wherever the centre slice is below the 130 HU floor.
    """
    check_same_shape(vol, labels)
    if not 0 <= center < vol.n_slices:
        raise IndexError(f"center {center} outside [0, {vol.n_slices})")
    label = apply_hu_label_floor(labels.labels[center], vol.voxels[center])
    chans = []
    for idx in stack_indices(center, vol.n_slices):
        img = normalize_hu(vol.voxels[idx])
        img = resize_slice(img, size, size) if crop is None else random_crop_resize(
            resize_slice(img, size, size), crop, size)
        chans.append(img)
    if crop is None:
        lab = resize_slice(label, size, size, order=0)
    else:
        lab = random_crop_resize(resize_slice(label, size, size, order=0), crop, size, is_label=True)
    return Stack2_5D(np.stack(chans), lab.astype(np.uint8), center)
