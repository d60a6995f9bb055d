"""
From a CT volume to network input
=================================

The network sees nine neighbouring slices as channels and predicts the
mask of the middle one. This walks through normalisation, stacking at the
volume edges, random cropping, and the 130 HU label floor.
"""

import numpy as np

from cacscore.phantom import PhantomRanges, make_training_set
from cacscore.preprocess import (CropSpec, apply_hu_label_floor, make_stack, normalize_hu, random_crop_spec,
                                 stack_indices)

# HU values are mapped linearly from [-1000, 3000] onto [0, 1].
print("normalize_hu(-1000, 130, 3000) =", normalize_hu([-1000, 130, 3000]))

# Near the ends of the scan, missing neighbours repeat the edge slice.
for center in (0, 1, 10, 19):
    print(f"center {center:2d} -> slices {stack_indices(center, 20)}")

# Labels are cleared wherever the CT is below 130 HU.
label = np.array([[1, 1], [1, 0]])
hu = np.array([[129, 130], [600, 900]])
print("label floor:", apply_hu_label_floor(label, hu).tolist())

# A real stack from a phantom, resized to 64 x 64, with and without a crop.
(vol, mask), = make_training_set(1, PhantomRanges(dims=(12, 32, 32)), seed=3)
center = int(np.argmax(mask.labels.sum(axis=(1, 2))))
stack = make_stack(vol, mask, center, size=64)
print("stack channels", stack.channels.shape, "label pixels", int(stack.label.sum()))

# Training crops are drawn at random...
rng = np.random.default_rng(0)
print("a random crop:", random_crop_spec(rng, size=64, min_side=16, max_side=32))

# ...here we pick one around the lesion to watch it get magnified.
rows, cols = np.nonzero(stack.label)
side = 24
row0 = int(np.clip(rows.mean() - side / 2, 0, 64 - side))
col0 = int(np.clip(cols.mean() - side / 2, 0, 64 - side))
crop = CropSpec(row0, col0, side)
cropped = make_stack(vol, mask, center, crop=crop, size=64)
print(crop, "-> label pixels after zooming in:", int(cropped.label.sum()))
