"""
Training the network on phantoms
================================

A small DenseRAUnet (about 36k parameters) is trained with momentum SGD on
eight 32 x 32 phantom stacks, using the bootstrapped cross-entropy plus the
IoU loss. Expect the loss to drop to well under half within 200 steps.
This takes roughly ten seconds.
"""

import numpy as np

from cacscore import nn
from cacscore.loss import BootstrapParams
from cacscore.optim import phantom_stacks, train_toy
from cacscore.tensor import Tensor

data = phantom_stacks(8, size=32, seed=0)
model = nn.DenseRAUnet(nn.NetConfig(), seed=0)
n_params = sum(p.size for p in model.parameters())
print(f"{n_params} parameters, {len(data)} training stacks")

curve = train_toy(model, data, BootstrapParams(t=0.9, alpha=8, beta=1), epochs=25, seed=0)
for epoch in range(0, 25, 4):
    chunk = curve[epoch * 8:(epoch + 1) * 8]
    print(f"epoch {epoch:2d}: total {np.mean([r.total for r in chunk]):7.3f}"
          f"  (bootstrap {np.mean([r.bootstrap for r in chunk]):6.3f}, iou {np.mean([r.iou for r in chunk]):6.3f})")

# How does the trained model do on its training stacks?
model.eval()
for stack in data[:3]:
    prob = nn.denseraunet_forward(Tensor(stack.channels[None]), model, "eval").data[0, 0]
    pred = prob >= 0.5
    inter = np.logical_and(pred, stack.label).sum()
    union = np.logical_or(pred, stack.label).sum()
    print(f"slice {stack.center_index}: {int(stack.label.sum())} labelled px, IoU {inter / max(union, 1):.2f}")
