"""
Checking gradients against finite differences
=============================================

Every block of the segmentation network and both training losses are
checked by comparing backward() with central differences. This runs the
whole suite for a few seeds and prints one line per block.
"""

import numpy as np

from cacscore import gradcheck
from cacscore.tensor import Tensor, finite_diff_grad
from cacscore import tensor as T

# The idea in miniature: d/dx sum(sigmoid(x) * x) by hand-free autodiff...
x = Tensor(np.array([-1.0, 0.5, 2.0]), requires_grad=True)
(T.sigmoid(x) * x).sum().backward()
# ...and by nudging each input by +-1e-6.
numeric = finite_diff_grad(lambda t: (T.sigmoid(t) * t).sum(), Tensor(x.data))
print("autodiff :", x.grad)
print("numerical:", numeric)
print()

# The full suite. Each case draws its own random input and weights per seed.
for s in gradcheck.run_suite(seed=0, n_seeds=3):
    print(f"{'PASS' if s.passed else 'FAIL'}  {s.name:<16} max |err| {s.max_abs_err:.2e}  ({s.seconds:.2f}s)")
