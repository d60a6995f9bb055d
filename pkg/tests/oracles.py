"""Slow, obvious reference implementations used only by the tests."""

from collections import deque
from itertools import product

import numpy as np


def conv2d_loops(x, w, b=None, stride=1, dilation=1, padding=0):
    n, c, h, wd = x.shape
    oc, ic, k, _ = w.shape
    xp = np.zeros((n, c, h + 2 * padding, wd + 2 * padding))
    xp[:, :, padding:padding + h, padding:padding + wd] = x
    ho = (h + 2 * padding - dilation * (k - 1) - 1) // stride + 1
    wo = (wd + 2 * padding - dilation * (k - 1) - 1) // stride + 1
    out = np.zeros((n, oc, ho, wo))
    for bi, o, i, j in product(range(n), range(oc), range(ho), range(wo)):
        acc = 0.0
        for ci, u, v in product(range(c), range(k), range(k)):
            acc += xp[bi, ci, i * stride + u * dilation, j * stride + v * dilation] * w[o, ci, u, v]
        out[bi, o, i, j] = acc + (b[o] if b is not None else 0.0)
    return out


def bilinear_corner_aligned(img, out_h, out_w):
    h, w = img.shape
    ys = np.arange(out_h) * ((h - 1) / (out_h - 1) if out_h > 1 else 0.0)
    xs = np.arange(out_w) * ((w - 1) / (out_w - 1) if out_w > 1 else 0.0)
    y0 = np.minimum(np.floor(ys).astype(int), h - 1)
    x0 = np.minimum(np.floor(xs).astype(int), w - 1)
    y1, x1 = np.minimum(y0 + 1, h - 1), np.minimum(x0 + 1, w - 1)
    wy, wx = (ys - y0)[:, None], (xs - x0)[None, :]
    top = img[y0][:, x0] * (1 - wx) + img[y0][:, x1] * wx
    bot = img[y1][:, x0] * (1 - wx) + img[y1][:, x1] * wx
    return top * (1 - wy) + bot * wy


def flood_fill_components(mask):
    """Components of a 3D boolean mask under 26-connectivity, as sets of voxels."""
    mask = np.asarray(mask, dtype=bool)
    seen = np.zeros_like(mask)
    comps = []
    offsets = [d for d in product((-1, 0, 1), repeat=3) if d != (0, 0, 0)]
    for start in zip(*np.nonzero(mask)):
        if seen[start]:
            continue
        comp, queue = set(), deque([start])
        seen[start] = True
        while queue:
            v = queue.popleft()
            comp.add(tuple(int(a) for a in v))
            for d in offsets:
                u = (v[0] + d[0], v[1] + d[1], v[2] + d[2])
                if all(0 <= u[a] < mask.shape[a] for a in range(3)) and mask[u] and not seen[u]:
                    seen[u] = True
                    queue.append(u)
        comps.append(frozenset(comp))
    return comps
