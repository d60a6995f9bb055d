"""Named-tensor checkpoint files.

Layout::

    CACCKPT1
    count <n>
    tensor <name> <dtype> <nbytes> <d0> <d1> ...     (n index lines)
    data
    <payloads, concatenated in index order, little-endian>

Parameters and batch-norm running buffers are both stored as float64 so a
save/load cycle restores them bit for bit.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .layers import Module

MAGIC = "CACCKPT1"


def save_checkpoint(model: Module, path) -> None:
    entries = [(name, p.data) for name, p in model.named_parameters()]
    entries += [(name, buf) for name, buf in model.named_buffers()]
    header = [MAGIC, f"count {len(entries)}"]
    payloads = []
    for name, arr in entries:
        raw = np.ascontiguousarray(arr, dtype="<f8").tobytes()
        dims = " ".join(str(d) for d in arr.shape)
        header.append(f"tensor {name} float64 {len(raw)} {dims}".rstrip())
        payloads.append(raw)
    header.append("data")
    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        for raw in payloads:
            fh.write(raw)


def read_checkpoint(path) -> dict[str, np.ndarray]:
    blob = Path(path).read_bytes()
    pos = 0

    def line() -> str:
        nonlocal pos
        end = blob.index(b"\n", pos)
        text = blob[pos:end].decode("ascii")
        pos = end + 1
        return text

    if line() != MAGIC:
        raise ValueError(f"{path}: not a checkpoint file")
    kind, count = line().split()
    if kind != "count":
        raise ValueError(f"{path}: malformed count line")
    index = []
    for _ in range(int(count)):
        parts = line().split()
        if parts[0] != "tensor" or parts[2] != "float64":
            raise ValueError(f"{path}: malformed index line {' '.join(parts)!r}")
        index.append((parts[1], int(parts[3]), tuple(int(d) for d in parts[4:])))
    if line() != "data":
        raise ValueError(f"{path}: missing data marker")
    out = {}
    for name, nbytes, shape in index:
        chunk = blob[pos:pos + nbytes]
        if len(chunk) != nbytes:
            raise ValueError(f"{path}: truncated payload for {name}")
        out[name] = np.frombuffer(chunk, dtype="<f8").reshape(shape).astype(np.float64)
        pos += nbytes
    return out


def load_checkpoint(model: Module, path) -> None:
    """Copy stored values into ``model`` in place; names and shapes must match."""
    stored = read_checkpoint(path)
    params = dict(model.named_parameters())
    buffers = dict(model.named_buffers())
    expected = set(params) | set(buffers)
    if set(stored) != expected:
        missing = sorted(expected - set(stored))
        extra = sorted(set(stored) - expected)
        raise ValueError(f"checkpoint mismatch: missing {missing}, unexpected {extra}")
    for name, p in params.items():
        if p.data.shape != stored[name].shape:
            raise ValueError(f"shape mismatch for {name}")
        p.data[...] = stored[name]
    for name, buf in buffers.items():
        buf[...] = stored[name]
