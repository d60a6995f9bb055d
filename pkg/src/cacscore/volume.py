"""CT, mask and probability volumes plus their on-disk format.

File layout (ASCII header, then raw little-endian payload in
[slice][row][col] order)::

    CACVOL1
    dims <n_slices> <n_rows> <n_cols>
    spacing <slice_mm> <row_mm> <col_mm>
    dtype int16|uint8|float32
    data

CT volumes are int16 HU, masks uint8 {0,1}, probability volumes float32.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = "CACVOL1"
HU_MIN, HU_MAX = -1024, 4095
_DTYPES = {"int16": np.dtype("<i2"), "uint8": np.dtype("u1"), "float32": np.dtype("<f4")}


class VolumeFormatError(ValueError):
    pass


class MaskRole(enum.Enum):
    GROUND_TRUTH = "ground_truth"
    PREDICTION = "prediction"


def _check_spacing(spacing) -> tuple[float, float, float]:
    spacing = tuple(float(s) for s in spacing)
    if len(spacing) != 3 or not all(s > 0 and np.isfinite(s) for s in spacing):
        raise VolumeFormatError(f"spacing must be three positive numbers, got {spacing}")
    return spacing


def _check_dims(shape) -> None:
    if len(shape) != 3 or min(shape) < 1:
        raise VolumeFormatError(f"volume needs three positive dims, got {tuple(shape)}")


@dataclass(frozen=True, eq=False)
class CtVolume:
    """HU voxels indexed [slice][row][col] with spacing (slice, row, col) in mm.

    Values are clamped to [-1024, 4095] and stored as int16 on construction.
    """

    voxels: np.ndarray
    spacing: tuple[float, float, float]

    def __post_init__(self):
        vox = np.asarray(self.voxels)
        _check_dims(vox.shape)
        if np.issubdtype(vox.dtype, np.floating):
            vox = np.rint(vox)
        vox = np.clip(vox, HU_MIN, HU_MAX).astype(np.int16)
        vox.setflags(write=False)
        object.__setattr__(self, "voxels", vox)
        object.__setattr__(self, "spacing", _check_spacing(self.spacing))

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.voxels.shape

    n_slices = property(lambda self: self.shape[0])
    n_rows = property(lambda self: self.shape[1])
    n_cols = property(lambda self: self.shape[2])

    @property
    def slice_spacing(self) -> float:
        return self.spacing[0]

    def __eq__(self, other):
        if not isinstance(other, CtVolume):
            return NotImplemented
        return self.spacing == other.spacing and np.array_equal(self.voxels, other.voxels)


@dataclass(frozen=True, eq=False)
class MaskVolume:
    labels: np.ndarray
    role: MaskRole = MaskRole.GROUND_TRUTH
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        lab = np.asarray(self.labels)
        _check_dims(lab.shape)
        if not np.isin(lab, (0, 1)).all():
            raise VolumeFormatError("mask values must be exactly 0 or 1")
        lab = lab.astype(np.uint8)
        lab.setflags(write=False)
        object.__setattr__(self, "labels", lab)
        object.__setattr__(self, "spacing", _check_spacing(self.spacing))
        object.__setattr__(self, "role", MaskRole(self.role))

    @property
    def shape(self):
        return self.labels.shape

    def __eq__(self, other):
        if not isinstance(other, MaskVolume):
            return NotImplemented
        return (self.spacing == other.spacing and self.role == other.role
                and np.array_equal(self.labels, other.labels))


@dataclass(frozen=True, eq=False)
class ProbVolume:
    probs: np.ndarray
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float32)
        _check_dims(p.shape)
        if not (np.all(p >= 0) and np.all(p <= 1)):
            raise VolumeFormatError("probabilities must lie in [0, 1]")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "spacing", _check_spacing(self.spacing))

    @property
    def shape(self):
        return self.probs.shape

    def __eq__(self, other):
        if not isinstance(other, ProbVolume):
            return NotImplemented
        return self.spacing == other.spacing and np.array_equal(self.probs, other.probs)


def check_same_shape(a, b) -> None:
    if tuple(a.shape) != tuple(b.shape):
        raise VolumeFormatError(f"shape mismatch: {tuple(a.shape)} vs {tuple(b.shape)}")


# raw container

def _write_raw(path, array: np.ndarray, spacing, dtype: str) -> None:
    _check_dims(array.shape)
    spacing = _check_spacing(spacing)
    header = (f"{MAGIC}\n"
              f"dims {array.shape[0]} {array.shape[1]} {array.shape[2]}\n"
              f"spacing {spacing[0]!r} {spacing[1]!r} {spacing[2]!r}\n"
              f"dtype {dtype}\n"
              "data\n")
    payload = np.ascontiguousarray(array, dtype=_DTYPES[dtype]).tobytes()
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(payload)


def _read_raw(path) -> tuple[np.ndarray, tuple[float, float, float], str]:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such volume file: {path}")
    blob = path.read_bytes()
    lines, pos = [], 0
    for _ in range(5):
        end = blob.find(b"\n", pos)
        if end < 0:
            raise VolumeFormatError(f"{path}: truncated header")
        lines.append(blob[pos:end].decode("ascii", errors="replace"))
        pos = end + 1
    magic, dims_line, spacing_line, dtype_line, data_line = lines
    if magic != MAGIC or data_line != "data":
        raise VolumeFormatError(f"{path}: not a {MAGIC} file")
    d = dims_line.split()
    s = spacing_line.split()
    t = dtype_line.split()
    if d[:1] != ["dims"] or len(d) != 4 or s[:1] != ["spacing"] or len(s) != 4 or t[:1] != ["dtype"]:
        raise VolumeFormatError(f"{path}: malformed header")
    try:
        dims = tuple(int(v) for v in d[1:])
        spacing = tuple(float(v) for v in s[1:])
    except ValueError as exc:
        raise VolumeFormatError(f"{path}: malformed header ({exc})") from exc
    if len(t) != 2 or t[1] not in _DTYPES:
        raise VolumeFormatError(f"{path}: unknown dtype line {dtype_line!r}")
    _check_dims(dims)
    spacing = _check_spacing(spacing)
    dt = _DTYPES[t[1]]
    expected = int(np.prod(dims)) * dt.itemsize
    payload = blob[pos:]
    if len(payload) != expected:
        raise VolumeFormatError(
            f"{path}: payload is {len(payload)} bytes, header implies {expected}")
    arr = np.frombuffer(payload, dtype=dt).reshape(dims)
    return arr, spacing, t[1]


def _expect_dtype(path, got: str, want: str) -> None:
    if got != want:
        raise VolumeFormatError(f"{path}: expected dtype {want}, file has {got}")


def read_volume(path) -> CtVolume:
    arr, spacing, dtype = _read_raw(path)
    _expect_dtype(path, dtype, "int16")
    return CtVolume(arr, spacing)


def write_volume(vol: CtVolume, path) -> None:
    _write_raw(path, vol.voxels, vol.spacing, "int16")


def read_mask(path, role: MaskRole = MaskRole.GROUND_TRUTH) -> MaskVolume:
    arr, spacing, dtype = _read_raw(path)
    _expect_dtype(path, dtype, "uint8")
    return MaskVolume(arr, role, spacing)


def write_mask(mask: MaskVolume, path) -> None:
    _write_raw(path, mask.labels, mask.spacing, "uint8")


def read_probs(path) -> ProbVolume:
    arr, spacing, dtype = _read_raw(path)
    if dtype == "uint8":
        # a binary mask is a valid probability map
        arr = arr.astype(np.float32)
    else:
        _expect_dtype(path, dtype, "float32")
    return ProbVolume(arr, spacing)


def write_probs(probs: ProbVolume, path) -> None:
    _write_raw(path, probs.probs, probs.spacing, "float32")
