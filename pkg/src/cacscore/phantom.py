"""Synthetic CT phantoms with known calcified lesions and known scores.

The expected score is summed pixel by pixel here, with its own density
table, so it can be used to check :mod:`cacscore.scoring` rather than
echo it.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .scoring import AgatstonResult, LesionScore, risk_category
from .volume import CtVolume, MaskRole, MaskVolume

CALCIUM_HU = 130


@dataclass(frozen=True)
class LesionSpec:
    """A stack of identical discs: radius ``radius_px`` in-plane, on slices
    ``center[0] - half_depth`` .. ``center[0] + half_depth``."""

    center: tuple[int, int, int]
    radius_px: float
    hu_value: float
    half_depth: int = 0


@dataclass(frozen=True)
class PhantomSpec:
    dims: tuple[int, int, int]
    spacing: tuple[float, float, float] = (3.0, 0.7, 0.7)
    background_hu: float = -50.0
    lesions: tuple[LesionSpec, ...] = ()
    noise_sigma: float = 0.0
    seed: int = 0


def _disc_mask(spec: LesionSpec, dims) -> np.ndarray:
    n_s, n_r, n_c = dims
    cs, cr, cc = spec.center
    rr, cc_ = np.ogrid[:n_r, :n_c]
    disc = (rr - cr) ** 2 + (cc_ - cc) ** 2 <= spec.radius_px ** 2
    out = np.zeros(dims, dtype=bool)
    lo, hi = max(cs - spec.half_depth, 0), min(cs + spec.half_depth, n_s - 1)
    out[lo:hi + 1] = disc
    return out


def _touches(a: np.ndarray, b: np.ndarray) -> bool:
    """True if any voxel of ``a`` lies within the 3x3x3 neighbourhood of ``b``."""
    pa = np.pad(a, 1)
    pb = np.pad(b, 1)
    for ds, dr, dc in product((-1, 0, 1), repeat=3):
        shifted = np.roll(pb, (ds, dr, dc), axis=(0, 1, 2))
        if np.any(pa & shifted):
            return True
    return False


def validate(spec: PhantomSpec) -> list[np.ndarray]:
    if len(spec.dims) != 3 or min(spec.dims) < 1:
        raise ValueError(f"bad dims {spec.dims}")
    if spec.background_hu + 3 * spec.noise_sigma >= CALCIUM_HU:
        raise ValueError("background + 3 sigma must stay below 130 HU")
    masks = []
    for les in spec.lesions:
        if les.hu_value < CALCIUM_HU:
            raise ValueError(f"lesion HU {les.hu_value} below {CALCIUM_HU}")
        m = _disc_mask(les, spec.dims)
        if not m.any():
            raise ValueError(f"lesion at {les.center} lies outside the volume")
        for other in masks:
            if _touches(m, other):
                raise ValueError("lesions overlap or touch under 26-connectivity")
        masks.append(m)
    return masks


def _density_factor(hu: int) -> int:
    for bound, factor in ((400, 4), (300, 3), (200, 2), (130, 1)):
        if hu >= bound:
            return factor
    raise ValueError(f"{hu} HU is not calcium")


def expected_score(voxels: np.ndarray, lesion_masks, spacing, min_area_mm2: float | None = 1.0) -> AgatstonResult:
    """Per-pixel score sum over each lesion, slice by slice."""
    ds, dr, dc = spacing
    pixel_area = dr * dc
    scores = []
    for les in lesion_masks:
        slices = sorted({int(s) for s in np.nonzero(les)[0]})
        areas = {s: int(les[s].sum()) * pixel_area for s in slices}
        if min_area_mm2 and all(a < min_area_mm2 for a in areas.values()):
            continue
        per_slice = []
        n_vox = 0
        for s in slices:
            rows, cols = np.nonzero(les[s])
            peak = max(int(voxels[s, r, c]) for r, c in zip(rows, cols))
            factor = _density_factor(peak)
            acc = 0.0
            for _ in range(len(rows)):
                acc += factor * pixel_area * ds / 3.0
            per_slice.append(acc)
            n_vox += len(rows)
        scores.append(LesionScore(len(scores) + 1, n_vox, n_vox * pixel_area * ds,
                                  sum(per_slice), tuple(per_slice)))
    total = sum(s.score for s in scores)
    return AgatstonResult(scores, total, risk_category(total))


def generate(spec: PhantomSpec, min_area_mm2: float | None = 1.0) -> tuple[CtVolume, MaskVolume, AgatstonResult]:
    """Rasterise ``spec`` into (volume, exact mask, expected score)."""
    masks = validate(spec)
    rng = np.random.default_rng(spec.seed)
    noise = np.zeros(spec.dims)
    if spec.noise_sigma > 0:
        s = spec.noise_sigma
        noise = np.clip(rng.normal(0.0, s, size=spec.dims), -3 * s, 3 * s)
    vox = spec.background_hu + noise
    labels = np.zeros(spec.dims, dtype=np.uint8)
    for les, m in zip(spec.lesions, masks):
        vox[m] = np.maximum(les.hu_value + noise[m], CALCIUM_HU)
        labels[m] = 1
    vox = np.clip(np.rint(vox), -1024, 4095).astype(np.int16)
    vol = CtVolume(vox, spec.spacing)
    mask = MaskVolume(labels, MaskRole.GROUND_TRUTH, spec.spacing)
    return vol, mask, expected_score(vol.voxels, masks, spec.spacing, min_area_mm2)


@dataclass(frozen=True)
class PhantomRanges:
    dims: tuple[int, int, int] = (12, 32, 32)
    spacing_choices: tuple[float, ...] = (1.0, 1.5, 2.0, 3.0)
    pixel_mm: tuple[float, float] = (0.5, 0.9)
    n_lesions: tuple[int, int] = (1, 4)
    radius_px: tuple[float, float] = (0.0, 4.0)
    half_depth: tuple[int, int] = (0, 2)
    hu: tuple[float, float] = (150.0, 800.0)
    noise_sigma: float = 10.0
    background_hu: float = -50.0


def random_spec(rng: np.random.Generator, ranges: PhantomRanges = PhantomRanges(),
                max_tries: int = 200) -> PhantomSpec:
    """Draw a phantom spec; lesions that would touch earlier ones are redrawn."""
    n_s, n_r, n_c = ranges.dims
    pix = float(rng.uniform(*ranges.pixel_mm))
    spacing = (float(rng.choice(ranges.spacing_choices)), pix, pix)
    want = int(rng.integers(ranges.n_lesions[0], ranges.n_lesions[1] + 1))
    lesions: list[LesionSpec] = []
    masks: list[np.ndarray] = []
    tries = 0
    while len(lesions) < want and tries < max_tries:
        tries += 1
        les = LesionSpec(
            (int(rng.integers(0, n_s)), int(rng.integers(0, n_r)), int(rng.integers(0, n_c))),
            float(rng.uniform(*ranges.radius_px)),
            float(rng.uniform(*ranges.hu)),
            int(rng.integers(ranges.half_depth[0], ranges.half_depth[1] + 1)),
        )
        m = _disc_mask(les, ranges.dims)
        if any(_touches(m, o) for o in masks):
            continue
        lesions.append(les)
        masks.append(m)
    return PhantomSpec(ranges.dims, spacing, ranges.background_hu, tuple(lesions),
                       ranges.noise_sigma, int(rng.integers(2**31)))


def make_training_set(n: int, ranges: PhantomRanges = PhantomRanges(), seed: int = 0,
                      ) -> list[tuple[CtVolume, MaskVolume]]:
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        vol, mask, _ = generate(random_spec(rng, ranges))
        out.append((vol, mask))
    return out


__all__ = ["LesionSpec", "PhantomSpec", "PhantomRanges", "generate", "expected_score",
           "random_spec", "make_training_set", "validate"]
