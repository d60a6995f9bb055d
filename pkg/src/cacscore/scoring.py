"""Post-processing: threshold, HU gate, connected components, Agatston score.

The score for a volume is the sum over slices i and lesions n of
``weight(peak HU of n on i) * area of n on i * slice_spacing / 3``, so
scans thinner than the nominal 3 mm are not over-counted.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import ndimage

from .volume import CtVolume, MaskRole, MaskVolume, ProbVolume, check_same_shape

PROB_THRESHOLD = 0.5
HU_THRESHOLD = 130
MIN_LESION_MM2 = 1.0
NOMINAL_SLICE_MM = 3.0


class RiskCategory(enum.Enum):
    ZERO = "zero"
    MINIMAL = "minimal"
    MILD = "mild"
    MODERATE = "moderate"
    SEVERE = "severe"

    def __str__(self):
        return self.value


def risk_category(score: float) -> RiskCategory:
    """Bands: 0, (0,10], (10,100], (100,400], above 400."""
    if score < 0:
        raise ValueError("score must be non-negative")
    if score == 0:
        return RiskCategory.ZERO
    if score <= 10:
        return RiskCategory.MINIMAL
    if score <= 100:
        return RiskCategory.MILD
    if score <= 400:
        return RiskCategory.MODERATE
    return RiskCategory.SEVERE


@dataclass(frozen=True)
class SliceStat:
    slice_index: int
    n_pixels: int
    area_mm2: float
    peak_hu: int


@dataclass
class Lesion:
    id: int
    voxels: np.ndarray               # [k, 3] (slice, row, col)
    per_slice: list[SliceStat]
    total_volume_mm3: float


@dataclass(frozen=True)
class LesionScore:
    lesion_id: int
    n_voxels: int
    volume_mm3: float
    score: float
    slice_scores: tuple[float, ...] = ()


@dataclass
class AgatstonResult:
    lesions: list[LesionScore] = field(default_factory=list)
    total: float = 0.0
    risk: RiskCategory = RiskCategory.ZERO


def binarize(probs: ProbVolume, thresh: float = PROB_THRESHOLD) -> MaskVolume:
    """Foreground where probability >= ``thresh``."""
    return MaskVolume(probs.probs >= thresh, MaskRole.PREDICTION, probs.spacing)


def hu_gate(mask: MaskVolume, vol: CtVolume, hu_threshold: float = HU_THRESHOLD) -> MaskVolume:
    check_same_shape(mask, vol)
    kept = mask.labels.astype(bool) & (vol.voxels >= hu_threshold)
    return MaskVolume(kept, mask.role, mask.spacing)


def _structure(connectivity: int | str) -> np.ndarray:
    if connectivity in (26, "26"):
        return np.ones((3, 3, 3), dtype=bool)
    if connectivity in (8, "8", "8-2d", "2d"):
        s = np.zeros((3, 3, 3), dtype=bool)
        s[1] = True
        return s
    raise ValueError(f"connectivity must be 26 (3D) or 8 (per-slice 2D), got {connectivity!r}")


def connected_components(mask: MaskVolume, vol: CtVolume, min_area_mm2: float | None = MIN_LESION_MM2,
                         connectivity: int | str = 26) -> list[Lesion]:
    """Label foreground components and collect per-slice area and peak HU.

    Components are numbered by their first voxel in scan order. A component
    whose area is below ``min_area_mm2`` on every slice is discarded; pass
    ``None`` or 0 to keep everything.
    """
    check_same_shape(mask, vol)
    labels, n = ndimage.label(mask.labels, structure=_structure(connectivity))
    if n == 0:
        return []
    ds, dr, dc = vol.spacing
    pixel_mm2 = dr * dc
    flat = labels.ravel()
    fg = np.flatnonzero(flat)
    lab_of = flat[fg]
    # first occurrence in scan order per label
    firsts = np.full(n + 1, -1, dtype=np.int64)
    order = np.argsort(lab_of, kind="stable")
    uniq, start = np.unique(lab_of[order], return_index=True)
    firsts[uniq] = fg[order][start]
    coords = np.column_stack(np.unravel_index(fg, labels.shape))
    lesions = []
    for lab in sorted(range(1, n + 1), key=lambda k: firsts[k]):
        vox = coords[lab_of == lab]
        per_slice = []
        for s in np.unique(vox[:, 0]):
            pts = vox[vox[:, 0] == s]
            peak = int(vol.voxels[s, pts[:, 1], pts[:, 2]].max())
            per_slice.append(SliceStat(int(s), len(pts), len(pts) * pixel_mm2, peak))
        if min_area_mm2 and all(st.area_mm2 < min_area_mm2 for st in per_slice):
            continue
        lesions.append(Lesion(len(lesions) + 1, vox, per_slice, len(vox) * pixel_mm2 * ds))
    return lesions


def agatston_weight(peak_hu: float) -> int:
    """Density factor: 1 for [130,200), 2 for [200,300), 3 for [300,400), 4 from 400."""
    if peak_hu < HU_THRESHOLD:
        raise ValueError(f"peak HU {peak_hu} is below the {HU_THRESHOLD} HU calcium threshold")
    if peak_hu < 200:
        return 1
    if peak_hu < 300:
        return 2
    if peak_hu < 400:
        return 3
    return 4


def agatston_score(lesions: Sequence[Lesion], vol: CtVolume) -> AgatstonResult:
    spacing = vol.slice_spacing
    if not spacing or spacing <= 0:
        raise ValueError("volume has no usable slice spacing")
    correction = spacing / NOMINAL_SLICE_MM
    scores = []
    for lesion in lesions:
        per = tuple(agatston_weight(st.peak_hu) * st.area_mm2 * correction for st in lesion.per_slice)
        scores.append(LesionScore(lesion.id, len(lesion.voxels), lesion.total_volume_mm3,
                                  math.fsum(per), per))
    total = math.fsum(s.score for s in scores)
    return AgatstonResult(scores, total, risk_category(total))


def score_pipeline(probs: ProbVolume, vol: CtVolume, thresh: float = PROB_THRESHOLD,
                   hu_threshold: float = HU_THRESHOLD,
                   min_area_mm2: float | None = MIN_LESION_MM2,
                   connectivity: int | str = 26) -> AgatstonResult:
    check_same_shape(probs, vol)
    mask = hu_gate(binarize(probs, thresh), vol, hu_threshold)
    lesions = connected_components(mask, vol, min_area_mm2, connectivity)
    return agatston_score(lesions, vol)


# reports

def format_report(result: AgatstonResult) -> str:
    lines = ["lesion_id, n_voxels, volume_mm3, score"]
    for s in result.lesions:
        lines.append(f"{s.lesion_id}, {s.n_voxels}, {s.volume_mm3:.4f}, {s.score:.4f}")
    lines.append(f"total_score {result.total!r}, risk {result.risk}")
    return "\n".join(lines) + "\n"


def format_kv(result: AgatstonResult) -> str:
    """Machine-readable ``key=value`` report.

    Keys: ``n_lesions``, ``lesion.<id>.n_voxels``, ``lesion.<id>.volume_mm3``,
    ``lesion.<id>.score``, ``total_score``, ``risk_category``. Floats use repr
    so they parse back exactly.
    """
    lines = [f"n_lesions={len(result.lesions)}"]
    for s in result.lesions:
        lines += [f"lesion.{s.lesion_id}.n_voxels={s.n_voxels}",
                  f"lesion.{s.lesion_id}.volume_mm3={s.volume_mm3!r}",
                  f"lesion.{s.lesion_id}.score={s.score!r}"]
    lines += [f"total_score={result.total!r}", f"risk_category={result.risk}"]
    return "\n".join(lines) + "\n"


def parse_kv(text: str) -> AgatstonResult:
    kv = dict(line.split("=", 1) for line in text.splitlines() if line.strip())
    lesions = []
    for i in range(1, int(kv["n_lesions"]) + 1):
        lesions.append(LesionScore(i, int(kv[f"lesion.{i}.n_voxels"]),
                                   float(kv[f"lesion.{i}.volume_mm3"]),
                                   float(kv[f"lesion.{i}.score"])))
    return AgatstonResult(lesions, float(kv["total_score"]), RiskCategory(kv["risk_category"]))
