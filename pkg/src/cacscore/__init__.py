"""Coronary artery calcium scoring from CT with a small numpy segmentation network."""

from .loss import BootstrapParams, bootstrap_loss, combined_loss, iou_loss
from .scoring import AgatstonResult, RiskCategory, agatston_score, score_pipeline
from .volume import CtVolume, MaskVolume, ProbVolume

__version__ = "0.1.0"

__all__ = [
    "BootstrapParams", "bootstrap_loss", "combined_loss", "iou_loss", "AgatstonResult",
    "RiskCategory", "agatston_score", "score_pipeline", "CtVolume", "MaskVolume", "ProbVolume",
]
