"""Homography-compensated multi-object tracking for moving aerial cameras."""

from . import association, fhe, fileio, geometry, metrics, simulator, vcil
from .association import Detection, Track, TrackerConfig, run_sequence
from .geometry import BBox, CorrespondenceSet

__version__ = "0.1.0"

__all__ = [
    "association",
    "fhe",
    "fileio",
    "geometry",
    "metrics",
    "simulator",
    "vcil",
    "Detection",
    "Track",
    "TrackerConfig",
    "run_sequence",
    "BBox",
    "CorrespondenceSet",
    "__version__",
]
