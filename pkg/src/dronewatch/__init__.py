"""dronewatch: synthetic-data augmentation with automatic box labels,
residual-frame preprocessing, sigmoid-calibrated detection-tracking fusion,
adversarial-augmentation loss numerics, and evaluation metrics."""

__version__ = "0.1.0"

from .imaging import Annotation, BoundingBox, Channels, Image
from .metrics import auc, iou, pr_auc, precision_recall, success_curve

__all__ = [
    "Annotation", "BoundingBox", "Channels", "Image",
    "auc", "iou", "pr_auc", "precision_recall", "success_curve",
    "__version__",
]
