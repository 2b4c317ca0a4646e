"""Perceptual visual-change measurement: VIF, VSNR visibility, and their
composition into the visual-change score."""
from __future__ import annotations

from dataclasses import dataclass

from ..images import Image, to_luminance
from .vif import IqaError, vif
from .vsnr import ViewingConditions, vsnr_visible

__all__ = ["DeltaVScore", "IqaError", "ViewingConditions", "delta_v", "vif",
           "vsnr_visible"]


@dataclass(frozen=True)
class DeltaVScore:
    """Visual change in [0, 1]; 0 when imperceptible or quality-enhancing."""

    value: float
    vif_raw: float
    below_visibility_threshold: bool


def delta_v(original: Image, transformed: Image,
            vc: ViewingConditions | None = None) -> DeltaVScore:
    """Visual change between an original and its transformed version."""
    if (original.width, original.height) != (transformed.width, transformed.height):
        raise IqaError("dimension mismatch")
    ref = to_luminance(original)
    dist = to_luminance(transformed)
    visible = vsnr_visible(ref, dist, vc)
    vif_raw = vif(ref, dist)
    if not visible or vif_raw > 1.0:
        value = 0.0
    else:
        value = min(max(1.0 - vif_raw, 0.0), 1.0)
    return DeltaVScore(value=value, vif_raw=vif_raw,
                       below_visibility_threshold=not visible)
