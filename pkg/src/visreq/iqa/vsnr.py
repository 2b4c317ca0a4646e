"""Visibility-detection stage of VSNR.

The distortion signal is converted to physical luminance through a display
model, decomposed with a 5-level CDF 9/7 wavelet, and each subband's RMS
contrast is compared against a contrast detection threshold parameterized as
a log-parabola over spatial frequency (Watson-style DWT noise thresholds).
The distortion is imperceptible iff every subband sits below threshold.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..images import GrayImage
from .vif import IqaError
from .wavelet import band_rms_pixel, dwt2

WAVELET_LEVELS = 5

# Log-parabola threshold parameters: minimum contrast C0 at frequency
# G_ORIENT * F0 cycles/degree, rising with curvature K on log-log axes.
THRESHOLD_MIN_CONTRAST = 0.008
K_CURVATURE = 0.466
F0_CPD = 0.401
G_ORIENT = {"ll": 1.501, "lh": 1.0, "hl": 1.0, "hh": 0.534}


@dataclass(frozen=True)
class ViewingConditions:
    viewing_distance: float = 19.1      # inches
    display_resolution: float = 96.0    # pixels per inch
    display_peak_luminance: float = 100.0  # cd/m^2
    black_level_offset: float = 0.03    # cd/m^2
    gamma: float = 2.2

    def __post_init__(self):
        for name in ("viewing_distance", "display_resolution",
                     "display_peak_luminance", "black_level_offset", "gamma"):
            if getattr(self, name) <= 0:
                raise ValueError(f"viewing condition {name} must be positive")

    @property
    def pixels_per_degree(self) -> float:
        return (self.viewing_distance * self.display_resolution
                * math.tan(math.pi / 180.0))


def display_luminance(gray: GrayImage, vc: ViewingConditions) -> np.ndarray:
    """Physical luminance of displayed pixels, cd/m^2."""
    return (vc.black_level_offset
            + vc.display_peak_luminance * np.power(gray.values, vc.gamma))


def contrast_threshold(freq_cpd: float, orientation: str) -> float:
    """Detection threshold (RMS contrast) for a subband at the given frequency."""
    g = G_ORIENT[orientation]
    loggap = math.log10(freq_cpd / (g * F0_CPD))
    return THRESHOLD_MIN_CONTRAST * 10.0 ** (K_CURVATURE * loggap * loggap)


def vsnr_visible(reference: GrayImage, distorted: GrayImage,
                 vc: ViewingConditions | None = None) -> bool:
    """True iff the difference between the images is visible to a human."""
    if reference.values.shape != distorted.values.shape:
        raise IqaError("dimension mismatch")
    vc = vc or ViewingConditions()
    lum_ref = display_luminance(reference, vc)
    err = display_luminance(distorted, vc) - lum_ref
    if not err.any():
        return False
    mean_lum = float(lum_ref.mean())
    n_pixels = err.size
    ppd = vc.pixels_per_degree
    pyramid = dwt2(err, WAVELET_LEVELS)
    for lev_index, bands in enumerate(pyramid):
        level = lev_index + 1
        freq = ppd / 2.0 ** level
        for orientation, coefs in bands.items():
            contrast = band_rms_pixel(coefs, level, orientation, n_pixels,
                                      WAVELET_LEVELS) / mean_lum
            if contrast > contrast_threshold(freq, orientation):
                return True
    return False
