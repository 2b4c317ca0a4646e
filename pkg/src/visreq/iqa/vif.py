"""Pixel-domain multi-scale Visual Information Fidelity."""
from __future__ import annotations

import cv2
import numpy as np

from ..images import GrayImage, MIN_SIZE

#: Variance of the HVS channel noise, in 0..255 luminance scale.
SIGMA_N_SQ = 2.0
STABILIZER = 1e-10


class IqaError(ValueError):
    """Inputs unusable for IQA computation."""


def _gauss_kernel(size: int) -> np.ndarray:
    return cv2.getGaussianKernel(size, size / 5.0)


def _local_mean(img: np.ndarray, k: np.ndarray) -> np.ndarray:
    return cv2.sepFilter2D(img, cv2.CV_64F, k, k, borderType=cv2.BORDER_REFLECT)


def vif(reference: GrayImage, distorted: GrayImage) -> float:
    """VIF of the distorted image w.r.t. the reference.

    1 means perfect fidelity, < 1 degradation, > 1 perceived enhancement.
    """
    if reference.values.shape != distorted.values.shape:
        raise IqaError("dimension mismatch")
    if reference.width < MIN_SIZE or reference.height < MIN_SIZE:
        raise IqaError(f"images must be at least {MIN_SIZE}x{MIN_SIZE}")

    x = reference.values * 255.0
    y = distorted.values * 255.0
    num = 0.0
    den = 0.0
    for scale in range(1, 5):
        size = 2 ** (5 - scale) + 1
        k = _gauss_kernel(size)
        if scale > 1:
            x = _local_mean(x, k)[0::2, 0::2]
            y = _local_mean(y, k)[0::2, 0::2]
        mu_x = _local_mean(x, k)
        mu_y = _local_mean(y, k)
        sigma_x2 = np.maximum(_local_mean(x * x, k) - mu_x * mu_x, 0.0)
        sigma_y2 = np.maximum(_local_mean(y * y, k) - mu_y * mu_y, 0.0)
        sigma_xy = _local_mean(x * y, k) - mu_x * mu_y
        g = np.maximum(sigma_xy / (sigma_x2 + STABILIZER), 0.0)
        sv2 = np.maximum(sigma_y2 - g * sigma_xy, 0.0)
        num += float(np.sum(np.log2(1.0 + g * g * sigma_x2 / (sv2 + SIGMA_N_SQ))))
        den += float(np.sum(np.log2(1.0 + sigma_x2 / SIGMA_N_SQ)))
    if den == 0.0:
        raise IqaError("constant reference image: VIF undefined")
    return num / den
