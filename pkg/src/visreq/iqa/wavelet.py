"""Separable CDF 9/7 discrete wavelet analysis with symmetric extension.

Only the analysis transform is needed; per-band synthesis L2 gains are derived
from the synthesis filter cascade so band energies can be mapped back to
pixel-domain RMS without reconstructing.
"""
from __future__ import annotations

from functools import lru_cache

import cv2
import numpy as np

# CDF 9/7 analysis filters (JPEG2000 normalization, DC gain 1).
DEC_LO = np.array([
    0.026748757410810, -0.016864118442875, -0.078223266528990,
    0.266864118442875, 0.602949018236360, 0.266864118442875,
    -0.078223266528990, -0.016864118442875, 0.026748757410810,
])
DEC_HI = np.array([
    0.091271763114250, -0.057543526228500, -0.591271763114250,
    1.115087052457000, -0.591271763114250, -0.057543526228500,
    0.091271763114250,
])
# Matching synthesis filters.
REC_LO = np.array([
    -0.091271763114250, -0.057543526228500, 0.591271763114250,
    1.115087052457000, 0.591271763114250, -0.057543526228500,
    -0.091271763114250,
])
REC_HI = np.array([
    0.026748757410810, 0.016864118442875, -0.078223266528990,
    -0.266864118442875, 0.602949018236360, -0.266864118442875,
    -0.078223266528990, 0.016864118442875, 0.026748757410810,
])

#: Subband orientation labels; "ll" appears only at the coarsest level.
ORIENTATIONS = ("lh", "hl", "hh")


def _filter_axis(img: np.ndarray, taps: np.ndarray, axis: int) -> np.ndarray:
    kernel = taps.reshape(1, -1) if axis == 1 else taps.reshape(-1, 1)
    return cv2.filter2D(img, cv2.CV_64F, kernel, borderType=cv2.BORDER_REFLECT)


def dwt_level(img: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """One analysis level: returns (ll, lh, hl, hh)."""
    lo_c = _filter_axis(img, DEC_LO, 1)[:, 0::2]
    hi_c = _filter_axis(img, DEC_HI, 1)[:, 1::2]
    ll = _filter_axis(lo_c, DEC_LO, 0)[0::2, :]
    lh = _filter_axis(lo_c, DEC_HI, 0)[1::2, :]
    hl = _filter_axis(hi_c, DEC_LO, 0)[0::2, :]
    hh = _filter_axis(hi_c, DEC_HI, 0)[1::2, :]
    return ll, lh, hl, hh


def dwt2(img: np.ndarray, levels: int = 5) -> list[dict[str, np.ndarray]]:
    """Multi-level analysis. Element i holds level i+1 subbands; the last
    element additionally carries the residual 'll' band."""
    out: list[dict[str, np.ndarray]] = []
    cur = np.asarray(img, dtype=np.float64)
    for lev in range(levels):
        ll, lh, hl, hh = dwt_level(cur)
        bands = {"lh": lh, "hl": hl, "hh": hh}
        if lev == levels - 1:
            bands["ll"] = ll
        out.append(bands)
        cur = ll
    return out


def _upsample(taps: np.ndarray) -> np.ndarray:
    up = np.zeros(len(taps) * 2 - 1)
    up[0::2] = taps
    return up


@lru_cache(maxsize=None)
def _cascade_norms(levels: int) -> dict[tuple[int, str], float]:
    """L2 norm of the 2-D synthesis basis for each (level, orientation)."""
    # 1-D equivalent synthesis filters per level.
    lo = {1: REC_LO}
    hi = {1: REC_HI}
    for m in range(2, levels + 1):
        lo[m] = np.convolve(lo[m - 1], _upsample_n(REC_LO, m - 1))
        hi[m] = np.convolve(lo[m - 1], _upsample_n(REC_HI, m - 1))
    norms: dict[tuple[int, str], float] = {}
    for m in range(1, levels + 1):
        nlo = float(np.linalg.norm(lo[m]))
        nhi = float(np.linalg.norm(hi[m]))
        norms[(m, "lh")] = nlo * nhi
        norms[(m, "hl")] = nhi * nlo
        norms[(m, "hh")] = nhi * nhi
        norms[(m, "ll")] = nlo * nlo
    return norms


def _upsample_n(taps: np.ndarray, times: int) -> np.ndarray:
    out = taps
    for _ in range(times):
        out = _upsample(out)
    return out


def band_rms_pixel(coefs: np.ndarray, level: int, orientation: str,
                   n_pixels: int, levels: int = 5) -> float:
    """Pixel-domain RMS of the signal a subband would synthesize to.

    Treats coefficients as independent, so the expected reconstruction energy
    is the coefficient energy scaled by the squared basis norm.
    """
    norm = _cascade_norms(levels)[(level, orientation)]
    energy = float(np.sum(coefs * coefs)) * norm * norm
    return float(np.sqrt(energy / n_pixels))
