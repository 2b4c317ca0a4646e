"""Safety-related image transformations with uniform parameter sampling.

Each transformation has a declared closed parameter domain and a deterministic
seeded application. Identity parameters reproduce the input bit-for-bit.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np

from .images import Image, LUMA_WEIGHTS, image_from_array, jpeg_roundtrip

TRANSFORMATION_NAMES = (
    "rgb_shift", "contrast", "defocus_blur", "brightness",
    "frost", "color_jitter", "jpeg_compression", "gaussian_noise",
)


class TransformError(ValueError):
    """Invalid parameters or transformation configuration."""


@dataclass(frozen=True)
class TransformationSpec:
    name: str
    param_domains: dict[str, tuple[float, float]]
    cv_hazop_entries: tuple[str, ...] = ()
    stochastic: bool = False

    def __post_init__(self):
        if not self.param_domains:
            raise TransformError(f"{self.name}: no parameter domains")
        for pname, (lo, hi) in self.param_domains.items():
            if not lo <= hi:
                raise TransformError(f"{self.name}.{pname}: empty domain")


@dataclass(frozen=True)
class ParamAssignment:
    values: dict[str, float]
    seed: int = 0

    def validate(self, spec: TransformationSpec) -> None:
        for pname, (lo, hi) in spec.param_domains.items():
            if pname not in self.values:
                raise TransformError(f"missing parameter {pname!r} for {spec.name}")
            v = self.values[pname]
            if not lo <= v <= hi:
                raise TransformError(
                    f"{spec.name}.{pname}={v} outside [{lo}, {hi}]")
        extra = set(self.values) - set(spec.param_domains)
        if extra:
            raise TransformError(f"unknown parameters for {spec.name}: {extra}")


# Only the defocus-blur checklist entry id is published; the remaining entry
# ids live in third-party supplementary material and are left empty.
_REGISTRY = (
    TransformationSpec("rgb_shift", {"dr": (-100.0, 100.0), "dg": (-100.0, 100.0),
                                     "db": (-100.0, 100.0)}),
    TransformationSpec("contrast", {"alpha": (0.1, 3.0)}),
    TransformationSpec("defocus_blur", {"radius": (0.5, 12.0)},
                       cv_hazop_entries=("1018",)),
    TransformationSpec("brightness", {"factor": (0.2, 3.0)}),
    TransformationSpec("frost", {"a": (0.5, 1.0), "b": (0.1, 0.9)},
                       stochastic=True),
    TransformationSpec("color_jitter", {"brightness": (0.5, 1.5),
                                        "contrast": (0.5, 1.5),
                                        "saturation": (0.5, 1.5),
                                        "hue": (-0.1, 0.1)}),
    TransformationSpec("jpeg_compression", {"quality": (1.0, 100.0)}),
    TransformationSpec("gaussian_noise", {"sigma": (0.01, 0.38)}, stochastic=True),
)


def registry() -> list[TransformationSpec]:
    """The eight safety-related transformations."""
    return list(_REGISTRY)


def get_spec(name: str) -> TransformationSpec:
    for spec in _REGISTRY:
        if spec.name == name:
            return spec
    raise TransformError(f"unknown transformation: {name!r}")


def sample_params(spec: TransformationSpec, rng: np.random.Generator) -> ParamAssignment:
    """Draw each parameter independently and uniformly from its domain."""
    values = {p: float(rng.uniform(lo, hi))
              for p, (lo, hi) in spec.param_domains.items()}
    seed = int(rng.integers(0, 2 ** 63)) if spec.stochastic else 0
    return ParamAssignment(values, seed)


def _mean_luminance_255(px: np.ndarray) -> float:
    r, g, b = LUMA_WEIGHTS
    return float(r * px[:, :, 0].mean() + g * px[:, :, 1].mean()
                 + b * px[:, :, 2].mean())


def _gray_plane(px: np.ndarray) -> np.ndarray:
    r, g, b = LUMA_WEIGHTS
    return r * px[:, :, 0] + g * px[:, :, 1] + b * px[:, :, 2]


def disk_kernel(radius: float) -> np.ndarray:
    """Normalized antialiased disk of the given pixel radius."""
    half = int(np.ceil(radius))
    yy, xx = np.mgrid[-half:half + 1, -half:half + 1]
    dist = np.hypot(xx, yy)
    k = np.clip(radius + 0.5 - dist, 0.0, 1.0)
    return k / k.sum()


def _apply_brightness(px: np.ndarray, factor: float) -> np.ndarray:
    return px * factor


def _apply_contrast(px: np.ndarray, alpha: float) -> np.ndarray:
    mu = _mean_luminance_255(px)
    return mu + alpha * (px - mu)


def _apply_rgb_shift(px: np.ndarray, dr: float, dg: float, db: float) -> np.ndarray:
    return px + np.array([dr, dg, db])


def _apply_gaussian_noise(px: np.ndarray, sigma: float, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return px + rng.normal(0.0, sigma * 255.0, size=px.shape)


def _apply_defocus_blur(px: np.ndarray, radius: float) -> np.ndarray:
    kernel = disk_kernel(radius)
    out = np.empty_like(px)
    for c in range(3):
        out[:, :, c] = cv2.filter2D(px[:, :, c], -1, kernel,
                                    borderType=cv2.BORDER_REFLECT)
    return out


def _apply_color_jitter(px: np.ndarray, brightness: float, contrast: float,
                        saturation: float, hue: float) -> np.ndarray:
    out = px * brightness
    if contrast != 1.0:
        mu = _gray_plane(out).mean()
        out = mu + contrast * (out - mu)
    if saturation != 1.0:
        gray = _gray_plane(out)[:, :, None]
        out = gray + saturation * (out - gray)
    if hue != 0.0:
        rgb = np.clip(out, 0, 255).astype(np.float32) / 255.0
        hsv = cv2.cvtColor(rgb, cv2.COLOR_RGB2HSV)
        hsv[:, :, 0] = np.mod(hsv[:, :, 0] + hue * 360.0, 360.0)
        out = cv2.cvtColor(hsv, cv2.COLOR_HSV2RGB).astype(np.float64) * 255.0
    return out


def procedural_frost_texture(seed: int, size: int = 512) -> np.ndarray:
    """Seeded value-noise texture thresholded into crystalline streaks."""
    rng = np.random.default_rng(seed)
    noise = np.zeros((size, size), dtype=np.float64)
    for octave, weight in ((8, 1.0), (16, 0.6), (32, 0.35), (64, 0.2)):
        grid = rng.normal(size=(octave, octave))
        up = cv2.resize(grid, (size, size), interpolation=cv2.INTER_CUBIC)
        noise += weight * up
    noise = (noise - noise.mean()) / (noise.std() + 1e-12)
    streaks = np.clip((noise - 0.6) * 2.2, 0.0, 1.0)
    # Directional smear gives the streaks a crystalline look.
    kernel = np.zeros((9, 9))
    np.fill_diagonal(kernel, 1.0)
    kernel /= kernel.sum()
    streaks = cv2.filter2D(streaks, -1, kernel, borderType=cv2.BORDER_REFLECT)
    tex = np.clip(streaks * 255.0, 0, 255)
    return np.repeat(tex[:, :, None], 3, axis=2)


def _load_frost_texture(texture_dir: str | Path | None, seed: int) -> np.ndarray:
    if texture_dir is None:
        return procedural_frost_texture(seed)
    paths = sorted(Path(texture_dir).glob("*.png"))
    if not paths:
        raise TransformError(f"frost texture directory is empty: {texture_dir}")
    rng = np.random.default_rng(seed)
    from .images import load_image
    pick = paths[int(rng.integers(0, len(paths)))]
    return load_image(pick).pixels.astype(np.float64)


def _apply_frost(px: np.ndarray, a: float, b: float, seed: int,
                 texture_dir: str | Path | None) -> np.ndarray:
    tex = _load_frost_texture(texture_dir, seed)
    h, w = px.shape[:2]
    th, tw = tex.shape[:2]
    if th < h or tw < w:
        reps = (int(np.ceil(h / th)), int(np.ceil(w / tw)), 1)
        tex = np.tile(tex, reps)
        th, tw = tex.shape[:2]
    rng = np.random.default_rng(np.random.SeedSequence((seed, 1)))
    oy = int(rng.integers(0, th - h + 1))
    ox = int(rng.integers(0, tw - w + 1))
    crop = tex[oy:oy + h, ox:ox + w]
    return a * px + b * crop


def apply(spec: TransformationSpec, image: Image, params: ParamAssignment,
          frost_texture_dir: str | Path | None = None) -> Image:
    """Apply the transformation; output keeps the input dimensions."""
    params.validate(spec)
    v = params.values
    px = image.pixels.astype(np.float64)
    if spec.name == "brightness":
        out = _apply_brightness(px, v["factor"])
    elif spec.name == "contrast":
        out = _apply_contrast(px, v["alpha"])
    elif spec.name == "rgb_shift":
        out = _apply_rgb_shift(px, v["dr"], v["dg"], v["db"])
    elif spec.name == "gaussian_noise":
        out = _apply_gaussian_noise(px, v["sigma"], params.seed)
    elif spec.name == "defocus_blur":
        out = _apply_defocus_blur(px, v["radius"])
    elif spec.name == "jpeg_compression":
        return jpeg_roundtrip(image, int(round(v["quality"])))
    elif spec.name == "frost":
        out = _apply_frost(px, v["a"], v["b"], params.seed, frost_texture_dir)
    elif spec.name == "color_jitter":
        out = _apply_color_jitter(px, v["brightness"], v["contrast"],
                                  v["saturation"], v["hue"])
    else:
        raise TransformError(f"unknown transformation: {spec.name!r}")
    return image_from_array(out)
