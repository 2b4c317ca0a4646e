"""Raster image representation, PNG/JPEG codecs, and luminance conversion."""
from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import PIL
from PIL import Image as PILImage

MIN_SIZE = 32

#: Identity of the JPEG codec backing save_image / the jpeg_compression transform.
JPEG_ENCODER_ID = f"Pillow-{PIL.__version__}"

#: ITU-R BT.601 luma coefficients.
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


class ImageError(ValueError):
    """Invalid image data or unsupported file."""


@dataclass(frozen=True)
class Image:
    """8-bit RGB raster, row-major (height, width, 3) uint8 array."""

    pixels: np.ndarray

    def __post_init__(self):
        px = self.pixels
        if px.ndim != 3 or px.shape[2] != 3 or px.dtype != np.uint8:
            raise ImageError("expected (H, W, 3) uint8 pixel array")
        if px.shape[0] < MIN_SIZE or px.shape[1] < MIN_SIZE:
            raise ImageError(
                f"image too small: {px.shape[1]}x{px.shape[0]}, need at least "
                f"{MIN_SIZE}x{MIN_SIZE}"
            )
        px.setflags(write=False)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other) -> bool:
        return isinstance(other, Image) and np.array_equal(self.pixels, other.pixels)


@dataclass(frozen=True)
class GrayImage:
    """Luminance plane, float values in [0, 1], same grid as the source Image."""

    values: np.ndarray

    def __post_init__(self):
        v = self.values
        if v.ndim != 2 or not np.issubdtype(v.dtype, np.floating):
            raise ImageError("expected 2-D float luminance array")
        if v.min() < 0.0 or v.max() > 1.0:
            raise ImageError("luminance values outside [0, 1]")
        v.setflags(write=False)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


def load_image(path: str | Path) -> Image:
    """Decode a PNG or JPEG file. Grayscale sources expand to 3 equal channels."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    try:
        with PILImage.open(path) as img:
            img.load()
            rgb = img.convert("RGB")
    except FileNotFoundError:
        raise
    except Exception as exc:
        raise ImageError(f"cannot decode {path}: {exc}") from exc
    return Image(np.asarray(rgb, dtype=np.uint8))


def image_from_array(array: np.ndarray) -> Image:
    """Wrap an arbitrary numeric array as an Image, clipping into [0, 255]."""
    arr = np.asarray(array, dtype=np.float64)
    if arr.ndim == 2:
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    return Image(np.clip(np.rint(arr), 0, 255).astype(np.uint8))


def save_image(image: Image, path: str | Path, format: str = "png",
               quality: int = 100) -> None:
    """Write an Image as png (lossless) or jpeg at the given quality (1..100)."""
    path = Path(path)
    if not path.parent.is_dir():
        raise FileNotFoundError(f"parent directory does not exist: {path.parent}")
    fmt = format.lower()
    pil = PILImage.fromarray(np.asarray(image.pixels))
    if fmt == "png":
        pil.save(path, format="PNG")
    elif fmt in ("jpeg", "jpg"):
        if not 1 <= quality <= 100:
            raise ImageError(f"jpeg quality out of range: {quality}")
        pil.save(path, format="JPEG", quality=quality)
    else:
        raise ImageError(f"unsupported format: {format}")


def jpeg_roundtrip(image: Image, quality: int) -> Image:
    """Encode to baseline JPEG in memory at `quality` and decode back."""
    if not 1 <= quality <= 100:
        raise ImageError(f"jpeg quality out of range: {quality}")
    buf = io.BytesIO()
    PILImage.fromarray(np.asarray(image.pixels)).save(buf, format="JPEG",
                                                      quality=quality)
    buf.seek(0)
    with PILImage.open(buf) as img:
        return Image(np.asarray(img.convert("RGB"), dtype=np.uint8))


def to_luminance(image: Image) -> GrayImage:
    """BT.601 luminance in [0, 1]: (0.299 R + 0.587 G + 0.114 B) / 255."""
    r, g, b = LUMA_WEIGHTS
    px = image.pixels.astype(np.float64)
    lum = (r * px[:, :, 0] + g * px[:, :, 1] + b * px[:, :, 2]) / 255.0
    return GrayImage(np.clip(lum, 0.0, 1.0))
