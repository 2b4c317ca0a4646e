"""Generate the bundled image corpus.

Images are synthetic but follow natural-scene statistics (1/f spectra,
smooth illumination gradients, occluding shapes) so that IQA behavior on
them resembles behavior on photographs. Deterministic; the PNGs are
committed, this script documents how they were produced.
"""
from __future__ import annotations

import argparse
from pathlib import Path

import cv2
import numpy as np


def pink_noise(rng: np.random.Generator, size: int, exponent: float) -> np.ndarray:
    """2-D noise with a 1/f^exponent amplitude spectrum, values roughly N(0,1)."""
    white = rng.normal(size=(size, size))
    spec = np.fft.fft2(white)
    fy = np.fft.fftfreq(size)[:, None]
    fx = np.fft.fftfreq(size)[None, :]
    radius = np.hypot(fy, fx)
    radius[0, 0] = radius[0, 1]
    shaped = spec / radius ** exponent
    out = np.real(np.fft.ifft2(shaped))
    return (out - out.mean()) / (out.std() + 1e-12)


def make_image(seed: int, size: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    base = pink_noise(rng, size, exponent=rng.uniform(0.9, 1.3))
    # Smooth illumination gradient.
    yy, xx = np.mgrid[0:size, 0:size] / size
    angle = rng.uniform(0, 2 * np.pi)
    grad = np.cos(angle) * xx + np.sin(angle) * yy
    lum = 0.55 * base + 0.9 * (grad - 0.5)

    # A few occluding ellipses with their own texture.
    for _ in range(rng.integers(2, 5)):
        cy, cx = rng.uniform(0.2, 0.8, 2) * size
        ay, ax = rng.uniform(0.08, 0.3, 2) * size
        theta = rng.uniform(0, np.pi)
        mask = np.zeros((size, size), np.uint8)
        cv2.ellipse(mask, (int(cx), int(cy)), (int(ax), int(ay)),
                    np.degrees(theta), 0, 360, 1, -1)
        tex = pink_noise(rng, size, 1.1) * 0.3 + rng.uniform(-0.8, 0.8)
        lum = np.where(mask > 0, tex, lum)

    lum = cv2.GaussianBlur(lum, (0, 0), 0.6)
    lum = (lum - lum.min()) / (lum.max() - lum.min())
    # Keep midtones dominant so mild contrast boosts rarely clip.
    lum = 0.12 + 0.72 * lum

    # Color: low-frequency chroma modulation around the luminance.
    chroma_r = cv2.GaussianBlur(pink_noise(rng, size, 1.4), (0, 0), size / 16)
    chroma_b = cv2.GaussianBlur(pink_noise(rng, size, 1.4), (0, 0), size / 16)
    r = lum + 0.08 * chroma_r
    b = lum + 0.08 * chroma_b
    g = lum - 0.04 * (chroma_r + chroma_b)
    rgb = np.stack([r, g, b], axis=2)
    return np.clip(np.rint(rgb * 255), 0, 255).astype(np.uint8)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="src/visreq/data/corpus")
    ap.add_argument("--count", type=int, default=12)
    ap.add_argument("--size", type=int, default=96)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i in range(args.count):
        img = make_image(seed=1000 + i, size=args.size)
        cv2.imwrite(str(out / f"corpus_{i:02d}.png"), img[:, :, ::-1])
    print(f"wrote {args.count} images to {out}")


if __name__ == "__main__":
    main()
