"""Shared domain types: boxes, detections, seed derivation, raster I/O.

Images are numpy arrays: uint8 RGB with shape (height, width, 3).
Single-channel float fields are float64 arrays with shape (height, width).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np
from PIL import Image

from .errors import DegenerateBoxError

# SplitMix64 finalizer constants (Steele et al. mixing function).
_GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MIX_1 = 0xBF58476D1CE4E5B9
_MIX_2 = 0x94D049BB133111EB
_U64 = (1 << 64) - 1


def splitmix64(z: int) -> int:
    """Finalizing mix of SplitMix64; bijective on 64-bit integers."""
    z &= _U64
    z = ((z ^ (z >> 30)) * _MIX_1) & _U64
    z = ((z ^ (z >> 27)) * _MIX_2) & _U64
    return z ^ (z >> 31)


def derive_item_seed(master: int, index: int) -> int:
    """Derive a per-item 64-bit seed from a master seed and item ordinal.

    Pure integer mixing (SplitMix64 stream seeded at ``master``, advanced
    ``index + 1`` steps), so the result is identical across platforms and
    independent of processing order.
    """
    if index < 0:
        raise ValueError(f"item index must be >= 0, got {index}")
    state = (master + (index + 1) * _GOLDEN_GAMMA) & _U64
    return splitmix64(state)


def item_rng(master: int, index: int) -> np.random.Generator:
    """Deterministic per-item random stream."""
    return np.random.Generator(np.random.PCG64(derive_item_seed(master, index)))


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in absolute pixel corner coordinates."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float
    class_id: int = 0

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise DegenerateBoxError(
                f"box has non-positive extent: ({self.x_min}, {self.y_min}, "
                f"{self.x_max}, {self.y_max})"
            )

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)

    def scaled(self, sx: float, sy: float) -> "BoundingBox":
        return BoundingBox(
            self.x_min * sx, self.y_min * sy, self.x_max * sx, self.y_max * sy,
            self.class_id,
        )


@dataclass(frozen=True)
class Detection:
    """A predicted box with a confidence score in [0, 1]."""

    box: BoundingBox
    confidence: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")


def clamp_box(box: BoundingBox, width: float, height: float) -> BoundingBox:
    """Clamp a box to the image extent [0, width] x [0, height].

    Raises DegenerateBoxError when clamping collapses the box to zero area.
    """
    if width <= 0 or height <= 0:
        raise ValueError("image extent must be positive")
    x_min = min(max(box.x_min, 0.0), width)
    x_max = min(max(box.x_max, 0.0), width)
    y_min = min(max(box.y_min, 0.0), height)
    y_max = min(max(box.y_max, 0.0), height)
    if x_min >= x_max or y_min >= y_max:
        raise DegenerateBoxError(
            f"box ({box.x_min}, {box.y_min}, {box.x_max}, {box.y_max}) "
            f"has zero area after clamping to {width}x{height}"
        )
    return BoundingBox(x_min, y_min, x_max, y_max, box.class_id)


def load_image(path) -> np.ndarray:
    """Load an image file as uint8 RGB (grayscale expanded, alpha dropped)."""
    with Image.open(path) as im:
        rgb = im.convert("RGB")
        return np.asarray(rgb, dtype=np.uint8)


def save_png(path, image: np.ndarray) -> None:
    """Write a uint8 RGB array as PNG (lossless, deterministic bytes)."""
    if image.dtype != np.uint8 or image.ndim != 3 or image.shape[2] != 3:
        raise ValueError("expected uint8 RGB array of shape (h, w, 3)")
    Image.fromarray(image, mode="RGB").save(path, format="PNG")


def image_size(path) -> tuple[int, int]:
    """(width, height) of an image file without decoding pixel data."""
    with Image.open(path) as im:
        return im.size


def resize_bilinear(image: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    """Bilinear resize to (width, height); dtype is preserved."""
    width, height = size
    if width <= 0 or height <= 0:
        raise ValueError(f"target size must be positive, got {size}")
    if (image.shape[1], image.shape[0]) == (width, height):
        return image.copy()
    return cv2.resize(image, (width, height), interpolation=cv2.INTER_LINEAR)


def quantize_u8(image: np.ndarray) -> np.ndarray:
    """Float samples -> uint8 with round-half-up, clipped to [0, 255]."""
    return np.clip(np.floor(image + 0.5), 0, 255).astype(np.uint8)


def ensure_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p
