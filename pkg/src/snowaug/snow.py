"""Multi-scale synthetic snow: noise field -> Gaussian smoothing -> quantile
threshold -> directional motion blur -> brightening blend, once per scale.

All stages run in float64; quantization back to uint8 happens exactly once,
after the last scale and the resize back to source dimensions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import cv2
import numpy as np

from . import kernels
from .core import quantize_u8, resize_bilinear
from .errors import ConfigError, DimensionMismatchError, InvalidSigmaError

DEFAULT_SCALES = (0.5, 1.0, 2.0, 3.0, 4.0)


def default_blur_length(scale: float) -> int:
    """Streak length grows with particle scale."""
    return int(round(3.0 + 2.0 * scale))


@dataclass(frozen=True)
class SnowConfig:
    """All synthesis knobs.

    scale_array entries are particle-size factors, strictly increasing; each
    drives one noise -> filter -> threshold -> blur -> blend iteration.
    """

    working_size: tuple[int, int] = (640, 360)
    scale_array: tuple[float, ...] = DEFAULT_SCALES
    noise_mean: float = 0.5
    noise_std: float = 0.3
    coverage_quantile: float = 0.04
    filter_sigma_base: float = 1.0
    kernel_smooth_coeff: float = 1.0
    blur_lengths: tuple[int, ...] | None = None
    angle_range: tuple[float, float] = (0.0, 180.0)
    seed: int = 0

    def __post_init__(self):
        w, h = self.working_size
        if w <= 0 or h <= 0:
            raise ConfigError(f"working_size must be positive, got {self.working_size}")
        if len(self.scale_array) != 5:
            raise ConfigError("scale_array must have exactly 5 entries")
        if any(s <= 0 for s in self.scale_array):
            raise ConfigError("scale_array entries must be positive")
        if any(a >= b for a, b in zip(self.scale_array, self.scale_array[1:])):
            raise ConfigError("scale_array must be strictly increasing")
        if self.noise_std <= 0:
            raise ConfigError(f"noise_std must be > 0, got {self.noise_std}")
        if not 0.0 < self.coverage_quantile < 1.0:
            raise ConfigError(
                f"coverage_quantile must be in (0, 1), got {self.coverage_quantile}"
            )
        if self.filter_sigma_base <= 0:
            raise ConfigError("filter_sigma_base must be > 0")
        if self.kernel_smooth_coeff < 0:
            raise ConfigError("kernel_smooth_coeff must be >= 0")
        if self.blur_lengths is not None:
            if len(self.blur_lengths) != len(self.scale_array):
                raise ConfigError("blur_lengths must match scale_array length")
            if any(l < 1 for l in self.blur_lengths):
                raise ConfigError("blur_lengths entries must be >= 1")
        lo, hi = self.angle_range
        if not lo < hi:
            raise ConfigError(f"angle_range must be increasing, got {self.angle_range}")

    def blur_length(self, scale_index: int) -> int:
        if self.blur_lengths is not None:
            return int(self.blur_lengths[scale_index])
        return default_blur_length(self.scale_array[scale_index])


@dataclass(frozen=True)
class GaussianKernel:
    """Separable isotropic Gaussian kernel, stored as its 1-D taps."""

    sigma: float
    radius: int
    taps: np.ndarray = field(repr=False)

    @property
    def weights_2d(self) -> np.ndarray:
        return np.outer(self.taps, self.taps)


@dataclass(frozen=True)
class MotionBlurKernel:
    """Rotated-line point spread function; weights sum to 1."""

    size: int
    angle: float
    weights: np.ndarray = field(repr=False)


def build_gaussian_kernel(sigma: float) -> GaussianKernel:
    """Discrete Gaussian with radius ceil(3*sigma), renormalized to sum 1.

    The stored 1-D taps are exp(-x^2 / 2 sigma^2) renormalized; their outer
    product is the 2-D kernel, proportional to
    exp(-(x^2 + y^2) / 2 sigma^2) at integer offsets.
    """
    if not (isinstance(sigma, (int, float)) and math.isfinite(sigma)) or sigma <= 0:
        raise InvalidSigmaError(f"sigma must be positive and finite, got {sigma!r}")
    radius = max(1, math.ceil(3.0 * sigma))
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    # Scale by sigma before squaring so extreme sigmas saturate to 0/inf in
    # the exponent instead of producing 0/0 at the center tap.
    with np.errstate(over="ignore"):
        zs = xs / sigma
        taps = np.exp(-0.5 * zs * zs)
    taps /= taps.sum()
    return GaussianKernel(sigma=float(sigma), radius=radius, taps=taps)


def gaussian_filter(field_arr: np.ndarray, kernel: GaussianKernel) -> np.ndarray:
    """Smooth a float field with a separable Gaussian (mirror borders)."""
    return kernels.sepconv2d_reflect(field_arr, kernel.taps)


def sample_noise_field(width: int, height: int, mean: float, std: float,
                       rng: np.random.Generator) -> np.ndarray:
    """i.i.d. normal field of shape (height, width)."""
    if std <= 0:
        raise ConfigError(f"std must be > 0, got {std}")
    return rng.normal(mean, std, size=(height, width))


def threshold_field(field_arr: np.ndarray, coverage_quantile: float) -> np.ndarray:
    """Binarize a field so that roughly ``coverage_quantile`` of samples survive.

    The threshold is the empirical (1 - coverage) quantile taken as an order
    statistic; samples strictly above it become 1, everything else 0. On a
    constant field nothing is strictly above the threshold, so all zeros.
    """
    if not 0.0 < coverage_quantile < 1.0:
        raise ConfigError(
            f"coverage_quantile must be in (0, 1), got {coverage_quantile}"
        )
    flat = np.asarray(field_arr, dtype=np.float64).ravel()
    n = flat.size
    k = math.ceil((1.0 - coverage_quantile) * n) - 1
    k = min(max(k, 0), n - 1)
    t = np.partition(flat, k)[k]
    return (field_arr > t).astype(np.float64)


def _smooth_kernel_zero_pad(weights: np.ndarray, sigma: float) -> np.ndarray:
    # Kernel-on-kernel smoothing; zero padding so no mass is invented at the
    # borders (mass lost off-canvas is restored by the final renormalization).
    taps = build_gaussian_kernel(sigma).taps
    r = taps.shape[0] // 2
    padded = np.pad(weights, r, mode="constant")
    mid = np.zeros_like(padded)
    for i in range(taps.shape[0]):
        mid[:, r:-r] += taps[i] * padded[:, i : i + weights.shape[1]]
    out = np.zeros_like(weights)
    for i in range(taps.shape[0]):
        out += taps[i] * mid[i : i + weights.shape[0], r:-r]
    return out


def build_motion_blur_kernel(length: int, angle: float,
                             smoothing_sigma: float = 0.0) -> MotionBlurKernel:
    """Line PSF: horizontal segment of ones rotated by ``angle`` degrees
    (bilinear, zero fill), optionally Gaussian-smoothed, renormalized.
    """
    length = int(length)
    if length < 1:
        raise ConfigError(f"blur length must be >= 1, got {length}")
    size = length if length % 2 == 1 else length + 1
    weights = np.zeros((size, size), dtype=np.float64)
    center = size // 2
    start = (size - length) // 2
    weights[center, start : start + length] = 1.0
    if angle % 360.0 != 0.0 and length > 1:
        rot = cv2.getRotationMatrix2D((float(center), float(center)), float(angle), 1.0)
        weights = cv2.warpAffine(
            weights, rot, (size, size),
            flags=cv2.INTER_LINEAR, borderMode=cv2.BORDER_CONSTANT, borderValue=0.0,
        )
    if smoothing_sigma > 0.0:
        weights = _smooth_kernel_zero_pad(weights, smoothing_sigma)
    weights = np.maximum(weights, 0.0)
    total = weights.sum()
    if total <= 0.0:
        raise ConfigError("motion blur kernel lost all mass")
    weights /= total
    return MotionBlurKernel(size=size, angle=float(angle), weights=weights)


def apply_motion_blur(field_arr: np.ndarray, kernel: MotionBlurKernel) -> np.ndarray:
    """Streak a particle layer with the line PSF; output clamped to [0, 1]."""
    out = kernels.conv2d_reflect(field_arr, kernel.weights)
    return np.clip(out, 0.0, 1.0)


def blend_layer(image: np.ndarray, layer: np.ndarray) -> np.ndarray:
    """Composite a [0, 1] particle layer onto an image (float math):

        out = image * (1 - layer) + layer * 255

    Works on (h, w) fields and (h, w, 3) images; snow only brightens.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.shape[:2] != layer.shape:
        raise DimensionMismatchError(
            f"layer shape {layer.shape} does not match image shape {image.shape[:2]}"
        )
    alpha = layer if image.ndim == 2 else layer[:, :, None]
    return image * (1.0 - alpha) + alpha * 255.0


def synthesize_snow(image: np.ndarray, config: SnowConfig,
                    rng: np.random.Generator) -> np.ndarray:
    """Render multi-scale snow onto a uint8 RGB image.

    The image is resized to the working size, each scale's particle layer is
    generated and blended in float, and the result is resized back to the
    source dimensions and quantized once. Per scale, the random stream is
    consumed in a fixed order (noise field, then blur angle), so output is a
    pure function of (image, config, stream).
    """
    orig_h, orig_w = image.shape[:2]
    work = resize_bilinear(np.asarray(image, dtype=np.float64), config.working_size)
    w, h = config.working_size
    lo, hi = config.angle_range
    for i, scale in enumerate(config.scale_array):
        noise = sample_noise_field(w, h, config.noise_mean, config.noise_std, rng)
        gk = build_gaussian_kernel(scale * config.filter_sigma_base)
        smoothed = gaussian_filter(noise, gk)
        layer = threshold_field(smoothed, config.coverage_quantile)
        angle = float(rng.uniform(lo, hi))
        # Smaller scales get stronger kernel smoothing, larger scales less.
        mk = build_motion_blur_kernel(
            config.blur_length(i), angle, config.kernel_smooth_coeff / scale
        )
        layer = apply_motion_blur(layer, mk)
        # In-place form of blend_layer; the work buffer is private here.
        alpha = layer[:, :, None]
        work *= 1.0 - alpha
        work += alpha * 255.0
    out = resize_bilinear(work, (orig_w, orig_h))
    return quantize_u8(out)


def resize_roundtrip(image: np.ndarray, working_size: tuple[int, int]) -> np.ndarray:
    """The no-snow reference: the same resize-down/resize-up/quantize path
    synthesize_snow takes, with no layers blended in."""
    orig_h, orig_w = image.shape[:2]
    work = resize_bilinear(np.asarray(image, dtype=np.float64), working_size)
    return quantize_u8(resize_bilinear(work, (orig_w, orig_h)))
