"""Preprocessing toward the certificate assumptions: strictly positive pixel
intensities and a frame count equal to the per-frame pixel count.

Raw 8-bit video is shifted into [delta_x, 255 + delta_x], and the geometry is
squared either by area-average downscaling (resolution drops so that
d_m * d_n matches the frame count) or by cycling frames.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import FrameGeometry

SQUARE_STRATEGIES = ("rescale-resolution", "repeat-frames", "none")


@dataclass(frozen=True)
class PreprocessConfig:
    delta_x: float = 5000.0
    square_strategy: str = "rescale-resolution"
    # Max relative gap between the rounded pixel count and the frame count
    # before rescaling is refused as too distorting.
    beta_tolerance: float = 0.02

    def __post_init__(self):
        if self.delta_x <= 0:
            raise ValueError(f"delta_x must be positive, got {self.delta_x}")
        if self.square_strategy not in SQUARE_STRATEGIES:
            raise ValueError(
                f"square_strategy must be one of {SQUARE_STRATEGIES}, "
                f"got {self.square_strategy!r}"
            )
        if not 0 <= self.beta_tolerance < 1:
            raise ValueError(f"beta_tolerance must lie in [0, 1)")


def to_grayscale(frames) -> np.ndarray:
    """Equal-weight channel average for (d_f, d_m, d_n, channels) input."""
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim == 3:
        return frames
    if frames.ndim == 4:
        return frames.mean(axis=-1)
    raise ValueError(f"expected 3-D or 4-D frame stack, got shape {frames.shape}")


def shift_pixels(frames, delta_x: float) -> tuple[np.ndarray, float, float]:
    """Shift 8-bit intensities by delta_x > 0; returns (frames, x_black, x_white).

    The recorded range is [delta_x, 255 + delta_x] regardless of the values
    actually present, so the positivity guarantee is data-independent.
    """
    if delta_x <= 0:
        raise ValueError(f"delta_x must be positive, got {delta_x}")
    frames = np.asarray(frames, dtype=np.float64)
    if frames.size and (frames.min() < 0 or frames.max() > 255):
        raise ValueError(
            f"shift_pixels expects values in [0, 255], "
            f"got [{frames.min()}, {frames.max()}]"
        )
    return frames + delta_x, float(delta_x), float(255 + delta_x)


def rescaled_geometry(geometry: FrameGeometry,
                      beta_tolerance: float = 0.02) -> tuple[FrameGeometry, float]:
    """Integer frame dimensions approximating the squaring scale
    beta = sqrt(d_f / (d_m * d_n)).

    d_m' = round(beta * d_m); d_n' is then corrected to the integer bringing
    d_m' * d_n' closest to d_f.  The returned geometry's frame count equals
    d_m' * d_n' exactly; callers cycle or trim frames to realize it.
    """
    d_m, d_n, d_f = geometry.d_m, geometry.d_n, geometry.d_f
    if d_f > d_m * d_n:
        raise ValueError(
            f"video has more frames ({d_f}) than pixels ({d_m * d_n}); "
            "resolution rescaling only applies to long-side-resolution video"
        )
    beta = math.sqrt(d_f / (d_m * d_n))
    new_m = max(1, round(beta * d_m))
    new_n = max(1, round(d_f / new_m))
    gap = abs(new_m * new_n - d_f) / d_f
    if gap > beta_tolerance:
        raise ValueError(
            f"rounded geometry {new_m}x{new_n} misses the frame count {d_f} "
            f"by {gap:.3%} (tolerance {beta_tolerance:.3%})"
        )
    return FrameGeometry(new_m, new_n, new_m * new_n), beta


def rescale_resolution(frames, beta_tolerance: float = 0.02
                       ) -> tuple[np.ndarray, FrameGeometry, float]:
    """Area-average the frames down to the squared geometry.

    Values stay inside the original range (each output pixel is a convex
    combination of inputs).  When rounding leaves the pixel count a few
    frames away from the original length, the frame sequence is cycled or
    trimmed so that d_f = d_m * d_n holds exactly.
    """
    frames = np.asarray(frames, dtype=np.float64)
    d_f, d_m, d_n = frames.shape
    target, beta = rescaled_geometry(FrameGeometry(d_m, d_n, d_f), beta_tolerance)
    w_rows = _overlap_weights(d_m, target.d_m)
    w_cols = _overlap_weights(d_n, target.d_n)
    resampled = np.einsum("rb,fbc,sc->frs", w_rows, frames, w_cols, optimize=True)
    if target.d_f != d_f:
        if target.d_f > d_f:
            reps = -(-target.d_f // d_f)
            resampled = np.tile(resampled, (reps, 1, 1))[: target.d_f]
        else:
            resampled = resampled[: target.d_f]
    return resampled, target, beta


def _overlap_weights(src: int, dst: int) -> np.ndarray:
    """Row-stochastic (dst, src) matrix averaging src cells into dst cells."""
    scale = src / dst
    weights = np.zeros((dst, src))
    for t in range(dst):
        lo, hi = t * scale, (t + 1) * scale
        first, last = int(math.floor(lo)), min(src, int(math.ceil(hi)))
        for s in range(first, last):
            weights[t, s] = min(hi, s + 1) - max(lo, s)
    return weights / scale


def repeat_frames(frames) -> np.ndarray:
    """Cycle the frame sequence until d_f = d_m * d_n, trimming the last cycle."""
    frames = np.asarray(frames, dtype=np.float64)
    d_f, d_m, d_n = frames.shape
    target = d_m * d_n
    if d_f > target:
        raise ValueError(
            f"video has more frames ({d_f}) than pixels ({target}); "
            "frame repetition cannot shorten it"
        )
    if d_f == target:
        return frames
    reps = -(-target // d_f)
    return np.tile(frames, (reps, 1, 1))[:target]


def square_video(frames, strategy: str = "rescale-resolution",
                 beta_tolerance: float = 0.02
                 ) -> tuple[np.ndarray, FrameGeometry, float | None]:
    """Apply the chosen squaring strategy; returns (frames, geometry, beta)."""
    frames = np.asarray(frames, dtype=np.float64)
    d_f, d_m, d_n = frames.shape
    if strategy == "none":
        return frames, FrameGeometry(d_m, d_n, d_f), None
    if strategy == "rescale-resolution":
        return rescale_resolution(frames, beta_tolerance)
    if strategy == "repeat-frames":
        out = repeat_frames(frames)
        return out, FrameGeometry(d_m, d_n, out.shape[0]), None
    raise ValueError(f"unknown squaring strategy {strategy!r}")
