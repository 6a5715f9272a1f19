"""Per-pixel sensitivity for camera-based imaging plus systematic artifacts.

Covers the three artifact classes seen in widefield fluorescence imaging:
bit-depth quantization of a small contrast on a bright background, microwave
field gradients masquerading as field shifts, and frame jitter/vibration
smearing sharp edges into halo patterns under averaging.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import ParameterError
from .odmr import OdmrModel, PhotonBudget, cw_shot_noise_sensitivity, lineshape

ALLOWED_BIT_DEPTHS = (8, 10, 12, 16)


def _default_imaging_model() -> OdmrModel:
    return OdmrModel(fwhm=1e6, contrast_per_line=0.02, n_hyperfine_lines=1)


@dataclass(frozen=True)
class ImagingConfig:
    """Camera and diamond parameters of the imaging system."""

    fov: tuple = (5e-3, 5e-3)
    pixel_area: float = 3.5e-12
    bit_depth: int = 16
    total_fluorescence: float = 6e-3
    model: OdmrModel = field(default_factory=_default_imaging_model)

    def __post_init__(self):
        if len(self.fov) != 2 or any(s <= 0 for s in self.fov):
            raise ParameterError("fov must be two positive extents")
        if not self.pixel_area > 0:
            raise ParameterError("pixel_area must be > 0")
        if self.bit_depth not in ALLOWED_BIT_DEPTHS:
            raise ParameterError(f"bit_depth must be one of {ALLOWED_BIT_DEPTHS}")
        if not self.total_fluorescence > 0:
            raise ParameterError("total_fluorescence must be > 0")

    @property
    def n_pixels(self) -> int:
        return int(round(self.fov[0] * self.fov[1] / self.pixel_area))


@dataclass(eq=False)
class ArtifactScene:
    """Pixel-wise resonance offsets and per-frame displacements."""

    resonance_offset_map: np.ndarray | None = None
    displacement_series: np.ndarray | None = None
    vibration_frequency: float = 7.0

    def __post_init__(self):
        if self.resonance_offset_map is not None:
            self.resonance_offset_map = np.asarray(self.resonance_offset_map, dtype=float)
            if not np.all(np.isfinite(self.resonance_offset_map)):
                raise ParameterError("resonance_offset_map must be finite")
        if self.displacement_series is not None:
            self.displacement_series = np.asarray(self.displacement_series, dtype=float)
            if self.displacement_series.ndim != 2 or self.displacement_series.shape[1] != 2:
                raise ParameterError("displacement_series must have shape (n_frames, 2)")
            if not np.all(np.isfinite(self.displacement_series)):
                raise ParameterError("displacement_series must be finite")


def per_pixel_sensitivity(cfg: ImagingConfig) -> float:
    """Shot-noise sensitivity of one pixel fed total_fluorescence / n_pixels."""
    budget = PhotonBudget(cfg.total_fluorescence / cfg.n_pixels)
    return cw_shot_noise_sensitivity(cfg.model, budget)


def whole_array_sensitivity(cfg: ImagingConfig) -> float:
    """Sensitivity with the entire photon budget on one detector.

    Exactly per_pixel_sensitivity / sqrt(n_pixels): combining all pixels
    recovers the bulk estimate.
    """
    return cw_shot_noise_sensitivity(cfg.model, PhotonBudget(cfg.total_fluorescence))


def quantize_frame(frame, bit_depth: int) -> np.ndarray:
    """Digitise fractional brightness in [0, 1] to integer camera levels."""
    if bit_depth not in ALLOWED_BIT_DEPTHS:
        raise ParameterError(f"bit_depth must be one of {ALLOWED_BIT_DEPTHS}")
    frame = np.asarray(frame, dtype=float)
    if frame.size and (frame.min() < 0.0 or frame.max() > 1.0):
        raise ParameterError("frame values must lie in [0, 1]")
    levels = (1 << bit_depth) - 1
    return np.rint(frame * levels).astype(np.uint16)


def dip_level_span(contrast: float, bit_depth: int) -> int:
    """Digitisation levels spanned by a fractional dip below full brightness."""
    if not 0.0 <= contrast <= 1.0:
        raise ParameterError("contrast must lie in [0, 1]")
    levels = (1 << bit_depth) - 1
    return int(levels - np.rint((1.0 - contrast) * levels))


def black_level_expand(frame, black_level: float, white_level: float = 1.0) -> np.ndarray:
    """Affine pre-scaling of [black_level, white_level] onto [0, 1].

    Models an ideal camera's analog black-level stage: subtracting the bright
    background before digitisation spreads a small contrast across the full
    level range. Values are clipped to [0, 1] after scaling.
    """
    if not black_level < white_level:
        raise ParameterError("black_level must be below white_level")
    frame = np.asarray(frame, dtype=float)
    return np.clip((frame - black_level) / (white_level - black_level), 0.0, 1.0)


def mw_gradient_contrast_map(
    cfg: ImagingConfig, scene: ArtifactScene, drive_frequency: float
) -> np.ndarray:
    """Relative fluorescence per pixel under a spatial resonance-offset map.

    A pixel whose resonance is offset by df responds like the uniform model
    probed at drive_frequency - df; a uniform map therefore yields a constant
    image.
    """
    if scene.resonance_offset_map is None:
        raise ParameterError("scene has no resonance_offset_map")
    return lineshape(cfg.model, drive_frequency - scene.resonance_offset_map)


def gaussian_jitter_displacements(n_frames: int, sigma_px: float, seed) -> np.ndarray:
    """Independent Gaussian (row, col) frame offsets in pixel units."""
    if sigma_px < 0:
        raise ParameterError("sigma_px must be >= 0")
    rng = np.random.default_rng(seed)
    return rng.normal(0.0, sigma_px, (n_frames, 2))


def sinusoidal_displacements(
    n_frames: int, frame_rate: float, frequency: float = 7.0,
    amplitude_px: float = 2.0, axis: int = 0,
) -> np.ndarray:
    """Single-axis sinusoidal wobble sampled at the camera frame rate."""
    if not frame_rate > 0:
        raise ParameterError("frame_rate must be > 0")
    t = np.arange(n_frames) / frame_rate
    series = np.zeros((n_frames, 2))
    series[:, axis] = amplitude_px * np.sin(2.0 * np.pi * frequency * t)
    return series


def displace_frames(frames, displacements) -> np.ndarray:
    """Shift each frame by its (row, col) displacement with bilinear resampling."""
    frames = np.asarray(frames, dtype=float)
    displacements = np.asarray(displacements, dtype=float)
    if frames.ndim != 3:
        raise ParameterError("frames must be a (n, rows, cols) stack")
    if displacements.shape != (frames.shape[0], 2):
        raise ParameterError("one (row, col) displacement per frame required")
    out = np.empty_like(frames)
    for k, (frame, shift) in enumerate(zip(frames, displacements)):
        if shift[0] == 0.0 and shift[1] == 0.0:
            out[k] = frame  # keep the all-zero case bit-exact
        else:
            out[k] = ndimage.shift(frame, shift, order=1, mode="nearest")
    return out


def jitter_average(frames, scene: ArtifactScene) -> np.ndarray:
    """Average of the displaced frame stack (plain mean for zero displacements)."""
    frames = np.asarray(frames, dtype=float)
    if frames.ndim != 3 or frames.shape[0] == 0:
        raise ParameterError("frames must be a non-empty (n, rows, cols) stack")
    if scene.displacement_series is None:
        return frames.mean(axis=0)
    if scene.displacement_series.shape[0] < frames.shape[0]:
        raise ParameterError("fewer displacements than frames")
    displaced = displace_frames(frames, scene.displacement_series[: frames.shape[0]])
    return displaced.mean(axis=0)


def cross_test_pattern(shape=(128, 128), arm_width: int = 12, lo: float = 0.2, hi: float = 1.0) -> np.ndarray:
    """Bright cross on a dark background; sharp edges for jitter experiments."""
    rows, cols = shape
    frame = np.full(shape, lo)
    r0, c0 = rows // 2, cols // 2
    half = arm_width // 2
    frame[r0 - half : r0 + half, :] = hi
    frame[:, c0 - half : c0 + half] = hi
    return frame
