"""FM microwave drive and lock-in demodulation of the ODMR response.

The carrier is frequency modulated, the fluorescence follows the lineshape at
the instantaneous frequency, and multiplying by the modulation sinusoid and
averaging over whole periods gives the first-harmonic (dispersive) output.
The sample grid is symmetric in modulation phase, so the demodulated curve of
a symmetric dip is antisymmetric about the dip centre to float precision.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, SetpointError
from .odmr import OdmrModel, lineshape

DEMOD_PERIODS = 16
SAMPLES_PER_PERIOD = 64


@dataclass(frozen=True)
class FmDriveConfig:
    """Frequency-modulation drive settings.

    ``peak_deviation`` is half the peak-to-peak modulation width (500 kHz
    width -> 250 kHz deviation). With ``three_tone_enabled`` the hyperfine
    lines are driven together and act as one line with the summed contrast.
    """

    modulation_frequency: float = 33e3
    peak_deviation: float = 250e3
    three_tone_enabled: bool = False
    three_tone_spacing: float = 2.16e6
    carrier_frequency: float = 0.0

    def __post_init__(self):
        if not self.modulation_frequency > 0:
            raise ParameterError("modulation_frequency must be > 0")
        if not self.peak_deviation > 0:
            raise ParameterError("peak_deviation must be > 0")
        if self.three_tone_enabled and not self.three_tone_spacing > 0:
            raise ParameterError("three_tone_spacing must be > 0")


@dataclass(eq=False)
class DemodCurve:
    """Demodulated response sampled over a strictly increasing carrier grid."""

    carrier_grid: np.ndarray
    demod_values: np.ndarray

    def __post_init__(self):
        self.carrier_grid = np.asarray(self.carrier_grid, dtype=float)
        self.demod_values = np.asarray(self.demod_values, dtype=float)
        if self.carrier_grid.size != self.demod_values.size:
            raise ParameterError("grid and values must have the same length")
        if self.carrier_grid.size < 2:
            raise ParameterError("curve needs at least 2 points")
        if not np.all(np.diff(self.carrier_grid) > 0):
            raise ParameterError("carrier grid must be strictly increasing")


def _effective_model(model: OdmrModel, drive: FmDriveConfig) -> OdmrModel:
    # three-frequency drive folds the hyperfine lines into one effective line
    if drive.three_tone_enabled and model.n_hyperfine_lines > 1:
        return dataclasses.replace(
            model,
            n_hyperfine_lines=1,
            contrast_per_line=model.total_contrast,
        )
    return model


def _modulation_phase() -> np.ndarray:
    n = DEMOD_PERIODS * SAMPLES_PER_PERIOD
    return 2.0 * np.pi * np.arange(n) / SAMPLES_PER_PERIOD


def demod_response(model: OdmrModel, drive: FmDriveConfig, carrier: float) -> float:
    """First-harmonic demodulated value at one carrier frequency."""
    theta = _modulation_phase()
    eff = _effective_model(model, drive)
    instantaneous = carrier + drive.peak_deviation * np.sin(theta)
    return float(np.mean(lineshape(eff, instantaneous) * np.sin(theta)))


def sweep_demod(model: OdmrModel, drive: FmDriveConfig, grid) -> DemodCurve:
    """Demodulated response over a carrier grid (vectorised demod_response)."""
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ParameterError("carrier grid is empty")
    theta = _modulation_phase()
    eff = _effective_model(model, drive)
    instantaneous = grid[:, None] + drive.peak_deviation * np.sin(theta)[None, :]
    values = np.mean(lineshape(eff, instantaneous) * np.sin(theta)[None, :], axis=1)
    return DemodCurve(grid, values)


def track_setpoint(curve: DemodCurve) -> float:
    """Carrier of maximum |slope| of the demod curve (max field responsivity).

    Ties break deterministically to the lowest frequency. Raises
    :class:`SetpointError` for a flat curve.
    """
    slopes = np.gradient(curve.demod_values, curve.carrier_grid)
    magnitude = np.abs(slopes)
    if np.max(magnitude) == 0.0:
        raise SetpointError("flat demod curve has no setpoint")
    return float(curve.carrier_grid[int(np.argmax(magnitude))])


def _default_grid(model: OdmrModel, drive: FmDriveConfig) -> np.ndarray:
    centers = model.line_centers()
    span = (centers[-1] - centers[0]) / 2.0 + drive.peak_deviation + 2.0 * model.fwhm
    step = model.fwhm / 500.0
    return np.arange(model.dip_center - span, model.dip_center + span + step, step)


def setpoint_responsivity(model: OdmrModel, drive: FmDriveConfig, grid=None) -> tuple[float, float]:
    """Tracked setpoint and demod-curve slope (per Hz) at that setpoint."""
    curve = sweep_demod(model, drive, _default_grid(model, drive) if grid is None else grid)
    setpoint = track_setpoint(curve)
    slopes = np.gradient(curve.demod_values, curve.carrier_grid)
    idx = int(np.argmin(np.abs(curve.carrier_grid - setpoint)))
    return setpoint, float(slopes[idx])


def field_to_voltage(
    model: OdmrModel,
    drive: FmDriveConfig,
    responsivity_calibration: float,
    b: float,
    grid=None,
) -> float:
    """Small-signal detector voltage for an on-axis field at the tracked setpoint.

    v = slope_at_setpoint * gyromagnetic_response * b * calibration, where the
    calibration converts demod units to volts.
    """
    _, slope = setpoint_responsivity(model, drive, grid)
    return slope * model.gyromagnetic_response * b * responsivity_calibration


def voltage_to_field(
    model: OdmrModel,
    drive: FmDriveConfig,
    responsivity_calibration: float,
    v: float,
    grid=None,
) -> float:
    """Inverse of :func:`field_to_voltage` with the same calibration."""
    _, slope = setpoint_responsivity(model, drive, grid)
    denom = slope * model.gyromagnetic_response * responsivity_calibration
    if denom == 0.0:
        raise SetpointError("zero responsivity, cannot invert")
    return v / denom
