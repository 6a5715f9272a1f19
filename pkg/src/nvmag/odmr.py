"""Parametric NV-ensemble ODMR response and derived sensitivity figures.

The measured resonance of a dense ensemble is summarised by a few numbers:
dip centre, full width at half maximum, per-line contrast, hyperfine line
count and spacing, and the 28 GHz/T linear field response. The dip itself is
modelled as a sum of identical Lorentzians on a unit fluorescence background;
everything here is a pure function of the model values, so instances can be
shared freely between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import c as _C_LIGHT
from scipy.constants import h as _H_PLANCK

from .errors import ParameterError, SetpointError

ZERO_FIELD_SPLITTING_HZ = 2.87e9
GYROMAGNETIC_HZ_PER_T = 28e9
HYPERFINE_SPACING_HZ = 2.16e6
MEAN_EMISSION_WAVELENGTH_M = 700e-9

# Slope prefactor for reading a Lorentzian dip at its steepest point.
MAX_SLOPE_PREFACTOR = 4.0 / (3.0 * math.sqrt(3.0))


@dataclass(frozen=True)
class OdmrModel:
    """Ensemble ODMR dip parameters.

    ``center_frequency`` is the zero-field resonance; the addressed dip sits
    at ``center_frequency + gyromagnetic_response * bias_field_parallel``.
    ``contrast_per_line`` is the fractional fluorescence drop of one hyperfine
    line; the summed depth of all lines must stay below 1 so the relative
    fluorescence can never go negative.
    """

    center_frequency: float = ZERO_FIELD_SPLITTING_HZ
    fwhm: float = 1e6
    contrast_per_line: float = 0.005
    n_hyperfine_lines: int = 3
    hyperfine_spacing: float = HYPERFINE_SPACING_HZ
    gyromagnetic_response: float = GYROMAGNETIC_HZ_PER_T
    bias_field_parallel: float = 0.0

    def __post_init__(self):
        if not self.fwhm > 0:
            raise ParameterError("fwhm must be > 0")
        # contrast 0 is allowed so flat (no-dip) models can exercise error paths
        if not 0.0 <= self.contrast_per_line < 1.0:
            raise ParameterError("contrast_per_line must lie in [0, 1)")
        if int(self.n_hyperfine_lines) != self.n_hyperfine_lines or self.n_hyperfine_lines < 1:
            raise ParameterError("n_hyperfine_lines must be an integer >= 1")
        if self.hyperfine_spacing < 0:
            raise ParameterError("hyperfine_spacing must be >= 0")
        if not self.total_contrast < 1.0:
            raise ParameterError("summed line contrast must stay below 1")

    @property
    def total_contrast(self) -> float:
        return self.n_hyperfine_lines * self.contrast_per_line

    @property
    def dip_center(self) -> float:
        """Centre of the addressed dip including the static bias shift."""
        return self.center_frequency + self.gyromagnetic_response * self.bias_field_parallel

    def line_centers(self) -> np.ndarray:
        """Hyperfine line centres, symmetric about the (bias-shifted) dip centre."""
        n = self.n_hyperfine_lines
        offsets = (np.arange(n) - (n - 1) / 2.0) * self.hyperfine_spacing
        return self.dip_center + offsets


@dataclass(frozen=True)
class PhotonBudget:
    """Detected optical power and the photon rate it corresponds to."""

    detected_optical_power: float
    mean_photon_wavelength: float = MEAN_EMISSION_WAVELENGTH_M

    def __post_init__(self):
        if self.detected_optical_power < 0:
            raise ParameterError("detected_optical_power must be >= 0")
        if not self.mean_photon_wavelength > 0:
            raise ParameterError("mean_photon_wavelength must be > 0")

    @property
    def detection_rate(self) -> float:
        """Detected photons per second, power * wavelength / (h c)."""
        return self.detected_optical_power * self.mean_photon_wavelength / (_H_PLANCK * _C_LIGHT)


def lineshape(model: OdmrModel, f):
    """Relative fluorescence at microwave frequency ``f`` (scalar or array).

    Returns 1 - sum_i C / (1 + ((f - f_i) / (fwhm/2))^2) over the hyperfine
    lines; bounded in (1 - total_contrast, 1].
    """
    f_arr = np.asarray(f, dtype=float)
    hw = model.fwhm / 2.0
    u = (f_arr[..., None] - model.line_centers()) / hw
    resp = 1.0 - np.sum(model.contrast_per_line / (1.0 + u * u), axis=-1)
    return resp if resp.ndim else float(resp)


def lineshape_slope(model: OdmrModel, f):
    """Analytic derivative of :func:`lineshape` with respect to frequency (1/Hz)."""
    f_arr = np.asarray(f, dtype=float)
    hw = model.fwhm / 2.0
    u = (f_arr[..., None] - model.line_centers()) / hw
    slope = np.sum(2.0 * model.contrast_per_line * u / ((1.0 + u * u) ** 2 * hw), axis=-1)
    return slope if slope.ndim else float(slope)


def zeeman_shift(model: OdmrModel, b_parallel):
    """Resonance shift in Hz produced by an on-axis field, odd and linear in B."""
    shift = model.gyromagnetic_response * np.asarray(b_parallel, dtype=float)
    return shift if shift.ndim else float(shift)


def max_slope_setpoint(model: OdmrModel, scan_resolution: float | None = None):
    """Frequency of maximum |dL/df| found by dense scan plus parabolic refinement.

    Returns ``(frequency, slope)`` with the signed slope at the setpoint. For a
    single Lorentzian the offset from centre is fwhm/(2 sqrt(3)); when two
    symmetric extrema exist the lower-frequency one is returned.
    """
    if model.total_contrast <= 0.0:
        raise SetpointError("flat model has no slope setpoint")
    step = model.fwhm / 1000.0 if scan_resolution is None else float(scan_resolution)
    if not step > 0:
        raise ParameterError("scan_resolution must be > 0")
    centers = model.line_centers()
    lo = centers[0] - 3.0 * model.fwhm
    hi = centers[-1] + 3.0 * model.fwhm
    grid = np.arange(lo, hi + step, step)
    slopes = lineshape_slope(model, grid)
    power = slopes * slopes
    i = int(np.argmax(power))
    best = grid[i]
    if 0 < i < len(grid) - 1:
        y0, y1, y2 = power[i - 1], power[i], power[i + 1]
        denom = y0 - 2.0 * y1 + y2
        if denom != 0.0:
            best = grid[i] + 0.5 * (y0 - y2) / denom * step
    return float(best), float(lineshape_slope(model, best))


def cw_shot_noise_sensitivity(model: OdmrModel, budget: PhotonBudget) -> float:
    """Shot-noise-limited CW sensitivity in T/sqrt(Hz).

    (4 / (3 sqrt(3))) * fwhm / (gyromagnetic_response * total_contrast *
    sqrt(detection_rate)): linear in linewidth, inverse in contrast and in the
    square root of the detected photon rate.
    """
    rate = budget.detection_rate
    if model.total_contrast <= 0.0:
        raise ParameterError("sensitivity is undefined for zero contrast")
    if rate <= 0.0:
        raise ParameterError("sensitivity is undefined for zero detection rate")
    return MAX_SLOPE_PREFACTOR * model.fwhm / (
        model.gyromagnetic_response * model.total_contrast * math.sqrt(rate)
    )


def averaging_gain(n: int) -> float:
    """Noise-amplitude reduction factor sqrt(n) from averaging n repeats."""
    if int(n) != n or n < 1:
        raise ParameterError("n must be an integer >= 1")
    return math.sqrt(n)
