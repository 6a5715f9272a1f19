import dataclasses
import math

import numpy as np
import pytest

from nvmag.errors import ParameterError, SetpointError
from nvmag.lockin import (
    DemodCurve,
    FmDriveConfig,
    demod_response,
    field_to_voltage,
    setpoint_responsivity,
    sweep_demod,
    track_setpoint,
    voltage_to_field,
)
from nvmag.odmr import OdmrModel, lineshape_slope, max_slope_setpoint

MODEL = OdmrModel(fwhm=1e6, contrast_per_line=0.02, n_hyperfine_lines=1)
DRIVE = FmDriveConfig()
CENTER = MODEL.dip_center


def test_drive_validation():
    with pytest.raises(ParameterError):
        FmDriveConfig(modulation_frequency=0.0)
    with pytest.raises(ParameterError):
        FmDriveConfig(peak_deviation=-1.0)
    with pytest.raises(ParameterError):
        FmDriveConfig(three_tone_enabled=True, three_tone_spacing=0.0)


def test_demod_zero_at_center():
    assert abs(demod_response(MODEL, DRIVE, CENTER)) < 1e-12


def test_demod_antisymmetry():
    for delta in (5e4, 2e5, 7e5):
        plus = demod_response(MODEL, DRIVE, CENTER + delta)
        minus = demod_response(MODEL, DRIVE, CENTER - delta)
        assert plus == pytest.approx(-minus, abs=1e-15)


def test_demod_extremum_near_max_slope_point():
    # brute carrier sweep at 1 kHz steps
    grid = np.arange(CENTER - 2e6, CENTER + 2e6 + 1e3, 1e3)
    curve = sweep_demod(MODEL, DRIVE, grid)
    best = grid[np.argmax(np.abs(curve.demod_values))]
    setpoint, _ = max_slope_setpoint(MODEL)
    assert abs(best - setpoint) <= DRIVE.peak_deviation


def test_sweep_zero_contrast_is_zero():
    flat = OdmrModel(fwhm=1e6, contrast_per_line=0.0, n_hyperfine_lines=1)
    grid = np.linspace(CENTER - 1e6, CENTER + 1e6, 101)
    curve = sweep_demod(flat, DRIVE, grid)
    assert np.allclose(curve.demod_values, 0.0, atol=1e-16)


def test_sweep_odd_symmetry_and_zero_crossing():
    grid = np.linspace(CENTER - 2e6, CENTER + 2e6, 401)
    curve = sweep_demod(MODEL, DRIVE, grid)
    assert np.allclose(curve.demod_values, -curve.demod_values[::-1], atol=1e-15)
    # sign-change search for the zero crossing
    signs = np.sign(curve.demod_values)
    crossings = np.nonzero(np.diff(signs) != 0)[0]
    crossing_freqs = (grid[crossings] + grid[crossings + 1]) / 2
    nearest = crossing_freqs[np.argmin(np.abs(crossing_freqs - CENTER))]
    assert abs(nearest - CENTER) <= grid[1] - grid[0]


class TestTrackSetpoint:
    GRID = np.arange(CENTER - 2e6, CENTER + 2e6 + 5e3, 5e3)

    def test_matches_brute_slope_scan(self):
        curve = sweep_demod(MODEL, DRIVE, self.GRID)
        step = self.GRID[1] - self.GRID[0]
        slopes = np.abs(np.diff(curve.demod_values) / step)
        oracle = (self.GRID[np.argmax(slopes)] + self.GRID[np.argmax(slopes) + 1]) / 2
        assert abs(track_setpoint(curve) - oracle) <= step

    def test_follows_thermal_drift(self):
        shifted = dataclasses.replace(MODEL, center_frequency=MODEL.center_frequency + 2e5)
        base = track_setpoint(sweep_demod(MODEL, DRIVE, self.GRID))
        moved = track_setpoint(sweep_demod(shifted, DRIVE, self.GRID))
        step = self.GRID[1] - self.GRID[0]
        assert abs((moved - base) - 2e5) <= step

    def test_deterministic(self):
        curve = sweep_demod(MODEL, DRIVE, self.GRID)
        assert track_setpoint(curve) == track_setpoint(curve)

    def test_scale_invariant(self):
        curve = sweep_demod(MODEL, DRIVE, self.GRID)
        scaled = DemodCurve(curve.carrier_grid, 7.5 * curve.demod_values)
        assert track_setpoint(scaled) == track_setpoint(curve)

    def test_flat_curve_raises(self):
        flat = DemodCurve(np.linspace(0, 1e6, 50), np.zeros(50))
        with pytest.raises(SetpointError):
            track_setpoint(flat)


class TestFieldToVoltage:
    CAL = 2.5e3

    def test_zero_field(self):
        assert field_to_voltage(MODEL, DRIVE, self.CAL, 0.0) == 0.0

    def test_linearity(self):
        b = MODEL.fwhm / 100 / MODEL.gyromagnetic_response
        v1 = field_to_voltage(MODEL, DRIVE, self.CAL, b)
        v2 = field_to_voltage(MODEL, DRIVE, self.CAL, 2 * b)
        assert v2 == pytest.approx(2 * v1, rel=0.01)

    def test_round_trip(self):
        b = 3e-9
        v = field_to_voltage(MODEL, DRIVE, self.CAL, b)
        assert voltage_to_field(MODEL, DRIVE, self.CAL, v) == pytest.approx(b, rel=1e-9)


def test_small_deviation_matches_derivative():
    # deviation fwhm/10: demod curve proportional to dL/df within 5% pointwise
    drive = FmDriveConfig(peak_deviation=MODEL.fwhm / 10)
    grid = np.linspace(CENTER - MODEL.fwhm, CENTER + MODEL.fwhm, 201)
    curve = sweep_demod(MODEL, drive, grid)
    derivative = lineshape_slope(MODEL, grid)
    a = curve.demod_values / np.max(np.abs(curve.demod_values))
    b = derivative / np.max(np.abs(derivative))
    assert np.max(np.abs(a - b)) < 0.05


def test_three_tone_collapses_to_summed_contrast():
    triple = OdmrModel(fwhm=1e6, contrast_per_line=0.012, n_hyperfine_lines=3)
    merged = OdmrModel(fwhm=1e6, contrast_per_line=0.036, n_hyperfine_lines=1,
                       center_frequency=triple.center_frequency)
    three_tone = FmDriveConfig(three_tone_enabled=True)
    grid = np.linspace(CENTER - 2e6, CENTER + 2e6, 101)
    a = sweep_demod(triple, three_tone, grid)
    b = sweep_demod(merged, DRIVE, grid)
    assert np.allclose(a.demod_values, b.demod_values, rtol=0, atol=1e-15)


def test_demod_curve_validation():
    with pytest.raises(ParameterError):
        DemodCurve(np.array([1.0, 2.0]), np.array([0.1]))
    with pytest.raises(ParameterError):
        DemodCurve(np.array([2.0, 1.0]), np.array([0.1, 0.2]))
    with pytest.raises(ParameterError):
        sweep_demod(MODEL, DRIVE, np.array([]))


def test_setpoint_responsivity_slope_sign():
    setpoint, slope = setpoint_responsivity(MODEL, DRIVE)
    assert abs(setpoint - CENTER) < MODEL.fwhm / 100
    assert slope != 0.0
