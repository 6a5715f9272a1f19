import math

import numpy as np
import pytest
from scipy.constants import c, h

from helpers import brute_force_max_slope, rms
from nvmag.errors import ParameterError, SetpointError
from nvmag.odmr import (
    OdmrModel,
    PhotonBudget,
    averaging_gain,
    cw_shot_noise_sensitivity,
    lineshape,
    lineshape_slope,
    max_slope_setpoint,
    zeeman_shift,
)
from nvmag.synth import TestSignal, Timeseries, compose, gen_test_signal, gen_white

SINGLE = OdmrModel(fwhm=1e6, contrast_per_line=0.051, n_hyperfine_lines=1)


class TestLineshape:
    def test_on_resonance_contrast(self):
        # 5.1% single-line contrast leaves 94.9% relative fluorescence
        assert lineshape(SINGLE, SINGLE.dip_center) == pytest.approx(0.949, abs=1e-12)

    def test_half_width_definition(self):
        for sign in (-1, 1):
            value = lineshape(SINGLE, SINGLE.dip_center + sign * SINGLE.fwhm / 2)
            assert value == pytest.approx(1 - 0.051 / 2, abs=1e-12)

    def test_far_detuned_limit(self):
        for sign in (-1, 1):
            value = lineshape(SINGLE, SINGLE.dip_center + sign * 10 * SINGLE.fwhm)
            assert abs(value - 1.0) < 0.01

    def test_bounds_and_symmetry(self):
        model = OdmrModel(fwhm=1.2e6, contrast_per_line=0.01, n_hyperfine_lines=3)
        offsets = np.linspace(-8e6, 8e6, 4001)
        left = lineshape(model, model.dip_center - offsets)
        right = lineshape(model, model.dip_center + offsets)
        assert np.allclose(left, right, rtol=0, atol=1e-14)
        assert np.all(right > 1 - model.total_contrast)
        assert np.all(right <= 1.0)

    def test_bias_field_shifts_dip(self):
        biased = OdmrModel(fwhm=1e6, contrast_per_line=0.02, n_hyperfine_lines=1,
                           bias_field_parallel=1.6e-3)
        assert biased.dip_center - biased.center_frequency == pytest.approx(4.48e7)

    def test_invalid_parameters(self):
        with pytest.raises(ParameterError):
            OdmrModel(fwhm=-1e6)
        with pytest.raises(ParameterError):
            OdmrModel(contrast_per_line=1.5)
        with pytest.raises(ParameterError):
            OdmrModel(n_hyperfine_lines=0)
        with pytest.raises(ParameterError):
            OdmrModel(hyperfine_spacing=-1.0)
        with pytest.raises(ParameterError):
            OdmrModel(contrast_per_line=0.4, n_hyperfine_lines=3)


class TestZeemanShift:
    def test_28_hz_per_nt(self):
        assert zeeman_shift(SINGLE, 1e-9) == 28.0

    def test_zero_field(self):
        assert zeeman_shift(SINGLE, 0.0) == 0.0

    def test_bias_magnitude(self):
        # hand multiplication 28e9 * 1.6e-3
        assert zeeman_shift(SINGLE, 1.6e-3) == pytest.approx(4.48e7, rel=1e-12)

    def test_odd_and_linear(self):
        fields = np.array([-2e-3, -1e-9, 3e-7, 5e-4])
        assert np.array_equal(zeeman_shift(SINGLE, -fields), -zeeman_shift(SINGLE, fields))
        assert zeeman_shift(SINGLE, 2 * 7e-8) == pytest.approx(2 * zeeman_shift(SINGLE, 7e-8))


class TestMaxSlopeSetpoint:
    def test_analytic_offset(self):
        setpoint, _ = max_slope_setpoint(SINGLE)
        analytic = SINGLE.fwhm / (2 * math.sqrt(3))
        assert abs(abs(setpoint - SINGLE.dip_center) - analytic) < SINGLE.fwhm / 1000

    def test_brute_force_oracle(self):
        # 1 Hz finite-difference scan around the analytic extremum; the
        # difference quotient is rounding-limited near the flat maximum, so
        # allow the oracle a 50 Hz wobble (scan resolution is 1 kHz)
        analytic = SINGLE.dip_center - SINGLE.fwhm / (2 * math.sqrt(3))
        oracle = brute_force_max_slope(
            lambda f: lineshape(SINGLE, f), analytic - 5e4, analytic + 5e4, 1.0
        )
        setpoint, _ = max_slope_setpoint(SINGLE)
        assert abs(setpoint - oracle) < 50.0

    def test_zero_slope_at_center(self):
        assert lineshape_slope(SINGLE, SINGLE.dip_center) == pytest.approx(0.0, abs=1e-18)

    def test_contrast_scaling(self):
        double = OdmrModel(fwhm=1e6, contrast_per_line=0.102, n_hyperfine_lines=1)
        f1, s1 = max_slope_setpoint(SINGLE)
        f2, s2 = max_slope_setpoint(double)
        assert f1 == pytest.approx(f2, abs=1.0)
        assert abs(s2) == pytest.approx(2 * abs(s1), rel=1e-6)

    def test_flat_model_raises(self):
        flat = OdmrModel(fwhm=1e6, contrast_per_line=0.0, n_hyperfine_lines=1)
        with pytest.raises(SetpointError):
            max_slope_setpoint(flat)


class TestShotNoiseSensitivity:
    MODEL = OdmrModel(fwhm=1e6, contrast_per_line=0.02, n_hyperfine_lines=1)

    def test_reference_value(self):
        # independent evaluation: rate = P*lambda/(h*c) ~ 1.76e16 /s at 5 mW
        budget = PhotonBudget(5e-3)
        rate = 5e-3 * 700e-9 / (h * c)
        expected = (4 / (3 * math.sqrt(3))) * 1e6 / (28e9 * 0.02 * math.sqrt(rate))
        assert budget.detection_rate == pytest.approx(rate, rel=1e-12)
        assert budget.detection_rate == pytest.approx(1.76194e16, rel=1e-4)
        result = cw_shot_noise_sensitivity(self.MODEL, budget)
        assert result == pytest.approx(expected, rel=1e-12)
        assert result == pytest.approx(1.035606e-11, rel=1e-5)

    def test_order_of_magnitude_band(self):
        # bracketing estimate for realistic collection efficiencies
        result = cw_shot_noise_sensitivity(self.MODEL, PhotonBudget(5e-3))
        assert 5e-12 < result < 4e-11

    def test_rate_scaling(self):
        s1 = cw_shot_noise_sensitivity(self.MODEL, PhotonBudget(5e-3))
        s4 = cw_shot_noise_sensitivity(self.MODEL, PhotonBudget(20e-3))
        assert s4 == pytest.approx(s1 / 2, rel=1e-12)

    def test_fwhm_scaling(self):
        wide = OdmrModel(fwhm=2e6, contrast_per_line=0.02, n_hyperfine_lines=1)
        s1 = cw_shot_noise_sensitivity(self.MODEL, PhotonBudget(5e-3))
        s2 = cw_shot_noise_sensitivity(wide, PhotonBudget(5e-3))
        assert s2 == pytest.approx(2 * s1, rel=1e-12)

    def test_contrast_fwhm_tradeoff(self):
        # doubling contrast while doubling fwhm leaves sensitivity unchanged
        other = OdmrModel(fwhm=2e6, contrast_per_line=0.04, n_hyperfine_lines=1)
        s1 = cw_shot_noise_sensitivity(self.MODEL, PhotonBudget(5e-3))
        s2 = cw_shot_noise_sensitivity(other, PhotonBudget(5e-3))
        assert s2 == pytest.approx(s1, rel=1e-12)

    def test_guarded_domain_errors(self):
        flat = OdmrModel(fwhm=1e6, contrast_per_line=0.0, n_hyperfine_lines=1)
        with pytest.raises(ParameterError):
            cw_shot_noise_sensitivity(flat, PhotonBudget(5e-3))
        with pytest.raises(ParameterError):
            cw_shot_noise_sensitivity(self.MODEL, PhotonBudget(0.0))


class TestAveragingGain:
    def test_exact_values(self):
        assert averaging_gain(1) == 1.0
        assert averaging_gain(100) == 10.0

    def test_domain_error(self):
        with pytest.raises(ParameterError):
            averaging_gain(0)

    def test_monte_carlo_residual(self):
        # 100 seeded repeats of a fixed pulse in white noise
        fs, dur = 5000.0, 1.0
        pulse = gen_test_signal(
            TestSignal(kind="biopulse", amplitude=1e-9, pulse_width=20e-3, repetition_rate=2.0),
            fs, dur,
        )
        floor = 100e-12
        single_stds = []
        stack = np.zeros(pulse.n)
        for seed in range(100):
            noisy = compose([pulse, gen_white(floor, fs, dur, seed)])
            stack += noisy.samples
            single_stds.append(rms(noisy.samples - pulse.samples))
        averaged = stack / 100.0
        residual = rms(averaged - pulse.samples)
        expected = np.mean(single_stds) / averaging_gain(100)
        assert residual == pytest.approx(expected, rel=0.15)
