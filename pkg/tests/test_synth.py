import numpy as np
import pytest

from helpers import fft_amplitude, periodogram_asd, width_at_drop
from nvmag.errors import CompositionError, ParameterError
from nvmag.mainsfilter import asd
from nvmag.synth import (
    NoiseEnvironment,
    TestSignal,
    Timeseries,
    compose,
    fundamental_phase_walk,
    gen_laser_drift,
    gen_magnetometer_record,
    gen_mains,
    gen_mains_reference,
    gen_test_signal,
    gen_white,
)

FS = 25000.0


def quiet_env(**kwargs):
    defaults = dict(harmonic_amplitudes={}, phase_walk_sigma=0.0,
                    laser_drift_amplitude=0.0, white_floor=0.0, rng_seed=0)
    defaults.update(kwargs)
    return NoiseEnvironment(**defaults)


class TestTimeseries:
    def test_validation(self):
        with pytest.raises(ParameterError):
            Timeseries(0.0, [1.0, 2.0])
        with pytest.raises(ParameterError):
            Timeseries(100.0, [])
        with pytest.raises(ParameterError):
            Timeseries(100.0, [np.nan, 1.0])
        with pytest.raises(ParameterError):
            Timeseries(100.0, [1.0], unit="furlongs")

    def test_duration(self):
        ts = Timeseries(100.0, np.zeros(250))
        assert ts.duration == 2.5
        assert ts.times()[1] == 0.01


class TestGenMains:
    def test_zero_amplitudes(self):
        rec = gen_mains(quiet_env(), FS, 1.0)
        assert np.all(rec.samples == 0.0)

    def test_deterministic(self):
        env = quiet_env(harmonic_amplitudes={1: 1e-8, 3: 5e-9}, phase_walk_sigma=0.4, rng_seed=11)
        a = gen_mains(env, FS, 5.0)
        b = gen_mains(env, FS, 5.0)
        assert np.array_equal(a.samples, b.samples)

    def test_zero_walk_tone_confined_to_bin(self):
        env = quiet_env(harmonic_amplitudes={1: 1e-8})
        rec = gen_mains(env, FS, 60.0)
        spectrum = np.abs(np.fft.rfft(rec.samples))
        bin50 = round(50 * 60)
        assert np.argmax(spectrum) == bin50
        outside = np.concatenate([spectrum[: bin50 - 1], spectrum[bin50 + 2 :]])
        assert np.max(outside) < 1e-6 * spectrum[bin50]

    def test_phase_walk_broadens_peak(self):
        still = gen_mains(quiet_env(harmonic_amplitudes={1: 1e-8}, rng_seed=3), FS, 60.0)
        walking = gen_mains(
            quiet_env(harmonic_amplitudes={1: 1e-8}, phase_walk_sigma=0.5, rng_seed=3), FS, 60.0
        )
        w_still = width_at_drop(*periodogram_asd(still), band=(45, 55))
        w_walk = width_at_drop(*periodogram_asd(walking), band=(45, 55))
        assert w_walk > w_still


class TestGenWhite:
    def test_zero_floor(self):
        assert np.all(gen_white(0.0, FS, 1.0, 0).samples == 0.0)

    def test_band_median_density(self):
        rec = gen_white(150e-12, FS, 60.0, 7)
        freqs, density = asd(rec)
        band = (freqs >= 10) & (freqs <= 10000)
        assert np.median(density[band]) == pytest.approx(150e-12, rel=0.10)

    def test_sample_variance(self):
        rec = gen_white(150e-12, FS, 60.0, 8)
        expected = (150e-12) ** 2 * FS / 2
        assert np.var(rec.samples) == pytest.approx(expected, rel=0.05)

    def test_negative_floor_rejected(self):
        with pytest.raises(ParameterError):
            gen_white(-1e-12, FS, 1.0, 0)


class TestTestSignal:
    def test_zero_amplitude(self):
        sig = TestSignal(kind="tone", frequency=111.0, amplitude=0.0)
        assert np.all(gen_test_signal(sig, FS, 1.0).samples == 0.0)

    def test_tone_amplitude_exact_bin(self):
        sig = TestSignal(kind="tone", frequency=111.0, amplitude=1e-9)
        rec = gen_test_signal(sig, FS, 60.0)
        assert fft_amplitude(rec, 111.0) == pytest.approx(1e-9, rel=1e-9)

    def test_biopulse_zero_mean(self):
        sig = TestSignal(kind="biopulse", amplitude=1e-9, pulse_width=10e-3, repetition_rate=2.0)
        rec = gen_test_signal(sig, FS, 5.0)
        period = int(FS / sig.repetition_rate)
        l1_per_pulse = np.abs(rec.samples).sum() / 10
        for k in range(10):
            chunk = rec.samples[k * period : (k + 1) * period]
            assert abs(chunk.sum()) < 1e-12 * l1_per_pulse

    def test_kind_validation(self):
        with pytest.raises(ParameterError):
            TestSignal(kind="square")
        with pytest.raises(ParameterError):
            TestSignal(kind="tone", frequency=0.0)
        with pytest.raises(ParameterError):
            TestSignal(kind="biopulse", pulse_width=0.0)


class TestCompose:
    def test_identity(self):
        x = gen_white(1e-12, FS, 1.0, 5)
        assert np.array_equal(compose([x]).samples, x.samples)

    def test_zero_padding_identity(self):
        x = gen_white(1e-12, FS, 1.0, 5)
        zeros = Timeseries(FS, np.zeros(x.n), x.unit)
        assert np.array_equal(compose([x, zeros]).samples, x.samples)

    def test_linearity(self):
        x = gen_white(1e-12, FS, 1.0, 5)
        y = gen_white(2e-12, FS, 1.0, 6)
        a, b = 3.0, -0.5
        ax = Timeseries(FS, a * x.samples, x.unit)
        by = Timeseries(FS, b * y.samples, y.unit)
        assert np.array_equal(compose([ax, by]).samples, a * x.samples + b * y.samples)

    def test_root_sum_square_of_floors(self):
        w1 = gen_white(100e-12, FS, 60.0, 21)
        w2 = gen_white(150e-12, FS, 60.0, 22)
        freqs, density = asd(compose([w1, w2]))
        band = (freqs >= 10) & (freqs <= 10000)
        assert np.median(density[band]) == pytest.approx(np.hypot(100e-12, 150e-12), rel=0.10)

    def test_mismatch_errors(self):
        x = gen_white(1e-12, FS, 1.0, 5)
        with pytest.raises(CompositionError):
            compose([])
        with pytest.raises(CompositionError):
            compose([x, gen_white(1e-12, FS / 2, 2.0, 5)])
        with pytest.raises(CompositionError):
            compose([x, Timeseries(FS, np.zeros(x.n - 1))])
        with pytest.raises(CompositionError):
            compose([x, Timeseries(FS, np.zeros(x.n), unit="volts")])


class TestMainsReference:
    def test_shares_fundamental_walk(self):
        env = quiet_env(harmonic_amplitudes={1: 1e-8, 3: 2e-8}, phase_walk_sigma=0.4, rng_seed=13)
        ref = gen_mains_reference(env, FS, 10.0)
        walk = fundamental_phase_walk(env, FS, 10.0)
        t = np.arange(ref.n) / FS
        assert np.allclose(ref.samples, np.sin(2 * np.pi * 50 * t + walk), atol=1e-12)

    def test_zero_walk_pure_sine(self):
        env = quiet_env(harmonic_amplitudes={1: 1e-8})
        ref = gen_mains_reference(env, FS, 10.0)
        t = np.arange(ref.n) / FS
        assert np.allclose(ref.samples, np.sin(2 * np.pi * 50 * t), atol=1e-12)

    def test_correlation_with_fundamental(self):
        env = quiet_env(harmonic_amplitudes={1: 1e-8}, phase_walk_sigma=0.5, rng_seed=2)
        ref = gen_mains_reference(env, FS, 30.0)
        mains = gen_mains(env, FS, 30.0)
        corr = np.corrcoef(ref.samples, mains.samples)[0, 1]
        assert corr >= 0.99


class TestLaserDrift:
    def test_one_over_f_band_profile(self):
        env = quiet_env(laser_drift_amplitude=1e-9, rng_seed=5)
        rec = gen_laser_drift(env, 2000.0, 120.0)
        freqs, density = asd(rec, segment_length=4000)
        medians = []
        for lo in (1, 2, 4, 8, 16, 32):
            band = (freqs >= lo) & (freqs < 2 * lo)
            medians.append(np.median(density[band]))
        for upper, lower in zip(medians, medians[1:]):
            ratio = upper / lower
            # expect one octave of 1/f: factor 2, tolerance 3 dB each way
            assert ratio > 1.0
            assert 2 / 10 ** (3 / 20) <= ratio <= 2 * 10 ** (3 / 20)

    def test_zero_amplitude(self):
        assert np.all(gen_laser_drift(quiet_env(), FS, 1.0).samples == 0.0)


def test_full_record_reproducibility():
    env = NoiseEnvironment(rng_seed=99)
    sig = TestSignal(kind="tone", frequency=111.0, amplitude=1e-9)
    a = gen_magnetometer_record(env, 5000.0, 10.0, sig)
    b = gen_magnetometer_record(env, 5000.0, 10.0, sig)
    assert np.array_equal(a.samples, b.samples)
    other = gen_magnetometer_record(NoiseEnvironment(rng_seed=100), 5000.0, 10.0, sig)
    assert not np.array_equal(a.samples, other.samples)
