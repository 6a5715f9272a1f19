"""Reproducible synthetic magnetometer records.

A measurement record is built from four additive ingredients: mains pickup
(harmonics of 50 Hz whose phases wander as independent Gaussian random
walks), slow 1/f laser drift, a flat white noise floor, and an injected test
signal. Every generator is a deterministic function of (config, seed), so
identical inputs give bit-identical records; independent streams are derived
from the seed with fixed per-generator namespaces.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CompositionError, ParameterError

VALID_UNITS = ("tesla", "volts", "dimensionless")

# rng namespace tags so the per-generator streams never collide
_MAINS_STREAM = 1
_WHITE_STREAM = 2
_DRIFT_STREAM = 3
_REFERENCE_STREAM = 4


@dataclass(eq=False)
class Timeseries:
    """Uniformly sampled record. Treat instances as immutable once built."""

    sample_rate: float
    samples: np.ndarray
    unit: str = "tesla"

    def __post_init__(self):
        if not self.sample_rate > 0:
            raise ParameterError("sample_rate must be > 0")
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 1 or self.samples.size < 1:
            raise ParameterError("samples must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(self.samples)):
            raise ParameterError("samples must be finite")
        if self.unit not in VALID_UNITS:
            raise ParameterError(f"unit must be one of {VALID_UNITS}")

    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.n / self.sample_rate

    def times(self) -> np.ndarray:
        return np.arange(self.n) / self.sample_rate


@dataclass(frozen=True)
class NoiseEnvironment:
    """Mains, drift and floor parameters of the measurement environment.

    ``harmonic_amplitudes`` maps harmonic index k to the tesla amplitude of
    the k * mains_fundamental component. ``phase_walk_sigma`` is the random
    walk rate in rad/sqrt(s); ``laser_drift_amplitude`` is the 1/f drift ASD
    at 1 Hz; ``white_floor`` the flat ASD in T/sqrt(Hz).
    """

    mains_fundamental: float = 50.0
    harmonic_amplitudes: dict = field(default_factory=lambda: {1: 8e-8, 3: 8e-8, 5: 8e-8})
    phase_walk_sigma: float = 0.3
    laser_drift_amplitude: float = 1e-9
    white_floor: float = 150e-12
    rng_seed: int = 0

    def __post_init__(self):
        if not self.mains_fundamental > 0:
            raise ParameterError("mains_fundamental must be > 0")
        for k, amp in self.harmonic_amplitudes.items():
            if int(k) != k or k < 1:
                raise ParameterError("harmonic indices must be integers >= 1")
            if amp < 0:
                raise ParameterError("harmonic amplitudes must be >= 0")
        if self.phase_walk_sigma < 0:
            raise ParameterError("phase_walk_sigma must be >= 0")
        if self.laser_drift_amplitude < 0:
            raise ParameterError("laser_drift_amplitude must be >= 0")
        if self.white_floor < 0:
            raise ParameterError("white_floor must be >= 0")


@dataclass(frozen=True)
class TestSignal:
    """Injected test signal: a calibration tone or a repeated biopulse."""

    __test__ = False  # not a pytest class despite the name

    kind: str = "tone"
    frequency: float = 111.0
    amplitude: float = 0.0
    pulse_width: float = 10e-3
    repetition_rate: float = 2.0

    def __post_init__(self):
        if self.kind not in ("tone", "biopulse"):
            raise ParameterError("kind must be 'tone' or 'biopulse'")
        if self.amplitude < 0:
            raise ParameterError("amplitude must be >= 0")
        if self.kind == "tone" and not self.frequency > 0:
            raise ParameterError("tone frequency must be > 0")
        if self.kind == "biopulse":
            if not self.pulse_width > 0:
                raise ParameterError("pulse_width must be > 0")
            if not self.repetition_rate > 0:
                raise ParameterError("repetition_rate must be > 0")


def _n_samples(sample_rate: float, duration: float) -> int:
    n = int(round(sample_rate * duration))
    if n < 2:
        raise ParameterError("record must contain at least 2 samples")
    return n


def _phase_walk(env: NoiseEnvironment, sample_rate: float, n: int, harmonic: int) -> np.ndarray:
    rng = np.random.default_rng([env.rng_seed, _MAINS_STREAM, harmonic])
    increments = rng.normal(0.0, env.phase_walk_sigma / np.sqrt(sample_rate), n)
    return np.cumsum(increments)


def fundamental_phase_walk(env: NoiseEnvironment, sample_rate: float, duration: float) -> np.ndarray:
    """Per-sample phase walk of the fundamental, as used by the generators."""
    return _phase_walk(env, sample_rate, _n_samples(sample_rate, duration), 1)


def gen_mains(env: NoiseEnvironment, sample_rate: float, duration: float) -> Timeseries:
    """Mains pickup: sum of harmonics with independently drifting phases."""
    n = _n_samples(sample_rate, duration)
    t = np.arange(n) / sample_rate
    out = np.zeros(n)
    for k in sorted(env.harmonic_amplitudes):
        amp = env.harmonic_amplitudes[k]
        if amp == 0.0:
            continue
        walk = _phase_walk(env, sample_rate, n, k)
        out += amp * np.sin(2.0 * np.pi * k * env.mains_fundamental * t + walk)
    return Timeseries(sample_rate, out, "tesla")


def gen_mains_reference(
    env: NoiseEnvironment, sample_rate: float, duration: float, noise_std: float = 0.0
) -> Timeseries:
    """Unit-amplitude fundamental sharing the same phase walk as :func:`gen_mains`.

    Stands in for the transformer-tap readout of the mains supply; optional
    independent white noise models an imperfect tap.
    """
    n = _n_samples(sample_rate, duration)
    t = np.arange(n) / sample_rate
    walk = _phase_walk(env, sample_rate, n, 1)
    out = np.sin(2.0 * np.pi * env.mains_fundamental * t + walk)
    if noise_std > 0.0:
        rng = np.random.default_rng([env.rng_seed, _REFERENCE_STREAM])
        out = out + rng.normal(0.0, noise_std, n)
    return Timeseries(sample_rate, out, "dimensionless")


def gen_white(floor: float, sample_rate: float, duration: float, seed) -> Timeseries:
    """White noise with one-sided amplitude spectral density flat at ``floor``.

    Per-sample std is floor * sqrt(sample_rate / 2).
    """
    if floor < 0:
        raise ParameterError("floor must be >= 0")
    n = _n_samples(sample_rate, duration)
    if floor == 0.0:
        return Timeseries(sample_rate, np.zeros(n), "tesla")
    rng = np.random.default_rng(seed)
    std = floor * np.sqrt(sample_rate / 2.0)
    return Timeseries(sample_rate, rng.normal(0.0, std, n), "tesla")


def gen_laser_drift(env: NoiseEnvironment, sample_rate: float, duration: float) -> Timeseries:
    """Low-frequency laser drift synthesised with a 1/f amplitude spectrum.

    Random-phase spectral synthesis: each rFFT bin gets a complex Gaussian
    coefficient scaled so the expected one-sided ASD is
    laser_drift_amplitude * (1 Hz / f). The DC bin is zero.
    """
    n = _n_samples(sample_rate, duration)
    amp = env.laser_drift_amplitude
    if amp == 0.0:
        return Timeseries(sample_rate, np.zeros(n), "tesla")
    rng = np.random.default_rng([env.rng_seed, _DRIFT_STREAM])
    freqs = np.fft.rfftfreq(n, 1.0 / sample_rate)
    psd = np.zeros_like(freqs)
    psd[1:] = (amp / freqs[1:]) ** 2
    # E|X_j|^2 = psd * fs * n / 2 makes the one-sided periodogram unbiased
    sigma = np.sqrt(psd * sample_rate * n / 4.0)
    coeff = rng.normal(0.0, 1.0, freqs.size) * sigma + 1j * rng.normal(0.0, 1.0, freqs.size) * sigma
    coeff[0] = 0.0
    if n % 2 == 0:
        coeff[-1] = coeff[-1].real * np.sqrt(2.0)
    return Timeseries(sample_rate, np.fft.irfft(coeff, n), "tesla")


def gen_test_signal(sig: TestSignal, sample_rate: float, duration: float) -> Timeseries:
    """Tone: A sin(2 pi f t). Biopulse: Gaussian-windowed single-cycle sines.

    Biopulse centres are snapped to the sample grid so each pulse is exactly
    antisymmetric about its centre, making every pulse zero-mean.
    """
    n = _n_samples(sample_rate, duration)
    t = np.arange(n) / sample_rate
    if sig.amplitude == 0.0:
        return Timeseries(sample_rate, np.zeros(n), "tesla")
    if sig.kind == "tone":
        return Timeseries(sample_rate, sig.amplitude * np.sin(2.0 * np.pi * sig.frequency * t), "tesla")
    out = np.zeros(n)
    width = sig.pulse_width
    sigma = width / 6.0
    n_pulses = int(np.floor(duration * sig.repetition_rate))
    for k in range(n_pulses):
        center_idx = int(round((k + 0.5) / sig.repetition_rate * sample_rate))
        half = int(np.floor(width / 2.0 * sample_rate))
        lo = max(center_idx - half, 0)
        hi = min(center_idx + half, n - 1)
        if lo >= hi:
            continue
        tau = (np.arange(lo, hi + 1) - center_idx) / sample_rate
        out[lo : hi + 1] += sig.amplitude * np.exp(-(tau**2) / (2.0 * sigma**2)) * np.sin(
            2.0 * np.pi * tau / width
        )
    return Timeseries(sample_rate, out, "tesla")


def compose(parts) -> Timeseries:
    """Pointwise sum of records with identical rate, length and unit."""
    parts = list(parts)
    if not parts:
        raise CompositionError("nothing to compose")
    first = parts[0]
    for p in parts[1:]:
        if p.sample_rate != first.sample_rate:
            raise CompositionError("sample rates differ")
        if p.n != first.n:
            raise CompositionError("lengths differ")
        if p.unit != first.unit:
            raise CompositionError("units differ")
    total = np.zeros(first.n)
    for p in parts:
        total += p.samples
    return Timeseries(first.sample_rate, total, first.unit)


def gen_magnetometer_record(
    env: NoiseEnvironment,
    sample_rate: float,
    duration: float,
    signal: TestSignal | None = None,
) -> Timeseries:
    """Full synthetic record: mains + laser drift + white floor (+ test signal)."""
    parts = [
        gen_mains(env, sample_rate, duration),
        gen_laser_drift(env, sample_rate, duration),
        gen_white(env.white_floor, sample_rate, duration, [env.rng_seed, _WHITE_STREAM]),
    ]
    if signal is not None:
        parts.append(gen_test_signal(signal, sample_rate, duration))
    return compose(parts)
