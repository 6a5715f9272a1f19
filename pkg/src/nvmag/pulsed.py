"""Pulsed readout model: reinitialisation decay, fits and bandwidth limits.

The readout difference between microwave-on and microwave-off laser pulses
decays exponentially while the ensemble repolarises; the decay time shortens
with laser power (interpolated linearly between configured anchor powers).
The millisecond-scale readout caps the usable field-sensing bandwidth at
1 / (n_readouts * cycle_time).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit

from .errors import FitError, ParameterError


@dataclass(frozen=True)
class PulseSequence:
    """Initialise / microwave / readout cycle timing."""

    init_duration: float = 100e-3
    mw_duration: float = 680e-9
    readout_duration: float = 4e-3
    n_readouts_per_cycle: int = 2

    def __post_init__(self):
        for name in ("init_duration", "mw_duration", "readout_duration"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be > 0")
        if self.n_readouts_per_cycle not in (1, 2, 3):
            raise ParameterError("n_readouts_per_cycle must be 1, 2 or 3")


@dataclass(frozen=True)
class PulsedReadoutModel:
    """Readout-difference amplitude and power-dependent reinitialisation decay.

    ``decay_time_at_powers`` anchors the decay time at measured laser powers;
    queries between anchors interpolate linearly, outside they clamp (with a
    warning). Decay times must not increase with power.
    """

    delta_v0: float = 1.0
    decay_time_at_powers: dict = field(
        default_factory=lambda: {20e-3: 1.0e-3, 218e-3: 0.75e-3}
    )
    power_range: tuple = (20e-3, 218e-3)
    intensity: float = 1.5e3

    def __post_init__(self):
        if not self.decay_time_at_powers:
            raise ParameterError("decay_time_at_powers must not be empty")
        powers = sorted(self.decay_time_at_powers)
        taus = [self.decay_time_at_powers[p] for p in powers]
        if any(tau <= 0 for tau in taus):
            raise ParameterError("decay times must be > 0")
        if any(t2 > t1 for t1, t2 in zip(taus, taus[1:])):
            raise ParameterError("decay times must be non-increasing with power")
        lo, hi = self.power_range
        if powers[0] < lo or powers[-1] > hi:
            raise ParameterError("configured powers must lie inside power_range")

    def decay_time(self, power: float) -> float:
        """Decay time at ``power``, linearly interpolated and range-clamped."""
        powers = np.array(sorted(self.decay_time_at_powers))
        taus = np.array([self.decay_time_at_powers[p] for p in powers])
        lo, hi = self.power_range
        if power < lo or power > hi:
            warnings.warn(
                f"power {power} W outside configured range [{lo}, {hi}] W; clamping",
                stacklevel=2,
            )
            power = min(max(power, lo), hi)
        return float(np.interp(power, powers, taus))


@dataclass(frozen=True)
class RabiModel:
    """Ensemble pi-pulse timing with optional inhomogeneous damping."""

    pi_time: float = 680e-9
    rabi_decay: float = math.inf

    def __post_init__(self):
        if not self.pi_time > 0:
            raise ParameterError("pi_time must be > 0")
        if not self.rabi_decay > 0:
            raise ParameterError("rabi_decay must be > 0")


def readout_difference(model: PulsedReadoutModel, t, power: float):
    """MW-on minus MW-off readout difference at time ``t`` into the pulse."""
    tau = model.decay_time(power)
    diff = model.delta_v0 * np.exp(-np.asarray(t, dtype=float) / tau)
    return diff if diff.ndim else float(diff)


def _exp_rate_model(t, amplitude, rate):
    # rate = 1/tau; fitting the rate keeps the optimiser away from the 1/tau
    # singularity and lets non-decaying data converge to rate <= 0
    return amplitude * np.exp(-rate * t)


def fit_exponential(times, values, noise_std: float = 0.0):
    """Least-squares fit of A exp(-t/tau) with worst-case error estimates.

    Returns ``(amplitude, decay_time, (amplitude_error, decay_error))``. The
    errors are the maximum parameter deviation producible by perturbing every
    sample by +/- noise_std (peak-to-peak criterion): noise_std times the L1
    norm of each row of the linearised pseudo-inverse. Raises
    :class:`FitError` when the best fit does not decay.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if t.size != y.size:
        raise ParameterError("times and values must have the same length")
    if t.size < 8:
        raise ParameterError("need at least 8 samples to fit")
    if noise_std < 0:
        raise ParameterError("noise_std must be >= 0")
    span = float(np.ptp(t))
    if span <= 0:
        raise ParameterError("times must span a nonzero interval")

    # log-linear starting point where the data allows it
    positive = y > 0
    if np.count_nonzero(positive) >= 2:
        slope, intercept = np.polyfit(t[positive], np.log(y[positive]), 1)
        rate0 = -slope
        amp0 = math.exp(intercept)
    else:
        rate0, amp0 = 2.0 / span, float(y[0]) if y[0] != 0 else 1.0
    try:
        params, _ = curve_fit(_exp_rate_model, t, y, p0=(amp0, rate0), maxfev=10000)
    except RuntimeError as exc:
        raise FitError(f"exponential fit did not converge: {exc}") from exc
    amplitude, rate = float(params[0]), float(params[1])
    if not np.isfinite(rate) or rate <= 0:
        raise FitError("best-fit decay time is not positive (non-decaying data)")
    tau = 1.0 / rate

    decay = np.exp(-t / tau)
    jac = np.column_stack([decay, amplitude * t / tau**2 * decay])
    pinv = np.linalg.pinv(jac)
    errors = noise_std * np.sum(np.abs(pinv), axis=1)
    return amplitude, tau, (float(errors[0]), float(errors[1]))


def fit_linear(x, y) -> tuple[float, float]:
    """Ordinary least squares line fit, returning (slope, intercept)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size:
        raise ParameterError("x and y must have the same length")
    if x.size < 2:
        raise ParameterError("need at least 2 points")
    if np.ptp(x) == 0:
        raise ParameterError("x values are all equal")
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept)


def optimal_pi_time(rabi: RabiModel, scan_max: float | None = None, resolution: float = 1e-9) -> float:
    """Microwave pulse length maximising the readout contrast.

    Scans contrast(tau) = sin^2(pi tau / (2 pi_time)) * exp(-tau/rabi_decay)
    over [0, scan_max] at ``resolution`` with parabolic refinement; the scan
    must cover [0, 2 * pi_time]. Undamped models peak exactly at pi_time.
    """
    if scan_max is None:
        scan_max = 2.0 * rabi.pi_time
    if scan_max < 2.0 * rabi.pi_time:
        raise ParameterError("scan must cover [0, 2 * pi_time]")
    if not resolution > 0:
        raise ParameterError("resolution must be > 0")
    grid = np.arange(0.0, scan_max + resolution, resolution)
    contrast = np.sin(np.pi * grid / (2.0 * rabi.pi_time)) ** 2
    if math.isfinite(rabi.rabi_decay):
        contrast = contrast * np.exp(-grid / rabi.rabi_decay)
    i = int(np.argmax(contrast))
    best = grid[i]
    if 0 < i < grid.size - 1:
        y0, y1, y2 = contrast[i - 1], contrast[i], contrast[i + 1]
        denom = y0 - 2.0 * y1 + y2
        if denom != 0.0:
            best = grid[i] + 0.5 * (y0 - y2) / denom * resolution
    return float(best)


def sensing_bandwidth(n_readouts: int, cycle_time_per_readout: float = 4e-3) -> float:
    """Field-sensing bandwidth 1 / (n_readouts * cycle_time_per_readout)."""
    if int(n_readouts) != n_readouts or n_readouts < 1:
        raise ParameterError("n_readouts must be an integer >= 1")
    if not cycle_time_per_readout > 0:
        raise ParameterError("cycle_time_per_readout must be > 0")
    return 1.0 / (n_readouts * cycle_time_per_readout)
