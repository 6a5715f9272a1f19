"""Mains-noise removal pipeline and spectral estimation.

Stage order: zero-phase highpass, per-harmonic phase tracking against the
mains reference followed by coherent subtraction, a notch bank, and a final
zero-phase lowpass. All IIR stages run forward and backward so the chain has
zero net group delay and preserves the timing of in-band signals.

Phase tracking correlates sin/cos quadratures at the target frequency against
the reference in sliding windows; harmonic phases follow the fundamental walk
scaled by the frequency ratio plus a constant per-harmonic offset (inductive
pickup shifts the harmonics by a fixed amount). Subtraction fits one amplitude
per window to a template with the tracked instantaneous phase; the fitted
components are cross-faded at window boundaries (triangular 50% overlap-add,
equivalent to linearly interpolating the per-window amplitudes).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from .errors import ParameterError
from .synth import Timeseries


@dataclass(frozen=True)
class FilterChainConfig:
    """Ordered parameters of the noise-removal chain."""

    highpass_cutoff: float = 10.0
    tracked_harmonics: tuple = (50.0, 150.0, 250.0)
    tracking_window: float = 1.0
    phase_offset: object = 0.0  # scalar or one offset per tracked harmonic
    subtraction_passes: int = 1
    notch_centers: tuple | None = None  # None -> tracked_harmonics
    notch_bandwidth: float = 1.0
    lowpass_cutoff: float = 5000.0

    def __post_init__(self):
        if not self.highpass_cutoff > 0:
            raise ParameterError("highpass_cutoff must be > 0")
        if not self.lowpass_cutoff > 0:
            raise ParameterError("lowpass_cutoff must be > 0")
        if not self.notch_bandwidth > 0:
            raise ParameterError("notch_bandwidth must be > 0")
        if int(self.subtraction_passes) != self.subtraction_passes or self.subtraction_passes < 1:
            raise ParameterError("subtraction_passes must be an integer >= 1")
        harmonics = tuple(self.tracked_harmonics)
        if harmonics:
            if any(f <= 0 for f in harmonics):
                raise ParameterError("tracked harmonics must be > 0")
            if self.tracking_window * min(harmonics) < 10.0:
                raise ParameterError(
                    "tracking_window must cover >= 10 cycles of the lowest tracked harmonic"
                )
        object.__setattr__(self, "tracked_harmonics", harmonics)
        if self.notch_centers is not None:
            object.__setattr__(self, "notch_centers", tuple(self.notch_centers))

    def phase_offsets(self) -> np.ndarray:
        offs = np.broadcast_to(np.asarray(self.phase_offset, dtype=float), (len(self.tracked_harmonics),))
        return np.array(offs)

    def effective_notch_centers(self) -> tuple:
        return self.tracked_harmonics if self.notch_centers is None else self.notch_centers


@dataclass(eq=False)
class PhaseSeries:
    """Unwrapped phase and amplitude estimates at window-centre times."""

    times: np.ndarray
    phases: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.phases = np.asarray(self.phases, dtype=float)
        self.amplitudes = np.asarray(self.amplitudes, dtype=float)
        if not (self.times.size == self.phases.size == self.amplitudes.size):
            raise ParameterError("times, phases and amplitudes must have equal length")
        if self.times.size >= 2 and not np.all(np.diff(self.times) > 0):
            raise ParameterError("times must be strictly increasing")


def zero_phase_filter(
    ts: Timeseries,
    kind: str,
    cutoff: float | None = None,
    center: float | None = None,
    bandwidth: float = 1.0,
    order: int = 2,
) -> Timeseries:
    """Forward-backward IIR filter with zero net group delay.

    ``kind`` is 'highpass', 'lowpass' (Butterworth at ``cutoff``) or 'notch'
    (at ``center`` with the given -3 dB ``bandwidth``). Output length equals
    input length.
    """
    nyquist = ts.sample_rate / 2.0
    if kind in ("highpass", "lowpass"):
        if cutoff is None or not 0 < cutoff < nyquist:
            raise ParameterError(f"{kind} cutoff must lie in (0, Nyquist)")
        sos = sps.butter(order, cutoff, btype=kind, fs=ts.sample_rate, output="sos")
        # reflect well past the filter's ring-down so the startup transient
        # decays inside the padding instead of inside the record
        padlen = min(ts.n - 1, int(10.0 * ts.sample_rate / cutoff))
        filtered = sps.sosfiltfilt(sos, ts.samples, padlen=padlen)
    elif kind == "notch":
        if center is None or not 0 < center < nyquist:
            raise ParameterError("notch center must lie in (0, Nyquist)")
        if not bandwidth > 0:
            raise ParameterError("notch bandwidth must be > 0")
        b, a = sps.iirnotch(center, center / bandwidth, fs=ts.sample_rate)
        padlen = min(ts.n - 1, int(10.0 * ts.sample_rate / bandwidth))
        filtered = sps.filtfilt(b, a, ts.samples, padlen=padlen)
    else:
        raise ParameterError("kind must be 'highpass', 'lowpass' or 'notch'")
    return Timeseries(ts.sample_rate, filtered, ts.unit)


def _window_sums(values: np.ndarray, n_window: int, hop: int):
    # running-sum framing: (window sums, window start indices)
    csum = np.concatenate(([0.0], np.cumsum(values)))
    starts = np.arange(0, values.size - n_window + 1, hop)
    return csum[starts + n_window] - csum[starts], starts


def estimate_phase_drift(
    reference: Timeseries, f: float, window: float, hop: float | None = None
) -> PhaseSeries:
    """Track the phase of the ``f`` component of the reference over time.

    Correlates sin/cos quadratures at ``f`` against the reference in sliding
    windows of ``window`` seconds (hop defaults to window/2), returning the
    atan2 phase (unwrapped across windows) and amplitude per window. The
    window must cover at least 10 cycles of ``f`` and the record at least two
    windows.
    """
    if not f > 0:
        raise ParameterError("frequency must be > 0")
    if f * window < 10.0:
        raise ParameterError("window must cover >= 10 cycles of the tracked frequency")
    if reference.duration < 2.0 * window:
        raise ParameterError("reference must be at least two windows long")
    fs = reference.sample_rate
    n_window = int(round(window * fs))
    n_hop = max(int(round((window / 2.0 if hop is None else hop) * fs)), 1)
    t = reference.times()
    in_phase = reference.samples * np.sin(2.0 * np.pi * f * t)
    quadrature = reference.samples * np.cos(2.0 * np.pi * f * t)
    i_sums, starts = _window_sums(in_phase, n_window, n_hop)
    q_sums, _ = _window_sums(quadrature, n_window, n_hop)
    phases = np.unwrap(np.arctan2(q_sums, i_sums))
    amplitudes = 2.0 * np.hypot(i_sums, q_sums) / n_window
    centers = (starts + (n_window - 1) / 2.0) / fs
    return PhaseSeries(centers, phases, amplitudes)


def coherent_subtract(
    ts: Timeseries,
    phase: PhaseSeries,
    f: float,
    phase_offset: float = 0.0,
    window: float = 1.0,
) -> Timeseries:
    """Fit and remove the tracked sinusoid at ``f`` from the record.

    Per window the least-squares amplitude of sin(2 pi f t + phi(t) + offset)
    is fitted and the component subtracted; amplitudes are cross-faded across
    50%-overlapped windows. phi(t) comes from linear interpolation of the
    phase series (held constant beyond its ends).
    """
    if phase.times[0] < 0 or phase.times[-1] > ts.duration:
        raise ParameterError("phase series does not belong to this record")
    fs = ts.sample_rate
    t = ts.times()
    phi = np.interp(t, phase.times, phase.phases)
    template = np.sin(2.0 * np.pi * f * t + phi + phase_offset)
    n_window = min(int(round(window * fs)), ts.n)
    if n_window < 2:
        raise ParameterError("subtraction window is too short")
    hop = max(n_window // 2, 1)
    xs_sums, starts = _window_sums(ts.samples * template, n_window, hop)
    ss_sums, _ = _window_sums(template * template, n_window, hop)
    with np.errstate(invalid="ignore", divide="ignore"):
        amps = np.where(ss_sums > 0.0, xs_sums / ss_sums, 0.0)
    centers = (starts + (n_window - 1) / 2.0) / fs
    if centers.size == 1:
        envelope = np.full(ts.n, amps[0])
    else:
        envelope = np.interp(t, centers, amps)
    return Timeseries(fs, ts.samples - envelope * template, ts.unit)


def run_pipeline(ts: Timeseries, reference: Timeseries, cfg: FilterChainConfig) -> Timeseries:
    """Full chain: highpass, tracked harmonic subtraction, notch bank, lowpass.

    The first tracked harmonic defines the reference fundamental; phases of
    the others are derived as (f_k / f_1) * phi_1 plus the configured offset.
    Additional subtraction passes re-estimate the phase from the residual
    record itself, which picks up additive same-frequency sources whose phase
    differs from the reference.
    """
    if ts.sample_rate != reference.sample_rate:
        raise ParameterError("record and reference sample rates differ")
    out = zero_phase_filter(ts, "highpass", cutoff=cfg.highpass_cutoff)
    harmonics = cfg.tracked_harmonics
    if harmonics:
        base = harmonics[0]
        base_phase = estimate_phase_drift(reference, base, cfg.tracking_window)
        for f_h, offset in zip(harmonics, cfg.phase_offsets()):
            ratio = f_h / base
            derived = PhaseSeries(
                base_phase.times, base_phase.phases * ratio, base_phase.amplitudes
            )
            out = coherent_subtract(out, derived, f_h, offset, cfg.tracking_window)
            for _ in range(cfg.subtraction_passes - 1):
                own = estimate_phase_drift(out, f_h, cfg.tracking_window)
                out = coherent_subtract(out, own, f_h, 0.0, cfg.tracking_window)
    for center in cfg.effective_notch_centers():
        out = zero_phase_filter(out, "notch", center=center, bandwidth=cfg.notch_bandwidth)
    return zero_phase_filter(out, "lowpass", cutoff=cfg.lowpass_cutoff)


def asd(ts: Timeseries, segment_length: int | None = None, window: str = "hann"):
    """Welch one-sided amplitude spectral density in unit/sqrt(Hz).

    Hann segments with 50% overlap and the standard window power correction,
    so integrating the squared density recovers the record variance
    (Parseval). Returns (frequencies, density).
    """
    n = ts.n
    if segment_length is None:
        segment_length = min(n, int(round(ts.sample_rate)))
    if segment_length > n:
        raise ParameterError("segment_length exceeds record length")
    freqs, psd = sps.welch(
        ts.samples,
        fs=ts.sample_rate,
        window=window,
        nperseg=segment_length,
        scaling="density",
    )
    return freqs, np.sqrt(psd)


def spectrogram(records, band, window: str = "hann"):
    """Stack of normalised band-limited ASDs, one full-record spectrum per row.

    Each row is that record's ASD restricted to ``band = (lo, hi)`` and
    divided by its own maximum. Returns (frequencies, matrix).
    """
    records = list(records)
    if not records:
        raise ParameterError("no records given")
    fs = records[0].sample_rate
    for r in records[1:]:
        if r.sample_rate != fs:
            raise ParameterError("records must share a sample rate")
    # one frequency grid for all rows
    n_common = min(r.n for r in records)
    lo, hi = band
    rows = []
    freqs_band = None
    for r in records:
        freqs, density = asd(r, segment_length=n_common, window=window)
        mask = (freqs >= lo) & (freqs <= hi)
        if freqs_band is None:
            freqs_band = freqs[mask]
        row = density[mask]
        peak = np.max(row)
        rows.append(row / peak if peak > 0 else row)
    return freqs_band, np.vstack(rows)


def tone_projection(ts: Timeseries, f: float) -> tuple[float, float]:
    """Amplitude and phase of the ``f`` component by direct FFT projection.

    Exact for tones completing an integer number of cycles in the record.
    A component a*sin(2 pi f t + p) returns amplitude a and phase p - pi/2.
    """
    t = ts.times()
    z = 2.0 * np.mean(ts.samples * np.exp(-2j * np.pi * f * t))
    return float(np.abs(z)), float(np.angle(z))
