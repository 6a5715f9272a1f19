"""Shared measurement oracles for the test suite.

These stay deliberately independent of the library implementations they are
used to check: widths and peaks are read straight off FFT bins, slopes come
from finite differences.
"""

import numpy as np

from nvmag.mainsfilter import asd


def band_peak(freqs, density, center, half_width):
    """Largest density value within +/- half_width of center."""
    mask = np.abs(freqs - center) <= half_width
    return float(np.max(density[mask]))


def width_at_drop(freqs, density, band, drop_db=20.0):
    """Total width (Hz) of bins within drop_db of the band peak."""
    lo, hi = band
    mask = (freqs >= lo) & (freqs <= hi)
    f, d = freqs[mask], density[mask]
    threshold = np.max(d) * 10.0 ** (-drop_db / 20.0)
    df = freqs[1] - freqs[0]
    return float(np.count_nonzero(d >= threshold)) * df


def periodogram_asd(ts):
    """Full-record boxcar ASD: finest frequency resolution, no window bias."""
    return asd(ts, segment_length=ts.n, window="boxcar")


def fft_amplitude(ts, f):
    """Tone amplitude by direct projection (exact for integer cycles)."""
    t = np.arange(ts.n) / ts.sample_rate
    return float(2.0 * np.abs(np.mean(ts.samples * np.exp(-2j * np.pi * f * t))))


def brute_force_max_slope(fn, lo, hi, step):
    """Finite-difference scan for the argument maximising |dfn/dx|."""
    grid = np.arange(lo, hi + step, step)
    values = fn(grid)
    slopes = np.abs(np.diff(values) / step)
    i = int(np.argmax(slopes))
    return float((grid[i] + grid[i + 1]) / 2.0)


def rms(x):
    return float(np.sqrt(np.mean(np.square(x))))
