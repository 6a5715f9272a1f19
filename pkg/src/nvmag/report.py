"""Figure rendering for the report scenario.

Presentation only: figures are drawn from previously written CSV series and
never feed back into any computation. SVG output keeps the report viewable
without raster tooling.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_asd_overlay(before, after, path, title="Amplitude spectral density"):
    """Overlay of (frequencies, density) pairs before and after filtering."""
    fig, ax = plt.subplots(figsize=(8, 5))
    ax.loglog(before[0][1:], before[1][1:], label="before", color="tab:blue", lw=0.8)
    ax.loglog(after[0][1:], after[1][1:], label="after", color="tab:green", lw=0.8)
    ax.set_xlabel("Frequency (Hz)")
    ax.set_ylabel("ASD (T/$\\sqrt{\\mathrm{Hz}}$)")
    ax.set_title(title)
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def render_spectrogram(frequencies, matrix, path, title="Normalised spectrogram"):
    """Iteration-by-frequency heat map of normalised band spectra."""
    matrix = np.atleast_2d(matrix)
    fig, ax = plt.subplots(figsize=(8, 5))
    extent = [frequencies[0], frequencies[-1], matrix.shape[0] - 0.5, -0.5]
    im = ax.imshow(matrix, aspect="auto", extent=extent, cmap="viridis")
    ax.set_xlabel("Frequency (Hz)")
    ax.set_ylabel("Iteration")
    ax.set_title(title)
    fig.colorbar(im, ax=ax, label="normalised ASD")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def render_timeseries_overlay(before, after, path, max_points=20000, title="Record"):
    """Time-domain before/after overlay, decimated for plotting only."""
    fig, ax = plt.subplots(figsize=(8, 4))
    for ts, label, color in ((before, "before", "tab:blue"), (after, "after", "tab:green")):
        stride = max(ts.n // max_points, 1)
        ax.plot(ts.times()[::stride], ts.samples[::stride], label=label, lw=0.5, color=color)
    ax.set_xlabel("Time (s)")
    ax.set_ylabel(f"Signal ({before.unit})")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
