"""Record, spectrum, image and summary file formats.

Records are CSV with one metadata comment line followed by a header row:

    # sample_rate_hz=<repr> seed=<int>
    time_s,value,unit
    0.0,-1.5e-12,tesla

Values are written with ``repr`` so parse(serialize(x)) is bit-exact for
finite floats. Images are binary PGM (P5); sample words are big-endian
16-bit whenever maxval exceeds 255.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np

from .errors import ParameterError
from .synth import Timeseries

_META_RE = re.compile(r"^#\s*sample_rate_hz=(\S+)\s+seed=(-?\d+)\s*$")
RECORD_HEADER = "time_s,value,unit"


def write_record(path, ts: Timeseries, seed: int = 0) -> None:
    path = Path(path)
    fs = ts.sample_rate
    values = ts.samples.tolist()
    lines = [f"# sample_rate_hz={fs!r} seed={int(seed)}", RECORD_HEADER]
    lines.extend(f"{(i / fs)!r},{v!r},{ts.unit}" for i, v in enumerate(values))
    path.write_text("\n".join(lines) + "\n")


def read_record(path) -> tuple[Timeseries, int]:
    """Parse a record CSV, returning (timeseries, seed)."""
    path = Path(path)
    with path.open() as fh:
        meta = fh.readline()
        match = _META_RE.match(meta)
        if not match:
            raise ParameterError(f"{path}: missing sample_rate/seed metadata line")
        sample_rate = float(match.group(1))
        seed = int(match.group(2))
        header = fh.readline().strip()
        if header != RECORD_HEADER:
            raise ParameterError(f"{path}: expected header '{RECORD_HEADER}'")
        first_data = fh.readline().strip()
        if not first_data:
            raise ParameterError(f"{path}: record has no samples")
        unit = first_data.split(",")[2]
        fh.seek(0)
        data = np.loadtxt(fh, delimiter=",", skiprows=2, usecols=(0, 1), ndmin=2)
    times, values = data[:, 0], data[:, 1]
    if times.size > 1:
        step = np.diff(times)
        if np.any(step <= 0) or not np.allclose(step, 1.0 / sample_rate, rtol=1e-9, atol=0):
            raise ParameterError(f"{path}: time column is not a fixed 1/sample_rate grid")
    return Timeseries(sample_rate, values, unit), seed


def write_spectrum(path, frequencies, density) -> None:
    frequencies = np.asarray(frequencies, dtype=float).tolist()
    density = np.asarray(density, dtype=float).tolist()
    lines = ["frequency_hz,density"]
    lines.extend(f"{f!r},{d!r}" for f, d in zip(frequencies, density))
    Path(path).write_text("\n".join(lines) + "\n")


def read_spectrum(path) -> tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1]


def write_pgm(path, frame, maxval: int) -> None:
    """Binary PGM; >8-bit data is stored as big-endian 16-bit words."""
    frame = np.asarray(frame)
    if frame.ndim != 2:
        raise ParameterError("frame must be 2-d")
    if not 0 < maxval < 65536:
        raise ParameterError("maxval must lie in [1, 65535]")
    if frame.min() < 0 or frame.max() > maxval:
        raise ParameterError("frame values exceed maxval")
    rows, cols = frame.shape
    header = f"P5\n{cols} {rows}\n{maxval}\n".encode("ascii")
    dtype = ">u2" if maxval > 255 else "u1"
    Path(path).write_bytes(header + frame.astype(dtype).tobytes())


def read_pgm(path) -> tuple[np.ndarray, int]:
    raw = Path(path).read_bytes()
    fields = []
    pos = 0
    while len(fields) < 4:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        fields.append(raw[start:pos])
    if fields[0] != b"P5":
        raise ParameterError("not a binary PGM file")
    cols, rows, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    pos += 1  # single whitespace byte after maxval
    dtype = ">u2" if maxval > 255 else "u1"
    frame = np.frombuffer(raw[pos:], dtype=dtype, count=rows * cols).reshape(rows, cols)
    return frame.astype(np.uint16), maxval


def write_summary(path, summary: dict) -> None:
    Path(path).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


def read_summary(path) -> dict:
    return json.loads(Path(path).read_text())
