"""Command line interface and run-configuration handling.

Usage::

    nvmag <scenario> --config cfg.json [--seed N] [--out DIR]
    nvmag validate --config cfg.json

Scenarios: simulate, filter, odmr, pulsed, widefield, report. The config is a
single JSON document whose ``scenario`` field must match the subcommand;
``--seed`` and ``--out`` override ``rng_seed`` and ``output_dir``. Input paths
inside the config resolve relative to the config file. Identical config and
seed produce byte-identical CSV outputs; SVG figures are content- but not
byte-deterministic.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import mainsfilter, pulsed, recordio, report, synth, widefield
from .lockin import FmDriveConfig, setpoint_responsivity, sweep_demod
from .mainsfilter import FilterChainConfig
from .odmr import (
    OdmrModel,
    PhotonBudget,
    cw_shot_noise_sensitivity,
    lineshape,
    max_slope_setpoint,
    zeeman_shift,
)
from .pulsed import PulsedReadoutModel, RabiModel
from .synth import NoiseEnvironment, TestSignal
from .widefield import ArtifactScene, ImagingConfig

SCENARIOS = ("simulate", "filter", "odmr", "pulsed", "widefield", "report")


class _Diagnostics:
    def __init__(self):
        self.items: list[str] = []

    def add(self, path: str, message: str) -> None:
        self.items.append(f"{path}: {message}")

    def __bool__(self):
        return bool(self.items)


def _get_number(block, key, path, diags, *, required=True, default=None,
                minimum=None, exclusive_minimum=False):
    if key not in block:
        if required:
            diags.add(f"{path}.{key}", "missing required field")
        return default
    value = block[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        diags.add(f"{path}.{key}", "must be a number")
        return default
    if minimum is not None:
        if exclusive_minimum and not value > minimum:
            diags.add(f"{path}.{key}", f"must be > {minimum}")
            return default
        if not exclusive_minimum and value < minimum:
            diags.add(f"{path}.{key}", f"must be >= {minimum}")
            return default
    return float(value)


def _get_int(block, key, path, diags, *, required=True, default=None, minimum=None):
    if key not in block:
        if required:
            diags.add(f"{path}.{key}", "missing required field")
        return default
    value = block[key]
    if isinstance(value, bool) or not isinstance(value, int):
        diags.add(f"{path}.{key}", "must be an integer")
        return default
    if minimum is not None and value < minimum:
        diags.add(f"{path}.{key}", f"must be >= {minimum}")
        return default
    return value


def _build_environment(block, path, diags):
    fund = _get_number(block, "mains_fundamental_hz", path, diags,
                       required=False, default=50.0, minimum=0, exclusive_minimum=True)
    sigma = _get_number(block, "phase_walk_sigma_rad_per_sqrt_s", path, diags,
                        required=False, default=0.0, minimum=0)
    drift = _get_number(block, "laser_drift_amplitude_t_per_sqrt_hz", path, diags,
                        required=False, default=0.0, minimum=0)
    floor = _get_number(block, "white_floor_t_per_sqrt_hz", path, diags,
                        required=False, default=0.0, minimum=0)
    amps = {}
    raw = block.get("harmonic_amplitudes_t", {})
    if not isinstance(raw, dict):
        diags.add(f"{path}.harmonic_amplitudes_t", "must map harmonic index to amplitude")
        raw = {}
    for k, v in raw.items():
        try:
            idx = int(k)
        except (TypeError, ValueError):
            diags.add(f"{path}.harmonic_amplitudes_t.{k}", "harmonic index must be an integer")
            continue
        if idx < 1:
            diags.add(f"{path}.harmonic_amplitudes_t.{k}", "harmonic index must be >= 1")
            continue
        if isinstance(v, bool) or not isinstance(v, (int, float)) or v < 0:
            diags.add(f"{path}.harmonic_amplitudes_t.{k}", "amplitude must be a number >= 0")
            continue
        amps[idx] = float(v)
    if diags:
        return None
    return NoiseEnvironment(
        mains_fundamental=fund,
        harmonic_amplitudes=amps,
        phase_walk_sigma=sigma,
        laser_drift_amplitude=drift,
        white_floor=floor,
        rng_seed=0,  # replaced by the run seed
    )


def _build_test_signal(block, path, diags):
    kind = block.get("kind", "tone")
    if kind not in ("tone", "biopulse"):
        diags.add(f"{path}.kind", "must be 'tone' or 'biopulse'")
        return None
    amp = _get_number(block, "amplitude_t", path, diags, required=True, minimum=0)
    freq = _get_number(block, "frequency_hz", path, diags, required=False,
                       default=111.0, minimum=0, exclusive_minimum=True)
    width = _get_number(block, "pulse_width_s", path, diags, required=False,
                        default=10e-3, minimum=0, exclusive_minimum=True)
    rep = _get_number(block, "repetition_rate_hz", path, diags, required=False,
                      default=2.0, minimum=0, exclusive_minimum=True)
    if diags or amp is None:
        return None
    return TestSignal(kind=kind, frequency=freq, amplitude=amp,
                      pulse_width=width, repetition_rate=rep)


def _build_model(block, path, diags):
    center = _get_number(block, "center_frequency_hz", path, diags,
                         required=False, default=2.87e9)
    fwhm = _get_number(block, "fwhm_hz", path, diags,
                       required=False, default=1e6, minimum=0, exclusive_minimum=True)
    contrast = _get_number(block, "contrast_per_line", path, diags,
                           required=False, default=0.005, minimum=0)
    n_lines = _get_int(block, "n_hyperfine_lines", path, diags,
                       required=False, default=3, minimum=1)
    spacing = _get_number(block, "hyperfine_spacing_hz", path, diags,
                          required=False, default=2.16e6, minimum=0)
    gyro = _get_number(block, "gyromagnetic_response_hz_per_t", path, diags,
                       required=False, default=28e9, minimum=0, exclusive_minimum=True)
    bias = _get_number(block, "bias_field_parallel_t", path, diags,
                       required=False, default=0.0)
    if contrast is not None and not contrast < 1.0:
        diags.add(f"{path}.contrast_per_line", "must be < 1")
    if diags:
        return None
    if contrast * n_lines >= 1.0:
        diags.add(f"{path}.contrast_per_line", "summed line contrast must stay below 1")
        return None
    return OdmrModel(
        center_frequency=center, fwhm=fwhm, contrast_per_line=contrast,
        n_hyperfine_lines=n_lines, hyperfine_spacing=spacing,
        gyromagnetic_response=gyro, bias_field_parallel=bias,
    )


def _build_drive(block, path, diags):
    mod = _get_number(block, "modulation_frequency_hz", path, diags, required=False,
                      default=33e3, minimum=0, exclusive_minimum=True)
    dev = _get_number(block, "peak_deviation_hz", path, diags, required=False,
                      default=250e3, minimum=0, exclusive_minimum=True)
    spacing = _get_number(block, "three_tone_spacing_hz", path, diags, required=False,
                          default=2.16e6, minimum=0, exclusive_minimum=True)
    enabled = block.get("three_tone_enabled", False)
    if not isinstance(enabled, bool):
        diags.add(f"{path}.three_tone_enabled", "must be a boolean")
        enabled = False
    if diags:
        return None
    return FmDriveConfig(modulation_frequency=mod, peak_deviation=dev,
                         three_tone_enabled=enabled, three_tone_spacing=spacing)


def _build_chain(block, path, diags):
    hp = _get_number(block, "highpass_cutoff_hz", path, diags, required=False,
                     default=10.0, minimum=0, exclusive_minimum=True)
    lp = _get_number(block, "lowpass_cutoff_hz", path, diags, required=False,
                     default=5000.0, minimum=0, exclusive_minimum=True)
    window = _get_number(block, "tracking_window_s", path, diags, required=False,
                         default=1.0, minimum=0, exclusive_minimum=True)
    bandwidth = _get_number(block, "notch_bandwidth_hz", path, diags, required=False,
                            default=1.0, minimum=0, exclusive_minimum=True)
    passes = _get_int(block, "subtraction_passes", path, diags, required=False,
                      default=1, minimum=1)
    harmonics = block.get("tracked_harmonics_hz", [50.0, 150.0, 250.0])
    if not isinstance(harmonics, list) or any(
        isinstance(f, bool) or not isinstance(f, (int, float)) or f <= 0 for f in harmonics
    ):
        diags.add(f"{path}.tracked_harmonics_hz", "must be a list of positive frequencies")
        return None
    notches = block.get("notch_centers_hz")
    if notches is not None and (
        not isinstance(notches, list)
        or any(isinstance(f, bool) or not isinstance(f, (int, float)) or f <= 0 for f in notches)
    ):
        diags.add(f"{path}.notch_centers_hz", "must be null or a list of positive frequencies")
        return None
    offsets = block.get("phase_offsets_rad", 0.0)
    if harmonics and window is not None and window * min(harmonics) < 10.0:
        diags.add(f"{path}.tracking_window_s",
                  "must cover >= 10 cycles of the lowest tracked harmonic")
    if diags:
        return None
    return FilterChainConfig(
        highpass_cutoff=hp,
        tracked_harmonics=tuple(harmonics),
        tracking_window=window,
        phase_offset=offsets,
        subtraction_passes=passes,
        notch_centers=None if notches is None else tuple(notches),
        notch_bandwidth=bandwidth,
        lowpass_cutoff=lp,
    )


def _require_block(cfg, name, diags):
    block = cfg.get(name)
    if block is None:
        diags.add(name, "missing required block")
        return None
    if not isinstance(block, dict):
        diags.add(name, "must be an object")
        return None
    return block


def _require_file(block, key, path, config_dir, diags):
    raw = block.get(key)
    if not isinstance(raw, str) or not raw:
        diags.add(f"{path}.{key}", "missing required file path")
        return None
    resolved = (config_dir / raw).resolve() if not Path(raw).is_absolute() else Path(raw)
    if not resolved.is_file():
        diags.add(f"{path}.{key}", f"file does not exist: {resolved}")
        return None
    return resolved


def _seed_required(cfg, scenario) -> bool:
    if scenario == "simulate":
        return True
    if scenario == "pulsed":
        readout = cfg.get("pulsed", {}).get("readout", {}) if isinstance(cfg.get("pulsed"), dict) else {}
        return bool(readout.get("noise_std_v", 0))
    if scenario == "widefield":
        block = cfg.get("widefield") if isinstance(cfg.get("widefield"), dict) else {}
        jitter = block.get("jitter", {})
        return bool(jitter) and bool(jitter.get("sigma_px", 0))
    return False


def _validate_config(cfg: dict, config_dir: Path) -> _Diagnostics:
    diags = _Diagnostics()
    scenario = cfg.get("scenario")
    if scenario not in SCENARIOS:
        diags.add("scenario", f"must be one of {', '.join(SCENARIOS)}")
        return diags

    seed = cfg.get("rng_seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
        diags.add("rng_seed", "must be an integer")
    elif seed is None and _seed_required(cfg, scenario):
        diags.add("rng_seed", f"required for stochastic scenario '{scenario}'")

    out = cfg.get("output_dir")
    if out is not None and not isinstance(out, str):
        diags.add("output_dir", "must be a path string")

    if scenario == "simulate":
        rec = _require_block(cfg, "record", diags)
        if rec is not None:
            _get_number(rec, "sample_rate_hz", "record", diags, minimum=0, exclusive_minimum=True)
            _get_number(rec, "duration_s", "record", diags, minimum=0, exclusive_minimum=True)
        env = _require_block(cfg, "environment", diags)
        if env is not None:
            _build_environment(env, "environment", diags)
        if "test_signal" in cfg and isinstance(cfg["test_signal"], dict):
            _build_test_signal(cfg["test_signal"], "test_signal", diags)
    elif scenario == "filter":
        block = _require_block(cfg, "filter", diags)
        if block is not None:
            _require_file(block, "record_csv", "filter", config_dir, diags)
            _require_file(block, "reference_csv", "filter", config_dir, diags)
            _build_chain(block, "filter", diags)
    elif scenario == "odmr":
        block = _require_block(cfg, "odmr", diags)
        if block is not None:
            _build_model(block.get("model", {}), "odmr.model", diags)
            _build_drive(block.get("drive", {}), "odmr.drive", diags)
            budget = block.get("budget", {})
            _get_number(budget, "detected_power_w", "odmr.budget", diags,
                        required=False, default=5e-3, minimum=0, exclusive_minimum=True)
    elif scenario == "pulsed":
        block = _require_block(cfg, "pulsed", diags)
        if block is not None:
            _build_pulsed_model(block, "pulsed", diags)
    elif scenario == "widefield":
        block = _require_block(cfg, "widefield", diags)
        if block is not None:
            _build_imaging(block, "widefield", diags)
    elif scenario == "report":
        block = _require_block(cfg, "report", diags)
        if block is not None:
            _require_file(block, "asd_before_csv", "report", config_dir, diags)
            _require_file(block, "asd_after_csv", "report", config_dir, diags)
            records = block.get("record_csvs", [])
            if not isinstance(records, list):
                diags.add("report.record_csvs", "must be a list of record paths")
            else:
                for i, raw in enumerate(records):
                    _require_file({"p": raw}, "p", f"report.record_csvs[{i}]", config_dir, diags)
    return diags


def _build_pulsed_model(block, path, diags):
    dv0 = _get_number(block, "delta_v0_v", path, diags, required=False, default=1.0,
                      minimum=0, exclusive_minimum=True)
    raw_map = block.get("decay_times_s", {"0.02": 1.0e-3, "0.218": 0.75e-3})
    decay_map = {}
    if not isinstance(raw_map, dict) or not raw_map:
        diags.add(f"{path}.decay_times_s", "must map laser power to decay time")
        return None
    for k, v in raw_map.items():
        try:
            power = float(k)
        except (TypeError, ValueError):
            diags.add(f"{path}.decay_times_s.{k}", "power key must be numeric")
            continue
        if isinstance(v, bool) or not isinstance(v, (int, float)) or v <= 0:
            diags.add(f"{path}.decay_times_s.{k}", "decay time must be a number > 0")
            continue
        decay_map[power] = float(v)
    rng = block.get("power_range_w", [min(decay_map, default=0.02), max(decay_map, default=0.218)])
    if (not isinstance(rng, list) or len(rng) != 2
            or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in rng)):
        diags.add(f"{path}.power_range_w", "must be [low, high] in watts")
        return None
    if diags:
        return None
    try:
        return PulsedReadoutModel(delta_v0=dv0, decay_time_at_powers=decay_map,
                                  power_range=(float(rng[0]), float(rng[1])))
    except Exception as exc:  # domain violations from the dataclass
        diags.add(path, str(exc))
        return None


def _build_imaging(block, path, diags):
    fov = block.get("fov_m", [5e-3, 5e-3])
    if (not isinstance(fov, list) or len(fov) != 2
            or any(isinstance(v, bool) or not isinstance(v, (int, float)) or v <= 0 for v in fov)):
        diags.add(f"{path}.fov_m", "must be two positive extents in metres")
        return None
    area = _get_number(block, "pixel_area_m2", path, diags, required=False,
                       default=3.5e-12, minimum=0, exclusive_minimum=True)
    depth = _get_int(block, "bit_depth", path, diags, required=False, default=16)
    if depth is not None and depth not in widefield.ALLOWED_BIT_DEPTHS:
        diags.add(f"{path}.bit_depth", f"must be one of {widefield.ALLOWED_BIT_DEPTHS}")
        return None
    power = _get_number(block, "total_fluorescence_w", path, diags, required=False,
                        default=6e-3, minimum=0, exclusive_minimum=True)
    model = _build_model(block.get("model", {"contrast_per_line": 0.02, "n_hyperfine_lines": 1}),
                         f"{path}.model", diags)
    if diags or model is None:
        return None
    return ImagingConfig(fov=(fov[0], fov[1]), pixel_area=area, bit_depth=depth,
                         total_fluorescence=power, model=model)


def validate(config_path) -> list[str]:
    """Validate a config file without executing it; returns diagnostics."""
    config_path = Path(config_path)
    try:
        cfg = json.loads(config_path.read_text())
    except FileNotFoundError:
        return [f"{config_path}: config file not found"]
    except json.JSONDecodeError as exc:
        return [f"{config_path}: invalid JSON ({exc})"]
    if not isinstance(cfg, dict):
        return ["config root must be a JSON object"]
    return _validate_config(cfg, config_path.parent).items


# ---------------------------------------------------------------------------
# scenario runners


def _run_simulate(cfg, config_dir, seed, outdir):
    rec = cfg["record"]
    fs, duration = rec["sample_rate_hz"], rec["duration_s"]
    diags = _Diagnostics()
    env = _build_environment(cfg["environment"], "environment", diags)
    env = dataclasses.replace(env, rng_seed=seed)
    signal = None
    if isinstance(cfg.get("test_signal"), dict):
        signal = _build_test_signal(cfg["test_signal"], "test_signal", diags)
    record = synth.gen_magnetometer_record(env, fs, duration, signal)
    reference = synth.gen_mains_reference(env, fs, duration,
                                          noise_std=cfg.get("reference_noise_std", 0.0))
    recordio.write_record(outdir / "record.csv", record, seed)
    recordio.write_record(outdir / "reference.csv", reference, seed)
    recordio.write_summary(outdir / "summary.json", {
        "scenario": "simulate",
        "n_samples": record.n,
        "sample_rate_hz": fs,
        "duration_s": duration,
        "rng_seed": seed,
        "record_rms_t": float(np.sqrt(np.mean(record.samples**2))),
    })
    return 0


def _run_filter(cfg, config_dir, seed, outdir):
    block = cfg["filter"]
    diags = _Diagnostics()
    chain = _build_chain(block, "filter", diags)
    record, rec_seed = recordio.read_record(_require_file(block, "record_csv", "filter", config_dir, diags))
    reference, _ = recordio.read_record(_require_file(block, "reference_csv", "filter", config_dir, diags))
    filtered = mainsfilter.run_pipeline(record, reference, chain)

    freqs_before, asd_before = mainsfilter.asd(record)
    freqs_after, asd_after = mainsfilter.asd(filtered)
    recordio.write_record(outdir / "filtered.csv", filtered, rec_seed)
    recordio.write_spectrum(outdir / "asd_before.csv", freqs_before, asd_before)
    recordio.write_spectrum(outdir / "asd_after.csv", freqs_after, asd_after)

    band = block.get("analysis_band_hz", [20.0, 500.0])
    half_width = block.get("exclusion_half_width_hz", 2.0)
    mask = (freqs_after >= band[0]) & (freqs_after <= band[1])
    for center in chain.effective_notch_centers():
        mask &= np.abs(freqs_after - center) > half_width
    summary = {
        "scenario": "filter",
        "band_hz": list(band),
        "band_median_asd": float(np.median(asd_after[mask])),
        "band_median_asd_before": float(np.median(asd_before[mask])),
    }
    tone_hz = block.get("test_tone_hz")
    if tone_hz:
        amp, phase = mainsfilter.tone_projection(filtered, tone_hz)
        lag = -(phase + np.pi / 2.0) / (2.0 * np.pi * tone_hz)
        summary["test_tone_hz"] = tone_hz
        summary["recovered_tone_amplitude"] = amp
        summary["recovered_tone_lag_s"] = float(lag)
    attenuation = {}
    for center in chain.tracked_harmonics:
        near = np.abs(freqs_before - center) <= half_width
        before_peak = float(np.max(asd_before[near]))
        after_peak = float(np.max(asd_after[near]))
        attenuation[str(center)] = {
            "before_peak": before_peak,
            "after_peak": after_peak,
            "reduction_db": 20.0 * float(np.log10(before_peak / after_peak))
            if after_peak > 0 else float("inf"),
        }
    summary["harmonic_attenuation"] = attenuation
    recordio.write_summary(outdir / "summary.json", summary)
    return 0


def _run_odmr(cfg, config_dir, seed, outdir):
    block = cfg["odmr"]
    diags = _Diagnostics()
    model = _build_model(block.get("model", {}), "odmr.model", diags)
    drive = _build_drive(block.get("drive", {}), "odmr.drive", diags)
    budget_block = block.get("budget", {})
    budget = PhotonBudget(
        detected_optical_power=budget_block.get("detected_power_w", 5e-3),
        mean_photon_wavelength=budget_block.get("wavelength_m", 700e-9),
    )
    sweep = block.get("sweep", {})
    span = sweep.get("span_hz", 8e6)
    points = int(sweep.get("points", 801))
    grid = np.linspace(model.dip_center - span / 2.0, model.dip_center + span / 2.0, points)

    recordio.write_spectrum(outdir / "lineshape.csv", grid, lineshape(model, grid))
    curve = sweep_demod(model, drive, grid)
    recordio.write_spectrum(outdir / "demod.csv", curve.carrier_grid, curve.demod_values)

    setpoint, slope = max_slope_setpoint(model)
    lockin_setpoint, lockin_slope = setpoint_responsivity(model, drive, grid)
    recordio.write_summary(outdir / "summary.json", {
        "scenario": "odmr",
        "max_slope_setpoint_hz": setpoint,
        "max_slope_per_hz": slope,
        "lockin_setpoint_hz": lockin_setpoint,
        "lockin_slope_per_hz": lockin_slope,
        "zeeman_shift_hz_per_nt": zeeman_shift(model, 1e-9),
        "cw_shot_noise_sensitivity_t_per_sqrt_hz": cw_shot_noise_sensitivity(model, budget),
    })
    return 0


def _run_pulsed(cfg, config_dir, seed, outdir):
    block = cfg["pulsed"]
    diags = _Diagnostics()
    model = _build_pulsed_model(block, "pulsed", diags)
    readout = block.get("readout", {})
    n_points = int(readout.get("n_points", 64))
    t_max = readout.get("t_max_s", 4e-3)
    noise_std = readout.get("noise_std_v", 0.0)
    powers = block.get("powers_w", sorted(model.decay_time_at_powers))
    times = np.linspace(0.0, t_max, n_points)

    rng = np.random.default_rng(seed) if noise_std > 0 else None
    decay_lines = ["power_w,time_s,value_v"]
    fit_lines = ["power_w,amplitude_v,decay_time_s,amplitude_err_v,decay_time_err_s"]
    fitted = []
    for power in powers:
        values = pulsed.readout_difference(model, times, power)
        if rng is not None:
            values = values + rng.normal(0.0, noise_std, values.size)
        decay_lines.extend(f"{power!r},{t!r},{v!r}" for t, v in zip(times.tolist(), values.tolist()))
        amp, tau, (amp_err, tau_err) = pulsed.fit_exponential(times, values, noise_std)
        fitted.append((power, tau))
        fit_lines.append(f"{power!r},{amp!r},{tau!r},{amp_err!r},{tau_err!r}")
    (outdir / "decays.csv").write_text("\n".join(decay_lines) + "\n")
    (outdir / "fits.csv").write_text("\n".join(fit_lines) + "\n")

    rabi_block = block.get("rabi", {})
    rabi = RabiModel(
        pi_time=rabi_block.get("pi_time_s", 680e-9),
        rabi_decay=rabi_block.get("rabi_decay_s") or float("inf"),
    )
    cycle = block.get("cycle_time_per_readout_s", 4e-3)
    slope, intercept = pulsed.fit_linear([p for p, _ in fitted], [t for _, t in fitted]) \
        if len(fitted) >= 2 else (float("nan"), float("nan"))
    lo_power, hi_power = min(model.decay_time_at_powers), max(model.decay_time_at_powers)
    recordio.write_summary(outdir / "summary.json", {
        "scenario": "pulsed",
        "optimal_pi_time_s": pulsed.optimal_pi_time(rabi),
        "sensing_bandwidth_1_readout_hz": pulsed.sensing_bandwidth(1, cycle),
        "sensing_bandwidth_3_readout_hz": pulsed.sensing_bandwidth(3, cycle),
        "decay_time_low_power_s": model.decay_time(lo_power),
        "decay_time_high_power_s": model.decay_time(hi_power),
        "decay_time_reduction_s": model.decay_time(lo_power) - model.decay_time(hi_power),
        "power_trend_slope_s_per_w": slope,
        "power_trend_intercept_s": intercept,
    })
    return 0


def _run_widefield(cfg, config_dir, seed, outdir):
    block = cfg["widefield"]
    diags = _Diagnostics()
    imaging = _build_imaging(block, "widefield", diags)

    summary = {
        "scenario": "widefield",
        "n_pixels": imaging.n_pixels,
        "per_pixel_sensitivity_t_per_sqrt_hz": widefield.per_pixel_sensitivity(imaging),
        "whole_array_sensitivity_t_per_sqrt_hz": widefield.whole_array_sensitivity(imaging),
        "dip_levels_8bit": widefield.dip_level_span(imaging.model.total_contrast, 8),
        "dip_levels_16bit": widefield.dip_level_span(imaging.model.total_contrast, 16),
    }

    gradient = block.get("gradient", {})
    shape = tuple(gradient.get("shape_px", [64, 64]))
    # keep the probe on one flank of the dip so the ramp renders monotone
    span = gradient.get("offset_span_hz", 4e5)
    offsets = np.linspace(-span / 2.0, span / 2.0, shape[1])
    offset_map = np.broadcast_to(offsets, shape).copy()
    scene = ArtifactScene(resonance_offset_map=offset_map)
    drive_freq, _ = max_slope_setpoint(imaging.model)
    contrast_map = widefield.mw_gradient_contrast_map(imaging, scene, drive_freq)
    quantized = widefield.quantize_frame(contrast_map, imaging.bit_depth)
    recordio.write_pgm(outdir / "gradient_map.pgm", quantized, (1 << imaging.bit_depth) - 1)
    stats_lines = ["region,mean_relative_fluorescence"]
    half = shape[1] // 2
    stats_lines.append(f"left,{float(contrast_map[:, :half].mean())!r}")
    stats_lines.append(f"right,{float(contrast_map[:, half:].mean())!r}")
    (outdir / "region_stats.csv").write_text("\n".join(stats_lines) + "\n")

    jitter = block.get("jitter", {})
    if jitter:
        n_frames = int(jitter.get("n_frames", 50))
        sigma = jitter.get("sigma_px", 2.0)
        pattern_shape = tuple(jitter.get("pattern_px", [96, 96]))
        pattern = widefield.cross_test_pattern(pattern_shape)
        frames = np.repeat(pattern[None, :, :], n_frames, axis=0)
        displacements = widefield.gaussian_jitter_displacements(n_frames, sigma, seed)
        mean = widefield.jitter_average(frames, ArtifactScene(displacement_series=displacements))
        recordio.write_pgm(outdir / "jitter_mean.pgm",
                           widefield.quantize_frame(np.clip(mean, 0.0, 1.0), 16), 65535)
        summary["jitter_frames"] = n_frames
        summary["jitter_sigma_px"] = sigma
    recordio.write_summary(outdir / "summary.json", summary)
    return 0


def _run_report(cfg, config_dir, seed, outdir):
    block = cfg["report"]
    diags = _Diagnostics()
    before_path = _require_file(block, "asd_before_csv", "report", config_dir, diags)
    after_path = _require_file(block, "asd_after_csv", "report", config_dir, diags)
    before = recordio.read_spectrum(before_path)
    after = recordio.read_spectrum(after_path)
    report.render_asd_overlay(before, after, outdir / "asd_overlay.svg")

    band = tuple(block.get("band_hz", [30.0, 170.0]))
    record_paths = block.get("record_csvs", [])
    records = []
    for raw in record_paths:
        path = (config_dir / raw) if not Path(raw).is_absolute() else Path(raw)
        ts, _ = recordio.read_record(path)
        records.append(ts)
    if len(records) == 1:
        n_segments = int(block.get("spectrogram_segments", 8))
        ts = records[0]
        seg = ts.n // n_segments
        if seg > 1:
            records = [
                synth.Timeseries(ts.sample_rate, ts.samples[i * seg : (i + 1) * seg], ts.unit)
                for i in range(n_segments)
            ]
    if records:
        freqs, matrix = mainsfilter.spectrogram(records, band)
        report.render_spectrogram(freqs, matrix, outdir / "spectrogram.svg")
        lines = ["frequency_hz," + ",".join(f"iteration_{i}" for i in range(matrix.shape[0]))]
        for j, f in enumerate(freqs.tolist()):
            lines.append(",".join([repr(f)] + [repr(float(v)) for v in matrix[:, j]]))
        (outdir / "spectrogram.csv").write_text("\n".join(lines) + "\n")

    before_ts_raw = block.get("timeseries_before_csv")
    after_ts_raw = block.get("timeseries_after_csv")
    if before_ts_raw and after_ts_raw:
        before_ts, _ = recordio.read_record(config_dir / before_ts_raw if not Path(before_ts_raw).is_absolute() else Path(before_ts_raw))
        after_ts, _ = recordio.read_record(config_dir / after_ts_raw if not Path(after_ts_raw).is_absolute() else Path(after_ts_raw))
        report.render_timeseries_overlay(before_ts, after_ts, outdir / "timeseries.svg")
    return 0


_RUNNERS = {
    "simulate": _run_simulate,
    "filter": _run_filter,
    "odmr": _run_odmr,
    "pulsed": _run_pulsed,
    "widefield": _run_widefield,
    "report": _run_report,
}


def run(config_path, seed: int | None = None, out=None, expect_scenario: str | None = None) -> int:
    """Execute a validated run configuration; returns a process exit status."""
    config_path = Path(config_path)
    diagnostics = validate(config_path)
    if diagnostics:
        for item in diagnostics:
            print(item, file=sys.stderr)
        return 2
    cfg = json.loads(config_path.read_text())
    scenario = cfg["scenario"]
    if expect_scenario is not None and scenario != expect_scenario:
        print(f"scenario: config declares '{scenario}' but '{expect_scenario}' was requested",
              file=sys.stderr)
        return 2
    if seed is None:
        seed = cfg.get("rng_seed", 0)
    outdir = Path(out) if out is not None else Path(cfg.get("output_dir", "."))
    if not outdir.is_absolute():
        outdir = Path.cwd() / outdir
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        return _RUNNERS[scenario](cfg, config_path.parent, seed, outdir)
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 3


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nvmag",
        description="NV-diamond magnetometry simulator and signal-processing toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SCENARIOS:
        p = sub.add_parser(name, help=f"run the {name} scenario")
        p.add_argument("--config", required=True, help="path to the JSON run configuration")
        p.add_argument("--seed", type=int, default=None, help="override rng_seed")
        p.add_argument("--out", default=None, help="override output_dir")
    v = sub.add_parser("validate", help="validate a config without executing it")
    v.add_argument("--config", required=True)
    args = parser.parse_args(argv)
    if args.command == "validate":
        diagnostics = validate(args.config)
        for item in diagnostics:
            print(item)
        return 0 if not diagnostics else 1
    return run(args.config, seed=args.seed, out=args.out, expect_scenario=args.command)


if __name__ == "__main__":
    sys.exit(main())
