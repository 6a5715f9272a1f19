"""NV-diamond ensemble magnetometry simulator and signal-processing toolkit."""

from .errors import (
    CompositionError,
    ConfigError,
    FitError,
    ParameterError,
    SetpointError,
)
from .lockin import DemodCurve, FmDriveConfig, demod_response, sweep_demod, track_setpoint
from .mainsfilter import (
    FilterChainConfig,
    PhaseSeries,
    asd,
    coherent_subtract,
    estimate_phase_drift,
    run_pipeline,
    spectrogram,
    zero_phase_filter,
)
from .odmr import (
    OdmrModel,
    PhotonBudget,
    averaging_gain,
    cw_shot_noise_sensitivity,
    lineshape,
    max_slope_setpoint,
    zeeman_shift,
)
from .pulsed import (
    PulsedReadoutModel,
    PulseSequence,
    RabiModel,
    fit_exponential,
    fit_linear,
    optimal_pi_time,
    readout_difference,
    sensing_bandwidth,
)
from .synth import (
    NoiseEnvironment,
    TestSignal,
    Timeseries,
    compose,
    gen_laser_drift,
    gen_magnetometer_record,
    gen_mains,
    gen_mains_reference,
    gen_test_signal,
    gen_white,
)
from .widefield import (
    ArtifactScene,
    ImagingConfig,
    jitter_average,
    mw_gradient_contrast_map,
    per_pixel_sensitivity,
    quantize_frame,
)

__version__ = "0.1.0"
