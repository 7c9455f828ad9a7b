"""Physical-layer and energy-budget simulator for concrete-embedded backscatter nodes."""

from .channel import (
    AttenuationModel,
    IncidentPowerTable,
    NoiseModel,
    WBurstModel,
    add_awgn,
    apply_gain,
    incident_power,
    inject_w_bursts,
    interference_symbol_error_rate,
    permittivity_from_shift,
    propagation_loss,
    resonant_shift,
)
from .chirp import (
    ChirpParams,
    PowerSpectrum,
    derive_params,
    detection_power_fraction,
    instantaneous_frequency,
    modulate_ideal,
    modulate_quantized,
    quantize_toggles,
    spectrum,
)
from .errors import CalibrationError, ConfigurationError, RfsnError
from .harness import (
    BerEngine,
    ExperimentConfig,
    calibrate_composite_gain,
    fit_passive_efficiency_scale,
    load_config,
    parse_config,
    run_ber_sweep,
    run_charge_sweep,
    run_theory_report,
    serialize_config,
)
from .powersim import (
    ActiveNodeFSM,
    Capacitor,
    HarvesterModel,
    LeakageCurve,
    PassiveNodeModel,
    SimTrace,
    harvested_power,
    min_startup_incident_power,
    passive_steady_state,
    run_active_fsm,
    step_capacitor,
    time_to_voltage,
)
from .rxdsp import (
    BerResult,
    DechirpOutput,
    ber_theory,
    dechirp,
    demodulate_stream,
    effective_snr,
    qfunc,
    score,
    snr_for_ber,
)
from .waveform import Waveform

__version__ = "0.1.0"
