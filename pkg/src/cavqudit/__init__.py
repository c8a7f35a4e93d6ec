"""Simulator and analysis toolkit for a transmon-controlled two-mode cavity qudit."""

__version__ = "0.1.0"

from .params import DEVICE_PARAMS, DRIVEN_NOISE, DrivenNoiseParams, SystemParams
from .spaces import (
    DensityMatrix,
    HilbertSpace,
    OperatorLabel,
    Superoperator,
    build_space,
    dissipator,
    partial_trace,
    rotation_unitary,
)
from .noise import NoiseModel, cavity_jumps, pure_dephasing_rate, transmon_jumps
from .lindblad import (
    DrivenHamiltonian,
    Lindbladian,
    NoisyRotation,
    evolve,
    lindbladian_matrix,
    noisy_rotation,
)
from .readout import (
    ConfusionMatrix,
    ReadoutModel,
    correct_populations,
    dual_rail_map_channel,
    fit_readout_model,
    measured_gef_confusion,
    readout_channel,
)
from .fockprep import (
    ProtocolConfig,
    ProtocolResult,
    PulseTimings,
    apply_parity_filter,
    ceiling_analysis,
    fock_lifetime_scan,
    simulate,
    simulate_sb,
    simulate_sfp,
)
from .vrbs import (
    BsOscillationFit,
    VrbsConfig,
    bs_fidelity,
    calibrate_bs_time,
    calibrate_sideband,
    detuning_sweep,
    effective_bs_rate,
    fit_bs_oscillation,
    heating_fit,
    nonlinear_bs_hamiltonian,
    simulate_vrbs,
    swap_sequence,
)
from .quditgates import (
    SynthesisConfig,
    TwoQuditUnitary,
    csum_gate,
    decompose_single_qudit,
    entangling_power,
    extract_vrbs_unitary,
    gate_fidelity,
    single_qudit_rotation,
    synthesize,
    synthesize_ladder,
)
from .fits import (
    exp_decay_fit,
    internal_quality_factor,
    loss_rate_from_participation,
    purcell_limit,
    thermal_dephasing_limit,
    tls_fit,
)

__all__ = [
    "__version__",
    # parameters
    "DEVICE_PARAMS",
    "DRIVEN_NOISE",
    "DrivenNoiseParams",
    "SystemParams",
    # state algebra
    "DensityMatrix",
    "HilbertSpace",
    "OperatorLabel",
    "Superoperator",
    "build_space",
    "dissipator",
    "partial_trace",
    "rotation_unitary",
    # noise model
    "NoiseModel",
    "cavity_jumps",
    "pure_dephasing_rate",
    "transmon_jumps",
    # master-equation engine
    "DrivenHamiltonian",
    "Lindbladian",
    "NoisyRotation",
    "evolve",
    "lindbladian_matrix",
    "noisy_rotation",
    # readout
    "ConfusionMatrix",
    "ReadoutModel",
    "correct_populations",
    "dual_rail_map_channel",
    "fit_readout_model",
    "measured_gef_confusion",
    "readout_channel",
    # state preparation protocols
    "ProtocolConfig",
    "ProtocolResult",
    "PulseTimings",
    "apply_parity_filter",
    "ceiling_analysis",
    "fock_lifetime_scan",
    "simulate",
    "simulate_sb",
    "simulate_sfp",
    # two-mode beamsplitter
    "BsOscillationFit",
    "VrbsConfig",
    "bs_fidelity",
    "calibrate_bs_time",
    "calibrate_sideband",
    "detuning_sweep",
    "effective_bs_rate",
    "fit_bs_oscillation",
    "heating_fit",
    "nonlinear_bs_hamiltonian",
    "simulate_vrbs",
    "swap_sequence",
    # qudit gates
    "SynthesisConfig",
    "TwoQuditUnitary",
    "csum_gate",
    "decompose_single_qudit",
    "entangling_power",
    "extract_vrbs_unitary",
    "gate_fidelity",
    "single_qudit_rotation",
    "synthesize",
    "synthesize_ladder",
    # limits and fits
    "exp_decay_fit",
    "internal_quality_factor",
    "loss_rate_from_participation",
    "purcell_limit",
    "thermal_dephasing_limit",
    "tls_fit",
]
