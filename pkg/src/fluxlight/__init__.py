"""Simulation library for a single fluxonium Lambda system in a waveguide:
energy spectrum, driven three-level open dynamics, EIT spectra, slow/fast
light, photon storage and EIT/ATS model discrimination."""

from .spectrum import (
    FluxoniumParams,
    SpectrumResult,
    TruncationError,
    build_fluxonium_hamiltonian,
    compute_spectrum,
    eigensolve,
    flux_sweep,
)
from .lindblad import (
    DriveParams,
    DriveSchedule,
    LambdaParams,
    StepSizeError,
    SteadyStateError,
    build_liouvillian,
    evolve,
    ground_state,
    lambda_hamiltonian,
    steady_state,
    validate_density_matrix,
)
from .scattering import (
    DelayCurve,
    PowerCalibration,
    TransmissionPoint,
    eit_spectrum,
    eit_threshold,
    group_delay,
    power_map,
    transmission_from_state,
)
from .pulses import (
    PulseRecord,
    PulseSpec,
    StorageSchedule,
    extract_delay,
    mean_photon_number,
    propagate_pulse,
    reference_pulse,
    run_storage,
    storage_efficiency,
)
from .modelfit import (
    FitOutcome,
    LineShapeData,
    NoCrossingError,
    aic_crossover,
    aic_score,
    aic_weights,
    fit_ats_model,
    fit_eit_model,
    synth_dataset,
)

__version__ = "0.1.0"
