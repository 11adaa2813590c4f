//! Quantum-state transfer through XY spin chains whose two terminal spins
//! are detuned above the band by a strong local field.
//!
//! The crate covers the single-excitation model ([`chain`]), reproducible
//! disorder ([`disorder`]), the compensation search for the terminal
//! anticrossing ([`resonance`]), free ([`free_transfer`]) and swept
//! ([`adiabatic`]) transfer, information-leakage measures ([`metrics`]) and a
//! declarative experiment runner ([`harness`]).
//!
//! Units: hbar = 1, energies in units of the mean coupling J, times in
//! hbar/J.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adiabatic;
pub mod chain;
pub mod disorder;
pub mod error;
pub mod free_transfer;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod ode;
pub mod output;
pub mod resonance;

pub use adiabatic::{
    adiabatic_time, lz_nonadiabatic_probability, lz_sweep_rate, simulate_adiabatic,
    AdiabaticOptions, AdiabaticRun, SweepPlan, SweepSide,
};
pub use chain::{
    build_hamiltonian, chain_spectrum, diagonalize, isolated_doublet, propagate, AmplitudeState,
    ChainRealization, DoubletInfo, Spectrum,
};
pub use disorder::{DisorderSpec, RealizationRecord};
pub use error::{Error, Result};
pub use free_transfer::{
    envelope_peak, free_transfer_time, peak_fidelity, run_free, simulate_free, FreeRunOptions,
    FreeRunSummary, Trajectory,
};
pub use harness::{run_experiment, ExperimentConfig, ExperimentKind, RunArtifact};
pub use metrics::{
    average_fidelity, distinguishability, eavesdropper_states, entanglement_of_formation, leakage,
    time_averaged_leakage, trace_distance, EavesdropperScope, EffectiveDensityMatrix, MetricBundle,
    SenderState,
};
pub use resonance::{
    find_anticrossing, gap_profile, localization_defect, ResonanceResult, SearchOptions,
};
