//! Simulation toolkit for Floquet prethermalization of the 2D XY model on
//! noisy digital quantum hardware.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod density;
pub mod ed;
pub mod error;
pub mod lattice;
pub mod magnus;
pub mod mitigation;
pub mod model;
pub mod noise;
pub mod sparse;
pub mod state;
pub mod trajectories;
pub mod trotter;

pub use analysis::{
    all_plateaus, detect_plateau, fit_heating_model, floquet_time_average, heating_model_energy,
    prethermal_diagnostics, solve_pevp, HeatingFit, PlateauReport, PrethermalDiagnostics, TimeAverageSeries,
};
pub use ed::{
    diagonal_ensemble, diagonalize_sector, full_spectrum, microcanonical, EdLimits, EnsembleKind, EnsembleQuery,
    SectorSpectrum,
};
pub use error::{Error, Result};
pub use lattice::{Bond, BondGroup, BondGroupKind, Lattice, Sublattice, DEFAULT_QUBIT_CAP};
pub use magnus::{
    floquet_vs_magnus_deviation, magnus_spectra, magnus_term, DeviationSeries, EffectiveHamiltonian, PiecewiseDrive,
};
pub use mitigation::{
    bound_check, global_depolarizing_bias, max_depth, mitigation_error_s, rescale, sample_budget,
    time_averaged_rescale, track_sign, Estimate, MitigationRecord, Rescaled, SampleBudget, SignedSeries,
};
pub use model::{
    mean_squared_inplane_magnetization, observable_expectation, product_state, Observable, Pauli, PauliObservable,
    ProductStateSpec, SpinHamiltonian,
};
pub use noise::{sample_shots, BackwardPlacement, NoiseKind, NoiseModel};
pub use state::{PureState, C64};
pub use trajectories::{noisy_survival_probability, noisy_survival_series, trajectory_rng, TrajectoryEnsemble};
pub use trotter::{apply_trotter_step, evolve, partial_iswap_gate, survival_probability, TrotterSchedule};
