//! Loss-landscape laboratory for randomized variational quantum algorithms.
//!
//! The quantum side (`pauli`, `hamiltonian`, `simulator`, `vqe`) builds the
//! disordered spinless Fermi–Hubbard chain, simulates Pauli-rotation ansatzes
//! and trains them. The theory side (`randmat`, `freeprob`, `kacrice`, `cch`)
//! predicts where the local minima of the corresponding Wishart hypertoroidal
//! random field sit. `checks` compares the two.

pub mod cch;
pub mod checks;
pub mod cubic;
pub mod error;
pub mod freeprob;
pub mod hamiltonian;
pub mod kacrice;
pub mod pauli;
pub mod randmat;
pub mod scalar;
pub mod simulator;
pub mod stats;
pub mod vqe;

pub use cch::{cch_log_density, cch_mode, predicted_band, CchDensity, CchParams};
pub use checks::{loss_histogram_check, mgf_compare, HistogramReport, MgfComparison};
pub use error::{Error, Result};
pub use freeprob::{
    asymptotic_log_crt0, band_edge_e0, density, stieltjes, support_edge_min, FreeModelParams,
    SpectralMeasure,
};
pub use hamiltonian::{
    build_fermi_hubbard, diagonalize, normalized_energy, restrict_to_sector, spectral_stats,
    FermiHubbardSpec, PauliSum, SpectralStats,
};
pub use kacrice::{crt_band_profile, hessian_closed_form_sample, log_crt_k_mc, CrtEstimate, CrtProfile};
pub use pauli::{commutes, multiply, sample_uniform_pauli, Pauli, PauliString, Phase};
pub use randmat::{sample_c, whrf_direct, EnsembleParams, WhrfField};
pub use scalar::Real;
pub use simulator::{
    apply_pauli_rotation, energy, gradient, prepare, AnsatzProgram, CompiledObservable,
    GradientMode, InitialState, Observable, Rotation, StateVector,
};
pub use vqe::{
    instance_setup, run_experiment, train, train_instance, AnsatzConfig, AnsatzFamily, ExperimentConfig, ExperimentReport,
    TrainingConfig, TrainingResult,
};

/// Double-precision statevector.
pub type State = StateVector<f64>;
/// Double-precision Pauli-sum Hamiltonian.
pub type Hamiltonian = PauliSum<f64>;
/// Compiled double-precision observable.
pub type Compiled = CompiledObservable<f64>;
