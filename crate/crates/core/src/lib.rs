//! Distributed averaging (consensus) on time-varying graphs.
//!
//! - [`graph`], [`sequence`]: communication graphs, schedules, windowed
//!   connectivity.
//! - [`rules`]: max-degree, Metropolis and load-balancing updates, plus
//!   pluggable local rules.
//! - [`sim`]: trajectories, sample variance, convergence time.
//! - [`spectral`]: linearization at consensus, stochasticity and eigenvalue
//!   audits, the `n^2/30 ln(1/eps)` lower bound.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the scalar to `f64`.

pub mod error;
pub mod graph;
pub mod matrix;
pub mod rules;
pub mod scalar;
pub mod sequence;
pub mod sim;
pub mod spectral;
pub mod text;

pub use error::{Error, Result};
pub use graph::{Edge, Graph};
pub use matrix::Matrix;
pub use rules::{
    lift, load_balancing_step, max_degree_step, metropolis_step, EpsilonPolicy, LocalRule,
    RuleParams, RuleRegistry, Selection, StepRule, WeightPolicy,
};
pub use scalar::Real;
pub use sequence::{
    first_failing_window, make_sequence, union_graph, validate_b_connectivity, GeneratorParams,
    GraphSequence, SequenceKind, Window,
};
pub use sim::{
    convergence_time, p_norm_distance, run, sample_variance, worst_case_convergence_time,
    ConvergenceReport, InitStrategy, NormOrder, Trajectory, WorstCaseReport,
};
pub use spectral::{
    composed_jacobian_residual, consensus_fixed_point_check, eigen_decompose,
    eigenvalue_interval_check, lower_bound_value, matrix_of, numerical_jacobian,
    spectral_predicted_time, stochasticity_check, LinearizationMatrix, SpectralReport,
};

pub type Matrix64 = Matrix<f64>;
pub type RuleParams64 = RuleParams<f64>;
pub type RuleRegistry64 = RuleRegistry<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type ConvergenceReport64 = ConvergenceReport<f64>;
pub type WorstCaseReport64 = WorstCaseReport<f64>;
pub type LinearizationMatrix64 = LinearizationMatrix<f64>;
pub type SpectralReport64 = SpectralReport<f64>;
