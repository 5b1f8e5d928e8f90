//! Quantum and classical Fisher information for parametric qubit models.
//!
//! The crate covers the full pipeline from operator algebra to Monte Carlo
//! benchmarking:
//!
//! - [`operators`]: dense complex matrices, Hermitian eigendecomposition,
//!   PSD square roots (d = 2 closed form, Jacobi up to d = 8);
//! - [`model`]: density operators, pure states, finite-outcome POVMs, and
//!   parametric state models with analytic or numeric derivatives;
//! - [`information`]: the symmetric logarithmic derivative (quantum score),
//!   quantum/classical information matrices, the three-step information
//!   inequality, and its pointwise equality conditions;
//! - [`geometry`]: the spin-half Bloch-sphere example, score directions,
//!   and the great-circle dichotomy for uniform attainability;
//! - [`estimation`]: seeded reproducible sampling, two-stage adaptive
//!   estimators (scalar and two-parameter), replication summaries, and the
//!   attainable-covariance feasibility check.
//!
//! All values are immutable after construction; model closures must be pure.
//! Replications parallelize over deterministic per-replication streams, so
//! results are independent of thread count.

pub mod error;
pub mod estimation;
pub mod fuzz;
pub mod geometry;
pub mod information;
pub mod model;
pub mod operators;

mod vec3;

pub use error::{Error, Result};
pub use estimation::{
    fidelity_loss, first_stage_theta, gill_massar_feasible, replicate, replicate_streamed,
    sample_outcomes, two_param_adaptive, two_stage_theta, EstimateRecord, ExperimentSpec,
    ExperimentSummary, FirstStageSpec, GillMassar, RngStream, Strategy, TwoParamScheme,
    TwoStagePlan,
};
pub use geometry::{
    curve_classify, example_model, example_state, full_sphere_model, score_directions,
    uniform_attainability, CurveClass, CurveSample, SphericalAngles,
};
pub use information::{
    attainability_check, bc_chain, fisher_matrix, qfi_matrix, qfi_scalar, sld_solve,
    spinhalf_plane_condition, AttainabilityReport, ChainReport, InfoKind, InfoMatrix, SldResult,
    SldSolution,
};
pub use model::{
    bloch_to_density, density_to_bloch, model_derivative, outcome_distribution, DensityOperator,
    OutcomeDistribution, ParametricModel, Povm, PureState,
};
pub use operators::{
    pauli_x, pauli_y, pauli_z, spin_operator, trace_product, Complex, EigenDecomposition,
    HermitianOperator, Matrix,
};
