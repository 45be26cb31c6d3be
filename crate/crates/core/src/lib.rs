//! Statistical moments of elliptic transmission problems with a randomly
//! perturbed spherical interface.
//!
//! The interface is the unit sphere perturbed along its normal by a small
//! random field. The solver linearizes the solution's dependence on the
//! interface, reduces the linearized problem to a boundary equation that is
//! diagonal in spherical harmonics, and solves the tensorized moment
//! equations on hyperbolic-cross sparse index sets. Closed-form benchmark
//! problems and moment-estimation oracles provide end-to-end checks.

pub mod benchmarks;
pub mod error;
pub mod harmonics;
pub mod moments;
pub mod operators;
pub mod shape;
pub mod validation;

pub use benchmarks::{amplitude_quadrature, Example1, Example2};
pub use error::{Error, Result};
pub use harmonics::{
    build_grid, eval_gradient, eval_ylm, surface_divergence, surface_gradient, synthesize_at,
    HarmonicIndex, QuadratureGrid, SpectralField, TangentField,
};
pub use moments::{
    assemble_kth_moment_rhs, assemble_second_moment_rhs, build_cross, evaluate_moment, one_leg_rhs,
    propagate_covariance, solve_covariance, solve_kth_moment, solve_second_moment,
    CovarianceSolution, HyperbolicCross, KlMode, PerturbationModel, TensorSpectralField,
};
pub use operators::{
    evaluate_exterior, evaluate_interior, extension_factor, operator_eigenvalue, solve_jump,
    BoundaryOperator, OperatorKind, Side, TransmissionCoefficients,
};
pub use shape::{
    build_dirichlet_jump, build_neumann_jump, solve_trace, BandProjection, NominalTraceData,
    ShapeDerivativeTrace,
};
pub use validation::{
    convergence_study, estimate_moments_mc, estimate_moments_quadrature, linearization_error_study,
    McMoments, QuadratureMoments, StudyQuantity, StudyReport, StudyRow,
};
