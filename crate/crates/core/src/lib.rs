//! Semi-Lagrangian finite-difference solver for the upper-convected time
//! derivative written as a generalized Lie derivative.
//!
//! The scheme is second order in time and of order `p` (1 or 2) in space on a
//! uniform 1D or 2D lattice, with prescribed velocity. Besides the solver the
//! crate carries a manufactured-solution harness (convergence, stability and
//! truncation studies) and RK4 reference integrators for the flow map and the
//! deformation gradient.
//!
//! ```
//! use gld_core::{run_convergence_study, InterpOrder, ManufacturedProblem, StudyOptions};
//!
//! let problem = ManufacturedProblem::named("ex1d-iii").unwrap();
//! let rule = problem.default_rule(InterpOrder::Quadratic);
//! let table = run_convergence_study(
//!     &problem,
//!     InterpOrder::Quadratic,
//!     rule,
//!     &[10, 20],
//!     &StudyOptions::default(),
//! )
//! .unwrap();
//! assert!(table.rows[1].errors[0] < table.rows[0].errors[0]);
//! ```

pub mod error;
pub mod interp;
pub mod kinematics;
pub mod lattice;
pub mod scheme;
pub mod tensor;
pub mod verification;

pub use error::{GldError, Result};
pub use interp::{eta1, eta2, interpolate, interpolate_scalar, stencil, InterpOrder, Stencil};
pub use kinematics::{
    deformation_matrix, deformation_oracle, flow_map_oracle, uctd_analytic, upwind_point,
    AnalyticTensor, AnalyticVelocity, DeformationMatrix, VELOCITY_NAMES,
};
pub use lattice::{
    build_grid, index_indicator, validate_time_step, Grid, SymTensorField, TimeStepReport,
};
pub use scheme::{
    apply_ah, model_first_step, model_general_step, solve_model, solve_model_with, solve_oldroyd_b,
    solve_oldroyd_b_with, write_snapshot, BoundaryPolicy, InitialFn, Model, OperatorField,
    ProblemData, SchemeConfig, StartMode, TensorFn,
};
pub use tensor::{Component, Mat2, Point, SymTensor};
pub use verification::{
    error_linf_linf, run_convergence_study, run_error, run_stability_study, run_truncation_study,
    slope, truncation_residual, ConvergenceRow, ConvergenceTable, DtRule, ErrorAccumulator,
    ErrorNorm, ManufacturedProblem, StabilityRow, StabilityTable, StudyOptions, TruncationRow,
    TruncationTable, EXAMPLE_NAMES,
};
