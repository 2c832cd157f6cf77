//! Small dense LMI feasibility machinery and the bisection driver.

pub mod bisect;
pub mod problem;
pub mod solver;

pub use bisect::{bisect_max, probe_count, BisectOutcome};
pub use problem::{
    coords_from_hermitian, hermitian_from_coords, AffineHerm, AffineScalar, HermVar, LmiProblem,
    Replay, ScalarVar, Witness,
};
pub use solver::{
    minimize_linear, solve_feasibility, write_trace_csv, BarrierIterate, FeasibilityReport,
    FeasibilityStatus, SolverOptions,
};
