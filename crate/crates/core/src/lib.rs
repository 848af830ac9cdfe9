//! Fractional calculus of radial functions on a non-Archimedean local field.
//!
//! Radial functions live on the shell lattice `q^Z` ([`RadialFunction`]). The
//! crate evaluates the Vladimirov derivative `D^α` ([`vladimirov`]) and its
//! regularized right inverse `I^α` ([`fracint`]) exactly on such functions,
//! including closed-form tails, and solves the nonlinear Cauchy problem
//! `D^α u = f(|t|, u)`, `u(0) = u0` through its mild formulation
//! `u = u0 + I^α f(·, u)` ([`solver`]).

// NaN must fail the positivity checks
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conditions;
pub mod error;
pub mod expoly;
pub mod expr;
pub mod fracint;
pub mod grid;
pub mod radial;
pub mod solver;
pub mod vladimirov;

pub use conditions::{check_growth_conditions, ConditionItem, ConditionKind, ConditionReport};
pub use error::{Error, Result};
pub use expoly::{ExpPoly, PowerTerm};
pub use fracint::{
    apply_ialpha, bound_constant, front_coeff, ialpha_at, ialpha_oracle, kernel_amplitude,
    kernel_constant, kernel_integral, IalphaParams, KernelConstant,
};
pub use grid::{ball_power_integral, qpow, shell_measure, RadialGrid};
pub use radial::{RadialFunction, Side, TailSpec};
pub use solver::{
    certified_k_min, check_rhs_conditions, continue_solution, picard_solve, picard_solve_from,
    truncation_bound, v0_constant, verify_strict, CauchyProblem, MildSolution, PicardSettings,
    ResidualReport, RhsSpec, ShellDiagnostics, Stage, V0Split,
};
pub use vladimirov::{apply_dalpha, dalpha_at, dalpha_oracle, diag_coeff, theta, DalphaParams};
