//! Forward and inverse nodal solver for Sturm-Liouville problems
//!
//! ```text
//! -y'' + q(x) y = λ y,  0 < x < 1
//! y'(0) + h y(0) = γ₀ y(ξ₀),   y'(1) + H y(1) = γ₁ y(ξ₁)
//! ```
//!
//! with nonlocal two-point conditions (`ξ₀, ξ₁` rational in (0, 1);
//! either `h` or `H` may be infinite, i.e. Dirichlet).
//!
//! * [`forward`] computes eigenvalues from the characteristic determinant,
//!   eigenfunctions and their nodal points.
//! * [`inverse`] rebuilds `q` and the boundary-constant combinations from
//!   nodal points, via the limit of scaled nodal residuals.
//! * [`io`] holds config parsing, nodal CSV files and the CLI commands.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod expr;
pub mod forward;
pub mod inverse;
pub mod io;
pub mod potential;
pub mod problem;
pub mod roots;
pub mod smoothing;
mod tableau;

use thiserror::Error;

pub use basis::{asymptotic_c, asymptotic_s, integrate_basis, BasisGrid, BasisSolutions};
pub use expr::{parse_expression, Expr};
pub use forward::{
    boundary_forms, char_delta, eigenfunction, find_eigenvalue, find_nodes, generate_dataset, kappa_seed, NodalDataset,
    NodalLayer, NodalPoint, SpectralPoint,
};
pub use inverse::{
    fit_limit_curve, limit_samples, reconstruct, resolve_constants, select_subsequence, Known, LimitCurve,
    ReconstructionResult,
};
pub use potential::{half_integral_q, normalize_potential, GridPotential, Potential};
pub use problem::{BoundaryParam, Case, ProblemSpec, Rational, Resolution, SolverConfig};

/// Errors from the numerical pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("potential is not finite at x = {x}")]
    NonFinitePotential { x: f64 },
    #[error("potential evaluation failed: {0}")]
    PotentialEval(String),
    #[error("invalid wavenumber k = {k} (need a finite k >= 0)")]
    InvalidK { k: f64 },
    #[error("step control failure at k = {k}: Wronskian drift {drift:e} above tolerance")]
    StepControl { k: f64, drift: f64 },
    #[error("point {xi} is not on the integration grid")]
    MissingGridPoint { xi: f64 },
    #[error("index n = {n} unsupported (the seed formula needs n >= 1)")]
    IndexUnsupported { n: u32 },
    #[error("index n = {n} is below n_min = {n_min}")]
    BelowMinimumIndex { n: u32, n_min: u32 },
    #[error("no sign change of the characteristic function for n = {n} in [{lo}, {hi}]")]
    NoSignChange { n: u32, lo: f64, hi: f64 },
    #[error("root for n = {n} did not reach tolerance: relative residual {residual:e}")]
    RootTolerance { n: u32, residual: f64 },
    #[error("eigenfunction for n = {n} has no nodal points in (0, 1)")]
    EmptyNodes { n: u32 },
    #[error("ambiguous nodal indexing for n = {n}: {detail}")]
    AmbiguousIndexing { n: u32, detail: String },
    #[error("no eigenvalue index that is a multiple of {modulus} in the dataset")]
    NoAdmissibleIndex { modulus: u64 },
    #[error("empty nodal layer")]
    EmptyLayer,
    #[error("insufficient coverage: {0}")]
    InsufficientCoverage(String),
    #[error("known values do not match case {case}: {detail}")]
    KnownMismatch { case: Case, detail: String },
}
