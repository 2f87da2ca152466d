//! Simulation and verification toolkit for the thin-film approximation of
//! the two-phase Muskat problem
//!
//! ```text
//! ∂t f = ∂x( f ∂x((1+R) f + R g) )
//! ∂t g = R_μ ∂x( g ∂x(f + g) )
//! ```
//!
//! on a truncated interval `(-L, L)` with zero-flux boundaries. The crate
//! integrates either this degenerate system directly (`Mode::Limit`) or its
//! ε-regularized version in which the cross terms see the smoothed fields
//! `(1 - ε²∂x²)⁻¹ f` and `(1 - ε²∂x²)⁻¹ g` and both thicknesses stay above
//! the floor ε (`Mode::Regularized`).
//!
//! Modules:
//! - [`grid`], [`initial`]: grids, parameters, discrete fields, initial data
//! - [`regularizer`]: the Neumann Helmholtz inverse used for smoothing
//! - [`solver`]: conservative explicit stepping and trajectory recording
//! - [`functionals`]: energies, entropy, moments, dissipation, local energy ledgers
//! - [`support`]: support edges, growth exponents, gap persistence, waiting times
//! - [`oracle`]: Barenblatt solutions and a priori bound gates

pub mod error;
pub mod functionals;
pub mod gate;
pub mod grid;
pub mod initial;
pub mod oracle;
pub mod regularizer;
pub mod solver;
pub mod support;

pub use error::{MuskatError, Result};
pub use gate::GateOutcome;
pub use grid::{FieldPair, Grid, PhysicalParams};
pub use initial::{make_initial_datum, regularize_initial_datum, InitialDatumSpec};
pub use regularizer::HelmholtzWorkspace;
pub use solver::{CrossFlux, Mode, StepperConfig, Trajectory};
