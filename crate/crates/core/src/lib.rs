//! Simulation and analysis of degenerate dispersive K(m, n) equations
//!
//! `u_t + (u^m)_x + (u^n)_xxx = 0` is evolved with a Local Discontinuous
//! Galerkin discretisation and SSP-RK3 time stepping. Along the way the
//! conserved functionals, support and positivity monitors and the
//! center-of-mass drift identity are tracked, and the a priori upper bounds on
//! the lifespan of strong solutions are computed from the initial data.

pub mod bounds;
pub mod convergence;
pub mod diagnostics;
pub mod equations;
pub mod error;
pub mod grid;
pub mod ldg;
pub mod quadrature;
pub mod timestepper;

pub use bounds::{compute_bounds, BoundsReport};
pub use equations::{make_kmn, EquationSpec, InitialCondition};
pub use error::{Error, Result};
pub use grid::{project, GridFunction, GridSpec, PeriodicGrid};
pub use ldg::{FluxMode, LdgOperator};
pub use timestepper::{run, RunConfig, RunOutcome};
