//! Bound states of the Dirac equation with Coulomb-like potentials in `D`
//! spatial dimensions, solved by Numerov shooting on the second-order
//! equation for `phi+`.

pub mod coefficients;
pub mod diagnostics;
pub mod domain;
pub mod error;
pub mod numerov;
pub mod oracle;
pub mod parallel;
pub mod solver;

pub use coefficients::{coefficients_for, coupling_xi, CoefficientSet};
pub use domain::{Ansatz, EigenResult, KSign, PhysicalConfig, RadialGrid, WaveSolution};
pub use error::{Error, Result};
pub use numerov::Scheme;
pub use parallel::ExecutionMode;
pub use solver::{solve_ground_state, SolverSettings};
