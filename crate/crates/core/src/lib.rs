//! Numerical integral geometry on CP^n: Fubini-Study geometry, Haar
//! sampling, Lagrangian models and Hamiltonian flows, transverse
//! intersection counting, and Monte Carlo verification of the kinematic
//! formula with its closed-form constants.

pub mod constants;
pub mod error;
pub mod haar;
pub mod intersect;
pub mod kinematic;
pub mod report;
pub mod hamiltonian;
pub mod lagrangian;
pub mod projective;

pub use error::{GeomError, Result};
