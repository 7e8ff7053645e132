//! Numerical laboratory for the asymptotic stability of generalized KdV solitons.
//!
//! The crate covers soliton profiles and the generalized kernel of the
//! linearization, Jost solutions and the Evans function, the resolvent on the
//! imaginary axis, a Fourier evolver, modulation of solitons and the weighted
//! norms and virial functionals used to monitor perturbations.

pub mod cubic_spectrum;
pub mod diagnostics;
pub mod error;
pub mod evolver;
pub mod grid;
pub mod identities;
pub mod jost;
pub mod linop;
pub mod modulation;
pub mod par;
pub mod profiles;
pub mod resolvent;
pub mod stability;

pub use error::{Error, Result};
pub use grid::{ComplexField, FieldGrid, Grid, RealField, Spectral};
pub use profiles::{Nonlinearity, SolitonParams};
