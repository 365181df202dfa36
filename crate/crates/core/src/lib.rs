//! Numerics for 1+1 dimensional Dirac dynamics built from a quantum walk:
//! chirality states and weak values, sharp-step scattering, the
//! pair-production rate of a supercritical step, Trotter and series
//! propagators, and a position-space lattice solver.

pub mod cli;
pub mod error;
pub mod evolution;
pub mod format;
pub mod lattice;
pub mod pairprod;
pub mod quadrature;
pub mod scattering;
pub mod spinor;
pub mod weakvalue;

pub use error::{Error, Result};
pub use spinor::{Branch, ChiralityState, Mat2, PauliAxis, PhysParams, Spinor};
pub use weakvalue::{Regime, StepKinematics, WeakValueResult};
