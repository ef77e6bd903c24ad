//! Essential spectrum of the linearized 2D Euler operator around a steady
//! flow, computed from the periods of its closed streamlines.
//!
//! The pipeline is: a [`StreamField`] on a typed domain, its fixed points and
//! periodic-orbit families ([`topology`]), the period function of each
//! family ([`period`]), and the band/lattice/full-line set
//! `i * closure{2 pi k / T}` ([`spectrum`]). The [`lab`] module discretizes the
//! linearized operator and checks the structural facts numerically.

pub mod error;
pub mod field;
pub mod lab;
pub mod ode;
pub mod period;
pub mod quad;
pub mod spectrum;
pub mod tolerances;
pub mod topology;

/// Cartesian coordinates in domain units.
pub type Point = [f64; 2];

pub use error::{Error, Result};
pub use field::{make_builtin_flow, load_grid_field, DomainSpec, FieldSample, StreamField};
pub use period::{PeriodFunction, PeriodSample};
pub use spectrum::{GapReport, SpectrumSet};
pub use tolerances::{Scales, Tolerances};
pub use topology::{CriticalPoint, IndexSet, OrbitFamily, OrbitTrace};
