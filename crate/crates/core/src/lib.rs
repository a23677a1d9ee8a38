//! Numerical toolkit for Orlicz-space Moser iteration on infinitely degenerate
//! elliptic operators: the Φ_m Young functions and their iterates, the Moser
//! recurrence, F_{k,σ} geometries, discretized Carnot–Carathéodory balls,
//! Orlicz–Sobolev probes and a finite-difference solver with a-priori-bound
//! diagnostics.

pub mod error;
pub mod logval;
pub mod geometry;
pub mod iterates;
pub mod metric;
pub mod orlicz;
pub mod recurrence;
pub mod sobolev;
pub mod solver;

pub use error::{Error, Result};
pub use logval::LogVal;
