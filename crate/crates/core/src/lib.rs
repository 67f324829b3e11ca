//! Simulation, generator evaluation and positive-dependence diagnostics for
//! jump-Feller processes specified by their state-dependent Lévy
//! characteristics.

pub mod dependence;
pub mod error;
pub mod json;
pub mod levy;
pub mod numeric;
pub mod processes;
pub mod quadrature;
pub mod semigroup;
pub mod smalltime;

pub use error::{FellerError, Result};
