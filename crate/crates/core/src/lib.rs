//! Simulation and pathwise diagnostics for jump SDEs of non-negative processes:
//! continuous-state branching processes with immigration and their relatives.

pub mod analysis;
pub mod cli;
pub mod conditions;
pub mod engine;
pub mod error;
pub mod measures;
pub mod model;
pub mod quadrature;
pub mod samplers;

pub use error::{Error, Result};
pub use measures::{JumpLaw, JumpMeasure, MeasureKind, Role};
pub use model::{Coef, Intensity, Model, ModelForm, ModelSpec};
