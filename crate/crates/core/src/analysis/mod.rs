//! Executable diagnostics: generator and martingale residuals, moment-bound
//! audits, the smoothing gadget, comparison and continuous dependence.

pub mod audits;
pub mod gadget;
pub mod generator;

pub use audits::{
    audit_moment_bounds, comparison_audit, comparison_run, dependence_audit, dependence_curve, discrete_order_condition,
    martingale_residual, martingale_residual_run, DependencePoint, DiagnosticKind, DiagnosticsReport, Outcome,
    PairTally,
};
pub use gadget::{gadget_bounds_check, Gadget, GadgetCheck, GadgetVariant, PowerModulus};
pub use generator::{apply_generator, GeneratorTable, TestFunction};
