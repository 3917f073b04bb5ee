//! Exact algebra between two-layer ReLU networks and piecewise-linear
//! functions on the real line, together with the weighted sup-norm
//! `‖f‖ = sup |f(x)| / (1 + |x|)` under which finite ReLU networks are
//! globally dense.
//!
//! The crate is organized around one correspondence and two computations:
//!
//! * [`ReluNetwork`] and [`PiecewiseLinear`] are two exact representations
//!   of the same class of functions; [`pl_algebra`] converts losslessly in
//!   both directions.
//! * [`weighted_norm`] computes `‖·‖` exactly for piecewise-linear
//!   functions and by a compactified-grid oracle for anything else, via the
//!   weight operator `A f = f / (1 + |·|)` which extends continuously to
//!   `±∞`.
//! * [`approximator`] turns density into an algorithm: given a target with
//!   finite asymptotic slopes and a tolerance, it produces a finite network
//!   together with an oracle-measured error certificate.
//!
//! [`dual_checker`] runs the dual side of the story at desk scale: finite
//! atomic measures on the two-point compactification, paired against
//! networks through `A`, with annihilation and separation experiments.
//! [`expr`] provides the small expression language used by the CLI to
//! define targets.

pub mod approximator;
pub mod dual_checker;
pub mod expr;
pub mod io;
pub mod network;
pub mod piecewise;
pub mod pl_algebra;
pub mod target;
pub mod weighted_norm;

pub use approximator::{
    approximate, interp_pl, residual_target, ApproxConfig, ApproxError,
    ApproximationCertificate, RefinementStrategy,
};
pub use dual_checker::{
    annihilation_test, pair, pair_bounded_extension, separation_residual, AnnihilationReport,
    DiscreteMeasure, DualError, SpanningSet,
};
pub use expr::{parse_expr, to_target, to_target_resolved, ExprAst, ExprError, TargetError};
pub use network::{relu, ModelError, ReluNetwork, ReluUnit};
pub use piecewise::PiecewiseLinear;
pub use pl_algebra::{
    hat, net_add, net_scale, network_to_pl, pl_add, pl_scale, pl_to_network, ramp_minus,
    ramp_plus, step_f, step_g,
};
pub use target::{ExtendedPoint, YTarget};
pub use weighted_norm::{
    apply_a, estimate_alpha, estimate_alpha_with, linf_bound_check, resolve_alphas,
    y_norm_exact, y_norm_grid, y_norm_grid_threaded, AlphaSchedule, CompactGrid, NormError,
    NormMethod, NormReport, Side, YElement,
};
