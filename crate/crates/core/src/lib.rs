//! Pseudospectral solvers for hyperbolic chemotaxis systems with
//! relaxation on the periodic unit torus, their parabolic Keller–Segel
//! limits, energy diagnostics, and the Picard construction of small
//! solutions near constant states.

// `!(x > 0.0)` is the idiom used throughout to reject NaN along with
// out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod field;
pub mod harness;
pub mod hyperbolic;
pub mod limit;
pub mod model;
pub mod picard;
pub mod timeloop;

pub use error::{Error, Result};
pub use field::{Axis, Field2D, SpectralField2D};
pub use hyperbolic::{simulate, stable_dt, step};
pub use limit::{limit_rhs, limit_simulate, limit_stable_dt, limit_step, LimitState};
pub use model::{ConstantState, LinearCoeffs, ModelParams, ScalingVariant, State};
pub use timeloop::{Observer, SimOptions, TimeStepping, TrajectorySummary};
