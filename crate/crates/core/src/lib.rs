//! Multi-frame video super-resolution by stochastic-gradient adaptive
//! filtering with spatial and temporally selective regularization.

pub mod cost;
pub mod error;
pub mod fft;
pub mod flow;
pub mod frame;
pub mod interp;
pub mod io;
pub mod metrics;
pub mod ops;
#[cfg(feature = "flops")]
pub mod probe;
pub mod srr;
pub mod synth;

pub use error::{Result, SrrError};
pub use frame::Frame;
pub use ops::{FlowField, KernelOperator, Motion};
pub use srr::{Algorithm, OperatorSet, Reconstructor, SrrParams, SrrState};
