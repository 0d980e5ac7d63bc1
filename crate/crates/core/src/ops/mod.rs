//! Matrix-free linear operators of the acquisition and regularization model.
//!
//! Every convolution and warp uses circulant (wrap-around) boundaries.

mod decimate;
mod explicit;
mod kernel;
mod temporal;
pub(crate) mod warp;

pub use decimate::Decimator;
pub use explicit::{build_explicit_matrix, LinearOp, EXPLICIT_PIXEL_CAP};
pub use kernel::{KernelOperator, DEFAULT_LAPLACIAN_SHAPE};
pub use temporal::TemporalInverse;
pub use warp::{apply_warp, apply_warp_transpose, FlowField, Motion};

use crate::error::Result;
use crate::frame::Frame;

pub fn apply_decimate(d: &Decimator, hr: &Frame) -> Result<Frame> {
    d.apply(hr)
}

pub fn apply_decimate_adjoint(d: &Decimator, lr: &Frame) -> Result<Frame> {
    d.apply_adjoint(lr)
}

pub fn apply_kernel(k: &KernelOperator, f: &Frame) -> Result<Frame> {
    k.apply(f)
}

pub fn apply_kernel_adjoint(k: &KernelOperator, f: &Frame) -> Result<Frame> {
    k.apply_adjoint(f)
}

pub fn apply_temporal_inverse(m: &TemporalInverse, f: &Frame) -> Result<Frame> {
    m.apply(f)
}
