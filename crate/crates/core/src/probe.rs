//! Instrumented re-execution of the inner iterations that counts arithmetic
//! under the tabulated accounting:
//!
//! * a circulant mask application costs one multiply-add per matrix nonzero
//!   and accumulates straight into its destination (scaling is folded into
//!   the coefficients);
//! * the `D^T D` sampling mask and the `D^T` up-sampler cost one resampling
//!   per HR output pixel;
//! * a frame subtraction costs one surplus addition per pixel;
//! * `M` is applied as a circulant kernel truncated to its significant taps.
//!
//! Quantities fixed for a whole time instant (`Q G x(t-1)` for LTSR-LMS) are
//! reported separately from the per-iteration count. The instrumented result
//! is compared against the production step.

use crate::cost::{memory_count, operation_count, CostModelInput};
use crate::error::{Result, SrrError};
use crate::frame::Frame;
use crate::ops::{apply_warp, KernelOperator, Motion};
use crate::srr::{Algorithm, OperatorSet, Reconstructor, SrrParams, SrrState};

/// Taps of `M` below this fraction of the largest are dropped.
pub const KERNEL_TRUNCATION: f64 = 1e-12;

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct OpCounts {
    pub multiply_adds: u64,
    pub surplus_adds: u64,
    pub resamples: u64,
}

impl OpCounts {
    pub fn total(&self) -> u64 {
        self.multiply_adds + self.surplus_adds + self.resamples
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub algorithm: Algorithm,
    pub hr_dims: (usize, usize),
    pub cost_input: CostModelInput,
    /// One entry per inner iteration.
    pub per_iteration: Vec<OpCounts>,
    /// Work done once per time instant.
    pub per_frame: OpCounts,
    pub predicted_ops: u64,
    pub measured_memory: f64,
    pub predicted_memory: f64,
    /// Largest deviation of the instrumented iterate from the production one.
    pub max_deviation: f64,
}

impl ProbeReport {
    /// Every iteration matches the closed form exactly.
    pub fn matches(&self) -> bool {
        self.per_iteration.iter().all(|c| c.total() == self.predicted_ops)
            && self.measured_memory == self.predicted_memory
    }
}

struct Counter {
    pixels: u64,
    counts: OpCounts,
}

impl Counter {
    fn mask(&mut self, k: &KernelOperator, f: &Frame, scale: f64, adjoint: bool, out: &mut Frame) {
        self.counts.multiply_adds += k.nonzeros() as u64 * self.pixels;
        k.accumulate(f, scale, adjoint, out);
    }

    fn taps(&mut self, taps: &[(isize, isize, f64)], f: &Frame) -> Frame {
        self.counts.multiply_adds += taps.len() as u64 * self.pixels;
        let mut out = Frame::zeros(f.height(), f.width());
        for &(dy, dx, c) in taps {
            let shifted = apply_warp(&Motion::global(dy as f64, dx as f64), f).expect("integer shift");
            out.axpy(c, &shifted);
        }
        out
    }

    fn sample_mask(&mut self, ops: &OperatorSet, f: &Frame) -> Result<Frame> {
        self.counts.resamples += self.pixels;
        ops.decimator.apply_adjoint(&ops.decimator.apply(f)?)
    }

    fn upsample(&mut self, ops: &OperatorSet, y: &Frame) -> Result<Frame> {
        self.counts.resamples += self.pixels;
        ops.decimator.apply_adjoint(y)
    }

    fn subtract(&mut self, a: &Frame, b: &Frame) -> Frame {
        self.counts.surplus_adds += self.pixels;
        a - b
    }

    fn take(&mut self) -> OpCounts {
        std::mem::take(&mut self.counts)
    }
}

/// Significant circular taps of `M` as signed offsets.
fn inverse_taps(ops: &OperatorSet, alpha_t: f64) -> Result<Vec<(isize, isize, f64)>> {
    let kernel = ops.temporal_inverse(alpha_t)?.spatial_kernel();
    let (h, w) = kernel.dims();
    let cut = KERNEL_TRUNCATION * kernel.max_abs();
    let signed = |k: usize, n: usize| if k <= n / 2 { k as isize } else { k as isize - n as isize };
    Ok((0..h)
        .flat_map(|i| (0..w).map(move |j| (i, j)))
        .filter(|&(i, j)| kernel.get(i, j).abs() > cut)
        .map(|(i, j)| (signed(i, h), signed(j, w), kernel.get(i, j)))
        .collect())
}

/// Runs `params.k_iters` instrumented inner iterations from `init` against
/// the observation `y` and previous warped estimate `warped_prev`.
pub fn flops_probe(
    params: &SrrParams,
    ops: &OperatorSet,
    y: &Frame,
    init: &Frame,
    warped_prev: &Frame,
) -> Result<ProbeReport> {
    let alg = params.algorithm;
    if alg == Algorithm::LeastPerturbation {
        return Err(SrrError::InvalidParameter(format!("no cost model for {alg}")));
    }
    let recon = Reconstructor::new(*params, ops.clone())?;
    y.ensure_dims("observation", ops.lr_dims())?;
    init.ensure_dims("initial estimate", ops.hr_dims())?;
    warped_prev.ensure_dims("warped previous estimate", ops.hr_dims())?;

    let (h, w) = ops.hr_dims();
    let pixels = (h * w) as u64;
    let m_taps = if alg == Algorithm::TsrLms { inverse_taps(ops, params.alpha_t)? } else { Vec::new() };
    let mut c = Counter { pixels, counts: OpCounts::default() };
    let (mu, alpha, alpha_t) = (params.mu, params.alpha, params.alpha_t);

    let qw = if alg == Algorithm::LtsrLms {
        let mut qw = Frame::zeros(h, w);
        c.mask(&ops.detail, warped_prev, 1.0, false, &mut qw);
        Some(qw)
    } else {
        None
    };
    let per_frame = c.take();

    let mut state = SrrState::initial(init.clone());
    state.warped_prev = warped_prev.clone();
    let mut x = init.clone();
    let mut per_iteration = Vec::with_capacity(params.k_iters);
    let mut max_deviation: f64 = 0.0;
    for _ in 0..params.k_iters {
        let mut next = x.clone();
        // data term as H^T D^T D H x - H^T D^T y
        let mut hx = Frame::zeros(h, w);
        c.mask(&ops.blur, &x, 1.0, false, &mut hx);
        let masked = c.sample_mask(ops, &hx)?;
        c.mask(&ops.blur, &masked, -mu, true, &mut next);
        let dty = c.upsample(ops, y)?;
        c.mask(&ops.blur, &dty, mu, true, &mut next);
        if alg != Algorithm::Lms {
            let mut sx = Frame::zeros(h, w);
            c.mask(&ops.regularizer, &x, 1.0, false, &mut sx);
            c.mask(&ops.regularizer, &sx, -mu * alpha, true, &mut next);
        }
        match alg {
            Algorithm::LtsrLms => {
                let mut qx = Frame::zeros(h, w);
                c.mask(&ops.detail, &x, 1.0, false, &mut qx);
                let d = c.subtract(&qx, qw.as_ref().expect("prepared above"));
                c.mask(&ops.detail, &d, -mu * alpha_t, true, &mut next);
            }
            Algorithm::TsrLms => {
                let mut qw = Frame::zeros(h, w);
                c.mask(&ops.detail, warped_prev, 1.0, false, &mut qw);
                c.mask(&ops.detail, &qw, 1.0 / alpha_t, true, &mut next);
                next = c.taps(&m_taps, &next);
            }
            _ => {}
        }
        per_iteration.push(c.take());

        let reference = recon.step(&state, y)?;
        let scale = reference.max_abs().max(1.0);
        max_deviation = max_deviation.max(next.max_abs_diff(&reference) / scale);
        state.estimate = reference;
        x = next;
    }

    let cost_input = CostModelInput {
        pixels,
        h_nnz: ops.blur.nonzeros() as u64 * pixels,
        s_nnz: ops.regularizer.nonzeros() as u64 * pixels,
        q_nnz: ops.detail.nonzeros() as u64 * pixels,
        m_nnz: m_taps.len().max(1) as u64 * pixels,
    };
    let buffers = if alg.is_temporal() { 2 } else { 1 };
    let mut coefficients = ops.blur.nonzeros();
    if alg != Algorithm::Lms {
        coefficients += ops.regularizer.nonzeros();
    }
    if alg.is_temporal() {
        coefficients += ops.detail.nonzeros();
    }
    coefficients += m_taps.len();

    Ok(ProbeReport {
        algorithm: alg,
        hr_dims: (h, w),
        cost_input,
        per_iteration,
        per_frame,
        predicted_ops: operation_count(alg, &cost_input)?,
        measured_memory: (buffers as u64 * pixels) as f64 + coefficients as f64,
        predicted_memory: memory_count(alg, &cost_input)?,
        max_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(n: usize) -> (OperatorSet, Frame, Frame, Frame) {
        let ops = OperatorSet::standard((n, n), 2).unwrap();
        let x = Frame::from_fn(n, n, |i, j| ((i * 7 + j * 13) % 31) as f64 * 8.0);
        let y = ops.observe(&x.map(|v| 255.0 - v)).unwrap();
        let w = x.map(|v| 0.9 * v + 3.0);
        (ops, y, x, w)
    }

    #[test]
    fn every_algorithm_matches_its_closed_form() {
        let (ops, y, x, w) = setup(16);
        for alg in crate::cost::COSTED {
            let p = SrrParams::new(alg, 1.5, 1e-3, 2.0, 3);
            let r = flops_probe(&p, &ops, &y, &x, &w).unwrap();
            assert!(r.matches(), "{alg}: {:?} vs {}", r.per_iteration, r.predicted_ops);
            assert!(r.max_deviation < 1e-9, "{alg}: {}", r.max_deviation);
        }
    }

    #[test]
    fn least_perturbation_has_no_entry() {
        let (ops, y, x, w) = setup(8);
        let p = SrrParams::new(Algorithm::LeastPerturbation, 1.0, 0.0, 1.0, 1);
        assert!(flops_probe(&p, &ops, &y, &x, &w).is_err());
    }
}
