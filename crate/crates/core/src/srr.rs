//! Adaptive reconstruction algorithms: LMS, R-LMS, TSR-LMS, LTSR-LMS and the
//! plain least-perturbation variant.
//!
//! Each time instant runs `K` inner gradient-style iterations on the current
//! observation, after which the estimate is propagated to the next instant by
//! the warp `G(t + 1)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Result, SrrError};
use crate::frame::Frame;
use crate::ops::{apply_warp, Decimator, KernelOperator, Motion, TemporalInverse, DEFAULT_LAPLACIAN_SHAPE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Lms,
    Rlms,
    TsrLms,
    LtsrLms,
    LeastPerturbation,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Lms,
        Algorithm::Rlms,
        Algorithm::TsrLms,
        Algorithm::LtsrLms,
        Algorithm::LeastPerturbation,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Lms => "LMS",
            Algorithm::Rlms => "RLMS",
            Algorithm::TsrLms => "TSR_LMS",
            Algorithm::LtsrLms => "LTSR_LMS",
            Algorithm::LeastPerturbation => "LEAST_PERTURBATION",
        }
    }

    /// Whether the update references the warped previous estimate.
    pub fn is_temporal(&self) -> bool {
        matches!(self, Algorithm::TsrLms | Algorithm::LtsrLms | Algorithm::LeastPerturbation)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = SrrError;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        match norm.as_str() {
            "LMS" => Ok(Algorithm::Lms),
            "RLMS" | "R_LMS" => Ok(Algorithm::Rlms),
            "TSR_LMS" | "TSRLMS" | "TSR" => Ok(Algorithm::TsrLms),
            "LTSR_LMS" | "LTSRLMS" | "LTSR" => Ok(Algorithm::LtsrLms),
            "LEAST_PERTURBATION" | "LP" => Ok(Algorithm::LeastPerturbation),
            _ => Err(SrrError::InvalidParameter(format!("unknown algorithm '{s}'"))),
        }
    }
}

/// Step size, regularization weights and iteration budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SrrParams {
    pub mu: f64,
    pub alpha: f64,
    pub alpha_t: f64,
    pub k_iters: usize,
    pub algorithm: Algorithm,
}

impl SrrParams {
    pub fn new(algorithm: Algorithm, mu: f64, alpha: f64, alpha_t: f64, k_iters: usize) -> Self {
        Self { mu, alpha, alpha_t, k_iters, algorithm }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SrrError::InvalidParameter(msg));
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return bad(format!("step size mu must be positive, got {}", self.mu));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be non-negative, got {}", self.alpha));
        }
        if !(self.alpha_t >= 0.0 && self.alpha_t.is_finite()) {
            return bad(format!("alpha_t must be non-negative, got {}", self.alpha_t));
        }
        if matches!(self.algorithm, Algorithm::TsrLms | Algorithm::LeastPerturbation) && self.alpha_t <= 0.0 {
            return bad(format!("{} requires alpha_t > 0", self.algorithm));
        }
        if self.k_iters == 0 {
            return bad("k_iters must be >= 1".into());
        }
        Ok(())
    }
}

/// Degradation and regularization operators for one HR grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSet {
    hr_dims: (usize, usize),
    lr_dims: (usize, usize),
    pub decimator: Decimator,
    /// `H`
    pub blur: KernelOperator,
    /// `S`
    pub regularizer: KernelOperator,
    /// `Q`
    pub detail: KernelOperator,
}

impl OperatorSet {
    pub fn new(
        hr_dims: (usize, usize),
        decimator: Decimator,
        blur: KernelOperator,
        regularizer: KernelOperator,
        detail: KernelOperator,
    ) -> Result<Self> {
        let lr_dims = decimator.lr_dims(hr_dims)?;
        for k in [&blur, &regularizer, &detail] {
            if k.rows() > hr_dims.0 || k.cols() > hr_dims.1 {
                return Err(SrrError::KernelTooLarge {
                    kernel_rows: k.rows(),
                    kernel_cols: k.cols(),
                    frame_rows: hr_dims.0,
                    frame_cols: hr_dims.1,
                });
            }
        }
        Ok(Self { hr_dims, lr_dims, decimator, blur, regularizer, detail })
    }

    /// 3x3 box blur, phase-0 decimation and the shaped Laplacian
    /// ([`DEFAULT_LAPLACIAN_SHAPE`]) for `S = Q`.
    pub fn standard(hr_dims: (usize, usize), factor: usize) -> Result<Self> {
        let lap = KernelOperator::shaped_laplacian(DEFAULT_LAPLACIAN_SHAPE)?;
        Self::new(hr_dims, Decimator::new(factor)?, KernelOperator::uniform(3)?, lap.clone(), lap)
    }

    pub fn with_detail(mut self, detail: KernelOperator) -> Result<Self> {
        self.detail = detail;
        Self::new(self.hr_dims, self.decimator, self.blur, self.regularizer, self.detail)
    }

    pub fn hr_dims(&self) -> (usize, usize) {
        self.hr_dims
    }

    pub fn lr_dims(&self) -> (usize, usize) {
        self.lr_dims
    }

    /// `D H x`
    pub fn observe(&self, x: &Frame) -> Result<Frame> {
        x.ensure_dims("HR estimate", self.hr_dims)?;
        self.decimator.apply(&self.blur.apply(x)?)
    }

    /// `H^T D^T r`
    pub fn back_project(&self, r: &Frame) -> Result<Frame> {
        r.ensure_dims("LR residual", self.lr_dims)?;
        self.blur.apply_adjoint(&self.decimator.apply_adjoint(r)?)
    }

    /// `y - D H x`
    pub fn residual(&self, x: &Frame, y: &Frame) -> Result<Frame> {
        y.ensure_dims("observation", self.lr_dims)?;
        let mut r = y.clone();
        r.axpy(-1.0, &self.observe(x)?);
        Ok(r)
    }

    pub fn temporal_inverse(&self, alpha_t: f64) -> Result<TemporalInverse> {
        TemporalInverse::new(&self.detail, alpha_t, self.hr_dims)
    }
}

/// `x + mu H^T D^T (y - D H x) - alpha mu S^T S x`; the `S` term is skipped
/// entirely when `alpha == 0`.
fn rlms_update(x: &Frame, y: &Frame, params: &SrrParams, ops: &OperatorSet) -> Result<Frame> {
    let mut out = x.clone();
    out.axpy(params.mu, &ops.back_project(&ops.residual(x, y)?)?);
    if params.alpha != 0.0 {
        let sx = ops.regularizer.apply(x)?;
        ops.regularizer.accumulate(&sx, -params.alpha * params.mu, true, &mut out);
    }
    Ok(out)
}

fn check_prev(ops: &OperatorSet, warped_prev: &Frame) -> Result<()> {
    warped_prev.ensure_dims("warped previous estimate", ops.hr_dims)
}

/// LMS inner iteration: `x + mu H^T D^T (y - D H x)`.
pub fn lms_step(x: &Frame, y: &Frame, params: &SrrParams, ops: &OperatorSet) -> Result<Frame> {
    rlms_update(x, y, &SrrParams { alpha: 0.0, ..*params }, ops)
}

/// R-LMS inner iteration.
pub fn rlms_step(x: &Frame, y: &Frame, params: &SrrParams, ops: &OperatorSet) -> Result<Frame> {
    rlms_update(x, y, params, ops)
}

/// TSR-LMS inner iteration:
/// `M { x + Q^T Q w / alpha_t - mu H^T D^T (D H x - y) - mu alpha S^T S x }`
/// with `w = G(t) x(t-1)` and `M = (I + Q^T Q / alpha_t)^-1`.
pub fn tsr_step(
    x: &Frame,
    y: &Frame,
    warped_prev: &Frame,
    params: &SrrParams,
    ops: &OperatorSet,
    inverse: &TemporalInverse,
) -> Result<Frame> {
    if !(params.alpha_t > 0.0) {
        return Err(SrrError::InvalidParameter("TSR-LMS requires alpha_t > 0".into()));
    }
    check_prev(ops, warped_prev)?;
    if inverse.dims() != ops.hr_dims {
        return Err(SrrError::DimensionMismatch("temporal inverse built for a different grid".into()));
    }
    let mut bracket = rlms_update(x, y, params, ops)?;
    let qw = ops.detail.apply(warped_prev)?;
    ops.detail.accumulate(&qw, 1.0 / params.alpha_t, true, &mut bracket);
    inverse.apply(&bracket)
}

/// LTSR-LMS inner iteration:
/// `x - mu alpha_t Q^T (Q x - Q w) - mu H^T D^T (D H x - y) - mu alpha S^T S x`.
///
/// With `alpha_t == 0` this is exactly [`rlms_step`].
pub fn ltsr_step(
    x: &Frame,
    y: &Frame,
    warped_prev: &Frame,
    params: &SrrParams,
    ops: &OperatorSet,
) -> Result<Frame> {
    check_prev(ops, warped_prev)?;
    let mut out = rlms_update(x, y, params, ops)?;
    if params.alpha_t != 0.0 {
        let qd = ops.detail.apply(&(x - warped_prev))?;
        ops.detail.accumulate(&qd, -params.mu * params.alpha_t, true, &mut out);
    }
    Ok(out)
}

/// TSR-LMS with `Q = I`: the temporal inverse degenerates to the scalar
/// `alpha_t / (1 + alpha_t)`.
pub fn least_perturbation_step(
    x: &Frame,
    y: &Frame,
    warped_prev: &Frame,
    params: &SrrParams,
    ops: &OperatorSet,
) -> Result<Frame> {
    if !(params.alpha_t > 0.0) {
        return Err(SrrError::InvalidParameter("least perturbation requires alpha_t > 0".into()));
    }
    check_prev(ops, warped_prev)?;
    let mut bracket = rlms_update(x, y, params, ops)?;
    bracket.axpy(1.0 / params.alpha_t, warped_prev);
    Ok(bracket.scaled(params.alpha_t / (1.0 + params.alpha_t)))
}

/// Instantaneous regularized data cost `||y - D H x||^2 + alpha ||S x||^2`.
pub fn eval_rms_cost(x: &Frame, y: &Frame, params: &SrrParams, ops: &OperatorSet) -> Result<f64> {
    let data = ops.residual(x, y)?.norm_sq();
    let reg = if params.alpha != 0.0 { params.alpha * ops.regularizer.apply(x)?.norm_sq() } else { 0.0 };
    Ok(data + reg)
}

/// `||D H x - y||^2 + alpha ||S x||^2 + alpha_t ||Q x - Q w||^2`, the cost whose
/// gradient step is the LTSR-LMS update.
pub fn eval_ltsr_lagrangian(
    x: &Frame,
    y: &Frame,
    warped_prev: &Frame,
    params: &SrrParams,
    ops: &OperatorSet,
) -> Result<f64> {
    check_prev(ops, warped_prev)?;
    let base = eval_rms_cost(x, y, params, ops)?;
    if params.alpha_t == 0.0 {
        return Ok(base);
    }
    let qd = ops.detail.apply(x)?;
    let qw = ops.detail.apply(warped_prev)?;
    Ok(base + params.alpha_t * (&qd - &qw).norm_sq())
}

/// Recursion state within and across time instants.
#[derive(Debug, Clone, PartialEq)]
pub struct SrrState {
    /// `x_k(t)`
    pub estimate: Frame,
    /// `x(t-1) = x_K(t-1)`
    pub previous_estimate: Frame,
    /// `G(t) x(t-1)`, fixed for all inner iterations of instant `t`.
    pub warped_prev: Frame,
    pub time_index: usize,
    pub inner_index: usize,
}

impl SrrState {
    /// State for the first instant: the initial estimate doubles as the
    /// (identity-warped) previous estimate.
    pub fn initial(init: Frame) -> Self {
        Self {
            previous_estimate: init.clone(),
            warped_prev: init.clone(),
            estimate: init,
            time_index: 0,
            inner_index: 0,
        }
    }
}

/// `x_0(t+1) = G(t+1) x_K(t)`.
pub fn time_update(state: &SrrState, motion: &Motion) -> Result<SrrState> {
    let warped = apply_warp(motion, &state.estimate)?;
    Ok(SrrState {
        previous_estimate: state.estimate.clone(),
        estimate: warped.clone(),
        warped_prev: warped,
        time_index: state.time_index + 1,
        inner_index: 0,
    })
}

/// Validated parameters and operators, with the temporal inverse prepared
/// once for TSR-LMS.
#[derive(Debug, Clone)]
pub struct Reconstructor {
    params: SrrParams,
    ops: OperatorSet,
    inverse: Option<TemporalInverse>,
}

impl Reconstructor {
    pub fn new(params: SrrParams, ops: OperatorSet) -> Result<Self> {
        params.validate()?;
        let inverse = match params.algorithm {
            Algorithm::TsrLms => Some(ops.temporal_inverse(params.alpha_t)?),
            _ => None,
        };
        Ok(Self { params, ops, inverse })
    }

    pub fn params(&self) -> &SrrParams {
        &self.params
    }

    pub fn ops(&self) -> &OperatorSet {
        &self.ops
    }

    /// One inner iteration of the configured algorithm from `state`.
    pub fn step(&self, state: &SrrState, y: &Frame) -> Result<Frame> {
        let (x, w, p, ops) = (&state.estimate, &state.warped_prev, &self.params, &self.ops);
        match p.algorithm {
            Algorithm::Lms => lms_step(x, y, p, ops),
            Algorithm::Rlms => rlms_step(x, y, p, ops),
            Algorithm::TsrLms => tsr_step(x, y, w, p, ops, self.inverse.as_ref().expect("prepared in new")),
            Algorithm::LtsrLms => ltsr_step(x, y, w, p, ops),
            Algorithm::LeastPerturbation => least_perturbation_step(x, y, w, p, ops),
        }
    }

    /// Runs all `K` inner iterations for the current instant in place.
    pub fn iterate(&self, state: &mut SrrState, y: &Frame) -> Result<()> {
        for k in 0..self.params.k_iters {
            let next = self.step(state, y)?;
            if !next.is_finite() {
                return Err(SrrError::Diverged { frame: state.time_index + 1, iteration: k + 1 });
            }
            state.estimate = next;
            state.inner_index = k + 1;
        }
        Ok(())
    }

    /// Reconstructs a sequence, handing each `x_K(t)` to `on_frame` as soon
    /// as it is available. `motions[t]` is `G(t)`; `motions[0]` is ignored.
    pub fn run_with(
        &self,
        lr_frames: &[Frame],
        motions: &[Motion],
        init: &Frame,
        mut on_frame: impl FnMut(usize, &Frame) -> Result<()>,
    ) -> Result<()> {
        if lr_frames.len() != motions.len() {
            return Err(SrrError::DimensionMismatch(format!(
                "{} frames but {} motions",
                lr_frames.len(),
                motions.len()
            )));
        }
        init.ensure_dims("initial estimate", self.ops.hr_dims())?;
        let mut state = SrrState::initial(init.clone());
        for (t, y) in lr_frames.iter().enumerate() {
            if t > 0 {
                state = time_update(&state, &motions[t])?;
            }
            self.iterate(&mut state, y)?;
            on_frame(t, &state.estimate)?;
        }
        Ok(())
    }

    pub fn run_sequence(&self, lr_frames: &[Frame], motions: &[Motion], init: &Frame) -> Result<Vec<Frame>> {
        let mut out = Vec::with_capacity(lr_frames.len());
        self.run_with(lr_frames, motions, init, |_, x| {
            out.push(x.clone());
            Ok(())
        })?;
        Ok(out)
    }
}

/// Convenience wrapper over [`Reconstructor::run_sequence`].
pub fn run_sequence(
    lr_frames: &[Frame],
    motions: &[Motion],
    params: &SrrParams,
    ops: &OperatorSet,
    init: &Frame,
) -> Result<Vec<Frame>> {
    Reconstructor::new(*params, ops.clone())?.run_sequence(lr_frames, motions, init)
}
