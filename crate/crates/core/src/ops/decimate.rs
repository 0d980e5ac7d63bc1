use crate::error::{Result, SrrError};
use crate::frame::Frame;

/// Integer sub-sampling of a high-resolution grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decimator {
    factor: usize,
    phase: (usize, usize),
}

impl Decimator {
    pub fn new(factor: usize) -> Result<Self> {
        Self::with_phase(factor, (0, 0))
    }

    /// `phase` is the sampled offset inside each `factor`x`factor` block, per axis.
    pub fn with_phase(factor: usize, phase: (usize, usize)) -> Result<Self> {
        if factor == 0 {
            return Err(SrrError::InvalidParameter("decimation factor must be >= 1".into()));
        }
        if phase.0 >= factor || phase.1 >= factor {
            return Err(SrrError::InvalidParameter(format!(
                "phase {phase:?} outside [0, {factor})"
            )));
        }
        Ok(Self { factor, phase })
    }

    pub fn factor(&self) -> usize {
        self.factor
    }

    pub fn phase(&self) -> (usize, usize) {
        self.phase
    }

    pub fn lr_dims(&self, hr: (usize, usize)) -> Result<(usize, usize)> {
        if hr.0 % self.factor != 0 || hr.1 % self.factor != 0 || hr.0 == 0 || hr.1 == 0 {
            return Err(SrrError::DimensionMismatch(format!(
                "{}x{} not divisible by decimation factor {}",
                hr.0, hr.1, self.factor
            )));
        }
        Ok((hr.0 / self.factor, hr.1 / self.factor))
    }

    pub fn hr_dims(&self, lr: (usize, usize)) -> (usize, usize) {
        (lr.0 * self.factor, lr.1 * self.factor)
    }

    /// Keeps pixel `(factor * i + phase, factor * j + phase)` for every LR `(i, j)`.
    pub fn apply(&self, hr: &Frame) -> Result<Frame> {
        let (lh, lw) = self.lr_dims(hr.dims())?;
        let f = self.factor;
        Ok(Frame::from_fn(lh, lw, |i, j| hr.get(f * i + self.phase.0, f * j + self.phase.1)))
    }

    /// Zero-filling up-sampler, the transpose of [`apply`](Self::apply).
    pub fn apply_adjoint(&self, lr: &Frame) -> Result<Frame> {
        let (hh, hw) = self.hr_dims(lr.dims());
        let mut out = Frame::zeros(hh, hw);
        let f = self.factor;
        for i in 0..lr.height() {
            for j in 0..lr.width() {
                out.set(f * i + self.phase.0, f * j + self.phase.1, lr.get(i, j));
            }
        }
        Ok(out)
    }
}
