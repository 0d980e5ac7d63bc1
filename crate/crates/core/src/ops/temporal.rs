use rustfft::num_complex::Complex64;

use crate::error::{Result, SrrError};
use crate::fft::Fft2d;
use crate::frame::Frame;
use crate::ops::KernelOperator;

/// `M = (I + Q^T Q / alpha_t)^-1` for a circulant `Q`, applied by per-bin
/// spectral division.
#[derive(Debug, Clone)]
pub struct TemporalInverse {
    alpha_t: f64,
    height: usize,
    width: usize,
    q_power: Vec<f64>,
    fft: Fft2d,
}

impl TemporalInverse {
    pub fn new(q: &KernelOperator, alpha_t: f64, dims: (usize, usize)) -> Result<Self> {
        if !(alpha_t > 0.0) || !alpha_t.is_finite() {
            return Err(SrrError::InvalidParameter(format!(
                "temporal weight must be positive and finite, got {alpha_t}"
            )));
        }
        let (height, width) = dims;
        if q.rows() > height || q.cols() > width {
            return Err(SrrError::KernelTooLarge {
                kernel_rows: q.rows(),
                kernel_cols: q.cols(),
                frame_rows: height,
                frame_cols: width,
            });
        }
        Ok(Self {
            alpha_t,
            height,
            width,
            q_power: q.power_spectrum(height, width),
            fft: Fft2d::new(height, width),
        })
    }

    pub fn alpha_t(&self) -> f64 {
        self.alpha_t
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// `|Q(f)|^2` per DFT bin.
    pub fn q_spectrum(&self) -> &[f64] {
        &self.q_power
    }

    /// Spectral denominator `1 + |Q(f)|^2 / alpha_t` of bin `k`; always >= 1.
    #[inline]
    pub fn denominator(&self, k: usize) -> f64 {
        1.0 + self.q_power[k] / self.alpha_t
    }

    pub fn apply(&self, f: &Frame) -> Result<Frame> {
        f.ensure_dims("temporal inverse input", self.dims())?;
        let mut buf = self.fft.forward_real(f.as_slice());
        for (k, v) in buf.iter_mut().enumerate() {
            *v /= self.denominator(k);
        }
        self.fft.inverse(&mut buf);
        Ok(Frame::from_vec_unchecked(self.height, self.width, buf.iter().map(|c| c.re).collect()))
    }

    /// Impulse response of `M` laid out as a frame (entry `(i, j)` is the
    /// weight at circular offset `(i, j)`).
    pub fn spatial_kernel(&self) -> Frame {
        let mut buf: Vec<Complex64> =
            (0..self.q_power.len()).map(|k| Complex64::new(1.0 / self.denominator(k), 0.0)).collect();
        self.fft.inverse(&mut buf);
        Frame::from_vec_unchecked(self.height, self.width, buf.iter().map(|c| c.re).collect())
    }
}
