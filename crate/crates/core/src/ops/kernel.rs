use std::f64::consts::PI;

use crate::error::{Result, SrrError};
use crate::frame::Frame;

/// Shape of the Laplacian used for `S` and `Q` by default.
pub const DEFAULT_LAPLACIAN_SHAPE: f64 = 0.2;

/// Spatially invariant 2-D stencil applied with circulant boundaries.
///
/// Used for the acquisition blur, the smoothness regularizer and the
/// detail-weighting operator.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelOperator {
    rows: usize,
    cols: usize,
    coeffs: Vec<f64>,
}

impl KernelOperator {
    /// Both mask dimensions must be odd; the center tap is at `(rows / 2, cols / 2)`.
    pub fn new(rows: usize, cols: usize, coeffs: Vec<f64>) -> Result<Self> {
        if rows % 2 == 0 || cols % 2 == 0 {
            return Err(SrrError::InvalidParameter(format!(
                "mask dimensions must be odd, got {rows}x{cols}"
            )));
        }
        if coeffs.len() != rows * cols {
            return Err(SrrError::InvalidParameter(format!(
                "{rows}x{cols} mask needs {} coefficients, got {}",
                rows * cols,
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(SrrError::InvalidParameter("mask coefficients must be finite".into()));
        }
        Ok(Self { rows, cols, coeffs })
    }

    /// `size`x`size` box blur with unit DC gain.
    pub fn uniform(size: usize) -> Result<Self> {
        let n = size * size;
        Self::new(size, size, vec![1.0 / n as f64; n])
    }

    /// Four-neighbour Laplacian `[0 1 0; 1 -4 1; 0 1 0]`.
    pub fn laplacian() -> Self {
        Self {
            rows: 3,
            cols: 3,
            coeffs: vec![0.0, 1.0, 0.0, 1.0, -4.0, 1.0, 0.0, 1.0, 0.0],
        }
    }

    /// Isotropic 3x3 Laplacian blending the cross and diagonal stencils:
    /// `4 / (shape + 1) * [s/4 (1-s)/4 s/4; (1-s)/4 -1 (1-s)/4; s/4 (1-s)/4 s/4]`.
    /// `shape` must lie in `[0, 1]`; 0 gives the four-neighbour stencil.
    pub fn shaped_laplacian(shape: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&shape) {
            return Err(SrrError::InvalidParameter(format!("Laplacian shape {shape} outside [0, 1]")));
        }
        let g = 4.0 / (shape + 1.0);
        let (c, e) = (g * shape / 4.0, g * (1.0 - shape) / 4.0);
        Self::new(3, 3, vec![c, e, c, e, -g, e, c, e, c])
    }

    pub fn identity() -> Self {
        Self { rows: 1, cols: 1, coeffs: vec![1.0] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Mask coefficient at signed offset `(dy, dx)` from the center.
    pub fn tap(&self, dy: isize, dx: isize) -> f64 {
        let r = dy + (self.rows / 2) as isize;
        let c = dx + (self.cols / 2) as isize;
        if r < 0 || c < 0 || r >= self.rows as isize || c >= self.cols as isize {
            return 0.0;
        }
        self.coeffs[r as usize * self.cols + c as usize]
    }

    /// Non-zero mask entries; the circulant matrix has this many per row.
    pub fn nonzeros(&self) -> usize {
        self.coeffs.iter().filter(|c| **c != 0.0).count()
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.coeffs.len();
        (0..n).all(|k| self.coeffs[k] == self.coeffs[n - 1 - k])
    }

    fn offsets(&self) -> impl Iterator<Item = (isize, isize, f64)> + '_ {
        let (cr, cc) = ((self.rows / 2) as isize, (self.cols / 2) as isize);
        self.coeffs.iter().enumerate().filter(|(_, c)| **c != 0.0).map(move |(k, &c)| {
            ((k / self.cols) as isize - cr, (k % self.cols) as isize - cc, c)
        })
    }

    fn check_fits(&self, f: &Frame) -> Result<()> {
        if self.rows > f.height() || self.cols > f.width() {
            return Err(SrrError::KernelTooLarge {
                kernel_rows: self.rows,
                kernel_cols: self.cols,
                frame_rows: f.height(),
                frame_cols: f.width(),
            });
        }
        Ok(())
    }

    /// Circular convolution of `f` with the mask.
    pub fn apply(&self, f: &Frame) -> Result<Frame> {
        self.check_fits(f)?;
        let mut out = Frame::zeros(f.height(), f.width());
        self.accumulate(f, 1.0, false, &mut out);
        Ok(out)
    }

    /// Circular correlation: the transpose of [`apply`](Self::apply).
    pub fn apply_adjoint(&self, f: &Frame) -> Result<Frame> {
        self.check_fits(f)?;
        let mut out = Frame::zeros(f.height(), f.width());
        self.accumulate(f, 1.0, true, &mut out);
        Ok(out)
    }

    /// `out += scale * K f` (or `K^T f` when `adjoint`), without allocating.
    pub(crate) fn accumulate(&self, f: &Frame, scale: f64, adjoint: bool, out: &mut Frame) {
        let (h, w) = f.dims();
        let src = f.as_slice();
        let dst = out.as_mut_slice();
        for (dy, dx, c) in self.offsets() {
            // convolution reads f(i - dy, j - dx); correlation reads f(i + dy, j + dx)
            let (dy, dx) = if adjoint { (-dy, -dx) } else { (dy, dx) };
            let c = c * scale;
            let s = dx.rem_euclid(w as isize) as usize;
            for i in 0..h {
                let r = (i as isize - dy).rem_euclid(h as isize) as usize;
                let srow = &src[r * w..(r + 1) * w];
                let drow = &mut dst[i * w..(i + 1) * w];
                for (d, v) in drow[s..].iter_mut().zip(&srow[..w - s]) {
                    *d += c * v;
                }
                for (d, v) in drow[..s].iter_mut().zip(&srow[w - s..]) {
                    *d += c * v;
                }
            }
        }
    }

    /// `|K(f)|^2` on the `height`x`width` DFT grid, row-major.
    pub fn power_spectrum(&self, height: usize, width: usize) -> Vec<f64> {
        let taps: Vec<_> = self.offsets().collect();
        let mut out = Vec::with_capacity(height * width);
        for u in 0..height {
            for v in 0..width {
                let (mut re, mut im) = (0.0, 0.0);
                for &(dy, dx, c) in &taps {
                    let ph = -2.0 * PI * (u as f64 * dy as f64 / height as f64 + v as f64 * dx as f64 / width as f64);
                    re += c * ph.cos();
                    im += c * ph.sin();
                }
                out.push(re * re + im * im);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(h: usize, w: usize) -> Frame {
        Frame::from_fn(h, w, |i, j| ((i * 7 + j * 3) % 11) as f64 - 2.5)
    }

    #[test]
    fn uniform_mask_keeps_constants() {
        let k = KernelOperator::uniform(3).unwrap();
        let f = Frame::filled(5, 6, 42.0);
        let g = k.apply(&f).unwrap();
        assert!(g.max_abs_diff(&f) < 1e-12);
    }

    #[test]
    fn shaped_laplacian() {
        let k = KernelOperator::shaped_laplacian(DEFAULT_LAPLACIAN_SHAPE).unwrap();
        let expect = [1.0 / 6.0, 2.0 / 3.0, -10.0 / 3.0];
        assert!((k.tap(-1, -1) - expect[0]).abs() < 1e-15);
        assert!((k.tap(0, 1) - expect[1]).abs() < 1e-15);
        assert!((k.tap(0, 0) - expect[2]).abs() < 1e-15);
        assert!(k.coeffs().iter().sum::<f64>().abs() < 1e-14);
        assert_eq!(KernelOperator::shaped_laplacian(0.0).unwrap(), KernelOperator::laplacian());
        assert!(KernelOperator::shaped_laplacian(1.5).is_err());
        // peak response at (pi, pi) is 16/3
        let p = k.power_spectrum(4, 4);
        assert!((p[2 * 4 + 2] - 256.0 / 9.0).abs() < 1e-9);
    }

    #[test]
    fn laplacian_annihilates_constants() {
        let g = KernelOperator::laplacian().apply(&Frame::filled(6, 6, 3.0)).unwrap();
        assert_eq!(g.max_abs(), 0.0);
    }

    #[test]
    fn impulse_response_of_box_blur() {
        let k = KernelOperator::uniform(3).unwrap();
        let g = k.apply(&Frame::basis(6, 6, 2, 2)).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let inside = (1..=3).contains(&i) && (1..=3).contains(&j);
                let expected = if inside { 1.0 / 9.0 } else { 0.0 };
                assert!((g.get(i, j) - expected).abs() < 1e-15, "({i},{j})");
            }
        }
    }

    #[test]
    fn asymmetric_mask_is_convolution_not_correlation() {
        // tap at offset (0, +1) moves an impulse one column to the right
        let k = KernelOperator::new(1, 3, vec![0.0, 0.0, 1.0]).unwrap();
        let g = k.apply(&Frame::basis(3, 4, 1, 3)).unwrap();
        assert_eq!(g.get(1, 0), 1.0);
        let a = k.apply_adjoint(&Frame::basis(3, 4, 1, 0)).unwrap();
        assert_eq!(a.get(1, 3), 1.0);
    }

    #[test]
    fn adjoint_of_symmetric_mask_is_itself() {
        let k = KernelOperator::laplacian();
        let f = ramp(7, 5);
        assert_eq!(k.apply(&f).unwrap(), k.apply_adjoint(&f).unwrap());
        assert!(k.is_symmetric());
    }

    #[test]
    fn zero_frame_maps_to_zero() {
        let k = KernelOperator::new(3, 3, (0..9).map(|v| v as f64).collect()).unwrap();
        assert_eq!(k.apply_adjoint(&Frame::zeros(4, 4)).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn rejects_even_masks_and_oversized_kernels() {
        assert!(KernelOperator::new(2, 3, vec![0.0; 6]).is_err());
        let k = KernelOperator::uniform(5).unwrap();
        assert!(matches!(k.apply(&Frame::zeros(4, 8)), Err(SrrError::KernelTooLarge { .. })));
    }

    #[test]
    fn power_spectrum_of_laplacian() {
        let p = KernelOperator::laplacian().power_spectrum(4, 4);
        assert!(p[0].abs() < 1e-12);
        // (pi, pi) bin: -4 - 2 - 2 = -8
        assert!((p[2 * 4 + 2] - 64.0).abs() < 1e-9);
    }
}
