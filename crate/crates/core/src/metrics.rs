//! Image quality metrics on the 0..255 intensity scale.

use crate::error::{mismatch, Result, SrrError};
use crate::frame::Frame;

pub const PEAK: f64 = 255.0;
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

fn same_dims(a: &Frame, b: &Frame) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(mismatch("metric operands", a.dims(), b.dims()));
    }
    Ok(())
}

/// Mean squared error in the linear domain.
pub fn mse(a: &Frame, b: &Frame) -> Result<f64> {
    same_dims(a, b)?;
    let sum: f64 = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(sum / a.len() as f64)
}

/// Converts a linear MSE to decibels; zero maps to `-inf`.
pub fn to_db(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::NEG_INFINITY
    } else {
        10.0 * mse.log10()
    }
}

/// `10 log10(MSE)`; identical frames give `f64::NEG_INFINITY`.
pub fn mse_db(a: &Frame, b: &Frame) -> Result<f64> {
    Ok(to_db(mse(a, b)?))
}

/// `10 log10(255^2 / MSE)`; identical frames give `f64::INFINITY`.
pub fn psnr_db(a: &Frame, b: &Frame) -> Result<f64> {
    let e = mse(a, b)?;
    if e == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (PEAK * PEAK / e).log10())
}

/// Normalized 1-D Gaussian taps of the SSIM window.
pub fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    for (k, v) in w.iter_mut().enumerate() {
        let d = k as f64 - c;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

/// Separable "valid" Gaussian filtering: output is `(h - 10) x (w - 10)`.
fn filter_valid(data: &[f64], h: usize, w: usize, g: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let (oh, ow) = (h - SSIM_WINDOW + 1, w - SSIM_WINDOW + 1);
    let mut rows = vec![0.0; h * ow];
    for i in 0..h {
        let src = &data[i * w..(i + 1) * w];
        for j in 0..ow {
            rows[i * ow + j] = g.iter().zip(&src[j..j + SSIM_WINDOW]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for i in 0..oh {
        for (k, gk) in g.iter().enumerate() {
            let src = &rows[(i + k) * ow..(i + k + 1) * ow];
            for (o, v) in out[i * ow..(i + 1) * ow].iter_mut().zip(src) {
                *o += gk * v;
            }
        }
    }
    out
}

/// Mean structural similarity over all fully-contained 11x11 Gaussian windows
/// (sigma 1.5, K1 = 0.01, K2 = 0.03, dynamic range 255).
pub fn ssim(a: &Frame, b: &Frame) -> Result<f64> {
    same_dims(a, b)?;
    let (h, w) = a.dims();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(SrrError::DimensionMismatch(format!(
            "SSIM needs frames of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {h}x{w}"
        )));
    }
    let g = gaussian_window();
    let (xa, xb) = (a.as_slice(), b.as_slice());
    let aa: Vec<f64> = xa.iter().map(|v| v * v).collect();
    let bb: Vec<f64> = xb.iter().map(|v| v * v).collect();
    let ab: Vec<f64> = xa.iter().zip(xb).map(|(x, y)| x * y).collect();
    let mu_a = filter_valid(xa, h, w, &g);
    let mu_b = filter_valid(xb, h, w, &g);
    let e_aa = filter_valid(&aa, h, w, &g);
    let e_bb = filter_valid(&bb, h, w, &g);
    let e_ab = filter_valid(&ab, h, w, &g);
    let c1 = (SSIM_K1 * PEAK).powi(2);
    let c2 = (SSIM_K2 * PEAK).powi(2);
    let mut total = 0.0;
    for k in 0..mu_a.len() {
        let (ma, mb) = (mu_a[k], mu_b[k]);
        let va = e_aa[k] - ma * ma;
        let vb = e_bb[k] - mb * mb;
        let cov = e_ab[k] - ma * mb;
        total += ((2.0 * (ma * mb) + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    Ok(total / mu_a.len() as f64)
}

/// Quality of one reconstructed frame against its reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub frame_index: usize,
    pub mse_db: f64,
    pub psnr_db: f64,
    /// `None` when the frame is smaller than the SSIM window.
    pub ssim: Option<f64>,
}

impl MetricsReport {
    pub fn compute(frame_index: usize, reference: &Frame, estimate: &Frame) -> Result<Self> {
        let ssim = if reference.height() >= SSIM_WINDOW && reference.width() >= SSIM_WINDOW {
            Some(ssim(reference, estimate)?)
        } else {
            None
        };
        Ok(Self {
            frame_index,
            mse_db: mse_db(reference, estimate)?,
            psnr_db: psnr_db(reference, estimate)?,
            ssim,
        })
    }

    /// Set when the estimate matches the reference exactly.
    pub fn is_exact(&self) -> bool {
        self.mse_db == f64::NEG_INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img(seed: usize) -> Frame {
        Frame::from_fn(24, 20, |i, j| ((i * 37 + j * 11 + seed * 13) % 251) as f64)
    }

    #[test]
    fn identical_frames_hit_the_sentinels() {
        let a = img(1);
        assert_eq!(mse_db(&a, &a).unwrap(), f64::NEG_INFINITY);
        assert_eq!(psnr_db(&a, &a).unwrap(), f64::INFINITY);
        assert_eq!(ssim(&a, &a).unwrap(), 1.0);
        assert!(MetricsReport::compute(3, &a, &a).unwrap().is_exact());
    }

    #[test]
    fn uniform_offsets() {
        let a = img(2);
        let b = a.map(|v| v + 10.0);
        assert!((mse_db(&a, &b).unwrap() - 20.0).abs() < 1e-12);
        let z = Frame::zeros(4, 4);
        assert!(psnr_db(&z, &Frame::filled(4, 4, 255.0)).unwrap().abs() < 1e-12);
        let p = psnr_db(&z, &Frame::filled(4, 4, 1.0)).unwrap();
        assert!((p - 48.13).abs() < 0.01);
    }

    #[test]
    fn psnr_and_mse_db_sum_to_peak() {
        let (a, b) = (img(3), img(7));
        let s = psnr_db(&a, &b).unwrap() + mse_db(&a, &b).unwrap();
        assert!((s - 20.0 * 255f64.log10()).abs() < 1e-10);
    }

    #[test]
    fn inverted_image_is_dissimilar() {
        let a = img(4);
        let b = a.map(|v| 255.0 - v);
        assert!(ssim(&a, &b).unwrap() < 1.0);
    }

    #[test]
    fn ssim_errors_and_symmetry() {
        assert!(ssim(&Frame::zeros(10, 30), &Frame::zeros(10, 30)).is_err());
        assert!(mse(&Frame::zeros(4, 4), &Frame::zeros(4, 5)).is_err());
        let (a, b) = (img(5), img(9));
        assert_eq!(ssim(&a, &b).unwrap(), ssim(&b, &a).unwrap());
        assert_eq!(mse_db(&a, &b).unwrap(), mse_db(&b, &a).unwrap());
    }

    #[test]
    fn window_is_normalized() {
        let g = gaussian_window();
        assert!((g.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(g[0], g[10]);
    }
}
