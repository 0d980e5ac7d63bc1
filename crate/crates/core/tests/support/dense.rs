//! Dense-matrix oracles built straight from the operator definitions,
//! independent of the matrix-free code paths under test.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use srr_core::ops::KernelOperator;
use srr_core::Frame;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_frame(rng: &mut impl Rng, h: usize, w: usize, scale: f64) -> Frame {
    Frame::from_fn(h, w, |_, _| rng.random_range(-scale..scale))
}

pub fn vec_of(f: &Frame) -> DVector<f64> {
    DVector::from_column_slice(f.as_slice())
}

pub fn frame_of(v: &DVector<f64>, h: usize, w: usize) -> Frame {
    Frame::new(h, w, v.iter().copied().collect()).unwrap()
}

fn wrap(i: isize, n: usize) -> usize {
    i.rem_euclid(n as isize) as usize
}

/// Phase-0 sampling: row `(i, j)` picks HR pixel `(f i, f j)`.
pub fn decimation(h: usize, w: usize, factor: usize) -> DMatrix<f64> {
    let (lh, lw) = (h / factor, w / factor);
    let mut m = DMatrix::zeros(lh * lw, h * w);
    for i in 0..lh {
        for j in 0..lw {
            m[(i * lw + j, factor * i * w + factor * j)] = 1.0;
        }
    }
    m
}

/// Circular convolution: `out(i, j) = sum c(a, b) x(i - a, j - b)` over
/// signed offsets `(a, b)` from the mask center.
pub fn convolution(k: &KernelOperator, h: usize, w: usize) -> DMatrix<f64> {
    let (rr, rc) = ((k.rows() / 2) as isize, (k.cols() / 2) as isize);
    let mut m = DMatrix::zeros(h * w, h * w);
    for i in 0..h {
        for j in 0..w {
            for a in -rr..=rr {
                for b in -rc..=rc {
                    let src = wrap(i as isize - a, h) * w + wrap(j as isize - b, w);
                    m[(i * w + j, src)] += k.tap(a, b);
                }
            }
        }
    }
    m
}

/// Bilinear warp sampling the source at `(i - dy, j - dx)` with wrap.
pub fn bilinear_warp(h: usize, w: usize, dy: &[f64], dx: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(h * w, h * w);
    for i in 0..h {
        for j in 0..w {
            let p = i * w + j;
            let (y, x) = (i as f64 - dy[p], j as f64 - dx[p]);
            let (y0, x0) = (y.floor(), x.floor());
            let (fy, fx) = (y - y0, x - x0);
            for (oy, wy) in [(0, 1.0 - fy), (1, fy)] {
                for (ox, wx) in [(0, 1.0 - fx), (1, fx)] {
                    let r = wrap(y0 as isize + oy, h);
                    let c = wrap(x0 as isize + ox, w);
                    m[(p, r * w + c)] += wy * wx;
                }
            }
        }
    }
    m
}

/// `(I + Q^T Q / alpha_t)^-1` by LU.
pub fn temporal_inverse(q: &DMatrix<f64>, alpha_t: f64) -> DMatrix<f64> {
    let n = q.nrows();
    let a = DMatrix::identity(n, n) + q.transpose() * q / alpha_t;
    a.lu().try_inverse().expect("I + Q^T Q / alpha_t is positive definite")
}

/// Dense operators for the standard acquisition model on an `h`x`w` grid.
pub struct DenseModel {
    pub h: usize,
    pub w: usize,
    pub d: DMatrix<f64>,
    pub hb: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub q: DMatrix<f64>,
}

impl DenseModel {
    pub fn new(h: usize, w: usize, factor: usize, blur: &KernelOperator, s: &KernelOperator, q: &KernelOperator) -> Self {
        Self {
            h,
            w,
            d: decimation(h, w, factor),
            hb: convolution(blur, h, w),
            s: convolution(s, h, w),
            q: convolution(q, h, w),
        }
    }

    pub fn dh(&self) -> DMatrix<f64> {
        &self.d * &self.hb
    }

    /// `x - (mu/2) grad` of the data plus spatial cost.
    pub fn rlms(&self, x: &DVector<f64>, y: &DVector<f64>, mu: f64, alpha: f64) -> DVector<f64> {
        let dh = self.dh();
        x + mu * dh.transpose() * (y - &dh * x) - alpha * mu * self.s.transpose() * &self.s * x
    }

    pub fn tsr(&self, x: &DVector<f64>, y: &DVector<f64>, w: &DVector<f64>, mu: f64, alpha: f64, alpha_t: f64) -> DVector<f64> {
        let qtq = self.q.transpose() * &self.q;
        let rhs = self.rlms(x, y, mu, alpha) + &qtq * w / alpha_t;
        let a = DMatrix::identity(x.len(), x.len()) + qtq / alpha_t;
        a.lu().solve(&rhs).expect("nonsingular")
    }

    pub fn ltsr(&self, x: &DVector<f64>, y: &DVector<f64>, w: &DVector<f64>, mu: f64, alpha: f64, alpha_t: f64) -> DVector<f64> {
        let qtq = self.q.transpose() * &self.q;
        self.rlms(x, y, mu, alpha) - mu * alpha_t * qtq * (x - w)
    }

    pub fn least_perturbation(&self, x: &DVector<f64>, y: &DVector<f64>, w: &DVector<f64>, mu: f64, alpha: f64, alpha_t: f64) -> DVector<f64> {
        let rhs = self.rlms(x, y, mu, alpha) + w / alpha_t;
        rhs / (1.0 + 1.0 / alpha_t)
    }

    pub fn rms_cost(&self, x: &DVector<f64>, y: &DVector<f64>, alpha: f64) -> f64 {
        (y - self.dh() * x).norm_squared() + alpha * (&self.s * x).norm_squared()
    }
}
