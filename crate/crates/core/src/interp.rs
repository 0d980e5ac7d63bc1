//! Cubic B-spline (bicubic spline) interpolation with circulant boundaries,
//! used to initialize reconstructions from the first observation.

use std::f64::consts::PI;

use crate::error::{Result, SrrError};
use crate::fft::Fft2d;
use crate::frame::Frame;

fn bspline3(t: f64) -> f64 {
    let a = t.abs();
    if a < 1.0 {
        2.0 / 3.0 - a * a + 0.5 * a * a * a
    } else if a < 2.0 {
        let b = 2.0 - a;
        b * b * b / 6.0
    } else {
        0.0
    }
}

/// Spline coefficients interpolating `f` exactly at the integer grid.
fn spline_coefficients(f: &Frame) -> Frame {
    let (h, w) = f.dims();
    let fft = Fft2d::new(h, w);
    let mut buf = fft.forward_real(f.as_slice());
    // sampled kernel [1/6, 2/3, 1/6] per axis has frequency response (2 + cos w) / 3
    let resp = |k: usize, n: usize| (2.0 + (2.0 * PI * k as f64 / n as f64).cos()) / 3.0;
    for u in 0..h {
        let ry = resp(u, h);
        for v in 0..w {
            buf[u * w + v] /= ry * resp(v, w);
        }
    }
    fft.inverse(&mut buf);
    Frame::from_vec_unchecked(h, w, buf.iter().map(|c| c.re).collect())
}

/// Up-samples by an integer factor so that LR pixel `(i, j)` lands on HR
/// pixel `(factor * i, factor * j)`, matching phase-0 decimation.
pub fn bicubic_upsample(lr: &Frame, factor: usize) -> Result<Frame> {
    if factor == 0 {
        return Err(SrrError::InvalidParameter("upsampling factor must be >= 1".into()));
    }
    let (h, w) = lr.dims();
    let c = spline_coefficients(lr);
    let weights = |pos: usize| -> (isize, [f64; 4]) {
        let u = pos as f64 / factor as f64;
        let base = u.floor() as isize - 1;
        let mut wts = [0.0; 4];
        for (a, wt) in wts.iter_mut().enumerate() {
            *wt = bspline3(u - (base + a as isize) as f64);
        }
        (base, wts)
    };
    let cols: Vec<_> = (0..w * factor).map(weights).collect();
    Ok(Frame::from_fn(h * factor, w * factor, |p, q| {
        let (rb, rw) = weights(p);
        let (cb, cw) = cols[q];
        let mut acc = 0.0;
        for (a, wy) in rw.iter().enumerate() {
            for (b, wx) in cw.iter().enumerate() {
                acc += wy * wx * c.get_wrapped(rb + a as isize, cb + b as isize);
            }
        }
        acc
    }))
}
