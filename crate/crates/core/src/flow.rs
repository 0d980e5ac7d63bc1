//! Horn-Schunck optical flow with a coarse-to-fine pyramid, its reduction to
//! a global translation, and LR-to-HR motion upscaling.

use crate::error::{mismatch, Result, SrrError};
use crate::frame::Frame;
use crate::ops::warp::bilinear_taps;
use crate::ops::{apply_warp, FlowField, Motion};

/// Coarsest pyramid level is never smaller than this on either side.
pub const MIN_LEVEL_SIDE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowParams {
    /// Weight of the quadratic smoothness penalty.
    pub smoothness_weight: f64,
    pub pyramid_levels: usize,
    pub pyramid_spacing: f64,
    /// Re-linearizations (warps of `b` by the current flow) per level.
    pub warps_per_level: usize,
    /// Over-relaxation factor of the sweeps, in `(0, 2)`; 1 is plain Gauss-Seidel.
    pub relaxation: f64,
    /// Sweeps per linearization.
    pub max_sweeps: usize,
    /// Early exit once the RMS flow update of a sweep drops below this.
    pub tolerance: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            smoothness_weight: 1e3,
            pyramid_levels: 4,
            pyramid_spacing: 2.0,
            warps_per_level: 3,
            relaxation: 1.9,
            max_sweeps: 100,
            tolerance: 1e-4,
        }
    }
}

impl FlowParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.smoothness_weight > 0.0) || !self.smoothness_weight.is_finite() {
            return Err(SrrError::InvalidParameter("smoothness weight must be positive".into()));
        }
        if self.pyramid_levels == 0 {
            return Err(SrrError::InvalidParameter("pyramid needs at least one level".into()));
        }
        if !(self.pyramid_spacing > 1.0) || !self.pyramid_spacing.is_finite() {
            return Err(SrrError::InvalidParameter("pyramid spacing must exceed 1".into()));
        }
        if self.warps_per_level == 0 {
            return Err(SrrError::InvalidParameter("need at least one linearization per level".into()));
        }
        if !(self.relaxation > 0.0 && self.relaxation < 2.0) {
            return Err(SrrError::InvalidParameter("relaxation must lie in (0, 2)".into()));
        }
        if !(self.tolerance >= 0.0) {
            return Err(SrrError::InvalidParameter("tolerance must be non-negative".into()));
        }
        Ok(())
    }
}

/// One linearization of one level.
#[derive(Debug, Clone, PartialEq)]
pub struct PassDiagnostics {
    pub sweeps: usize,
    pub converged: bool,
    /// Linearized energy before the first sweep and after each sweep.
    pub energies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelDiagnostics {
    pub dims: (usize, usize),
    pub passes: Vec<PassDiagnostics>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowEstimate {
    pub flow: FlowField,
    /// Coarsest level first.
    pub levels: Vec<LevelDiagnostics>,
    /// Non-convergence notes; never fatal.
    pub warnings: Vec<String>,
}

impl FlowEstimate {
    pub fn motion(&self) -> Motion {
        Motion::Dense(self.flow.clone())
    }
}

/// Linearized brightness constancy at one level: residual `ix u + iy v + c`.
struct Linearization {
    h: usize,
    w: usize,
    ix: Vec<f64>,
    iy: Vec<f64>,
    c: Vec<f64>,
}

impl Linearization {
    fn new(a: &Frame, b: &Frame, u: &[f64], v: &[f64]) -> Result<Self> {
        let (h, w) = a.dims();
        let back = FlowField::new(h, w, v.iter().map(|x| -x).collect(), u.iter().map(|x| -x).collect())?;
        let bw = apply_warp(&Motion::Dense(back), b)?;
        let g: Vec<f64> = a.as_slice().iter().zip(bw.as_slice()).map(|(p, q)| 0.5 * (p + q)).collect();
        let mut ix = vec![0.0; h * w];
        let mut iy = vec![0.0; h * w];
        let mut c = vec![0.0; h * w];
        for i in 0..h {
            let (up, down) = ((i + h - 1) % h, (i + 1) % h);
            for j in 0..w {
                let (left, right) = ((j + w - 1) % w, (j + 1) % w);
                let k = i * w + j;
                ix[k] = 0.5 * (g[i * w + right] - g[i * w + left]);
                iy[k] = 0.5 * (g[down * w + j] - g[up * w + j]);
                let it = bw.as_slice()[k] - a.as_slice()[k];
                c[k] = it - ix[k] * u[k] - iy[k] * v[k];
            }
        }
        Ok(Self { h, w, ix, iy, c })
    }

    fn energy(&self, u: &[f64], v: &[f64], lambda: f64) -> f64 {
        let (h, w) = (self.h, self.w);
        let mut data = 0.0;
        let mut smooth = 0.0;
        for i in 0..h {
            let down = (i + 1) % h;
            for j in 0..w {
                let k = i * w + j;
                let r = self.ix[k] * u[k] + self.iy[k] * v[k] + self.c[k];
                data += r * r;
                for n in [i * w + (j + 1) % w, down * w + j] {
                    smooth += (u[k] - u[n]).powi(2) + (v[k] - v[n]).powi(2);
                }
            }
        }
        data + lambda * smooth
    }

    /// One in-place sweep moving each pixel's pair `omega` times the way to
    /// its exact conditional minimizer; for `0 < omega < 2` the energy cannot
    /// increase. Returns the RMS update.
    fn sweep(&self, u: &mut [f64], v: &mut [f64], lambda: f64, omega: f64) -> f64 {
        let (h, w) = (self.h, self.w);
        let mut change = 0.0;
        for i in 0..h {
            let (up, down) = ((i + h - 1) % h, (i + 1) % h);
            for j in 0..w {
                let (left, right) = ((j + w - 1) % w, (j + 1) % w);
                let k = i * w + j;
                let nb = [i * w + left, i * w + right, up * w + j, down * w + j];
                let ubar = nb.iter().map(|&n| u[n]).sum::<f64>() / 4.0;
                let vbar = nb.iter().map(|&n| v[n]).sum::<f64>() / 4.0;
                let (gx, gy) = (self.ix[k], self.iy[k]);
                let t = (gx * ubar + gy * vbar + self.c[k]) / (4.0 * lambda + gx * gx + gy * gy);
                let (nu, nv) = (u[k] + omega * (ubar - gx * t - u[k]), v[k] + omega * (vbar - gy * t - v[k]));
                change += (nu - u[k]).powi(2) + (nv - v[k]).powi(2);
                u[k] = nu;
                v[k] = nv;
            }
        }
        (change / (2 * h * w) as f64).sqrt()
    }
}

fn periodic_gaussian_blur(f: &Frame, sigma: f64) -> Frame {
    let radius = (3.0 * sigma).ceil() as isize;
    let taps: Vec<f64> = (-radius..=radius).map(|d| (-(d * d) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let total: f64 = taps.iter().sum();
    let (h, w) = f.dims();
    let along = |src: &Frame, vertical: bool| {
        Frame::from_fn(h, w, |i, j| {
            taps.iter()
                .zip(-radius..=radius)
                .map(|(t, d)| {
                    let v = if vertical {
                        src.get_wrapped(i as isize + d, j as isize)
                    } else {
                        src.get_wrapped(i as isize, j as isize + d)
                    };
                    t * v
                })
                .sum::<f64>()
                / total
        })
    };
    along(&along(f, false), true)
}

/// Periodic bilinear resampling with pixel centers aligned.
fn resample(f: &Frame, dims: (usize, usize)) -> Frame {
    let (h, w) = f.dims();
    let (sy, sx) = (h as f64 / dims.0 as f64, w as f64 / dims.1 as f64);
    let src = f.as_slice();
    Frame::from_fn(dims.0, dims.1, |i, j| {
        let y = (i as f64 + 0.5) * sy - 0.5;
        let x = (j as f64 + 0.5) * sx - 0.5;
        bilinear_taps(h, w, y, x).iter().map(|&(k, wt)| wt * src[k]).sum()
    })
}

fn pyramid_dims(dims: (usize, usize), p: &FlowParams) -> Vec<(usize, usize)> {
    let mut out = vec![dims];
    for l in 1..p.pyramid_levels {
        let s = p.pyramid_spacing.powi(l as i32);
        let next = ((dims.0 as f64 / s).round() as usize, (dims.1 as f64 / s).round() as usize);
        if next.0 < MIN_LEVEL_SIDE || next.1 < MIN_LEVEL_SIDE {
            break;
        }
        out.push(next);
    }
    out
}

/// Dense flow `d` from `a` to `b` such that `b(p + d(p)) ~ a(p)`, i.e. the
/// displacement that `apply_warp` needs to map `a` onto `b`.
pub fn horn_schunck_flow(a: &Frame, b: &Frame, p: &FlowParams) -> Result<FlowEstimate> {
    p.validate()?;
    if a.dims() != b.dims() {
        return Err(mismatch("flow frame pair", a.dims(), b.dims()));
    }
    if a.height() < 3 || a.width() < 3 {
        return Err(SrrError::InvalidParameter("flow needs frames of at least 3x3".into()));
    }
    let dims = pyramid_dims(a.dims(), p);
    let sigma = p.pyramid_spacing / 2.0;
    let mut pa = vec![a.clone()];
    let mut pb = vec![b.clone()];
    for &d in &dims[1..] {
        let (la, lb) = (pa.last().unwrap(), pb.last().unwrap());
        let (na, nb) = (resample(&periodic_gaussian_blur(la, sigma), d), resample(&periodic_gaussian_blur(lb, sigma), d));
        pa.push(na);
        pb.push(nb);
    }

    let lambda = p.smoothness_weight;
    let mut levels = Vec::with_capacity(dims.len());
    let mut warnings = Vec::new();
    let (ch, cw) = *dims.last().unwrap();
    let mut u = Frame::zeros(ch, cw);
    let mut v = Frame::zeros(ch, cw);
    for l in (0..dims.len()).rev() {
        let (h, w) = dims[l];
        if u.dims() != (h, w) {
            let (oh, ow) = u.dims();
            u = resample(&u, (h, w)).scaled(w as f64 / ow as f64);
            v = resample(&v, (h, w)).scaled(h as f64 / oh as f64);
        }
        let mut passes = Vec::with_capacity(p.warps_per_level);
        for pass in 0..p.warps_per_level {
            let lin = Linearization::new(&pa[l], &pb[l], u.as_slice(), v.as_slice())?;
            let (us, vs) = (u.as_mut_slice(), v.as_mut_slice());
            let mut energies = vec![lin.energy(us, vs, lambda)];
            let mut converged = false;
            let mut sweeps = 0;
            let mut last = f64::INFINITY;
            while sweeps < p.max_sweeps {
                last = lin.sweep(us, vs, lambda, p.relaxation);
                sweeps += 1;
                energies.push(lin.energy(us, vs, lambda));
                if last < p.tolerance {
                    converged = true;
                    break;
                }
            }
            if !converged {
                warnings.push(format!(
                    "level {l} ({h}x{w}) pass {pass} not converged after {sweeps} sweeps, rms update {last:.3e}"
                ));
            }
            passes.push(PassDiagnostics { sweeps, converged, energies });
        }
        levels.push(LevelDiagnostics { dims: (h, w), passes });
    }
    let (h, w) = a.dims();
    let flow = FlowField::new(h, w, v.into_vec(), u.into_vec())?;
    Ok(FlowEstimate { flow, levels, warnings })
}

/// Mean of each flow component.
pub fn flow_to_global(flow: &FlowField) -> Motion {
    let n = flow.dy().len() as f64;
    Motion::global(flow.dy().iter().sum::<f64>() / n, flow.dx().iter().sum::<f64>() / n)
}

/// Rescales LR-grid motion to the HR grid. Dense fields are resampled
/// bilinearly with LR sample `i` sitting on HR pixel `factor * i`.
pub fn upscale_motion(m: &Motion, factor: usize) -> Result<Motion> {
    if factor == 0 {
        return Err(SrrError::InvalidParameter("upscale factor must be >= 1".into()));
    }
    let s = factor as f64;
    Ok(match m {
        Motion::Global { dy, dx } => Motion::global(dy * s, dx * s),
        Motion::Dense(flow) => {
            let (h, w) = flow.dims();
            let (hh, hw) = (h * factor, w * factor);
            let sample = |src: &[f64]| -> Vec<f64> {
                let mut out = Vec::with_capacity(hh * hw);
                for i in 0..hh {
                    for j in 0..hw {
                        let taps = bilinear_taps(h, w, i as f64 / s, j as f64 / s);
                        out.push(s * taps.iter().map(|&(k, wt)| wt * src[k]).sum::<f64>());
                    }
                }
                out
            };
            Motion::Dense(FlowField::new(hh, hw, sample(flow.dy()), sample(flow.dx()))?)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn smooth(h: usize, w: usize) -> Frame {
        Frame::from_fn(h, w, |i, j| {
            let (y, x) = (i as f64 / h as f64, j as f64 / w as f64);
            128.0 + 60.0 * (TAU * x).sin() + 40.0 * (TAU * (y + 2.0 * x)).cos() + 30.0 * (TAU * 3.0 * y).sin()
        })
    }

    #[test]
    fn identical_frames_give_zero_flow() {
        let a = smooth(32, 32);
        let est = horn_schunck_flow(&a, &a, &FlowParams::default()).unwrap();
        assert!(est.flow.dy().iter().chain(est.flow.dx()).all(|v| v.abs() < 1e-6));
    }

    #[test]
    fn recovers_unit_row_shift() {
        let a = smooth(48, 48);
        let b = apply_warp(&Motion::global(1.0, 0.0), &a).unwrap();
        let est = horn_schunck_flow(&a, &b, &FlowParams::default()).unwrap();
        match flow_to_global(&est.flow) {
            Motion::Global { dy, dx } => assert!((dy - 1.0).abs() < 0.2 && dx.abs() < 0.2, "{dy} {dx}"),
            _ => unreachable!(),
        }
    }

    #[test]
    fn energy_never_increases() {
        let a = smooth(32, 40);
        let b = apply_warp(&Motion::global(-0.6, 1.3), &a).unwrap();
        let est = horn_schunck_flow(&a, &b, &FlowParams::default()).unwrap();
        assert!(est.levels.len() >= 2);
        for pass in est.levels.iter().flat_map(|l| &l.passes) {
            for e in pass.energies.windows(2) {
                assert!(e[1] <= e[0] * (1.0 + 1e-12) + 1e-9);
            }
        }
    }

    #[test]
    fn pyramid_respects_minimum_side() {
        let p = FlowParams::default();
        assert_eq!(pyramid_dims((128, 128), &p).len(), 4);
        assert_eq!(pyramid_dims((20, 64), &p), vec![(20, 64), (10, 32)]);
        assert_eq!(pyramid_dims((6, 6), &p).len(), 1);
    }

    #[test]
    fn flow_errors() {
        let p = FlowParams::default();
        assert!(horn_schunck_flow(&Frame::zeros(8, 8), &Frame::zeros(8, 9), &p).is_err());
        assert!(horn_schunck_flow(&Frame::zeros(2, 8), &Frame::zeros(2, 8), &p).is_err());
        assert!(FlowParams { pyramid_spacing: 1.0, ..p }.validate().is_err());
        assert!(FlowParams { pyramid_levels: 0, ..p }.validate().is_err());
        assert!(FlowParams { smoothness_weight: 0.0, ..p }.validate().is_err());
        assert!(FlowParams { warps_per_level: 0, ..p }.validate().is_err());
        assert!(FlowParams { relaxation: 2.0, ..p }.validate().is_err());
    }

    #[test]
    fn non_convergence_is_a_warning() {
        let a = smooth(16, 16);
        let b = apply_warp(&Motion::global(0.5, 0.5), &a).unwrap();
        let p = FlowParams { max_sweeps: 1, tolerance: 0.0, pyramid_levels: 1, warps_per_level: 1, ..Default::default() };
        let est = horn_schunck_flow(&a, &b, &p).unwrap();
        assert_eq!(est.warnings.len(), 1);
        assert!(!est.levels[0].passes[0].converged);
    }

    #[test]
    fn global_reduction() {
        assert_eq!(flow_to_global(&FlowField::constant(4, 5, 0.5, -1.0)), Motion::global(0.5, -1.0));
        assert_eq!(flow_to_global(&FlowField::constant(3, 3, 0.0, 0.0)), Motion::zero());
    }

    #[test]
    fn upscaling() {
        assert_eq!(upscale_motion(&Motion::global(1.0, 0.0), 2).unwrap(), Motion::global(2.0, 0.0));
        assert_eq!(upscale_motion(&Motion::zero(), 3).unwrap(), Motion::zero());
        let up = upscale_motion(&Motion::Dense(FlowField::constant(4, 4, 0.25, -0.5)), 2).unwrap();
        match up {
            Motion::Dense(f) => {
                assert_eq!(f.dims(), (8, 8));
                assert!(f.dy().iter().all(|v| (v - 0.5).abs() < 1e-12));
                assert!(f.dx().iter().all(|v| (v + 1.0).abs() < 1e-12));
            }
            _ => unreachable!(),
        }
        assert!(upscale_motion(&Motion::zero(), 0).is_err());
    }
}
