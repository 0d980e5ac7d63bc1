use crate::error::{mismatch, Result, SrrError};
use crate::frame::Frame;

/// Per-pixel displacement field, row-major, in pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    height: usize,
    width: usize,
    dy: Vec<f64>,
    dx: Vec<f64>,
}

impl FlowField {
    pub fn new(height: usize, width: usize, dy: Vec<f64>, dx: Vec<f64>) -> Result<Self> {
        if dy.len() != height * width || dx.len() != height * width || height == 0 || width == 0 {
            return Err(SrrError::DimensionMismatch(format!(
                "flow components must both hold {height}x{width} samples"
            )));
        }
        if dy.iter().chain(&dx).any(|v| !v.is_finite()) {
            return Err(SrrError::InvalidParameter("flow components must be finite".into()));
        }
        Ok(Self { height, width, dy, dx })
    }

    pub fn constant(height: usize, width: usize, dy: f64, dx: f64) -> Self {
        Self { height, width, dy: vec![dy; height * width], dx: vec![dx; height * width] }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn dy(&self) -> &[f64] {
        &self.dy
    }

    pub fn dx(&self) -> &[f64] {
        &self.dx
    }
}

/// Motion between consecutive frames, the parameterization of the warp `G(t)`.
///
/// Displacements follow the optical-flow convention: content at pixel `p` of
/// the previous frame moves to `p + d`, so the warped frame samples the
/// source at `p - d`.
#[derive(Debug, Clone, PartialEq)]
pub enum Motion {
    Global { dy: f64, dx: f64 },
    Dense(FlowField),
}

impl Motion {
    pub fn zero() -> Self {
        Motion::Global { dy: 0.0, dx: 0.0 }
    }

    pub fn global(dy: f64, dx: f64) -> Self {
        Motion::Global { dy, dx }
    }

    fn integer_shift(&self) -> Option<(isize, isize)> {
        match *self {
            Motion::Global { dy, dx } if dy.fract() == 0.0 && dx.fract() == 0.0 => {
                Some((dy as isize, dx as isize))
            }
            _ => None,
        }
    }

    fn check(&self, f: &Frame) -> Result<()> {
        match self {
            Motion::Dense(flow) if flow.dims() != f.dims() => Err(mismatch("dense flow", f.dims(), flow.dims())),
            Motion::Global { dy, dx } if !dy.is_finite() || !dx.is_finite() => {
                Err(SrrError::InvalidParameter("global motion must be finite".into()))
            }
            _ => Ok(()),
        }
    }

    fn displacement(&self, k: usize) -> (f64, f64) {
        match self {
            Motion::Global { dy, dx } => (*dy, *dx),
            Motion::Dense(flow) => (flow.dy[k], flow.dx[k]),
        }
    }
}

/// Bilinear source taps for output pixel `(i, j)`: four wrapped indices and weights.
#[inline]
pub(crate) fn bilinear_taps(h: usize, w: usize, y: f64, x: f64) -> [(usize, f64); 4] {
    let (y0, x0) = (y.floor(), x.floor());
    let (fy, fx) = (y - y0, x - x0);
    let r0 = (y0 as isize).rem_euclid(h as isize) as usize;
    let c0 = (x0 as isize).rem_euclid(w as isize) as usize;
    let r1 = (r0 + 1) % h;
    let c1 = (c0 + 1) % w;
    [
        (r0 * w + c0, (1.0 - fy) * (1.0 - fx)),
        (r0 * w + c1, (1.0 - fy) * fx),
        (r1 * w + c0, fy * (1.0 - fx)),
        (r1 * w + c1, fy * fx),
    ]
}

fn shift(f: &Frame, dy: isize, dx: isize) -> Frame {
    let (h, w) = f.dims();
    let src = f.as_slice();
    let mut out = Vec::with_capacity(h * w);
    let s = dx.rem_euclid(w as isize) as usize;
    for i in 0..h {
        let r = (i as isize - dy).rem_euclid(h as isize) as usize;
        let row = &src[r * w..(r + 1) * w];
        out.extend_from_slice(&row[w - s..]);
        out.extend_from_slice(&row[..w - s]);
    }
    Frame::from_vec_unchecked(h, w, out)
}

/// Applies `G`: integer global motions are exact circulant shifts, everything
/// else is bilinear interpolation with circulant wrap.
pub fn apply_warp(m: &Motion, f: &Frame) -> Result<Frame> {
    m.check(f)?;
    if let Some((dy, dx)) = m.integer_shift() {
        return Ok(shift(f, dy, dx));
    }
    let (h, w) = f.dims();
    let src = f.as_slice();
    let mut out = Vec::with_capacity(h * w);
    for i in 0..h {
        for j in 0..w {
            let (dy, dx) = m.displacement(i * w + j);
            let taps = bilinear_taps(h, w, i as f64 - dy, j as f64 - dx);
            out.push(taps.iter().map(|&(k, wt)| wt * src[k]).sum());
        }
    }
    Ok(Frame::from_vec_unchecked(h, w, out))
}

/// Applies `G^T`: the opposite shift for integer motions, otherwise the
/// scatter-add of the bilinear weights.
pub fn apply_warp_transpose(m: &Motion, f: &Frame) -> Result<Frame> {
    m.check(f)?;
    if let Some((dy, dx)) = m.integer_shift() {
        return Ok(shift(f, -dy, -dx));
    }
    let (h, w) = f.dims();
    let src = f.as_slice();
    let mut out = vec![0.0; h * w];
    for i in 0..h {
        for j in 0..w {
            let (dy, dx) = m.displacement(i * w + j);
            let v = src[i * w + j];
            for (k, wt) in bilinear_taps(h, w, i as f64 - dy, j as f64 - dx) {
                out[k] += wt * v;
            }
        }
    }
    Ok(Frame::from_vec_unchecked(h, w, out))
}
