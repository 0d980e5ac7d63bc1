//! Synthetic video generation: a window translated over a still image by a
//! random walk, blurred, decimated and corrupted with Gaussian noise, with an
//! optional suddenly-appearing square outlier. Also hosts the innovation
//! statistics experiment (synthetic innovation fields and their PSD).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Result, SrrError};
use crate::fft::Fft2d;
use crate::frame::Frame;
use crate::ops::{Decimator, KernelOperator, Motion};

/// Independent RNG streams derived from a user seed.
pub mod stream {
    pub const WALK: u64 = 1;
    pub const ORIGIN: u64 = 2;
    pub const NOISE: u64 = 3;
    pub const INNOVATION: u64 = 4;
}

/// SplitMix64 finalizer over `(seed, stream, index)`.
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn rng(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stream, index))
}

/// A centered square of constant value present in frames
/// `onset_frame <= n < offset_frame` (1-based frame numbers).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutlierSpec {
    pub side: usize,
    pub onset_frame: usize,
    pub offset_frame: usize,
    pub value: f64,
}

impl OutlierSpec {
    /// Black square present in frames 32, 33 and 34.
    pub fn black_square(side: usize) -> Self {
        Self { side, onset_frame: 32, offset_frame: 35, value: 0.0 }
    }

    pub fn is_active(&self, frame_number: usize) -> bool {
        (self.onset_frame..self.offset_frame).contains(&frame_number)
    }

    pub fn validate(&self, frame_count: usize, dims: (usize, usize)) -> Result<()> {
        if self.onset_frame == 0 || self.onset_frame >= self.offset_frame || self.offset_frame > frame_count {
            return Err(SrrError::InvalidParameter(format!(
                "outlier frames {}..{} invalid for {frame_count} frames",
                self.onset_frame, self.offset_frame
            )));
        }
        if self.side == 0 || self.side > dims.0 || self.side > dims.1 {
            return Err(SrrError::InvalidParameter(format!(
                "outlier side {} does not fit {}x{}",
                self.side, dims.0, dims.1
            )));
        }
        Ok(())
    }
}

/// Everything needed to synthesize one HR/LR sequence.
#[derive(Debug, Clone)]
pub struct SequenceSpec {
    pub source: Frame,
    pub hr_dims: (usize, usize),
    pub frame_count: usize,
    pub seed: u64,
    pub decimation_factor: usize,
    pub blur: KernelOperator,
    pub noise_variance: f64,
    pub outlier: Option<OutlierSpec>,
    /// Top-left corner of the first window; drawn from the seed when `None`.
    pub origin: Option<(usize, usize)>,
}

impl SequenceSpec {
    /// Factor-2 decimation, 3x3 box blur and noise variance 10.
    pub fn new(source: Frame, hr_dims: (usize, usize), frame_count: usize, seed: u64) -> Self {
        Self {
            source,
            hr_dims,
            frame_count,
            seed,
            decimation_factor: 2,
            blur: KernelOperator::uniform(3).expect("odd mask"),
            noise_variance: 10.0,
            outlier: None,
            origin: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.frame_count == 0 {
            return Err(SrrError::InvalidParameter("frame_count must be >= 1".into()));
        }
        if !(self.noise_variance >= 0.0) || !self.noise_variance.is_finite() {
            return Err(SrrError::InvalidParameter("noise variance must be non-negative".into()));
        }
        Decimator::new(self.decimation_factor)?.lr_dims(self.hr_dims)?;
        let (sh, sw) = self.source.dims();
        if sh <= self.hr_dims.0 || sw <= self.hr_dims.1 {
            return Err(SrrError::SourceTooSmall {
                source_rows: sh,
                source_cols: sw,
                window_rows: self.hr_dims.0,
                window_cols: self.hr_dims.1,
            });
        }
        if let Some((r, c)) = self.origin {
            if r + self.hr_dims.0 > sh || c + self.hr_dims.1 > sw {
                return Err(SrrError::InvalidParameter(format!("origin ({r},{c}) places the window outside the source")));
            }
        }
        if let Some(o) = &self.outlier {
            o.validate(self.frame_count, self.hr_dims)?;
        }
        Ok(())
    }

    fn max_origin(&self) -> (usize, usize) {
        (self.source.height() - self.hr_dims.0, self.source.width() - self.hr_dims.1)
    }
}

/// Window trajectory: the first window's corner plus cumulative integer
/// offsets (the first offset is always zero).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomWalk {
    pub origin: (usize, usize),
    pub offsets: Vec<(isize, isize)>,
}

impl RandomWalk {
    /// Window corner of frame `t` (0-based).
    pub fn position(&self, t: usize) -> (usize, usize) {
        let (dy, dx) = self.offsets[t];
        ((self.origin.0 as isize + dy) as usize, (self.origin.1 as isize + dx) as usize)
    }

    /// Cumulative window displacement of each frame relative to the first.
    pub fn displacements(&self) -> Vec<Motion> {
        self.offsets.iter().map(|&(dy, dx)| Motion::global(dy as f64, dx as f64)).collect()
    }

    /// Warp motions `G(t)` mapping frame `t - 1` onto frame `t`. Moving the
    /// window by `+d` moves the content by `-d`; entry 0 is the identity.
    pub fn warp_motions(&self) -> Vec<Motion> {
        let mut out = vec![Motion::zero()];
        for w in self.offsets.windows(2) {
            out.push(Motion::global((w[0].0 - w[1].0) as f64, (w[0].1 - w[1].1) as f64));
        }
        out
    }
}

/// Unit steps on both axes, i.i.d. and equiprobable, reflected at the
/// source borders.
pub fn gen_random_walk(spec: &SequenceSpec) -> Result<RandomWalk> {
    spec.validate()?;
    let (max_r, max_c) = spec.max_origin();
    let origin = match spec.origin {
        Some(o) => o,
        None => {
            let mut r = rng(spec.seed, stream::ORIGIN, 0);
            (r.random_range(0..=max_r), r.random_range(0..=max_c))
        }
    };
    let mut r = rng(spec.seed, stream::WALK, 0);
    let reflect = |pos: isize, step: isize, max: usize| {
        if pos + step < 0 || pos + step > max as isize {
            pos - step
        } else {
            pos + step
        }
    };
    let (mut py, mut px) = (origin.0 as isize, origin.1 as isize);
    let mut offsets = Vec::with_capacity(spec.frame_count);
    offsets.push((0, 0));
    for _ in 1..spec.frame_count {
        let sy = if r.random::<bool>() { 1 } else { -1 };
        let sx = if r.random::<bool>() { 1 } else { -1 };
        py = reflect(py, sy, max_r);
        px = reflect(px, sx, max_c);
        offsets.push((py - origin.0 as isize, px - origin.1 as isize));
    }
    Ok(RandomWalk { origin, offsets })
}

/// Crops the window along the walk and paints the outlier square.
pub fn render_hr_sequence(spec: &SequenceSpec, walk: &RandomWalk) -> Result<Vec<Frame>> {
    spec.validate()?;
    if walk.offsets.len() != spec.frame_count {
        return Err(SrrError::DimensionMismatch(format!(
            "walk has {} positions for {} frames",
            walk.offsets.len(),
            spec.frame_count
        )));
    }
    let (h, w) = spec.hr_dims;
    (0..spec.frame_count)
        .map(|t| {
            let (r, c) = walk.position(t);
            let mut frame = spec.source.crop(r, c, h, w)?;
            if let Some(o) = spec.outlier.as_ref().filter(|o| o.is_active(t + 1)) {
                let (top, left) = ((h - o.side) / 2, (w - o.side) / 2);
                for i in top..top + o.side {
                    for j in left..left + o.side {
                        frame.set(i, j, o.value);
                    }
                }
            }
            Ok(frame)
        })
        .collect()
}

/// `D H x + e` with white Gaussian `e` of the configured variance.
pub fn degrade(hr: &Frame, spec: &SequenceSpec, noise_seed: u64) -> Result<Frame> {
    let d = Decimator::new(spec.decimation_factor)?;
    let mut lr = d.apply(&spec.blur.apply(hr)?)?;
    if spec.noise_variance > 0.0 {
        let normal = Normal::new(0.0, spec.noise_variance.sqrt())
            .map_err(|e| SrrError::InvalidParameter(e.to_string()))?;
        let mut r = ChaCha8Rng::seed_from_u64(noise_seed);
        for v in lr.as_mut_slice() {
            *v += normal.sample(&mut r);
        }
    }
    Ok(lr)
}

/// A rendered sequence with its ground truth.
#[derive(Debug, Clone)]
pub struct SyntheticSequence {
    pub hr: Vec<Frame>,
    pub lr: Vec<Frame>,
    pub walk: RandomWalk,
    /// Ground-truth `G(t)` per frame.
    pub motions: Vec<Motion>,
}

/// Noise seed used for frame `t` (0-based) of a sequence.
pub fn frame_noise_seed(seed: u64, t: usize) -> u64 {
    derive_seed(seed, stream::NOISE, t as u64)
}

pub fn synthesize(spec: &SequenceSpec) -> Result<SyntheticSequence> {
    let walk = gen_random_walk(spec)?;
    let hr = render_hr_sequence(spec, &walk)?;
    let lr = hr
        .iter()
        .enumerate()
        .map(|(t, x)| degrade(x, spec, frame_noise_seed(spec.seed, t)))
        .collect::<Result<Vec<_>>>()?;
    let motions = walk.warp_motions();
    Ok(SyntheticSequence { hr, lr, walk, motions })
}

/// Synthetic innovation fields: patches of the difference between two
/// independent natural images pasted on a zero background.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnovationSpec {
    pub dims: (usize, usize),
    pub min_patch: usize,
    pub max_patch: usize,
    pub patch_count: usize,
    pub realizations: usize,
}

impl Default for InnovationSpec {
    fn default() -> Self {
        Self { dims: (64, 64), min_patch: 5, max_patch: 15, patch_count: 8, realizations: 200 }
    }
}

pub fn gen_innovation_field(spec: &InnovationSpec, pool: &[Frame], seed: u64) -> Result<Frame> {
    if pool.len() < 2 {
        return Err(SrrError::InsufficientSources { needed: 2, got: pool.len() });
    }
    let (h, w) = spec.dims;
    if spec.min_patch == 0 || spec.min_patch > spec.max_patch || spec.max_patch > h.min(w) {
        return Err(SrrError::InvalidParameter(format!(
            "patch sizes {}..={} do not fit {h}x{w}",
            spec.min_patch, spec.max_patch
        )));
    }
    if let Some(small) = pool.iter().find(|f| f.height() < spec.max_patch || f.width() < spec.max_patch) {
        return Err(SrrError::InvalidParameter(format!(
            "source image {}x{} smaller than the largest patch",
            small.height(),
            small.width()
        )));
    }
    let mut r = ChaCha8Rng::seed_from_u64(derive_seed(seed, stream::INNOVATION, 0));
    let mut field = Frame::zeros(h, w);
    for _ in 0..spec.patch_count {
        let side = r.random_range(spec.min_patch..=spec.max_patch);
        let a = r.random_range(0..pool.len());
        let mut b = r.random_range(0..pool.len() - 1);
        if b >= a {
            b += 1;
        }
        let take = |img: &Frame, r: &mut ChaCha8Rng| -> Result<Frame> {
            let row = r.random_range(0..=img.height() - side);
            let col = r.random_range(0..=img.width() - side);
            img.crop(row, col, side, side)
        };
        let pa = take(&pool[a], &mut r)?;
        let pb = take(&pool[b], &mut r)?;
        let (top, left) = (r.random_range(0..=h - side), r.random_range(0..=w - side));
        for i in 0..side {
            for j in 0..side {
                field.set(top + i, left + j, pa.get(i, j) - pb.get(i, j));
            }
        }
    }
    Ok(field)
}

/// Radially averaged power spectral density.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialPsd {
    /// Mean periodogram value at zero frequency.
    pub dc: f64,
    /// Mean periodogram value per radial bin; entry `k` covers radius `k + 1`.
    pub power: Vec<f64>,
    /// Periodogram summed over each radial bin.
    pub energy: Vec<f64>,
    /// Number of DFT bins per radial bin.
    pub counts: Vec<usize>,
    /// Radius of the axis-aligned Nyquist frequency, in bins.
    pub nyquist: usize,
}

impl RadialPsd {
    pub fn radius(&self, k: usize) -> usize {
        k + 1
    }

    pub fn non_dc_energy(&self) -> f64 {
        self.energy.iter().sum()
    }

    /// Share of non-DC energy at radii `<= band * nyquist`.
    pub fn low_band_fraction(&self, band: f64) -> f64 {
        let cutoff = band * self.nyquist as f64;
        let low: f64 = self
            .energy
            .iter()
            .enumerate()
            .filter(|(k, _)| self.radius(*k) as f64 <= cutoff)
            .map(|(_, e)| e)
            .sum();
        low / self.non_dc_energy()
    }
}

/// Mean periodogram `|F|^2 / (h w)` over all fields, binned by rounded
/// absolute spatial frequency (one frequency sample per bin).
pub fn estimate_psd(fields: &[Frame]) -> Result<RadialPsd> {
    let first = fields.first().ok_or_else(|| SrrError::InvalidParameter("no fields supplied".into()))?;
    let (h, w) = first.dims();
    let fft = Fft2d::new(h, w);
    let mut mean = vec![0.0; h * w];
    for f in fields {
        f.ensure_dims("PSD field", (h, w))?;
        for (m, c) in mean.iter_mut().zip(fft.forward_real(f.as_slice())) {
            *m += c.norm_sqr();
        }
    }
    let norm = 1.0 / (fields.len() * h * w) as f64;
    mean.iter_mut().for_each(|m| *m *= norm);

    let side = h.min(w) as f64;
    let signed = |k: usize, n: usize| if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
    let mut energy = Vec::new();
    let mut counts = Vec::new();
    for u in 0..h {
        for v in 0..w {
            if u == 0 && v == 0 {
                continue;
            }
            let ky = signed(u, h) * side / h as f64;
            let kx = signed(v, w) * side / w as f64;
            let bin = (ky.hypot(kx).round() as usize).max(1) - 1;
            if bin >= energy.len() {
                energy.resize(bin + 1, 0.0);
                counts.resize(bin + 1, 0);
            }
            energy[bin] += mean[u * w + v];
            counts[bin] += 1;
        }
    }
    let power = energy.iter().zip(&counts).map(|(e, &c)| if c > 0 { e / c as f64 } else { 0.0 }).collect();
    Ok(RadialPsd { dc: mean[0], power, energy, counts, nyquist: h.min(w) / 2 })
}

/// Circular autocorrelation `r(l) = (1/n) sum_p x(p) x(p - l)`, `l = 0..n`.
pub fn autocorr_circular(signal: &[f64]) -> Vec<f64> {
    let n = signal.len();
    (0..n)
        .map(|l| (0..n).map(|p| signal[p] * signal[(p + n - l) % n]).sum::<f64>() / n as f64)
        .collect()
}

/// Autocorrelation of `s(p) = I(p) - I(p - delta)` (circular), which equals
/// `2 r_I(l) - r_I(l - delta) - r_I(l + delta)`.
pub fn autocorr_difference(signal: &[f64], delta: usize) -> Result<Vec<f64>> {
    let n = signal.len();
    if n <= 2 * delta {
        return Err(SrrError::InvalidParameter(format!(
            "delta {delta} out of range for a signal of length {n}"
        )));
    }
    let diff: Vec<f64> = (0..n).map(|p| signal[p] - signal[(p + n - delta) % n]).collect();
    Ok(autocorr_circular(&diff))
}
