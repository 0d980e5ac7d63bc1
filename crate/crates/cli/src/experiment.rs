//! Sequence synthesis, reconstruction and Monte Carlo aggregation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use srr_core::flow::{flow_to_global, horn_schunck_flow, upscale_motion, FlowParams};
use srr_core::interp::bicubic_upsample;
use srr_core::metrics::{mse, to_db, MetricsReport};
use srr_core::synth::{synthesize, SequenceSpec, SyntheticSequence};
use srr_core::{io, Algorithm, Frame, Motion, OperatorSet, Reconstructor};

use crate::config::{MotionSource, RunConfig};

/// Repository image directory, used when a run names no images.
pub fn default_image_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/images")
}

/// PNG/PGM files of a directory in name order.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("png" | "pgm")))
        .collect();
    out.sort();
    Ok(out)
}

pub fn image_paths(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    if cfg.images.is_empty() {
        list_images(&default_image_dir())
    } else {
        Ok(cfg.images.clone())
    }
}

pub fn load_pool(paths: &[PathBuf]) -> Result<Vec<Frame>> {
    paths
        .iter()
        .map(|p| io::load_image(p).with_context(|| format!("loading {}", p.display())))
        .collect()
}

pub fn sequence_spec(cfg: &RunConfig, source: &Frame, seed: u64) -> SequenceSpec {
    let mut spec = SequenceSpec::new(source.clone(), cfg.hr_size, cfg.frames, seed);
    spec.decimation_factor = cfg.factor;
    spec.noise_variance = cfg.noise_var;
    spec.outlier = cfg.outlier;
    spec
}

/// Warps `G(t)` estimated from consecutive LR frames; entry 0 is the identity.
pub fn estimate_motions(lr: &[Frame], factor: usize, dense: bool) -> Result<Vec<Motion>> {
    let params = FlowParams::default();
    let mut rest: Vec<Motion> = (1..lr.len())
        .into_par_iter()
        .map(|t| {
            let est = horn_schunck_flow(&lr[t - 1], &lr[t], &params)?;
            let m = if dense { est.motion() } else { flow_to_global(&est.flow) };
            Ok(upscale_motion(&m, factor)?)
        })
        .collect::<Result<_>>()?;
    let mut out = vec![Motion::zero()];
    out.append(&mut rest);
    Ok(out)
}

pub fn motions_for(cfg: &RunConfig, seq: &SyntheticSequence) -> Result<Vec<Motion>> {
    match cfg.motion {
        MotionSource::Known => Ok(seq.motions.clone()),
        MotionSource::Global => estimate_motions(&seq.lr, cfg.factor, false),
        MotionSource::Dense => estimate_motions(&seq.lr, cfg.factor, true),
    }
}

/// Reconstructs `lr` with `alg`, starting from the spline interpolation of
/// the first frame.
pub fn reconstruct(cfg: &RunConfig, alg: Algorithm, lr: &[Frame], motions: &[Motion]) -> Result<Vec<Frame>> {
    let first = lr.first().context("empty LR sequence")?;
    let hr_dims = (first.height() * cfg.factor, first.width() * cfg.factor);
    let ops = OperatorSet::standard(hr_dims, cfg.factor)?;
    let recon = Reconstructor::new(cfg.params_for(alg)?, ops)?;
    let init = bicubic_upsample(first, cfg.factor)?;
    Ok(recon.run_sequence(lr, motions, &init)?)
}

/// Per-frame linear MSE of each algorithm for one realization.
pub type Curves = BTreeMap<Algorithm, Vec<f64>>;

pub fn realization_seed(base: u64, r: usize) -> u64 {
    base.wrapping_add(r as u64)
}

/// One realization: synthesize from `source`, reconstruct with every
/// configured algorithm and score against the ground truth.
pub fn run_realization(cfg: &RunConfig, source: &Frame, seed: u64) -> Result<Curves> {
    let seq = synthesize(&sequence_spec(cfg, source, seed))?;
    let motions = motions_for(cfg, &seq)?;
    let mut out = Curves::new();
    for &alg in &cfg.algorithms {
        let est = reconstruct(cfg, alg, &seq.lr, &motions).with_context(|| format!("{alg}, seed {seed}"))?;
        let curve = est.iter().zip(&seq.hr).map(|(x, y)| mse(x, y)).collect::<srr_core::Result<_>>()?;
        out.insert(alg, curve);
    }
    Ok(out)
}

/// Mean over realizations of the per-frame linear MSE.
pub fn aggregate(results: &[Curves]) -> Result<Curves> {
    let Some(first) = results.first() else { bail!("no realizations to aggregate") };
    let mut out = Curves::new();
    for (alg, curve) in first {
        let mut sum = vec![0.0; curve.len()];
        for r in results {
            let c = r.get(alg).context("realizations disagree on algorithms")?;
            if c.len() != sum.len() {
                bail!("realizations disagree on frame count");
            }
            sum.iter_mut().zip(c).for_each(|(s, v)| *s += v);
        }
        out.insert(*alg, sum.into_iter().map(|s| s / results.len() as f64).collect());
    }
    Ok(out)
}

/// Realization `r` uses image `r mod pool size` and seed `seed + r`.
pub fn montecarlo(cfg: &RunConfig, pool: &[Frame]) -> Result<Curves> {
    cfg.validate()?;
    if cfg.realizations == 0 {
        bail!("realization count must be positive");
    }
    if pool.is_empty() {
        bail!("empty image pool");
    }
    let results: Vec<Curves> = (0..cfg.realizations)
        .into_par_iter()
        .map(|r| run_realization(cfg, &pool[r % pool.len()], realization_seed(cfg.seed, r)))
        .collect::<Result<_>>()?;
    aggregate(&results)
}

/// `frame,algorithm,mean_mse_db` rows sorted by algorithm name, then frame
/// (1-based).
pub fn curves_csv(curves: &Curves) -> String {
    let mut rows: Vec<(&str, usize, f64)> = curves
        .iter()
        .flat_map(|(a, c)| c.iter().enumerate().map(move |(t, v)| (a.name(), t + 1, *v)))
        .collect();
    rows.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    let mut out = String::from("frame,algorithm,mean_mse_db\n");
    for (a, t, v) in rows {
        out.push_str(&format!("{t},{a},{}\n", to_db(v)));
    }
    out
}

/// `algorithm,frame,mse_db,psnr_db,ssim` rows sorted by algorithm, frame.
pub fn metrics_csv(reports: &BTreeMap<Algorithm, Vec<MetricsReport>>) -> String {
    let mut rows: Vec<(&str, &MetricsReport)> =
        reports.iter().flat_map(|(a, rs)| rs.iter().map(move |r| (a.name(), r))).collect();
    rows.sort_by(|a, b| (a.0, a.1.frame_index).cmp(&(b.0, b.1.frame_index)));
    let mut out = String::from("algorithm,frame,mse_db,psnr_db,ssim\n");
    for (a, r) in rows {
        let ssim = r.ssim.map_or(String::new(), |s| s.to_string());
        out.push_str(&format!("{a},{},{},{},{ssim}\n", r.frame_index, r.mse_db, r.psnr_db));
    }
    out
}
