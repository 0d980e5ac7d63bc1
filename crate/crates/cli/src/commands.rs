//! Subcommand implementations. Each writes its artifacts into an output
//! directory and returns the manifest describing the run.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use srr_core::cost::{cost_model, CostModelInput};
use srr_core::metrics::MetricsReport;
use srr_core::synth::{
    degrade, estimate_psd, frame_noise_seed, gen_innovation_field, synthesize, InnovationSpec, SequenceSpec,
};
use srr_core::{io, Frame, Motion};

use crate::config::{MotionSource, RunConfig};
use crate::experiment::{self, curves_csv, metrics_csv};
use crate::manifest::{sha256_hex, FileDigest, Manifest, MANIFEST_FILE};

/// A subcommand with its configuration and arguments.
#[derive(Debug, Clone, PartialEq)]
pub struct Invocation {
    pub command: String,
    pub config: RunConfig,
    pub args: BTreeMap<String, String>,
}

impl Invocation {
    pub fn new(command: &str, config: RunConfig) -> Self {
        Self { command: command.to_string(), config, args: BTreeMap::new() }
    }

    pub fn arg(mut self, key: &str, value: impl ToString) -> Self {
        self.args.insert(key.to_string(), value.to_string());
        self
    }

    pub fn from_manifest(m: &Manifest) -> Result<Self> {
        m.verify_inputs()?;
        Ok(Self { command: m.command.clone(), config: m.config()?, args: m.args.clone() })
    }

    fn path(&self, key: &str) -> Result<PathBuf> {
        self.args.get(key).map(PathBuf::from).with_context(|| format!("missing argument '{key}'"))
    }

    fn opt_path(&self, key: &str) -> Option<PathBuf> {
        self.args.get(key).filter(|v| !v.is_empty()).map(PathBuf::from)
    }

    fn number<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::error::Error + Send + Sync + 'static,
    {
        match self.args.get(key) {
            Some(v) => Ok(v.parse().with_context(|| format!("argument '{key}'"))?),
            None => Ok(default),
        }
    }
}

struct Output<'a> {
    dir: &'a Path,
    manifest: Manifest,
}

impl Output<'_> {
    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.manifest.outputs.push(FileDigest { path: name.to_string(), sha256: sha256_hex(bytes) });
        Ok(())
    }

    fn frames(&mut self, name: &str, frames: &[Frame]) -> Result<()> {
        let mut bytes = Vec::new();
        io::encode_frames(frames, &mut bytes)?;
        self.write(name, &bytes)
    }

    fn finish(self) -> Result<Manifest> {
        fs::write(self.dir.join(MANIFEST_FILE), self.manifest.to_json())?;
        Ok(self.manifest)
    }
}

/// Runs `inv`, writing into `out_dir` (created if needed).
pub fn run(inv: &Invocation, out_dir: &Path) -> Result<Manifest> {
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let out = Output { dir: out_dir, manifest: Manifest::new(&inv.command, &inv.config, inv.args.clone()) };
    match inv.command.as_str() {
        "synth" => synth(inv, out),
        "degrade" => degrade_cmd(inv, out),
        "reconstruct" => reconstruct(inv, out),
        "montecarlo" => montecarlo(inv, out),
        "psd" => psd(inv, out),
        other => bail!("command '{other}' cannot be replayed from a manifest"),
    }
}

fn motions_csv(motions: &[Motion]) -> Result<String> {
    let mut s = String::from("frame,dy,dx\n");
    for (t, m) in motions.iter().enumerate() {
        match m {
            Motion::Global { dy, dx } => s.push_str(&format!("{},{dy},{dx}\n", t + 1)),
            Motion::Dense(_) => bail!("dense motions cannot be written as CSV"),
        }
    }
    Ok(s)
}

pub fn read_motions(path: &Path) -> Result<Vec<Motion>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 3 {
                bail!("malformed motion row '{l}'");
            }
            Ok(Motion::global(f[1].trim().parse()?, f[2].trim().parse()?))
        })
        .collect()
}

fn synth(inv: &Invocation, mut out: Output) -> Result<Manifest> {
    let cfg = &inv.config;
    let image = match inv.opt_path("image") {
        Some(p) => p,
        None => experiment::image_paths(cfg)?.into_iter().next().context("no source image available")?,
    };
    out.manifest.add_input(&image)?;
    let source = io::load_image(&image)?;
    let seq = synthesize(&experiment::sequence_spec(cfg, &source, cfg.seed))?;
    out.frames("hr.srrf", &seq.hr)?;
    out.frames("lr.srrf", &seq.lr)?;
    out.write("motions.csv", motions_csv(&seq.motions)?.as_bytes())?;
    if inv.number("pgm", false)? {
        for (t, f) in seq.hr.iter().enumerate() {
            let name = format!("hr_{:04}.pgm", t + 1);
            io::write_pgm(out.dir.join(&name), f)?;
        }
    }
    out.finish()
}

fn degrade_cmd(inv: &Invocation, mut out: Output) -> Result<Manifest> {
    let cfg = &inv.config;
    let input = inv.path("input")?;
    out.manifest.add_input(&input)?;
    let hr = io::read_frames(&input)?;
    let mut spec = SequenceSpec::new(hr[0].clone(), hr[0].dims(), hr.len(), cfg.seed);
    spec.decimation_factor = cfg.factor;
    spec.noise_variance = cfg.noise_var;
    let lr = hr
        .iter()
        .enumerate()
        .map(|(t, x)| degrade(x, &spec, frame_noise_seed(cfg.seed, t)))
        .collect::<srr_core::Result<Vec<_>>>()?;
    out.frames("lr.srrf", &lr)?;
    out.finish()
}

fn reconstruct(inv: &Invocation, mut out: Output) -> Result<Manifest> {
    let cfg = &inv.config;
    cfg.validate()?;
    let lr_path = inv.path("lr")?;
    out.manifest.add_input(&lr_path)?;
    let lr = io::read_frames(&lr_path)?;
    let motions = match cfg.motion {
        MotionSource::Known => {
            let p = inv.path("motions").context("known motion needs a motions file")?;
            out.manifest.add_input(&p)?;
            let m = read_motions(&p)?;
            if m.len() != lr.len() {
                bail!("{} motions for {} frames", m.len(), lr.len());
            }
            m
        }
        MotionSource::Global => experiment::estimate_motions(&lr, cfg.factor, false)?,
        MotionSource::Dense => experiment::estimate_motions(&lr, cfg.factor, true)?,
    };
    let hr = match inv.opt_path("hr") {
        Some(p) => {
            out.manifest.add_input(&p)?;
            Some(io::read_frames(&p)?)
        }
        None => None,
    };
    let mut reports = BTreeMap::new();
    for &alg in &cfg.algorithms {
        let est = experiment::reconstruct(cfg, alg, &lr, &motions)?;
        out.frames(&format!("sr_{}.srrf", alg.name()), &est)?;
        if let Some(hr) = &hr {
            let r = est
                .par_iter()
                .zip(hr)
                .enumerate()
                .map(|(t, (x, y))| MetricsReport::compute(t + 1, y, x))
                .collect::<srr_core::Result<Vec<_>>>()?;
            reports.insert(alg, r);
        }
    }
    if hr.is_some() {
        out.write("metrics.csv", metrics_csv(&reports).as_bytes())?;
    }
    out.finish()
}

fn montecarlo(inv: &Invocation, mut out: Output) -> Result<Manifest> {
    let cfg = &inv.config;
    let paths = experiment::image_paths(cfg)?;
    for p in &paths {
        out.manifest.add_input(p)?;
    }
    let pool = experiment::load_pool(&paths)?;
    let curves = experiment::montecarlo(cfg, &pool)?;
    out.write("mse.csv", curves_csv(&curves).as_bytes())?;
    out.finish()
}

/// Innovation fields for the PSD experiment; field `r` uses seed `seed + r`.
pub fn innovation_fields(spec: &InnovationSpec, pool: &[Frame], seed: u64) -> Result<Vec<Frame>> {
    (0..spec.realizations)
        .into_par_iter()
        .map(|r| Ok(gen_innovation_field(spec, pool, seed.wrapping_add(r as u64))?))
        .collect()
}

fn psd(inv: &Invocation, mut out: Output) -> Result<Manifest> {
    let cfg = &inv.config;
    let paths = experiment::image_paths(cfg)?;
    for p in &paths {
        out.manifest.add_input(p)?;
    }
    let pool = experiment::load_pool(&paths)?;
    let defaults = InnovationSpec::default();
    let spec = InnovationSpec {
        patch_count: inv.number("patch_count", defaults.patch_count)?,
        realizations: inv.number("psd_realizations", defaults.realizations)?,
        ..defaults
    };
    let psd = estimate_psd(&innovation_fields(&spec, &pool, cfg.seed)?)?;
    let mut csv = String::from("radius,count,mean_power,energy\n");
    for k in 0..psd.power.len() {
        csv.push_str(&format!("{},{},{},{}\n", psd.radius(k), psd.counts[k], psd.power[k], psd.energy[k]));
    }
    out.write("psd.csv", csv.as_bytes())?;
    let summary = serde_json::json!({
        "dc": psd.dc,
        "non_dc_energy": psd.non_dc_energy(),
        "low_quarter_fraction": psd.low_band_fraction(0.25),
    });
    out.write("psd_summary.json", (summary.to_string() + "\n").as_bytes())?;
    out.finish()
}

/// `algorithm,operations,memory` for square frames of side `side`.
pub fn cost_model_csv(side: u64, h_taps: u64, s_taps: u64, q_taps: u64, m_taps: u64) -> Result<String> {
    let input = CostModelInput::from_masks(side, h_taps, s_taps, q_taps, m_taps);
    let mut s = String::from("algorithm,operations,memory\n");
    for c in cost_model(&input)? {
        s.push_str(&format!("{},{},{}\n", c.algorithm, c.operations, c.memory));
    }
    Ok(s)
}

/// Instrumented per-iteration counts next to the closed-form prediction.
#[cfg(feature = "flops")]
pub fn flops_probe_csv(cfg: &RunConfig, sides: &[usize]) -> Result<String> {
    use srr_core::probe::flops_probe;
    use srr_core::OperatorSet;

    let mut s = String::from(
        "algorithm,side,measured_ops,predicted_ops,measured_memory,predicted_memory,max_deviation,match\n",
    );
    for &alg in &cfg.algorithms {
        for &side in sides {
            let ops = OperatorSet::standard((side, side), cfg.factor)?;
            let x = Frame::from_fn(side, side, |i, j| ((i * 29 + j * 53) % 256) as f64);
            let w = srr_core::ops::apply_warp(&Motion::global(1.0, -1.0), &x)?;
            let y = ops.observe(&w)?;
            let r = flops_probe(&cfg.params_for(alg)?, &ops, &y, &x, &w)?;
            let measured = r.per_iteration.first().map_or(0, |c| c.total());
            s.push_str(&format!(
                "{alg},{side},{measured},{},{},{},{:e},{}\n",
                r.predicted_ops,
                r.measured_memory,
                r.predicted_memory,
                r.max_deviation,
                r.matches()
            ));
        }
    }
    Ok(s)
}

#[cfg(not(feature = "flops"))]
pub fn flops_probe_csv(_cfg: &RunConfig, _sides: &[usize]) -> Result<String> {
    bail!("instrumentation unavailable: rebuild with the `flops` feature")
}

/// Per-frame metrics of `estimate` against `reference`.
pub fn metrics_table(reference: &[Frame], estimate: &[Frame]) -> Result<String> {
    if reference.len() != estimate.len() {
        bail!("{} reference frames but {} estimates", reference.len(), estimate.len());
    }
    let mut s = String::from("frame,mse_db,psnr_db,ssim\n");
    for (t, (r, e)) in reference.iter().zip(estimate).enumerate() {
        let m = MetricsReport::compute(t + 1, r, e)?;
        let ssim = m.ssim.map_or(String::new(), |v| v.to_string());
        s.push_str(&format!("{},{},{},{ssim}\n", t + 1, m.mse_db, m.psnr_db));
    }
    Ok(s)
}
