use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use srr_harness::commands::{self, Invocation};
use srr_harness::manifest::Manifest;
use srr_harness::RunConfig;

#[derive(Parser)]
#[command(name = "srr", version, about = "Adaptive video super-resolution experiments", allow_negative_numbers = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output directory.
    #[arg(long, global = true, env = "SRR_OUTPUT_DIR", default_value = "srr-out")]
    out: PathBuf,

    /// Worker threads for realizations and registration.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(flatten)]
    overrides: Overrides,
}

/// Configuration sources, applied in order: preset, config file, flags.
#[derive(Args, Default)]
struct Overrides {
    /// Key-value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    preset: Option<String>,
    #[arg(long, global = true)]
    algorithm: Option<String>,
    #[arg(long, global = true)]
    mu: Option<String>,
    #[arg(long, global = true)]
    alpha: Option<String>,
    #[arg(long = "alpha-t", global = true)]
    alpha_t: Option<String>,
    #[arg(long = "k-iters", global = true)]
    k_iters: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    /// known, global or dense.
    #[arg(long, global = true)]
    motion: Option<String>,
    #[arg(long, global = true)]
    frames: Option<String>,
    #[arg(long, global = true)]
    factor: Option<String>,
    #[arg(long = "noise-var", global = true)]
    noise_var: Option<String>,
    /// onset:offset:side (1-based frames, square present in onset..offset-1).
    #[arg(long, global = true)]
    outlier: Option<String>,
    /// HxW or a single side length.
    #[arg(long = "hr-size", global = true)]
    hr_size: Option<String>,
    #[arg(long, global = true)]
    realizations: Option<String>,
    /// Comma-separated source images.
    #[arg(long, global = true)]
    images: Option<String>,
}

impl Overrides {
    fn resolve(&self) -> Result<RunConfig> {
        // a preset flag next to a config file only switches the parameter table
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), p) => {
                let mut cfg = RunConfig::load(path)?;
                if let Some(p) = p {
                    cfg.set("preset", p)?;
                }
                cfg
            }
            (None, Some(p)) => RunConfig::from_preset(p.parse()?),
            (None, None) => RunConfig::default(),
        };
        let flags = [
            ("algorithm", &self.algorithm),
            ("mu", &self.mu),
            ("alpha", &self.alpha),
            ("alpha_t", &self.alpha_t),
            ("k_iters", &self.k_iters),
            ("seed", &self.seed),
            ("motion", &self.motion),
            ("frames", &self.frames),
            ("factor", &self.factor),
            ("noise_var", &self.noise_var),
            ("outlier", &self.outlier),
            ("hr_size", &self.hr_size),
            ("realizations", &self.realizations),
            ("images", &self.images),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                cfg.set(k, v).with_context(|| format!("--{}", k.replace('_', "-")))?;
            }
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Render an HR/LR sequence pair from a still image.
    Synth {
        #[arg(long)]
        image: Option<PathBuf>,
        /// Also export HR frames as 8-bit PGM.
        #[arg(long)]
        pgm: bool,
    },
    /// Blur, decimate and add noise to an HR container.
    Degrade {
        #[arg(long)]
        input: PathBuf,
    },
    /// Super-resolve an LR container.
    Reconstruct {
        #[arg(long)]
        lr: PathBuf,
        /// Ground truth for per-frame metrics.
        #[arg(long)]
        hr: Option<PathBuf>,
        /// Ground-truth motion CSV for `--motion known`.
        #[arg(long)]
        motions: Option<PathBuf>,
    },
    /// Average per-frame MSE over synthetic realizations.
    Montecarlo,
    /// Radial PSD of synthetic innovation fields.
    Psd {
        #[arg(long, default_value_t = 200)]
        psd_realizations: usize,
        #[arg(long, default_value_t = 8)]
        patch_count: usize,
    },
    /// Closed-form per-iteration operation and memory counts.
    CostModel {
        #[arg(long, default_value_t = 256)]
        side: u64,
        #[arg(long, default_value_t = 9)]
        h_taps: u64,
        #[arg(long, default_value_t = 9)]
        s_taps: u64,
        #[arg(long, default_value_t = 9)]
        q_taps: u64,
        #[arg(long, default_value_t = 9)]
        m_taps: u64,
    },
    /// Instrumented operation counts against the closed form.
    FlopsProbe {
        #[arg(long, value_delimiter = ',', default_value = "32,64")]
        sides: Vec<usize>,
    },
    /// Repeat a previous run from its manifest; all other configuration is ignored.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Per-frame MSE, PSNR and SSIM between two containers.
    Metrics {
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        estimate: PathBuf,
    },
}

fn error_kind(e: &anyhow::Error) -> &'static str {
    use srr_core::SrrError::*;
    match e.downcast_ref::<srr_core::SrrError>() {
        Some(DimensionMismatch(_)) => "dimension_mismatch",
        Some(InvalidParameter(_)) => "invalid_parameter",
        Some(KernelTooLarge { .. }) => "kernel_too_large",
        Some(SizeCapExceeded { .. }) => "size_cap_exceeded",
        Some(Diverged { .. }) => "diverged",
        Some(SourceTooSmall { .. }) => "source_too_small",
        Some(InsufficientSources { .. }) => "insufficient_sources",
        Some(Format(_)) => "format",
        Some(Image(_)) => "image",
        Some(Io(_)) => "io",
        None if e.downcast_ref::<std::io::Error>().is_some() => "io",
        None => "harness",
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let cfg = cli.overrides.resolve()?;
    let inv = match cli.command {
        Command::Replay { manifest } => Invocation::from_manifest(&Manifest::load(&manifest)?)?,
        Command::Synth { image, pgm } => {
            let mut inv = Invocation::new("synth", cfg).arg("pgm", pgm);
            if let Some(p) = image {
                inv = inv.arg("image", p.display());
            }
            inv
        }
        Command::Degrade { input } => Invocation::new("degrade", cfg).arg("input", input.display()),
        Command::Reconstruct { lr, hr, motions } => {
            let mut inv = Invocation::new("reconstruct", cfg).arg("lr", lr.display());
            if let Some(p) = hr {
                inv = inv.arg("hr", p.display());
            }
            if let Some(p) = motions {
                inv = inv.arg("motions", p.display());
            }
            inv
        }
        Command::Montecarlo => Invocation::new("montecarlo", cfg),
        Command::Psd { psd_realizations, patch_count } => Invocation::new("psd", cfg)
            .arg("psd_realizations", psd_realizations)
            .arg("patch_count", patch_count),
        Command::CostModel { side, h_taps, s_taps, q_taps, m_taps } => {
            print!("{}", commands::cost_model_csv(side, h_taps, s_taps, q_taps, m_taps)?);
            return Ok(());
        }
        Command::FlopsProbe { sides } => {
            print!("{}", commands::flops_probe_csv(&cfg, &sides)?);
            return Ok(());
        }
        Command::Metrics { reference, estimate } => {
            let r = srr_core::io::read_frames(&reference)?;
            let e = srr_core::io::read_frames(&estimate)?;
            print!("{}", commands::metrics_table(&r, &e)?);
            return Ok(());
        }
    };
    let m = commands::run(&inv, &cli.out)?;
    println!("{}", serde_json::json!({ "command": m.command, "out": cli.out.display().to_string(), "spec_hash": m.spec_hash }));
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let msg = e.to_string();
            let text: Vec<&str> = msg.lines().take_while(|l| !l.starts_with("Usage:")).map(str::trim).collect();
            let text = text.join(" ").trim().trim_start_matches("error: ").to_string();
            eprintln!("{}", serde_json::json!({ "error": "usage", "message": text }));
            return ExitCode::from(2);
        }
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::json!({ "error": error_kind(&e), "message": format!("{e:#}") });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
