//! Run configuration: a plain `key = value` file plus command-line overrides.
//!
//! Every run is fully described by its canonical key-value map, which is
//! what manifests store and hash.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use sha2::{Digest, Sha256};
use srr_core::synth::OutlierSpec;
use srr_core::{Algorithm, SrrParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotionSource {
    /// Ground-truth walk.
    Known,
    /// Horn-Schunck flow averaged to one translation per frame.
    Global,
    /// Horn-Schunck flow used as a dense field.
    Dense,
}

impl fmt::Display for MotionSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MotionSource::Known => "known",
            MotionSource::Global => "global",
            MotionSource::Dense => "dense",
        })
    }
}

impl FromStr for MotionSource {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "known" => Ok(MotionSource::Known),
            "global" => Ok(MotionSource::Global),
            "dense" => Ok(MotionSource::Dense),
            other => bail!("unknown motion source '{other}' (known, global, dense)"),
        }
    }
}

/// Tuned parameter sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Outlier-free sequences.
    Table3,
    /// Sequences with an outlier square.
    Table4,
    /// Small-window R-LMS example with a 16x16 outlier.
    Illustrative,
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Table3 => "table3",
            Preset::Table4 => "table4",
            Preset::Illustrative => "illustrative",
        })
    }
}

impl FromStr for Preset {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "table3" => Ok(Preset::Table3),
            "table4" => Ok(Preset::Table4),
            "illustrative" => Ok(Preset::Illustrative),
            other => bail!("unknown preset '{other}' (table3, table4, illustrative)"),
        }
    }
}

/// `(mu, alpha, alpha_t)` for an algorithm under a preset.
pub fn preset_params(preset: Preset, alg: Algorithm) -> Option<(f64, f64, f64)> {
    use Algorithm::*;
    Some(match (preset, alg) {
        (Preset::Table3, Lms) => (2.0, 0.0, 0.0),
        (Preset::Table3, Rlms) => (2.75, 5e-4, 0.0),
        (Preset::Table3, TsrLms) => (1.15, 1.5e-4, 82.0),
        (Preset::Table3, LtsrLms) => (3.0, 1e-4, 0.02),
        (Preset::Table4, Lms) => (4.7, 0.0, 0.0),
        (Preset::Table4, Rlms) => (4.2, 40e-4, 0.0),
        (Preset::Table4, TsrLms) => (2.2, 18e-4, 16.0),
        (Preset::Table4, LtsrLms) => (3.4, 1e-4, 0.017),
        (Preset::Illustrative, Rlms) => (4.0, 2e-4, 0.0),
        _ => return None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: Option<Preset>,
    pub algorithms: Vec<Algorithm>,
    pub mu: Option<f64>,
    pub alpha: Option<f64>,
    pub alpha_t: Option<f64>,
    pub k_iters: usize,
    pub seed: u64,
    pub motion: MotionSource,
    pub frames: usize,
    pub factor: usize,
    pub noise_var: f64,
    pub outlier: Option<OutlierSpec>,
    pub hr_size: (usize, usize),
    pub realizations: usize,
    pub images: Vec<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            preset: None,
            algorithms: vec![Algorithm::Lms, Algorithm::Rlms, Algorithm::TsrLms, Algorithm::LtsrLms],
            mu: None,
            alpha: None,
            alpha_t: None,
            k_iters: 2,
            seed: 0,
            motion: MotionSource::Known,
            frames: 200,
            factor: 2,
            noise_var: 10.0,
            outlier: None,
            hr_size: (256, 256),
            realizations: 10,
            images: Vec::new(),
        }
    }
}

fn parse_outlier(s: &str) -> Result<Option<OutlierSpec>> {
    if s.trim() == "none" {
        return Ok(None);
    }
    let parts: Vec<&str> = s.split(':').collect();
    let [onset, offset, side] = parts.as_slice() else {
        bail!("outlier must be onset:offset:side, got '{s}'");
    };
    Ok(Some(OutlierSpec {
        onset_frame: onset.trim().parse()?,
        offset_frame: offset.trim().parse()?,
        side: side.trim().parse()?,
        value: 0.0,
    }))
}

fn parse_size(s: &str) -> Result<(usize, usize)> {
    match s.split_once('x') {
        Some((h, w)) => Ok((h.trim().parse()?, w.trim().parse()?)),
        None => {
            let n = s.trim().parse()?;
            Ok((n, n))
        }
    }
}

impl RunConfig {
    /// Defaults of a preset: the 256x256, 200-frame Monte Carlo setup, with
    /// the N x N square in frames 32-34 for `table4`; the 32x32, 40-frame
    /// R-LMS setup with a 16x16 square for `illustrative`.
    pub fn from_preset(preset: Preset) -> Self {
        let base = Self { preset: Some(preset), ..Self::default() };
        match preset {
            Preset::Table3 => base,
            Preset::Table4 => Self { outlier: Some(OutlierSpec::black_square(128)), ..base },
            Preset::Illustrative => Self {
                algorithms: vec![Algorithm::Rlms],
                k_iters: 2,
                frames: 40,
                hr_size: (32, 32),
                realizations: 50,
                outlier: Some(OutlierSpec::black_square(16)),
                ..base
            },
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text)
    }

    /// Parses `key = value` lines; `#` starts a comment. A `preset` key, if
    /// present, is applied before every other key regardless of position.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value", n + 1))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let mut cfg = match pairs.iter().find(|(k, _)| k == "preset") {
            Some((_, v)) if v != "none" => Self::from_preset(v.parse()?),
            _ => Self::default(),
        };
        for (k, v) in &pairs {
            if k != "preset" {
                cfg.set(k, v).with_context(|| format!("config key '{k}'"))?;
            }
        }
        Ok(cfg)
    }

    /// Sets one key; keys accept `-` or `_` separators.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let opt = |v: &str| -> Result<Option<f64>> {
            if v == "default" {
                Ok(None)
            } else {
                Ok(Some(v.parse()?))
            }
        };
        match key.replace('-', "_").as_str() {
            "preset" => self.preset = if value == "none" { None } else { Some(value.parse()?) },
            "algorithm" | "algorithms" => {
                self.algorithms =
                    value.split(',').map(|a| a.parse::<Algorithm>().map_err(Into::into)).collect::<Result<_>>()?
            }
            "mu" => self.mu = opt(value)?,
            "alpha" => self.alpha = opt(value)?,
            "alpha_t" => self.alpha_t = opt(value)?,
            "k_iters" => self.k_iters = value.parse()?,
            "seed" => self.seed = value.parse()?,
            "motion" => self.motion = value.parse()?,
            "frames" => self.frames = value.parse()?,
            "factor" => self.factor = value.parse()?,
            "noise_var" => self.noise_var = value.parse()?,
            "outlier" => self.outlier = parse_outlier(value)?,
            "hr_size" => self.hr_size = parse_size(value)?,
            "realizations" => self.realizations = value.parse()?,
            "images" => {
                self.images = value.split(',').filter(|s| !s.trim().is_empty()).map(|s| PathBuf::from(s.trim())).collect()
            }
            other => bail!("unknown key '{other}'"),
        }
        Ok(())
    }

    /// Canonical key-value form; `parse` of its rendering reproduces `self`.
    pub fn to_map(&self) -> BTreeMap<String, String> {
        let opt = |v: Option<f64>| v.map_or("default".to_string(), |x| x.to_string());
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("preset", self.preset.map_or("none".into(), |p| p.to_string()));
        put("algorithm", self.algorithms.iter().map(|a| a.name()).collect::<Vec<_>>().join(","));
        put("mu", opt(self.mu));
        put("alpha", opt(self.alpha));
        put("alpha_t", opt(self.alpha_t));
        put("k_iters", self.k_iters.to_string());
        put("seed", self.seed.to_string());
        put("motion", self.motion.to_string());
        put("frames", self.frames.to_string());
        put("factor", self.factor.to_string());
        put("noise_var", self.noise_var.to_string());
        put(
            "outlier",
            self.outlier
                .map_or("none".into(), |o| format!("{}:{}:{}", o.onset_frame, o.offset_frame, o.side)),
        );
        put("hr_size", format!("{}x{}", self.hr_size.0, self.hr_size.1));
        put("realizations", self.realizations.to_string());
        put("images", self.images.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(","));
        m
    }

    pub fn render(&self) -> String {
        self.to_map().iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        let text: String = map.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
        Self::parse(&text)
    }

    /// SHA-256 of the canonical rendering.
    pub fn spec_hash(&self) -> String {
        hex::encode(Sha256::digest(self.render().as_bytes()))
    }

    /// Parameters for `alg`: the preset's values (the outlier-free set without a
    /// preset) with explicit `mu`, `alpha`, `alpha_t` taking precedence.
    pub fn params_for(&self, alg: Algorithm) -> Result<SrrParams> {
        let base = preset_params(self.preset.unwrap_or(Preset::Table3), alg)
            .or_else(|| preset_params(Preset::Table3, alg));
        let (mu, alpha, alpha_t) = match (base, self.mu) {
            (Some((m, a, t)), _) => (self.mu.unwrap_or(m), self.alpha.unwrap_or(a), self.alpha_t.unwrap_or(t)),
            (None, Some(m)) => (m, self.alpha.unwrap_or(0.0), self.alpha_t.unwrap_or(1.0)),
            (None, None) => bail!("no default parameters for {alg}; set mu explicitly"),
        };
        let p = SrrParams::new(alg, mu, alpha, alpha_t, self.k_iters);
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() {
            bail!("no algorithms selected");
        }
        if self.frames == 0 {
            bail!("frames must be >= 1");
        }
        if let Some(o) = &self.outlier {
            o.validate(self.frames, self.hr_size)?;
        }
        for &a in &self.algorithms {
            self.params_for(a)?;
        }
        Ok(())
    }
}
