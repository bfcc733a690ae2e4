use std::fs;
use std::path::{Path, PathBuf};

use crate::analysis::DEFAULT_ACTIVE_THRESHOLD;
use crate::baselines::{ICA_MAX_ITER, ICA_TOL};
use crate::betavae::{TrainConfig, LINEAR_SHRINK_GAP, LINEAR_TOTAL_ITERS, NONLINEAR_SHRINK_GAP, NONLINEAR_TOTAL_ITERS};
use crate::datasets::{GeneratorKind, DEFAULT_SAMPLES};
use crate::error::{Error, Result};

pub const PCA_COMPONENTS: usize = 5;
pub const ICA_COMPONENTS: usize = 4;

/// Everything needed to regenerate one run from nothing.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kind: GeneratorKind,
    pub n: usize,
    /// Seeds the dataset; training and splitting use `train.seed`.
    pub data_seed: u64,
    pub train: TrainConfig,
    pub threshold: f64,
    pub pca_components: usize,
    pub ica_components: usize,
    pub ica_max_iter: usize,
    pub ica_tol: f64,
    pub out_dir: PathBuf,
}

impl ExperimentConfig {
    /// Defaults for `kind`: shrink gap and iteration budget follow the dataset.
    pub fn new(kind: GeneratorKind, latent_dim: usize, seed: u64) -> Self {
        let (gap, iters) = match kind {
            GeneratorKind::Linear => (LINEAR_SHRINK_GAP, LINEAR_TOTAL_ITERS),
            GeneratorKind::Nonlinear => (NONLINEAR_SHRINK_GAP, NONLINEAR_TOTAL_ITERS),
        };
        Self {
            kind,
            n: DEFAULT_SAMPLES,
            data_seed: seed,
            train: TrainConfig {
                latent_dim,
                shrink_gap: gap,
                total_iters: iters,
                seed,
                ..TrainConfig::default()
            },
            threshold: DEFAULT_ACTIVE_THRESHOLD,
            pca_components: PCA_COMPONENTS,
            ica_components: ICA_COMPONENTS,
            ica_max_iter: ICA_MAX_ITER,
            ica_tol: ICA_TOL,
            out_dir: PathBuf::from("out"),
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.trim()
                .parse()
                .map_err(|_| Error::arg(format!("`{key}` has invalid value `{v}`")))
        }
        match key {
            "kind" => self.kind = value.parse()?,
            "n" => self.n = num(key, value)?,
            "data_seed" => self.data_seed = num(key, value)?,
            "seed" => {
                self.data_seed = num(key, value)?;
                self.train.seed = self.data_seed;
            }
            "train_seed" => self.train.seed = num(key, value)?,
            "threshold" => self.threshold = num(key, value)?,
            "pca_components" => self.pca_components = num(key, value)?,
            "ica_components" => self.ica_components = num(key, value)?,
            "ica_max_iter" => self.ica_max_iter = num(key, value)?,
            "ica_tol" => self.ica_tol = num(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            other => {
                if !self.train.set(other, value)? {
                    return Err(Error::arg(format!("unknown config key `{other}`")));
                }
            }
        }
        Ok(())
    }

    /// Applies a flat `key=value` file. Blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str, path: &Path) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(path, i + 1, "expected key=value"))?;
            self.set(k.trim(), v.trim())
                .map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path)?;
        self.apply_text(&text, path)
    }

    pub fn to_text(&self) -> String {
        let t = &self.train;
        let hidden = t.hidden.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            s.push_str(k);
            s.push('=');
            s.push_str(&v);
            s.push('\n');
        };
        kv("kind", self.kind.to_string());
        kv("n", self.n.to_string());
        kv("data_seed", self.data_seed.to_string());
        kv("latent_dim", t.latent_dim.to_string());
        kv("hidden", hidden);
        kv("beta_init", t.beta_init.to_string());
        kv("shrink_gap", t.shrink_gap.to_string());
        kv("base", t.base.to_string());
        kv("lr", t.lr.to_string());
        kv("batch_size", t.batch_size.to_string());
        kv("total_iters", t.total_iters.to_string());
        kv("train_seed", t.seed.to_string());
        kv("log_every", t.log_every.to_string());
        kv("train_ratio", t.train_ratio.to_string());
        kv("threshold", self.threshold.to_string());
        kv("pca_components", self.pca_components.to_string());
        kv("ica_components", self.ica_components.to_string());
        kv("ica_max_iter", self.ica_max_iter.to_string());
        kv("ica_tol", self.ica_tol.to_string());
        s
    }

    /// Parses the output of [`to_text`](Self::to_text) (or any config file)
    /// on top of linear defaults.
    pub fn from_text(text: &str, path: &Path) -> Result<Self> {
        let mut cfg = ExperimentConfig::new(GeneratorKind::Linear, 5, 0);
        cfg.apply_text(text, path)?;
        Ok(cfg)
    }
}
