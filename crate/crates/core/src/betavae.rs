//! Diagonal-Gaussian beta-VAE trained under an exponential staircase β schedule.
//!
//! The objective per batch is `½‖x − x̂‖²` (summed over features, averaged
//! over the batch) plus `β` times the closed-form KL of `N(μ, σ²)` to the
//! standard normal prior. β decays as `base^(beta_init + ⌊iter / shrink_gap⌋)`,
//! so it starts large enough to close the bottleneck and opens it one
//! multiplicative step at a time.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::{adam_step, init_lecun, mlp_backward, mlp_forward, Activation, AdamState, Mlp};
use crate::numkit::{Matrix, RngState};
use crate::textio::{decode_mlp, encode_mlp};

pub const DEFAULT_BASE: f64 = 0.917;
pub const DEFAULT_BETA_INIT: f64 = -45.0;
pub const DEFAULT_LR: f64 = 2e-3;
pub const DEFAULT_BATCH: usize = 256;
pub const DEFAULT_HIDDEN: [usize; 2] = [64, 64];
pub const LINEAR_SHRINK_GAP: usize = 100;
pub const NONLINEAR_SHRINK_GAP: usize = 200;
pub const LINEAR_TOTAL_ITERS: usize = 12_000;
pub const NONLINEAR_TOTAL_ITERS: usize = 24_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaSchedule {
    pub beta_init: f64,
    pub shrink_gap: usize,
    pub base: f64,
}

impl BetaSchedule {
    pub fn new(beta_init: f64, shrink_gap: usize, base: f64) -> Result<Self> {
        if !(base > 0.0 && base < 1.0) {
            return Err(Error::arg(format!("schedule base must be in (0, 1), got {base}")));
        }
        if shrink_gap == 0 {
            return Err(Error::arg("shrink gap must be at least 1"));
        }
        if !beta_init.is_finite() {
            return Err(Error::arg("beta_init must be finite"));
        }
        Ok(Self {
            beta_init,
            shrink_gap,
            base,
        })
    }

    /// Exponent offset giving `beta_at(0) == beta0`.
    pub fn init_for_start(beta0: f64, base: f64) -> f64 {
        beta0.ln() / base.ln()
    }
}

pub fn beta_at(schedule: &BetaSchedule, iter: usize) -> f64 {
    let shrinks = (iter / schedule.shrink_gap) as f64;
    schedule.base.powf(schedule.beta_init + shrinks)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub latent_dim: usize,
    pub hidden: Vec<usize>,
    pub beta_init: f64,
    pub shrink_gap: usize,
    pub base: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub total_iters: usize,
    pub seed: u64,
    pub log_every: usize,
    /// Fraction of rows used for training; the rest are held out.
    pub train_ratio: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            latent_dim: 5,
            hidden: DEFAULT_HIDDEN.to_vec(),
            beta_init: DEFAULT_BETA_INIT,
            shrink_gap: LINEAR_SHRINK_GAP,
            base: DEFAULT_BASE,
            lr: DEFAULT_LR,
            batch_size: DEFAULT_BATCH,
            total_iters: LINEAR_TOTAL_ITERS,
            seed: 0,
            log_every: 100,
            train_ratio: crate::datasets::DEFAULT_TRAIN_RATIO,
        }
    }
}

impl TrainConfig {
    pub fn schedule(&self) -> Result<BetaSchedule> {
        BetaSchedule::new(self.beta_init, self.shrink_gap, self.base)
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule()?;
        if self.latent_dim == 0 || self.batch_size == 0 || self.log_every == 0 {
            return Err(Error::arg("latent_dim, batch_size and log_every must be positive"));
        }
        if self.hidden.contains(&0) {
            return Err(Error::arg("hidden widths must be positive"));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::arg(format!("learning rate must be finite and non-negative, got {}", self.lr)));
        }
        Ok(())
    }

    /// `key=value` pairs separated by spaces; floats in shortest round-trip form.
    pub fn to_kv(&self) -> String {
        let hidden = self.hidden.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        format!(
            "latent_dim={} hidden={} beta_init={} shrink_gap={} base={} lr={} batch_size={} total_iters={} seed={} log_every={} train_ratio={}",
            self.latent_dim,
            hidden,
            self.beta_init,
            self.shrink_gap,
            self.base,
            self.lr,
            self.batch_size,
            self.total_iters,
            self.seed,
            self.log_every,
            self.train_ratio
        )
    }

    /// Applies one `key=value` setting. Returns `Ok(false)` for unknown keys.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.trim()
                .parse()
                .map_err(|_| Error::arg(format!("`{key}` has invalid value `{v}`")))
        }
        match key {
            "latent_dim" | "latents" => self.latent_dim = num(key, value)?,
            "hidden" => {
                self.hidden = value
                    .split(',')
                    .filter(|s| !s.is_empty())
                    .map(|s| num(key, s))
                    .collect::<Result<_>>()?
            }
            "beta_init" => self.beta_init = num(key, value)?,
            "shrink_gap" | "beta_shrink_gap" => self.shrink_gap = num(key, value)?,
            "base" => self.base = num(key, value)?,
            "lr" => self.lr = num(key, value)?,
            "batch_size" => self.batch_size = num(key, value)?,
            "total_iters" | "iters" => self.total_iters = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "log_every" => self.log_every = num(key, value)?,
            "train_ratio" => self.train_ratio = num(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    pub fn from_kv(text: &str) -> Result<Self> {
        let mut cfg = TrainConfig::default();
        for kv in text.split_whitespace() {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::arg(format!("expected key=value, got `{kv}`")))?;
            if !cfg.set(k, v)? {
                return Err(Error::arg(format!("unknown training key `{k}`")));
            }
        }
        Ok(cfg)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VaeModel {
    pub encoder: Mlp,
    pub decoder: Mlp,
    latent_dim: usize,
}

impl VaeModel {
    pub fn new(encoder: Mlp, decoder: Mlp) -> Result<Self> {
        let latent_dim = decoder.input_dim();
        if encoder.output_dim() != 2 * latent_dim {
            return Err(Error::Shape {
                op: "VaeModel::new",
                left: (encoder.input_dim(), encoder.output_dim()),
                right: (decoder.input_dim(), decoder.output_dim()),
            });
        }
        if decoder.output_dim() != encoder.input_dim() {
            return Err(Error::arg(format!(
                "decoder reconstructs {} features but encoder reads {}",
                decoder.output_dim(),
                encoder.input_dim()
            )));
        }
        Ok(Self {
            encoder,
            decoder,
            latent_dim,
        })
    }

    /// SELU hidden layers, linear heads, LeCun-normal weights.
    pub fn init(rng: &mut RngState, input_dim: usize, latent_dim: usize, hidden: &[usize]) -> Result<Self> {
        let mut enc_sizes = vec![input_dim];
        enc_sizes.extend_from_slice(hidden);
        enc_sizes.push(2 * latent_dim);
        let mut dec_sizes = vec![latent_dim];
        dec_sizes.extend(hidden.iter().rev());
        dec_sizes.push(input_dim);
        let mut acts = vec![Activation::Selu; hidden.len()];
        acts.push(Activation::Linear);
        let encoder = init_lecun(rng, &enc_sizes, &acts)?;
        let decoder = init_lecun(rng, &dec_sizes, &acts)?;
        Self::new(encoder, decoder)
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn input_dim(&self) -> usize {
        self.encoder.input_dim()
    }

    fn param_sizes(&self) -> Vec<usize> {
        self.encoder
            .params()
            .iter()
            .chain(self.decoder.params().iter())
            .map(|p| p.len())
            .collect()
    }
}

pub fn encode(model: &VaeModel, x: &Matrix) -> Result<(Matrix, Matrix)> {
    let h = model.encoder.predict(x)?;
    let l = model.latent_dim;
    Ok((h.col_range(0, l), h.col_range(l, 2 * l)))
}

pub fn reparameterize(rng: &mut RngState, mu: &Matrix, log_var: &Matrix) -> Result<Matrix> {
    let mut eps = Matrix::zeros(mu.rows(), mu.cols());
    rng.fill(crate::numkit::Distribution::StandardNormal, eps.data_mut());
    reparameterize_with(mu, log_var, &eps)
}

/// `mu + exp(log_var / 2) ⊙ eps` for a given noise draw.
pub fn reparameterize_with(mu: &Matrix, log_var: &Matrix, eps: &Matrix) -> Result<Matrix> {
    if mu.shape() != log_var.shape() || mu.shape() != eps.shape() {
        return Err(Error::Shape {
            op: "reparameterize",
            left: mu.shape(),
            right: log_var.shape(),
        });
    }
    let mut z = mu.clone();
    for ((z, &lv), &e) in z.data_mut().iter_mut().zip(log_var.data()).zip(eps.data()) {
        *z += (0.5 * lv).exp() * e;
    }
    Ok(z)
}

/// Batch-mean KL of each latent's posterior to `N(0, 1)`.
pub fn kl_per_dim(mu: &Matrix, log_var: &Matrix) -> Result<Vec<f64>> {
    if mu.shape() != log_var.shape() {
        return Err(Error::Shape {
            op: "kl_per_dim",
            left: mu.shape(),
            right: log_var.shape(),
        });
    }
    let (n, l) = mu.shape();
    let mut kl = vec![0.0; l];
    for i in 0..n {
        for ((acc, &m), &lv) in kl.iter_mut().zip(mu.row(i)).zip(log_var.row(i)) {
            *acc += 0.5 * (m * m + lv.exp() - lv - 1.0);
        }
    }
    let n = n.max(1) as f64;
    kl.iter_mut().for_each(|v| *v /= n);
    Ok(kl)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossParts {
    pub total: f64,
    pub recon: f64,
    pub kl: f64,
}

/// Half squared error summed over features and averaged over the batch.
pub fn recon_loss(x: &Matrix, x_hat: &Matrix) -> Result<f64> {
    if x.shape() != x_hat.shape() {
        return Err(Error::Shape {
            op: "recon_loss",
            left: x.shape(),
            right: x_hat.shape(),
        });
    }
    let sse: f64 = x.data().iter().zip(x_hat.data()).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(0.5 * sse / x.rows().max(1) as f64)
}

pub fn loss(x: &Matrix, x_hat: &Matrix, mu: &Matrix, log_var: &Matrix, beta: f64) -> Result<LossParts> {
    if beta < 0.0 {
        return Err(Error::arg(format!("beta must be non-negative, got {beta}")));
    }
    let recon = recon_loss(x, x_hat)?;
    let kl: f64 = kl_per_dim(mu, log_var)?.iter().sum();
    let total = if beta == 0.0 { recon } else { recon + beta * kl };
    if !total.is_finite() {
        return Err(Error::Divergence { iter: 0, what: "loss" });
    }
    Ok(LossParts { total, recon, kl })
}

/// Loss and parameter gradients for one batch under a fixed noise draw.
#[derive(Clone, Debug)]
pub struct BatchEval {
    pub parts: LossParts,
    pub kl_per_dim: Vec<f64>,
    /// Encoder tensors followed by decoder tensors, as in [`Mlp::params`].
    pub grads: Vec<Vec<f64>>,
}

pub fn loss_and_grads(model: &VaeModel, x: &Matrix, eps: &Matrix, beta: f64) -> Result<BatchEval> {
    let l = model.latent_dim;
    let b = x.rows();
    let (h, enc_tape) = mlp_forward(&model.encoder, x)?;
    let mu = h.col_range(0, l);
    let log_var = h.col_range(l, 2 * l);
    let z = reparameterize_with(&mu, &log_var, eps)?;
    let (x_hat, dec_tape) = mlp_forward(&model.decoder, &z)?;

    let kl = kl_per_dim(&mu, &log_var)?;
    let recon = recon_loss(x, &x_hat)?;
    let kl_total: f64 = kl.iter().sum();
    let total = recon + beta * kl_total;
    if !total.is_finite() {
        return Err(Error::Divergence { iter: 0, what: "loss" });
    }

    let inv_b = 1.0 / b as f64;
    let mut d_xhat = x_hat.sub(x)?;
    d_xhat.data_mut().iter_mut().for_each(|v| *v *= inv_b);
    let dec_grads = mlp_backward(&model.decoder, &dec_tape, &d_xhat)?;
    let dz = &dec_grads.input;

    let mut dh = Matrix::zeros(b, 2 * l);
    for i in 0..b {
        let dzr = dz.row(i);
        let mur = mu.row(i);
        let lvr = log_var.row(i);
        let er = eps.row(i);
        let out = dh.row_mut(i);
        for j in 0..l {
            let std = (0.5 * lvr[j]).exp();
            out[j] = dzr[j] + beta * mur[j] * inv_b;
            out[l + j] = dzr[j] * er[j] * 0.5 * std + beta * 0.5 * (std * std - 1.0) * inv_b;
        }
    }
    let enc_grads = mlp_backward(&model.encoder, &enc_tape, &dh)?;

    let grads = enc_grads
        .slices()
        .into_iter()
        .chain(dec_grads.slices())
        .map(<[f64]>::to_vec)
        .collect();
    Ok(BatchEval {
        parts: LossParts {
            total,
            recon,
            kl: kl_total,
        },
        kl_per_dim: kl,
        grads,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub beta: f64,
    pub recon: f64,
    pub kl_total: f64,
    pub kl_per_dim: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainTrace {
    pub records: Vec<TraceRecord>,
}

impl TrainTrace {
    pub fn csv_header(latent_dim: usize) -> String {
        let mut s = String::from("iter,beta,recon,kl_total");
        for j in 0..latent_dim {
            let _ = write!(s, ",kl_{j}");
        }
        s
    }

    /// Fields at full round-trip precision.
    pub fn csv_row(r: &TraceRecord) -> String {
        let mut s = format!("{},{:e},{:e},{:e}", r.iter, r.beta, r.recon, r.kl_total);
        for v in &r.kl_per_dim {
            let _ = write!(s, ",{v:e}");
        }
        s
    }
}

/// Stream labels for [`RngState::split`].
const STREAM_INIT: u64 = 1;
const STREAM_SHUFFLE: u64 = 2;
const STREAM_NOISE: u64 = 3;
const STREAM_SPLIT: u64 = 4;

/// The train/test split a run with `config` uses.
pub fn split_for(config: &TrainConfig, ds: &crate::datasets::FactorDataset) -> Result<crate::datasets::SplitDataset> {
    let mut rng = RngState::new(config.seed).split(STREAM_SPLIT);
    crate::datasets::split(ds, config.train_ratio, &mut rng)
}

pub fn init_model(config: &TrainConfig, input_dim: usize) -> Result<VaeModel> {
    config.validate()?;
    let mut rng = RngState::new(config.seed).split(STREAM_INIT);
    VaeModel::init(&mut rng, input_dim, config.latent_dim, &config.hidden)
}

/// Trains a fresh model on the observation rows of `x`.
pub fn train_matrix(
    config: &TrainConfig,
    x: &Matrix,
    on_log: impl FnMut(&TraceRecord),
) -> Result<VaeModel> {
    let model = init_model(config, x.cols())?;
    continue_training(model, config, x, 0, on_log)
}

/// Runs iterations `start_iter .. config.total_iters` on `model`. Divergence
/// aborts with the failing iteration; records already passed to `on_log` stand.
pub fn continue_training(
    mut model: VaeModel,
    config: &TrainConfig,
    x: &Matrix,
    start_iter: usize,
    mut on_log: impl FnMut(&TraceRecord),
) -> Result<VaeModel> {
    config.validate()?;
    if x.cols() != model.input_dim() {
        return Err(Error::Shape {
            op: "train",
            left: x.shape(),
            right: (model.input_dim(), model.latent_dim),
        });
    }
    if x.rows() == 0 {
        return Err(Error::InsufficientData {
            op: "train",
            needed: 1,
            got: 0,
        });
    }
    let schedule = config.schedule()?;
    let root = RngState::new(config.seed);
    let mut shuffle_rng = root.split(STREAM_SHUFFLE ^ ((start_iter as u64) << 32));
    let mut noise_rng = root.split(STREAM_NOISE ^ ((start_iter as u64) << 32));
    let mut adam = AdamState::new(&model.param_sizes(), config.lr);

    let n = x.rows();
    let batch = config.batch_size.min(n);
    let per_epoch = n / batch;
    let mut order: Vec<usize> = Vec::new();
    let mut cursor = per_epoch;
    let mut eps = Matrix::zeros(batch, model.latent_dim);

    for iter in start_iter..config.total_iters {
        if cursor == per_epoch {
            order = shuffle_rng.permutation(n);
            cursor = 0;
        }
        let idx = &order[cursor * batch..(cursor + 1) * batch];
        cursor += 1;
        let xb = x.select_rows(idx);
        noise_rng.fill(crate::numkit::Distribution::StandardNormal, eps.data_mut());
        let beta = beta_at(&schedule, iter);

        let eval = loss_and_grads(&model, &xb, &eps, beta).map_err(|e| match e {
            Error::Divergence { what, .. } => Error::Divergence { iter, what },
            other => other,
        })?;
        {
            let grads: Vec<&[f64]> = eval.grads.iter().map(Vec::as_slice).collect();
            let mut params: Vec<&mut [f64]> = model.encoder.params_mut();
            params.extend(model.decoder.params_mut());
            adam_step(&mut params, &grads, &mut adam).map_err(|e| match e {
                Error::Divergence { what, .. } => Error::Divergence { iter, what },
                other => other,
            })?;
        }

        if iter % config.log_every == 0 || iter + 1 == config.total_iters {
            on_log(&TraceRecord {
                iter,
                beta,
                recon: eval.parts.recon,
                kl_total: eval.parts.kl,
                kl_per_dim: eval.kl_per_dim,
            });
        }
    }
    Ok(model)
}

pub fn train_with_trace(config: &TrainConfig, x: &Matrix) -> Result<(VaeModel, TrainTrace)> {
    let mut trace = TrainTrace::default();
    let model = train_matrix(config, x, |r| trace.records.push(r.clone()))?;
    Ok((model, trace))
}

pub fn train(config: &TrainConfig, data: &crate::datasets::FactorDataset) -> Result<(VaeModel, TrainTrace)> {
    train_with_trace(config, &data.observations)
}

/// Decodes the posterior mean (`use_mean`) or one reparameterized sample.
pub fn reconstruct(model: &VaeModel, x: &Matrix, use_mean: bool, rng: &mut RngState) -> Result<Matrix> {
    let (mu, log_var) = encode(model, x)?;
    let z = if use_mean {
        mu
    } else {
        reparameterize(rng, &mu, &log_var)?
    };
    model.decoder.predict(&z)
}

/// `10 log10(peak² / MSE)` with `peak = max(x) − min(x)`. An exact
/// reconstruction yields `+inf`.
pub fn psnr(x: &Matrix, x_hat: &Matrix) -> Result<f64> {
    if x.shape() != x_hat.shape() {
        return Err(Error::Shape {
            op: "psnr",
            left: x.shape(),
            right: x_hat.shape(),
        });
    }
    let (lo, hi) = x.min_max();
    psnr_with_peak(x, x_hat, hi - lo)
}

pub fn psnr_with_peak(x: &Matrix, x_hat: &Matrix, peak: f64) -> Result<f64> {
    let n = x.data().len().max(1) as f64;
    let mse: f64 = x.data().iter().zip(x_hat.data()).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

/// PSNR of predicting the per-feature mean of `x` for every row.
pub fn mean_predictor_psnr(x: &Matrix) -> Result<f64> {
    let means = x.col_means();
    let mut pred = Matrix::zeros(x.rows(), x.cols());
    for i in 0..x.rows() {
        pred.row_mut(i).copy_from_slice(&means);
    }
    psnr(x, &pred)
}

const CHECKPOINT_MAGIC: &str = "bvae-checkpoint v1";

pub fn save_checkpoint(path: &Path, model: &VaeModel, config: &TrainConfig) -> Result<()> {
    let (es, ev) = encode_mlp(&model.encoder);
    let (ds, dv) = encode_mlp(&model.decoder);
    let text = format!(
        "{CHECKPOINT_MAGIC}\nconfig {}\nencoder {es} {ev}\ndecoder {ds} {dv}\n",
        config.to_kv()
    );
    fs::write(path, text)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(VaeModel, TrainConfig)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next() != Some(CHECKPOINT_MAGIC) {
        return Err(Error::parse(path, 1, format!("expected `{CHECKPOINT_MAGIC}`")));
    }
    let cfg_line = lines.next().ok_or_else(|| Error::parse(path, 2, "missing config line"))?;
    let cfg = cfg_line
        .strip_prefix("config ")
        .ok_or_else(|| Error::parse(path, 2, "expected `config ...`"))?;
    let config = TrainConfig::from_kv(cfg).map_err(|e| Error::parse(path, 2, e.to_string()))?;
    let mut net = |ln: usize, tag: &str| -> Result<Mlp> {
        let line = lines
            .next()
            .ok_or_else(|| Error::parse(path, ln, format!("missing {tag} line")))?;
        let mut parts = line.split(' ');
        if parts.next() != Some(tag) {
            return Err(Error::parse(path, ln, format!("expected `{tag} ...`")));
        }
        let shapes = parts.next().ok_or_else(|| Error::parse(path, ln, "missing layer shapes"))?;
        let values = parts.next().unwrap_or("");
        decode_mlp(shapes, values).map_err(|e| Error::parse(path, ln, e))
    };
    let encoder = net(3, "encoder")?;
    let decoder = net(4, "decoder")?;
    let model = VaeModel::new(encoder, decoder).map_err(|e| Error::parse(path, 3, e.to_string()))?;
    Ok((model, config))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sched(b: f64, gap: usize) -> BetaSchedule {
        BetaSchedule::new(b, gap, DEFAULT_BASE).unwrap()
    }

    #[test]
    fn beta_substitution() {
        let s = sched(3.0, 100);
        assert_eq!(beta_at(&s, 0), 0.917f64.powf(3.0));
        assert_eq!(beta_at(&s, 99), 0.917f64.powf(3.0));
        assert_eq!(beta_at(&s, 100), 0.917f64.powf(4.0));
        assert_eq!(beta_at(&s, 250), 0.917f64.powf(5.0));
    }

    #[test]
    fn eight_shrinks_halve() {
        // ln(0.917) * 8 = -0.69318, so the ratio is 0.49997
        let r = 0.917f64.powi(8);
        assert!((0.4997..=0.5).contains(&r), "{r}");
    }

    #[test]
    fn schedule_rejects_bad_params() {
        assert!(BetaSchedule::new(0.0, 0, 0.9).is_err());
        assert!(BetaSchedule::new(0.0, 10, 1.0).is_err());
        assert!(BetaSchedule::new(0.0, 10, 0.0).is_err());
    }

    #[test]
    fn default_beta_start_is_about_fifty() {
        let b0 = beta_at(&sched(DEFAULT_BETA_INIT, 100), 0);
        assert!((b0 - 49.4).abs() < 0.5, "{b0}");
        assert!((BetaSchedule::init_for_start(50.0, 0.917) + 45.15).abs() < 0.01);
    }

    #[test]
    fn kl_closed_form_values() {
        let z = Matrix::zeros(3, 2);
        assert_eq!(kl_per_dim(&z, &z).unwrap(), vec![0.0, 0.0]);
        let mu = Matrix::from_rows(&[[1.0]]);
        assert_eq!(kl_per_dim(&mu, &Matrix::zeros(1, 1)).unwrap(), vec![0.5]);
    }

    #[test]
    fn loss_hand_values() {
        let z = Matrix::zeros(1, 2);
        let x = Matrix::from_rows(&[[1.0, 0.0, 0.0]]);
        let p = loss(&x, &x, &z, &z, 3.0).unwrap();
        assert_eq!(p.total, 0.0);
        let p = loss(&x, &Matrix::zeros(1, 3), &z, &z, 1.0).unwrap();
        assert_eq!(p.recon, 0.5);
        let mu = Matrix::from_rows(&[[2.0, 0.0]]);
        let p = loss(&x, &Matrix::zeros(1, 3), &mu, &z, 0.0).unwrap();
        assert_eq!(p.total, p.recon);
        let p = loss(&x, &Matrix::zeros(1, 3), &mu, &z, 0.5).unwrap();
        assert_eq!(p.total, 0.5 + 0.5 * 2.0);
    }

    #[test]
    fn loss_rejects_non_finite() {
        let z = Matrix::zeros(1, 1);
        let x = Matrix::from_rows(&[[f64::INFINITY]]);
        assert!(matches!(loss(&x, &z, &z, &z, 1.0), Err(Error::Divergence { .. })));
    }

    #[test]
    fn zero_variance_limit() {
        let mu = Matrix::from_rows(&[[0.3, -2.0]]);
        let lv = Matrix::filled(1, 2, -60.0);
        let z = reparameterize(&mut RngState::new(1), &mu, &lv).unwrap();
        assert!(z.max_abs_diff(&mu) < 1e-10);
    }

    #[test]
    fn reparameterize_reproducible_and_unit_variance() {
        let mu = Matrix::zeros(100_000, 1);
        let lv = Matrix::zeros(100_000, 1);
        let a = reparameterize(&mut RngState::new(2), &mu, &lv).unwrap();
        let b = reparameterize(&mut RngState::new(2), &mu, &lv).unwrap();
        assert_eq!(a, b);
        let var = crate::numkit::variance(a.data());
        assert!((0.97..=1.03).contains(&var), "{var}");
    }

    #[test]
    fn zeroed_heads_give_prior() {
        let mut rng = RngState::new(4);
        let mut model = VaeModel::init(&mut rng, 14, 3, &[8]).unwrap();
        let last = model.encoder.layers_mut().last_mut().unwrap();
        last.weights = Matrix::zeros(last.weights.rows(), last.weights.cols());
        let x = Matrix::filled(5, 14, 0.7);
        let (mu, lv) = encode(&model, &x).unwrap();
        assert_eq!(mu.shape(), (5, 3));
        assert_eq!(lv.shape(), (5, 3));
        assert!(mu.data().iter().chain(lv.data()).all(|&v| v == 0.0));
    }

    #[test]
    fn psnr_definitions() {
        let x = Matrix::from_rows(&[[0.0, 10.0]]);
        assert_eq!(psnr(&x, &x).unwrap(), f64::INFINITY);
        // peak = 10, error 10 on each entry -> MSE = 100 = peak^2
        let y = Matrix::from_rows(&[[10.0, 0.0]]);
        assert!(psnr(&x, &y).unwrap().abs() < 1e-12);
        // MSE = 1 = peak^2 / 100
        let y = Matrix::from_rows(&[[1.0, 11.0]]);
        assert!((psnr(&x, &y).unwrap() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn config_kv_round_trip() {
        let cfg = TrainConfig {
            latent_dim: 100,
            beta_init: -45.25,
            lr: 0.1 + 0.2,
            seed: u64::MAX,
            ..TrainConfig::default()
        };
        assert_eq!(TrainConfig::from_kv(&cfg.to_kv()).unwrap(), cfg);
        assert!(TrainConfig::from_kv("bogus=1").is_err());
    }
}
