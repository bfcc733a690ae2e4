//! Subcommand bodies. Each takes resolved arguments and writes its artifacts.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use super::config::ExperimentConfig;
use super::run::{analyze_run, baseline_report, BaselineReport, RunReport};
use crate::betavae::{continue_training, init_model, load_checkpoint, save_checkpoint, split_for, TraceRecord, TrainTrace, VaeModel};
use crate::datasets::{self, FactorDataset, GeneratorKind};
use crate::error::{Error, Result};

pub const DATA_FILE: &str = "data.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.txt";
pub const TRACE_FILE: &str = "trace.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const SUMMARY_HEADER: &str = "run,dataset,latents,active,pca_likeness,ica_likeness,psnr_test";

pub fn cmd_gen_data(kind: GeneratorKind, n: usize, seed: u64, path: &Path) -> Result<FactorDataset> {
    let ds = datasets::generate(kind, seed, n)?;
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    datasets::save(&ds, path)?;
    Ok(ds)
}

fn require(path: &Path, what: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::arg(format!("{what} `{}` not found", path.display())))
    }
}

/// Trains on the training split of `ds`, streaming the trace into
/// `out_dir/trace.csv` so it survives divergence. `extra_iters` keeps
/// training past the schedule end with β still shrinking.
pub fn train_into(cfg: &ExperimentConfig, ds: &FactorDataset, out_dir: &Path, extra_iters: usize) -> Result<(VaeModel, TrainTrace)> {
    fs::create_dir_all(out_dir)?;
    let parts = split_for(&cfg.train, ds)?;
    let x = &parts.train.observations;
    let mut w = BufWriter::new(fs::File::create(out_dir.join(TRACE_FILE))?);
    writeln!(w, "{}", TrainTrace::csv_header(cfg.train.latent_dim))?;
    let mut trace = TrainTrace::default();
    let mut io_err = None;
    let mut log = |r: &TraceRecord| {
        if io_err.is_none() {
            if let Err(e) = writeln!(w, "{}", TrainTrace::csv_row(r)) {
                io_err = Some(e);
            }
        }
        trace.records.push(r.clone());
    };

    let model = init_model(&cfg.train, x.cols())?;
    let mut result = continue_training(model, &cfg.train, x, 0, &mut log);
    if extra_iters > 0 {
        let mut longer = cfg.train.clone();
        longer.total_iters += extra_iters;
        result = result.and_then(|m| continue_training(m, &longer, x, cfg.train.total_iters, &mut log));
    }
    w.flush()?;
    drop(w);
    if let Some(e) = io_err {
        return Err(e.into());
    }
    let model = result?;
    save_checkpoint(&out_dir.join(CHECKPOINT_FILE), &model, &cfg.train)?;
    Ok((model, trace))
}

/// Loads a dataset file and trains; `cfg.kind`, `n` and `data_seed` are taken from the file.
pub fn cmd_train(cfg: &ExperimentConfig, data: &Path, out_dir: &Path, extra_iters: usize) -> Result<(VaeModel, TrainTrace)> {
    require(data, "dataset")?;
    let ds = datasets::load(data)?;
    let cfg = with_dataset(cfg, &ds);
    train_into(&cfg, &ds, out_dir, extra_iters)
}

fn with_dataset(cfg: &ExperimentConfig, ds: &FactorDataset) -> ExperimentConfig {
    let mut c = cfg.clone();
    c.kind = ds.kind();
    c.n = ds.len();
    c.data_seed = ds.seed;
    c
}

/// Analyzes a checkpoint against a dataset; training settings come from the checkpoint.
pub fn cmd_analyze(cfg: &ExperimentConfig, checkpoint: &Path, data: &Path, out_dir: &Path) -> Result<RunReport> {
    require(checkpoint, "checkpoint")?;
    require(data, "dataset")?;
    let (model, train) = load_checkpoint(checkpoint)?;
    let ds = datasets::load(data)?;
    let mut cfg = with_dataset(cfg, &ds);
    cfg.train = train;
    cfg.out_dir = out_dir.to_path_buf();
    let (report, mu, b) = analyze_run(&cfg, &model, &ds)?;
    report.write(out_dir, &mu, &ds, &b)?;
    Ok(report)
}

pub fn cmd_baseline(cfg: &ExperimentConfig, data: &Path, out_dir: &Path) -> Result<BaselineReport> {
    require(data, "dataset")?;
    let ds = datasets::load(data)?;
    let cfg = with_dataset(cfg, &ds);
    let (report, b) = baseline_report(&cfg, &ds)?;
    report.write(out_dir, &ds, &b)?;
    Ok(report)
}

/// Generates, trains and analyzes one configuration inside `cfg.out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    let started = Instant::now();
    let dir = &cfg.out_dir;
    let ds = cmd_gen_data(cfg.kind, cfg.n, cfg.data_seed, &dir.join(DATA_FILE))?;
    let (model, _) = train_into(cfg, &ds, dir, 0)?;
    let (mut report, mu, b) = analyze_run(cfg, &model, &ds)?;
    report.wall_clock = Some(started.elapsed());
    report.write(dir, &mu, &ds, &b)?;
    Ok(report)
}

#[derive(Clone, Debug)]
pub struct ReproduceOptions {
    pub seed: u64,
    pub n: usize,
    pub linear_iters: usize,
    pub nonlinear_iters: usize,
    pub out_dir: PathBuf,
    /// Applied to every run before the per-run settings.
    pub base: Option<ExperimentConfig>,
}

impl ReproduceOptions {
    pub fn new(seed: u64, out_dir: PathBuf) -> Self {
        Self {
            seed,
            n: datasets::DEFAULT_SAMPLES,
            linear_iters: crate::betavae::LINEAR_TOTAL_ITERS,
            nonlinear_iters: crate::betavae::NONLINEAR_TOTAL_ITERS,
            out_dir,
            base: None,
        }
    }
}

/// The experiment matrix: linear with 5 and 100 latents, non-linear with 5, 100 and 500.
pub const MATRIX: [(GeneratorKind, usize); 5] = [
    (GeneratorKind::Linear, 5),
    (GeneratorKind::Linear, 100),
    (GeneratorKind::Nonlinear, 5),
    (GeneratorKind::Nonlinear, 100),
    (GeneratorKind::Nonlinear, 500),
];

pub fn run_name(kind: GeneratorKind, latents: usize) -> String {
    format!("{kind}_{latents}")
}

pub fn matrix_configs(opts: &ReproduceOptions) -> Vec<ExperimentConfig> {
    MATRIX
        .iter()
        .map(|&(kind, latents)| {
            let mut cfg = ExperimentConfig::new(kind, latents, opts.seed);
            if let Some(base) = &opts.base {
                let fresh = cfg.train.clone();
                cfg.train = base.train.clone();
                cfg.train.latent_dim = fresh.latent_dim;
                cfg.train.shrink_gap = fresh.shrink_gap;
                cfg.threshold = base.threshold;
                cfg.pca_components = base.pca_components;
                cfg.ica_components = base.ica_components;
                cfg.ica_max_iter = base.ica_max_iter;
                cfg.ica_tol = base.ica_tol;
            }
            cfg.n = opts.n;
            cfg.data_seed = opts.seed;
            cfg.train.seed = opts.seed;
            cfg.train.total_iters = match kind {
                GeneratorKind::Linear => opts.linear_iters,
                GeneratorKind::Nonlinear => opts.nonlinear_iters,
            };
            cfg.out_dir = opts.out_dir.join(run_name(kind, latents));
            cfg
        })
        .collect()
}

#[derive(Debug)]
pub struct RunOutcome {
    pub name: String,
    pub kind: GeneratorKind,
    pub latents: usize,
    pub result: std::result::Result<RunReport, String>,
}

impl RunOutcome {
    pub fn summary_row(&self) -> String {
        match &self.result {
            Ok(r) => format!("{},{}", self.name, r.summary_fields()),
            Err(_) => format!("{},{},{},FAILED,NA,NA,NA", self.name, self.kind, self.latents),
        }
    }
}

#[derive(Debug)]
pub struct Relation {
    pub description: String,
    /// `None` when an involved run failed.
    pub holds: Option<bool>,
}

#[derive(Debug)]
pub struct ReproduceSummary {
    pub runs: Vec<RunOutcome>,
    pub relations: Vec<Relation>,
}

impl ReproduceSummary {
    pub fn csv(&self) -> String {
        let mut s = String::from(SUMMARY_HEADER);
        s.push('\n');
        for r in &self.runs {
            s.push_str(&r.summary_row());
            s.push('\n');
        }
        s
    }

    pub fn relations_text(&self) -> String {
        let mut s = String::new();
        for r in &self.relations {
            let tag = match r.holds {
                Some(true) => "holds",
                Some(false) => "VIOLATED",
                None => "unavailable",
            };
            let _ = writeln!(s, "{tag}: {}", r.description);
        }
        s
    }

    pub fn any_failed(&self) -> bool {
        self.runs.iter().any(|r| r.result.is_err())
    }

    fn report(&self, kind: GeneratorKind, latents: usize) -> Option<&RunReport> {
        self.runs
            .iter()
            .find(|r| r.kind == kind && r.latents == latents)
            .and_then(|r| r.result.as_ref().ok())
    }
}

fn expected_relations(s: &ReproduceSummary) -> Vec<Relation> {
    use GeneratorKind::{Linear, Nonlinear};
    let mut out = Vec::new();
    for r in &s.runs {
        out.push(Relation {
            description: format!("{} has exactly 4 active latents", r.name),
            holds: r.result.as_ref().ok().map(|rep| rep.active_count() == 4),
        });
    }
    let both = |a: Option<f64>, b: Option<f64>| a.zip(b).map(|(a, b)| a > b);
    let l5 = s.report(Linear, 5);
    out.push(Relation {
        description: "linear_5: pca_likeness > ica_likeness".into(),
        holds: l5.and_then(|r| both(r.pca_likeness, r.ica_likeness)),
    });
    let l100 = s.report(Linear, 100);
    out.push(Relation {
        description: "linear_100: ica_likeness > pca_likeness".into(),
        holds: l100.and_then(|r| both(r.ica_likeness, r.pca_likeness)),
    });
    out.push(Relation {
        description: "nonlinear: psnr_test(100 latents) > psnr_test(5 latents)".into(),
        holds: s
            .report(Nonlinear, 100)
            .zip(s.report(Nonlinear, 5))
            .map(|(a, b)| a.psnr_test > b.psnr_test),
    });
    out
}

/// Runs the whole matrix in sequence. A failing run becomes a FAILED row;
/// the rest still run. Writes `summary.csv` and `relations.txt`.
pub fn cmd_reproduce(opts: &ReproduceOptions, mut on_done: impl FnMut(&RunOutcome)) -> Result<ReproduceSummary> {
    fs::create_dir_all(&opts.out_dir)?;
    let mut runs = Vec::new();
    for cfg in matrix_configs(opts) {
        let outcome = RunOutcome {
            name: run_name(cfg.kind, cfg.train.latent_dim),
            kind: cfg.kind,
            latents: cfg.train.latent_dim,
            result: run_experiment(&cfg).map_err(|e| e.to_string()),
        };
        on_done(&outcome);
        runs.push(outcome);
    }
    let mut summary = ReproduceSummary {
        runs,
        relations: Vec::new(),
    };
    summary.relations = expected_relations(&summary);
    fs::write(opts.out_dir.join(SUMMARY_FILE), summary.csv())?;
    fs::write(opts.out_dir.join("relations.txt"), summary.relations_text())?;
    Ok(summary)
}
