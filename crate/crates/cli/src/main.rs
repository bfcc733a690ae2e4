use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bvae_core::datasets::GeneratorKind;
use bvae_core::expcli::{self, ExperimentConfig, ReproduceOptions};
use bvae_core::textio::fmt_sig6;
use bvae_core::{Error, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bvae", version, about = "Beta-VAE factor-recovery experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Flat key=value file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct TrainFlags {
    #[arg(long)]
    latents: Option<usize>,
    #[arg(long)]
    beta_shrink_gap: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    log_every: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a factor dataset CSV.
    GenData {
        #[arg(long, default_value = "linear")]
        kind: GeneratorKind,
        #[arg(long, default_value_t = bvae_core::datasets::DEFAULT_SAMPLES)]
        n: usize,
        /// Output file (default: <out-dir>/data.csv).
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Train a beta-VAE on a dataset file.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        flags: TrainFlags,
        /// Extra iterations after the schedule ends, with β still shrinking.
        #[arg(long, default_value_t = 0)]
        continue_training: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Analyze a trained checkpoint against its dataset.
    Analyze {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        threshold: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// PCA and FastICA on a dataset file.
    Baseline {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run the full experiment matrix from seeds.
    Reproduce {
        #[arg(long, default_value_t = bvae_core::datasets::DEFAULT_SAMPLES)]
        n: usize,
        #[arg(long, default_value_t = bvae_core::betavae::LINEAR_TOTAL_ITERS)]
        linear_iters: usize,
        #[arg(long, default_value_t = bvae_core::betavae::NONLINEAR_TOTAL_ITERS)]
        nonlinear_iters: usize,
        #[command(flatten)]
        common: Common,
    },
}

fn base_config(common: &Common, kind: GeneratorKind) -> Result<ExperimentConfig> {
    let seed = common.seed.unwrap_or(0);
    let mut cfg = ExperimentConfig::new(kind, 5, seed);
    if let Some(path) = &common.config {
        cfg.apply_file(path)?;
    }
    if let Some(seed) = common.seed {
        cfg.set("seed", &seed.to_string())?;
    }
    cfg.out_dir = common.out_dir.clone();
    Ok(cfg)
}

fn apply_flags(cfg: &mut ExperimentConfig, f: &TrainFlags) {
    let t = &mut cfg.train;
    if let Some(v) = f.latents {
        t.latent_dim = v;
    }
    if let Some(v) = f.beta_shrink_gap {
        t.shrink_gap = v;
    }
    if let Some(v) = f.lr {
        t.lr = v;
    }
    if let Some(v) = f.iters {
        t.total_iters = v;
    }
    if let Some(v) = f.batch_size {
        t.batch_size = v;
    }
    if let Some(v) = f.log_every {
        t.log_every = v;
    }
}

/// Dataset kind recorded in a dataset file, so shrink-gap and iteration
/// defaults follow the data rather than the linear defaults.
fn kind_of(data: &Path) -> GeneratorKind {
    bvae_core::datasets::load(data)
        .map(|d| d.kind())
        .unwrap_or(GeneratorKind::Linear)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData { kind, n, out, common } => {
            let seed = base_config(&common, kind)?.data_seed;
            let path = out.unwrap_or_else(|| common.out_dir.join(expcli::DATA_FILE));
            expcli::cmd_gen_data(kind, n, seed, &path)?;
            println!("wrote {} ({n} rows)", path.display());
        }
        Command::Train {
            data,
            flags,
            continue_training,
            common,
        } => {
            let mut cfg = base_config(&common, kind_of(&data))?;
            apply_flags(&mut cfg, &flags);
            let (_, trace) = expcli::cmd_train(&cfg, &data, &common.out_dir, continue_training)?;
            if let Some(last) = trace.records.last() {
                println!(
                    "iter {} beta {} recon {} kl {}",
                    last.iter,
                    fmt_sig6(last.beta),
                    fmt_sig6(last.recon),
                    fmt_sig6(last.kl_total)
                );
            }
            println!("wrote {}", common.out_dir.join(expcli::CHECKPOINT_FILE).display());
        }
        Command::Analyze {
            checkpoint,
            data,
            threshold,
            common,
        } => {
            let mut cfg = base_config(&common, GeneratorKind::Linear)?;
            if let Some(t) = threshold {
                cfg.threshold = t;
            }
            let report = expcli::cmd_analyze(&cfg, &checkpoint, &data, &common.out_dir)?;
            print!("{}", report.to_text());
        }
        Command::Baseline { data, common } => {
            let cfg = base_config(&common, GeneratorKind::Linear)?;
            let report = expcli::cmd_baseline(&cfg, &data, &common.out_dir)?;
            print!("{}", report.to_text());
        }
        Command::Reproduce {
            n,
            linear_iters,
            nonlinear_iters,
            common,
        } => {
            let base = base_config(&common, GeneratorKind::Linear)?;
            let mut opts = ReproduceOptions::new(base.data_seed, common.out_dir.clone());
            opts.n = n;
            opts.linear_iters = linear_iters;
            opts.nonlinear_iters = nonlinear_iters;
            opts.base = common.config.is_some().then_some(base);
            let summary = expcli::cmd_reproduce(&opts, |o| match &o.result {
                Ok(_) => eprintln!("{}: done", o.name),
                Err(e) => eprintln!("{}: FAILED: {e}", o.name),
            })?;
            print!("{}", summary.csv());
            print!("{}", summary.relations_text());
            if summary.any_failed() {
                return Err(Error::Argument("one or more runs failed".into()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
