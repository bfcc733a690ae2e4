//! One end-to-end run: data, training, analysis, artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Duration;

use super::config::ExperimentConfig;
use super::svg::scatter_lattice;
use crate::analysis::{
    corr_grid, detect_active, labels, match_components, pca_likeness, ica_likeness, ActivationReport,
    CorrelationGrid, MatchingResult,
};
use crate::baselines::{fastica_fit, pca_fit, pca_transform};
use crate::betavae::{encode, mean_predictor_psnr, psnr, reconstruct, split_for, VaeModel};
use crate::datasets::{FactorDataset, GeneratorKind};
use crate::error::Result;
use crate::numkit::{Matrix, RngState};
use crate::textio::fmt_sig6;

const STREAM_ICA: u64 = 5;
const MAX_SVG_ROWS: usize = 8;

pub struct Baselines {
    pub pca_scores: Matrix,
    pub ica_sources: Matrix,
    pub ica_converged: bool,
    pub ica_iterations: usize,
}

/// PCA scores and ICA sources of the observations, fitted on the full dataset.
pub fn fit_baselines(cfg: &ExperimentConfig, ds: &FactorDataset) -> Result<Baselines> {
    let x = &ds.observations;
    let pca = pca_fit(x, cfg.pca_components)?;
    let pca_scores = pca_transform(&pca, x)?;
    let mut rng = RngState::new(cfg.data_seed).split(STREAM_ICA);
    let ica = fastica_fit(x, cfg.ica_components, cfg.ica_max_iter, cfg.ica_tol, &mut rng)?;
    let ica_sources = ica.transform(x)?;
    Ok(Baselines {
        pca_scores,
        ica_sources,
        ica_converged: ica.converged,
        ica_iterations: ica.iterations,
    })
}

#[derive(Clone, Debug)]
pub struct BaselineReport {
    pub kind: GeneratorKind,
    pub pca_vs_y: CorrelationGrid,
    pub ica_vs_y: CorrelationGrid,
    pub pca_max_abs: f64,
    pub ica_max_abs: f64,
    pub ica_converged: bool,
}

pub fn baseline_report(cfg: &ExperimentConfig, ds: &FactorDataset) -> Result<(BaselineReport, Baselines)> {
    let b = fit_baselines(cfg, ds)?;
    let y_labels = labels("y", ds.factors.cols());
    let pca_vs_y = corr_grid(&b.pca_scores, &ds.factors)?.with_labels(labels("pc", b.pca_scores.cols()), y_labels.clone());
    let ica_vs_y = corr_grid(&b.ica_sources, &ds.factors)?.with_labels(labels("ic", b.ica_sources.cols()), y_labels);
    let report = BaselineReport {
        kind: ds.kind(),
        pca_max_abs: pca_vs_y.max_abs(),
        ica_max_abs: ica_vs_y.max_abs(),
        ica_converged: b.ica_converged,
        pca_vs_y,
        ica_vs_y,
    };
    Ok((report, b))
}

impl BaselineReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "dataset: {}", self.kind);
        let _ = writeln!(s, "pca_max_abs_r: {}", fmt_sig6(self.pca_max_abs));
        let _ = writeln!(s, "ica_max_abs_r: {}", fmt_sig6(self.ica_max_abs));
        let _ = writeln!(s, "ica_converged: {}", self.ica_converged);
        s
    }

    pub fn write(&self, dir: &Path, ds: &FactorDataset, b: &Baselines) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("baseline.txt"), self.to_text())?;
        fs::write(dir.join("grid_pca_y.csv"), self.pca_vs_y.to_csv())?;
        fs::write(dir.join("grid_ica_y.csv"), self.ica_vs_y.to_csv())?;
        let y_labels = labels("y", ds.factors.cols());
        fs::write(
            dir.join("scatter_pca_y.svg"),
            scatter_lattice("PCA components vs factors", &b.pca_scores, &self.pca_vs_y.row_labels, &ds.factors, &y_labels),
        )?;
        fs::write(
            dir.join("scatter_ica_y.svg"),
            scatter_lattice("ICA components vs factors", &b.ica_sources, &self.ica_vs_y.row_labels, &ds.factors, &y_labels),
        )?;
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub activation: ActivationReport,
    pub latents_vs_y: CorrelationGrid,
    pub latents_vs_pca: CorrelationGrid,
    pub latents_vs_ica: CorrelationGrid,
    /// `None` when no latent is active.
    pub match_y: Option<MatchingResult>,
    pub match_pca: Option<MatchingResult>,
    pub match_ica: Option<MatchingResult>,
    pub psnr_train: f64,
    pub psnr_test: f64,
    pub psnr_mean_predictor: f64,
    /// `max − min` of the held-out observations.
    pub psnr_peak: f64,
    pub pca_likeness: Option<f64>,
    pub ica_likeness: Option<f64>,
    pub ica_converged: bool,
    pub notes: Vec<String>,
    pub wall_clock: Option<Duration>,
}

/// Posterior means on `ds`, grids, matchings and PSNR. Activation is
/// measured on the held-out split.
pub fn analyze_run(cfg: &ExperimentConfig, model: &VaeModel, ds: &FactorDataset) -> Result<(RunReport, Matrix, Baselines)> {
    let parts = split_for(&cfg.train, ds)?;
    let x = &ds.observations;
    let (mu, _) = encode(model, x)?;
    let activation = detect_active(model, &parts.test.observations, cfg.threshold)?;
    let b = fit_baselines(cfg, ds)?;

    let z_labels = labels("z", mu.cols());
    let latents_vs_y = corr_grid(&mu, &ds.factors)?.with_labels(z_labels.clone(), labels("y", ds.factors.cols()));
    let latents_vs_pca = corr_grid(&mu, &b.pca_scores)?.with_labels(z_labels.clone(), labels("pc", b.pca_scores.cols()));
    let latents_vs_ica = corr_grid(&mu, &b.ica_sources)?.with_labels(z_labels, labels("ic", b.ica_sources.cols()));

    let mut notes = Vec::new();
    let active = &activation.active;
    let (match_y, match_pca, match_ica, pl, il) = if active.is_empty() {
        notes.push("no active latents; matchings and likeness undefined".to_string());
        (None, None, None, None, None)
    } else {
        let z = mu.select_cols(active);
        (
            Some(match_components(&mu, &ds.factors, active)?),
            Some(match_components(&mu, &b.pca_scores, active)?),
            Some(match_components(&mu, &b.ica_sources, active)?),
            Some(pca_likeness(&z, x)?),
            Some(ica_likeness(&z, &ds.factors)?),
        )
    };
    if !b.ica_converged {
        notes.push(format!("FastICA did not converge in {} iterations", b.ica_iterations));
    }

    let mut rng = RngState::new(cfg.train.seed);
    let train_x = &parts.train.observations;
    let test_x = &parts.test.observations;
    let psnr_train = psnr(train_x, &reconstruct(model, train_x, true, &mut rng)?)?;
    let psnr_test = psnr(test_x, &reconstruct(model, test_x, true, &mut rng)?)?;
    let psnr_mean_predictor = mean_predictor_psnr(test_x)?;
    let (lo, hi) = test_x.min_max();

    let report = RunReport {
        config: cfg.clone(),
        activation,
        latents_vs_y,
        latents_vs_pca,
        latents_vs_ica,
        match_y,
        match_pca,
        match_ica,
        psnr_train,
        psnr_test,
        psnr_mean_predictor,
        psnr_peak: hi - lo,
        pca_likeness: pl,
        ica_likeness: il,
        ica_converged: b.ica_converged,
        notes,
        wall_clock: None,
    };
    Ok((report, mu, b))
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_sig6).unwrap_or_else(|| "NA".to_string())
}

fn matching_text(s: &mut String, name: &str, m: &Option<MatchingResult>, prefix: &str) {
    let Some(m) = m else {
        let _ = writeln!(s, "  {name}: NA");
        return;
    };
    let _ = writeln!(s, "  {name}: mean_abs_r={}", fmt_sig6(m.mean_score));
    for &(l, c, r) in &m.pairs {
        let _ = writeln!(s, "    z{l} -> {prefix}{c} |r|={}", fmt_sig6(r));
    }
    if !m.unmatched_latents.is_empty() {
        let u: Vec<String> = m.unmatched_latents.iter().map(|l| format!("z{l}")).collect();
        let _ = writeln!(s, "    unmatched latents: {}", u.join(" "));
    }
}

impl RunReport {
    pub fn active_count(&self) -> usize {
        self.activation.active.len()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str("[config]\n");
        s.push_str(&self.config.to_text());
        s.push_str("[activation]\n");
        let _ = writeln!(s, "threshold={}", fmt_sig6(self.activation.threshold));
        let act: Vec<String> = self.activation.active.iter().map(|i| format!("z{i}")).collect();
        let _ = writeln!(s, "active_count={}", act.len());
        let _ = writeln!(s, "active={}", act.join(" "));
        for &i in &self.activation.active {
            let _ = writeln!(s, "kl_z{i}={}", fmt_sig6(self.activation.kl_per_dim[i]));
        }
        s.push_str("[matching]\n");
        matching_text(&mut s, "factors", &self.match_y, "y");
        matching_text(&mut s, "pca", &self.match_pca, "pc");
        matching_text(&mut s, "ica", &self.match_ica, "ic");
        s.push_str("[scores]\n");
        let _ = writeln!(s, "pca_likeness={}", opt(self.pca_likeness));
        let _ = writeln!(s, "ica_likeness={}", opt(self.ica_likeness));
        let _ = writeln!(s, "psnr_train={}", fmt_sig6(self.psnr_train));
        let _ = writeln!(s, "psnr_test={}", fmt_sig6(self.psnr_test));
        let _ = writeln!(s, "psnr_mean_predictor={}", fmt_sig6(self.psnr_mean_predictor));
        let _ = writeln!(s, "psnr_peak={} (held-out max - min)", fmt_sig6(self.psnr_peak));
        let _ = writeln!(s, "ica_converged={}", self.ica_converged);
        if !self.notes.is_empty() {
            s.push_str("[notes]\n");
            for n in &self.notes {
                let _ = writeln!(s, "{n}");
            }
        }
        if let Some(d) = self.wall_clock {
            let _ = writeln!(s, "[timing]\nwall_clock_s={:.1}", d.as_secs_f64());
        }
        s
    }

    /// One summary CSV row without the leading run name.
    pub fn summary_fields(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.config.kind,
            self.config.train.latent_dim,
            self.active_count(),
            opt(self.pca_likeness),
            opt(self.ica_likeness),
            fmt_sig6(self.psnr_test)
        )
    }

    /// Writes `report.txt`, `config.txt`, the three grid CSVs and their SVG lattices.
    pub fn write(&self, dir: &Path, mu: &Matrix, ds: &FactorDataset, b: &Baselines) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.txt"), self.to_text())?;
        fs::write(dir.join("config.txt"), self.config.to_text())?;
        fs::write(dir.join("grid_latents_y.csv"), self.latents_vs_y.to_csv())?;
        fs::write(dir.join("grid_latents_pca.csv"), self.latents_vs_pca.to_csv())?;
        fs::write(dir.join("grid_latents_ica.csv"), self.latents_vs_ica.to_csv())?;

        let rows = svg_rows(&self.activation);
        let z = mu.select_cols(&rows);
        let z_labels: Vec<String> = rows
            .iter()
            .map(|&i| {
                let tag = if self.activation.active.contains(&i) { "" } else { " (inactive)" };
                format!("z{i}{tag}")
            })
            .collect();
        let panels = [
            ("scatter_latents_y.svg", "Latent means vs factors", &ds.factors, "y"),
            ("scatter_latents_pca.svg", "Latent means vs PCA components", &b.pca_scores, "pc"),
            ("scatter_latents_ica.svg", "Latent means vs ICA components", &b.ica_sources, "ic"),
        ];
        for (file, title, cols, prefix) in panels {
            fs::write(dir.join(file), scatter_lattice(title, &z, &z_labels, cols, &labels(prefix, cols.cols())))?;
        }
        Ok(())
    }
}

/// Active latents followed by the first inactive one, capped.
fn svg_rows(a: &ActivationReport) -> Vec<usize> {
    let mut rows: Vec<usize> = a.active.iter().copied().take(MAX_SVG_ROWS - 1).collect();
    if let Some(i) = (0..a.kl_per_dim.len()).find(|i| !a.active.contains(i)) {
        rows.push(i);
    }
    rows
}
