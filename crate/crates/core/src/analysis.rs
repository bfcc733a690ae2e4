//! Active-latent detection, correlation grids and component matching.

use std::fmt::Write as _;

use crate::baselines::{pca_fit, pca_transform};
use crate::betavae::{encode, kl_per_dim, VaeModel};
use crate::error::{Error, Result};
use crate::numkit::{pearson, Matrix};
use crate::textio::fmt_sig6;

/// Mean posterior KL (nats) above which a latent counts as active.
pub const DEFAULT_ACTIVE_THRESHOLD: f64 = 0.02;

#[derive(Clone, Debug, PartialEq)]
pub struct ActivationReport {
    pub kl_per_dim: Vec<f64>,
    pub active: Vec<usize>,
    pub threshold: f64,
}

impl ActivationReport {
    pub fn from_kl(kl_per_dim: Vec<f64>, threshold: f64) -> Self {
        let active = kl_per_dim
            .iter()
            .enumerate()
            .filter(|(_, &kl)| kl > threshold)
            .map(|(i, _)| i)
            .collect();
        Self {
            kl_per_dim,
            active,
            threshold,
        }
    }
}

pub fn detect_active(model: &VaeModel, data: &Matrix, threshold: f64) -> Result<ActivationReport> {
    if data.rows() == 0 {
        return Err(Error::InsufficientData {
            op: "detect_active",
            needed: 1,
            got: 0,
        });
    }
    let (mu, log_var) = encode(model, data)?;
    Ok(ActivationReport::from_kl(kl_per_dim(&mu, &log_var)?, threshold))
}

/// Pearson correlations between every column of `a` (rows) and `b` (columns).
/// `None` marks a pair where either column is constant.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationGrid {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub values: Vec<Option<f64>>,
}

impl CorrelationGrid {
    pub fn rows(&self) -> usize {
        self.row_labels.len()
    }

    pub fn cols(&self) -> usize {
        self.col_labels.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i * self.cols() + j]
    }

    pub fn abs_or_zero(&self, i: usize, j: usize) -> f64 {
        self.get(i, j).map_or(0.0, f64::abs)
    }

    /// Largest defined `|r|` in the grid, 0 if none.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn with_labels(mut self, rows: Vec<String>, cols: Vec<String>) -> Self {
        assert_eq!(rows.len(), self.rows());
        assert_eq!(cols.len(), self.cols());
        self.row_labels = rows;
        self.col_labels = cols;
        self
    }

    /// First column holds row labels; undefined entries are written as `NA`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("label");
        for c in &self.col_labels {
            let _ = write!(s, ",{c}");
        }
        s.push('\n');
        for i in 0..self.rows() {
            s.push_str(&self.row_labels[i]);
            for j in 0..self.cols() {
                match self.get(i, j) {
                    Some(v) => {
                        let _ = write!(s, ",{}", fmt_sig6(v));
                    }
                    None => s.push_str(",NA"),
                }
            }
            s.push('\n');
        }
        s
    }
}

pub fn labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

pub fn corr_grid(a: &Matrix, b: &Matrix) -> Result<CorrelationGrid> {
    if a.rows() != b.rows() {
        return Err(Error::Shape {
            op: "corr_grid",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let a_cols: Vec<Vec<f64>> = (0..a.cols()).map(|j| a.col(j)).collect();
    let b_cols: Vec<Vec<f64>> = (0..b.cols()).map(|j| b.col(j)).collect();
    let mut values = Vec::with_capacity(a.cols() * b.cols());
    for u in &a_cols {
        for v in &b_cols {
            values.push(match pearson(u, v) {
                Ok(r) => Some(r),
                Err(Error::UndefinedCorrelation(_)) => None,
                Err(e) => return Err(e),
            });
        }
    }
    Ok(CorrelationGrid {
        row_labels: labels("a", a.cols()),
        col_labels: labels("b", b.cols()),
        values,
    })
}

/// Maximum-weight assignment of rows to columns of a non-negative weight
/// matrix (`weights[i][j]`), each row and column used at most once. Returns
/// `assignment[i] = Some(j)` for matched rows.
pub fn max_weight_assignment(weights: &[Vec<f64>]) -> Vec<Option<usize>> {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return vec![None; rows];
    }
    if rows > cols {
        let t: Vec<Vec<f64>> = (0..cols).map(|j| (0..rows).map(|i| weights[i][j]).collect()).collect();
        let col_to_row = max_weight_assignment(&t);
        let mut out = vec![None; rows];
        for (j, r) in col_to_row.into_iter().enumerate() {
            if let Some(i) = r {
                out[i] = Some(j);
            }
        }
        return out;
    }
    // Shortest augmenting path Hungarian method on cost = -weight,
    // rows (n) <= cols (m), 1-based potentials.
    let n = rows;
    let m = cols;
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = -weights[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![None; n];
    for j in 1..=m {
        if p[j] != 0 {
            out[p[j] - 1] = Some(j - 1);
        }
    }
    out
}

/// Greedy assignment by descending weight; reference for optimality checks.
pub fn greedy_assignment(weights: &[Vec<f64>]) -> Vec<Option<usize>> {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    let mut cells: Vec<(usize, usize)> = (0..rows).flat_map(|i| (0..cols).map(move |j| (i, j))).collect();
    cells.sort_by(|&(a, b), &(c, d)| weights[c][d].total_cmp(&weights[a][b]).then((a, b).cmp(&(c, d))));
    let mut out = vec![None; rows];
    let mut col_used = vec![false; cols];
    for (i, j) in cells {
        if out[i].is_none() && !col_used[j] {
            out[i] = Some(j);
            col_used[j] = true;
        }
    }
    out
}

pub fn assignment_total(weights: &[Vec<f64>], a: &[Option<usize>]) -> f64 {
    a.iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| weights[i][j]))
        .sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchingResult {
    /// `(latent, component, |r|)` for each matched active latent, ordered by latent.
    pub pairs: Vec<(usize, usize, f64)>,
    pub unmatched_latents: Vec<usize>,
    pub unmatched_components: Vec<usize>,
    pub mean_score: f64,
}

impl MatchingResult {
    pub fn component_of(&self, latent: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.0 == latent).map(|p| p.1)
    }
}

/// Injective assignment of the `active` columns of `latents` to columns of
/// `components` maximizing total `|r|`. Undefined correlations weigh zero.
pub fn match_components(latents: &Matrix, components: &Matrix, active: &[usize]) -> Result<MatchingResult> {
    if active.is_empty() {
        return Err(Error::arg("matching needs at least one active latent"));
    }
    if let Some(&bad) = active.iter().find(|&&i| i >= latents.cols()) {
        return Err(Error::arg(format!("active latent {bad} out of range")));
    }
    let grid = corr_grid(&latents.select_cols(active), components)?;
    let weights: Vec<Vec<f64>> = (0..grid.rows())
        .map(|i| (0..grid.cols()).map(|j| grid.abs_or_zero(i, j)).collect())
        .collect();
    let assignment = max_weight_assignment(&weights);

    let mut pairs = Vec::new();
    let mut unmatched_latents = Vec::new();
    let mut used = vec![false; components.cols()];
    for (k, a) in assignment.iter().enumerate() {
        match a {
            Some(j) => {
                used[*j] = true;
                pairs.push((active[k], *j, weights[k][*j]));
            }
            None => unmatched_latents.push(active[k]),
        }
    }
    let unmatched_components = (0..components.cols()).filter(|&j| !used[j]).collect();
    let mean_score = if pairs.is_empty() {
        0.0
    } else {
        pairs.iter().map(|p| p.2).sum::<f64>() / pairs.len() as f64
    };
    Ok(MatchingResult {
        pairs,
        unmatched_latents,
        unmatched_components,
        mean_score,
    })
}

fn all_columns(m: &Matrix) -> Vec<usize> {
    (0..m.cols()).collect()
}

/// Mean matched `|r|` between the given latent columns and the PCA scores of
/// `data` with as many components as there are latents (capped at `data.cols()`).
pub fn pca_likeness(latents: &Matrix, data: &Matrix) -> Result<f64> {
    let k = latents.cols().min(data.cols());
    if k == 0 {
        return Err(Error::arg("pca_likeness needs at least one latent"));
    }
    let pca = pca_fit(data, k)?;
    let scores = pca_transform(&pca, data)?;
    Ok(match_components(latents, &scores, &all_columns(latents))?.mean_score)
}

/// Mean matched `|r|` between the given latent columns and the ground-truth factors.
pub fn ica_likeness(latents: &Matrix, factors: &Matrix) -> Result<f64> {
    if latents.cols() == 0 {
        return Err(Error::arg("ica_likeness needs at least one latent"));
    }
    Ok(match_components(latents, factors, &all_columns(latents))?.mean_score)
}
