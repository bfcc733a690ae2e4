//! PCA and symmetric FastICA reference decompositions.

use crate::error::{Error, Result};
use crate::numkit::{covariance, eig_sym, matmul, matmul_nt, matmul_tn, numerical_rank, Matrix, RngState};

/// Eigenvalues below this fraction of the largest count as zero when
/// deciding how many dimensions can be whitened.
pub const RANK_TOL: f64 = 1e-8;
pub const ICA_MAX_ITER: usize = 500;
pub const ICA_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct PcaResult {
    pub mean: Vec<f64>,
    /// `k × d`, orthonormal rows ordered by descending variance.
    pub components: Matrix,
    pub eigenvalues: Vec<f64>,
}

pub fn pca_fit(x: &Matrix, k: usize) -> Result<PcaResult> {
    if k == 0 || k > x.cols() {
        return Err(Error::arg(format!("PCA needs 1 <= k <= {}, got {k}", x.cols())));
    }
    let cov = covariance(x)?;
    let eig = eig_sym(&cov)?;
    let idx: Vec<usize> = (0..k).collect();
    Ok(PcaResult {
        mean: x.col_means(),
        components: eig.eigenvectors.select_cols(&idx).transpose(),
        eigenvalues: eig.eigenvalues[..k].to_vec(),
    })
}

/// Scores `(x − mean) · componentsᵀ`, shape `n × k`.
pub fn pca_transform(r: &PcaResult, x: &Matrix) -> Result<Matrix> {
    if x.cols() != r.mean.len() {
        return Err(Error::Shape {
            op: "pca_transform",
            left: x.shape(),
            right: r.components.shape(),
        });
    }
    matmul_nt(&x.sub_row_vector(&r.mean), &r.components)
}

/// Maps scores back to data space.
pub fn pca_inverse(r: &PcaResult, scores: &Matrix) -> Result<Matrix> {
    let back = matmul(scores, &r.components)?;
    let neg: Vec<f64> = r.mean.iter().map(|m| -m).collect();
    Ok(back.sub_row_vector(&neg))
}

#[derive(Clone, Debug)]
pub struct Whitening {
    pub mean: Vec<f64>,
    /// `d × k`; `(x − mean) · matrix` has identity covariance.
    pub matrix: Matrix,
    pub white: Matrix,
}

pub fn whiten(x: &Matrix, k: usize) -> Result<Whitening> {
    if k == 0 || k > x.cols() {
        return Err(Error::arg(format!("whitening needs 1 <= k <= {}, got {k}", x.cols())));
    }
    let cov = covariance(x)?;
    let eig = eig_sym(&cov)?;
    let rank = numerical_rank(&eig.eigenvalues, RANK_TOL);
    if k > rank {
        return Err(Error::Rank { requested: k, rank });
    }
    let mut matrix = Matrix::zeros(x.cols(), k);
    for j in 0..k {
        let s = 1.0 / eig.eigenvalues[j].sqrt();
        for i in 0..x.cols() {
            matrix.set(i, j, eig.eigenvectors.get(i, j) * s);
        }
    }
    let mean = x.col_means();
    let white = matmul(&x.sub_row_vector(&mean), &matrix)?;
    Ok(Whitening { mean, matrix, white })
}

#[derive(Clone, Debug)]
pub struct IcaResult {
    pub mean: Vec<f64>,
    /// `d × k`.
    pub whitening: Matrix,
    /// `k × k`, orthogonal, applied after whitening.
    pub unmixing: Matrix,
    pub k: usize,
    pub converged: bool,
    pub iterations: usize,
}

impl IcaResult {
    /// Recovered sources `(x − mean) · whitening · unmixingᵀ`.
    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.mean.len() {
            return Err(Error::Shape {
                op: "ica_transform",
                left: x.shape(),
                right: self.whitening.shape(),
            });
        }
        let white = matmul(&x.sub_row_vector(&self.mean), &self.whitening)?;
        matmul_nt(&white, &self.unmixing)
    }
}

/// `(W Wᵀ)^{-1/2} W`.
fn symmetric_decorrelation(w: &Matrix) -> Result<Matrix> {
    let eig = eig_sym(&matmul_nt(w, w)?)?;
    let k = w.rows();
    let mut inv_sqrt = Matrix::zeros(k, k);
    for (j, &l) in eig.eigenvalues.iter().enumerate() {
        let s = 1.0 / l.max(f64::MIN_POSITIVE).sqrt();
        for a in 0..k {
            for b in 0..k {
                let v = inv_sqrt.get(a, b) + eig.eigenvectors.get(a, j) * s * eig.eigenvectors.get(b, j);
                inv_sqrt.set(a, b, v);
            }
        }
    }
    matmul(&inv_sqrt, w)
}

/// Symmetric fixed-point FastICA with the log-cosh contrast (`g = tanh`).
/// The initial unmixing matrix is drawn from `rng`. Running out of
/// iterations is reported through `converged`, not as an error.
pub fn fastica_fit(x: &Matrix, k: usize, max_iter: usize, tol: f64, rng: &mut RngState) -> Result<IcaResult> {
    let wh = whiten(x, k)?;
    let z = &wh.white;
    let n = z.rows() as f64;

    let mut init = Matrix::zeros(k, k);
    init.data_mut().iter_mut().for_each(|v| *v = rng.normal());
    let mut w = symmetric_decorrelation(&init)?;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < max_iter {
        iterations += 1;
        let proj = matmul_nt(z, &w)?;
        let g = proj.map(f64::tanh);
        let mut gp_mean = vec![0.0; k];
        for i in 0..g.rows() {
            for (acc, v) in gp_mean.iter_mut().zip(g.row(i)) {
                *acc += 1.0 - v * v;
            }
        }
        let mut next = matmul_tn(&g, z)?.scale(1.0 / n);
        for a in 0..k {
            let c = gp_mean[a] / n;
            for b in 0..k {
                next.set(a, b, next.get(a, b) - c * w.get(a, b));
            }
        }
        let next = symmetric_decorrelation(&next)?;
        let mut worst: f64 = 0.0;
        for a in 0..k {
            let dot: f64 = next.row(a).iter().zip(w.row(a)).map(|(p, q)| p * q).sum();
            worst = worst.max((dot.abs() - 1.0).abs());
        }
        w = next;
        if worst < tol {
            converged = true;
            break;
        }
    }

    Ok(IcaResult {
        mean: wh.mean,
        whitening: wh.matrix,
        unmixing: w,
        k,
        converged,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::{pearson, sample, Distribution};

    #[test]
    fn line_in_3d_has_one_component() {
        let mut rng = RngState::new(1);
        let t = sample(&mut rng, Distribution::StandardNormal, 500, 1).unwrap();
        let dir = Matrix::from_rows(&[[1.0, -2.0, 0.5]]);
        let x = matmul(&t, &dir).unwrap();
        let r = pca_fit(&x, 3).unwrap();
        let total: f64 = r.eigenvalues.iter().sum();
        assert!(r.eigenvalues[0] / total > 0.999999);
    }

    #[test]
    fn k_out_of_range() {
        let x = Matrix::zeros(5, 3);
        assert!(pca_fit(&x, 0).is_err());
        assert!(pca_fit(&x, 4).is_err());
    }

    #[test]
    fn mean_row_transforms_to_zero() {
        let mut rng = RngState::new(2);
        let x = sample(&mut rng, Distribution::Uniform01, 200, 4).unwrap();
        let r = pca_fit(&x, 3).unwrap();
        let m = Matrix::from_rows(&[r.mean.clone()]);
        assert!(pca_transform(&r, &m).unwrap().max_abs() < 1e-12);
        assert!(pca_transform(&r, &Matrix::zeros(1, 3)).is_err());
    }

    #[test]
    fn whitened_data_has_identity_covariance() {
        let mut rng = RngState::new(3);
        let s = sample(&mut rng, Distribution::Uniform01, 2_000, 3).unwrap();
        let a = Matrix::from_rows(&[[1.0, 0.5, 0.0, 2.0], [0.0, 1.0, -1.0, 0.3], [0.2, 0.0, 1.0, 1.0]]);
        let x = matmul(&s, &a).unwrap();
        let w = whiten(&x, 3).unwrap();
        assert!(covariance(&w.white).unwrap().max_abs_diff(&Matrix::identity(3)) < 1e-6);
        match whiten(&x, 4) {
            Err(Error::Rank { requested: 4, rank: 3 }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn already_white_data_stays_white() {
        let mut rng = RngState::new(4);
        let x = sample(&mut rng, Distribution::StandardNormal, 5_000, 2).unwrap();
        let w = whiten(&x, 2).unwrap();
        assert!(covariance(&w.white).unwrap().max_abs_diff(&Matrix::identity(2)) < 1e-6);
    }

    #[test]
    fn two_uniform_sources_recovered() {
        let mut rng = RngState::new(5);
        let s = sample(&mut rng, Distribution::Uniform01, 5_000, 2).unwrap();
        let mix = Matrix::from_rows(&[[1.0, 0.6], [0.4, 1.0]]);
        let x = matmul(&s, &mix).unwrap();
        let r = fastica_fit(&x, 2, ICA_MAX_ITER, ICA_TOL, &mut rng).unwrap();
        assert!(r.converged);
        let rec = r.transform(&x).unwrap();
        for src in 0..2 {
            let best = (0..2)
                .map(|c| pearson(&s.col(src), &rec.col(c)).unwrap().abs())
                .fold(0.0, f64::max);
            assert!(best > 0.95, "source {src}: {best}");
        }
        assert!(covariance(&rec).unwrap().max_abs_diff(&Matrix::identity(2)) < 1e-6);
    }

    #[test]
    fn gaussian_sources_do_not_error() {
        let mut rng = RngState::new(6);
        let x = sample(&mut rng, Distribution::StandardNormal, 2_000, 3).unwrap();
        let r = fastica_fit(&x, 3, 50, ICA_TOL, &mut rng).unwrap();
        assert!(r.iterations <= 50);
        assert_eq!(r.unmixing.shape(), (3, 3));
    }
}
