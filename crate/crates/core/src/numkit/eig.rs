use super::matrix::Matrix;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Eigenpairs of a symmetric matrix.
#[derive(Clone, Debug)]
pub struct EigResult {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// Column `i` is the unit eigenvector for `eigenvalues[i]`; its
    /// largest-magnitude entry is positive.
    pub eigenvectors: Matrix,
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
pub fn eig_sym(a: &Matrix) -> Result<EigResult> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::Shape {
            op: "eig_sym",
            left: a.shape(),
            right: a.shape(),
        });
    }
    let mut max_asym: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            max_asym = max_asym.max((a.get(i, j) - a.get(j, i)).abs());
        }
    }
    if max_asym > 1e-10 * a.max_abs().max(1.0) {
        return Err(Error::NotSymmetric {
            max_asymmetry: max_asym,
        });
    }

    let mut m = a.clone();
    let mut v = Matrix::identity(n);
    let total: f64 = m.frobenius_sq();

    for _sweep in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m.get(i, j).powi(2))
            .sum();
        if off <= f64::EPSILON.powi(2) * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut m, &mut v, p, q, c, s);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.get(j, j).total_cmp(&m.get(i, i)));
    let eigenvalues = order.iter().map(|&i| m.get(i, i)).collect();
    let mut eigenvectors = v.select_cols(&order);
    for j in 0..n {
        let mut best = 0;
        for i in 1..n {
            if eigenvectors.get(i, j).abs() > eigenvectors.get(best, j).abs() {
                best = i;
            }
        }
        if eigenvectors.get(best, j) < 0.0 {
            for i in 0..n {
                eigenvectors.set(i, j, -eigenvectors.get(i, j));
            }
        }
    }
    Ok(EigResult {
        eigenvalues,
        eigenvectors,
    })
}

/// Applies the rotation `Jᵀ m J` in the (p, q) plane and accumulates `v ← v J`.
fn rotate(m: &mut Matrix, v: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let n = m.rows();
    for k in 0..n {
        let mkp = m.get(k, p);
        let mkq = m.get(k, q);
        m.set(k, p, c * mkp - s * mkq);
        m.set(k, q, s * mkp + c * mkq);
    }
    for k in 0..n {
        let mpk = m.get(p, k);
        let mqk = m.get(q, k);
        m.set(p, k, c * mpk - s * mqk);
        m.set(q, k, s * mpk + c * mqk);
    }
    m.set(p, q, 0.0);
    m.set(q, p, 0.0);
    for k in 0..n {
        let vkp = v.get(k, p);
        let vkq = v.get(k, q);
        v.set(k, p, c * vkp - s * vkq);
        v.set(k, q, s * vkp + c * vkq);
    }
}

/// Number of eigenvalues above `rel_tol` times the largest one.
pub fn numerical_rank(eigenvalues: &[f64], rel_tol: f64) -> usize {
    let top = eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    if top == 0.0 {
        return 0;
    }
    eigenvalues.iter().filter(|&&l| l > rel_tol * top).count()
}
