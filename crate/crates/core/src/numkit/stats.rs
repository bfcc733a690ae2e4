use crate::error::{Error, Result};

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Unbiased sample variance.
pub fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)
}

/// Pearson correlation coefficient, clamped to `[-1, 1]`.
pub fn pearson(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Shape {
            op: "pearson",
            left: (u.len(), 1),
            right: (v.len(), 1),
        });
    }
    if u.len() < 2 {
        return Err(Error::InsufficientData {
            op: "pearson",
            needed: 2,
            got: u.len(),
        });
    }
    let mu = mean(u);
    let mv = mean(v);
    let (mut suv, mut suu, mut svv) = (0.0, 0.0, 0.0);
    for (&a, &b) in u.iter().zip(v) {
        let da = a - mu;
        let db = b - mv;
        suv += da * db;
        suu += da * da;
        svv += db * db;
    }
    // Relative to the scale of the data, so rounding noise on a constant
    // column is still treated as constant.
    let scale_u = u.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let scale_v = v.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let n = u.len() as f64;
    if suu <= n * (1e-13 * scale_u).powi(2) {
        return Err(Error::UndefinedCorrelation("first"));
    }
    if svv <= n * (1e-13 * scale_v).powi(2) {
        return Err(Error::UndefinedCorrelation("second"));
    }
    Ok((suv / (suu.sqrt() * svv.sqrt())).clamp(-1.0, 1.0))
}
