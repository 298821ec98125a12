//! Sample statistics.

use crate::error::{check_len, Result};

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

/// Population standard deviation.
pub fn std_dev(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let mu = mean(x);
    libm::sqrt(x.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / x.len() as f64)
}

pub fn is_constant(x: &[f64]) -> bool {
    x.iter().all(|v| *v == x[0])
}

/// Pearson correlation; `None` when either series is constant or shorter than 2.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    check_len("correlation series length", x.len(), y.len())?;
    if x.len() < 2 || is_constant(x) || is_constant(y) {
        return Ok(None);
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Ok(None);
    }
    Ok(Some((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0)))
}

/// Sample autocorrelation at `lag`.
pub fn autocorr(x: &[f64], lag: usize) -> Option<f64> {
    if lag >= x.len() {
        return None;
    }
    let n = x.len() - lag;
    pearson(&x[..n], &x[lag..]).ok().flatten()
}
