//! Small statistics helpers: Kolmogorov–Smirnov distance, least squares.

use crate::{Error, Result};

/// Two-sided Kolmogorov–Smirnov distance between the empirical distribution
/// of `sample` and the continuous CDF `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut xs: Vec<f64> = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    ks_statistic_sorted(&xs, cdf)
}

/// As [`ks_statistic`] for an ascending sample.
pub fn ks_statistic_sorted<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        // treat ties as a single jump
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let f = cdf(sorted[i]);
        d = d.max((f - i as f64 / n).abs()).max(((j + 1) as f64 / n - f).abs());
        i = j + 1;
    }
    d.min(1.0)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Result of a linear least-squares fit `y ≈ X·coef`.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub coef: Vec<f64>,
    pub stderr: Vec<f64>,
    pub r2: f64,
    pub residual_rms: f64,
    /// 2-norm condition number of the column-normalised design matrix.
    pub condition: f64,
}

/// Ordinary least squares by modified Gram–Schmidt QR.
///
/// `columns` holds the regressors column by column; all must have the length
/// of `y`.
pub fn least_squares(columns: &[Vec<f64>], y: &[f64]) -> Result<LeastSquares> {
    let k = columns.len();
    let n = y.len();
    if k == 0 || n <= k {
        return Err(Error::DegenerateFit(format!("{n} observations for {k} regressors")));
    }
    let mut q: Vec<Vec<f64>> = columns.to_vec();
    let mut r = vec![vec![0.0; k]; k];
    for j in 0..k {
        for i in 0..j {
            let dot: f64 = q[i].iter().zip(&q[j]).map(|(a, b)| a * b).sum();
            r[i][j] = dot;
            let qi = q[i].clone();
            q[j].iter_mut().zip(&qi).for_each(|(v, u)| *v -= dot * u);
        }
        let norm = q[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        let scale = columns[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= 1e-13 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::DegenerateFit(format!("regressor {j} is collinear")));
        }
        r[j][j] = norm;
        q[j].iter_mut().for_each(|v| *v /= norm);
    }
    let qty: Vec<f64> = q.iter().map(|col| col.iter().zip(y).map(|(a, b)| a * b).sum()).collect();
    let mut coef = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|j| r[i][j] * coef[j]).sum();
        coef[i] = (qty[i] - s) / r[i][i];
    }
    let fitted: Vec<f64> = (0..n).map(|t| (0..k).map(|j| columns[j][t] * coef[j]).sum()).collect();
    let ss_res: f64 = y.iter().zip(&fitted).map(|(a, b)| (a - b).powi(2)).sum();
    let ybar = mean(y);
    let ss_tot: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) } else { 1.0 };
    let s2 = ss_res / (n - k) as f64;
    // (XᵀX)⁻¹ = R⁻¹R⁻ᵀ
    let rinv = upper_inverse(&r);
    let stderr = (0..k).map(|i| (s2 * (i..k).map(|j| rinv[i][j] * rinv[i][j]).sum::<f64>()).sqrt()).collect();
    Ok(LeastSquares { coef, stderr, r2, residual_rms: (ss_res / n as f64).sqrt(), condition: normalised_condition(columns) })
}

fn upper_inverse(r: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = r.len();
    let mut inv = vec![vec![0.0; k]; k];
    for j in 0..k {
        inv[j][j] = 1.0 / r[j][j];
        for i in (0..j).rev() {
            let s: f64 = (i + 1..=j).map(|m| r[i][m] * inv[m][j]).sum();
            inv[i][j] = -s / r[i][i];
        }
    }
    inv
}

fn normalised_condition(columns: &[Vec<f64>]) -> f64 {
    let k = columns.len();
    let norms: Vec<f64> = columns.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    let mut gram = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            let dot: f64 = columns[i].iter().zip(&columns[j]).map(|(a, b)| a * b).sum();
            gram[i * k + j] = dot / (norms[i] * norms[j]);
        }
    }
    match crate::speclin::SymmetricMatrix::new(k.max(2), pad(&gram, k)) {
        Ok(m) => {
            let ev = crate::speclin::eigvalsh(&m);
            let ev = &ev[..k];
            let hi = ev.iter().cloned().fold(f64::MIN, f64::max);
            let lo = ev.iter().cloned().fold(f64::MAX, f64::min);
            if lo <= 0.0 {
                f64::INFINITY
            } else {
                (hi / lo).sqrt()
            }
        }
        Err(_) => f64::INFINITY,
    }
}

// a 1×1 Gram matrix is padded to 2×2 with a unit eigenvalue
fn pad(gram: &[f64], k: usize) -> Vec<f64> {
    if k >= 2 {
        gram.to_vec()
    } else {
        vec![gram[0], 0.0, 0.0, 1.0]
    }
}

/// Simple linear regression `y ≈ intercept + slope·x`.
#[derive(Debug, Clone, Copy)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r2: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let n = x.len();
    if n < 3 || y.len() != n {
        return Err(Error::DegenerateFit("line fit needs at least 3 matched points".into()));
    }
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateFit("abscissae are all equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) } else { 1.0 };
    Ok(LineFit { slope, intercept, slope_stderr: (ss_res / (n - 2) as f64 / sxx).sqrt(), r2 })
}
