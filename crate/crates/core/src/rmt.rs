//! Marchenko–Pastur law, MP fits, bulk detection and the λ-map.
//!
//! The aspect ratio `q` is always (number of variables)/(number of
//! observations): a Wishart matrix built from `p` observations of `n`
//! variables has `q = n/p`. For `q > 1` the law has an atom of mass
//! `1 − 1/q` at zero, which [`MpParams::cdf`] includes; [`MpParams::density`]
//! is the continuous part only.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::{quad, stats, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MpParams {
    pub sigma2: f64,
    pub q: f64,
}

fn cdf_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| quad::gauss_legendre(64))
}

impl MpParams {
    pub fn new(sigma2: f64, q: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite() && q > 0.0 && q.is_finite()) {
            return Err(Error::InvalidArgument(format!("MP parameters need sigma2 > 0 and q > 0 (got {sigma2}, {q})")));
        }
        Ok(Self { sigma2, q })
    }

    /// Law of an `n`-variable Wishart matrix from `p` observations of
    /// variance `sigma2`; the dual "observations over variables" convention
    /// corresponds to `q = 1/ratio`.
    pub fn for_wishart(sigma2: f64, n: usize, p: usize) -> Result<Self> {
        Self::new(sigma2, n as f64 / p as f64)
    }

    pub fn edges(&self) -> (f64, f64) {
        mp_edges(*self)
    }

    pub fn density(&self, x: f64) -> f64 {
        mp_density(x, *self)
    }

    /// Distribution function, including the atom at zero when q > 1.
    pub fn cdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.edges();
        let atom = if self.q > 1.0 { 1.0 - 1.0 / self.q } else { 0.0 };
        if x < 0.0 || (x < lo && atom == 0.0) {
            return 0.0;
        }
        if x <= lo {
            return atom;
        }
        if x >= hi {
            return 1.0;
        }
        // x = c − r cos θ turns the square-root edges into a smooth integrand
        let c = 0.5 * (lo + hi);
        let r = 0.5 * (hi - lo);
        let theta = ((c - x) / r).clamp(-1.0, 1.0).acos();
        let norm = 2.0 * std::f64::consts::PI * self.sigma2 * self.q;
        let f = |t: f64| {
            let s = t.sin();
            r * r * s * s / (norm * (c - r * t.cos()))
        };
        (atom + quad::fixed(f, 0.0, theta, cdf_rule())).clamp(0.0, 1.0)
    }

    /// The `u`-quantile of the law.
    pub fn quantile(&self, u: f64) -> f64 {
        let (lo, hi) = self.edges();
        let (mut a, mut b) = (lo, hi);
        if u <= self.cdf(lo) {
            return if self.q > 1.0 { 0.0 } else { lo };
        }
        for _ in 0..100 {
            let m = 0.5 * (a + b);
            if self.cdf(m) < u {
                a = m;
            } else {
                b = m;
            }
            if b - a <= 1e-15 * hi {
                break;
            }
        }
        0.5 * (a + b)
    }
}

/// x_± = σ²(1 ± √q)².
pub fn mp_edges(params: MpParams) -> (f64, f64) {
    let s = params.q.sqrt();
    (params.sigma2 * (1.0 - s).powi(2), params.sigma2 * (1.0 + s).powi(2))
}

/// Continuous part of the Marchenko–Pastur density.
pub fn mp_density(x: f64, params: MpParams) -> f64 {
    let (lo, hi) = mp_edges(params);
    if x <= lo || x >= hi || x <= 0.0 {
        return 0.0;
    }
    ((hi - x) * (x - lo)).sqrt() / (2.0 * std::f64::consts::PI * params.sigma2 * params.q * x)
}

/// Deterministic "sample" of `n` eigenvalues placed at the MP quantiles
/// (k + ½)/n, returned in descending order.
pub fn mp_quantile_spectrum(params: MpParams, n: usize) -> Vec<f64> {
    (0..n).rev().map(|k| params.quantile((k as f64 + 0.5) / n as f64)).collect()
}

/// Kolmogorov–Smirnov distance between a spectrum and an MP law.
pub fn ks_distance(eigenvalues: &[f64], params: MpParams) -> f64 {
    stats::ks_statistic(eigenvalues, |x| params.cdf(x))
}

const GRID_POINTS: usize = 256;

fn sorted_ascending(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Mean squared difference between the empirical CDF and the MP CDF on 256
/// equally spaced points spanning the spectrum.
pub fn cdf_objective(eigenvalues: &[f64], params: MpParams) -> f64 {
    objective_sorted(&sorted_ascending(eigenvalues), params)
}

fn objective_sorted(sorted: &[f64], params: MpParams) -> f64 {
    let lo = sorted[0];
    let hi = sorted[sorted.len() - 1];
    let n = sorted.len() as f64;
    let mut idx = 0;
    let mut acc = 0.0;
    for g in 0..GRID_POINTS {
        let x = lo + (hi - lo) * g as f64 / (GRID_POINTS - 1) as f64;
        while idx < sorted.len() && sorted[idx] <= x {
            idx += 1;
        }
        let d = idx as f64 / n - params.cdf(x);
        acc += d * d;
    }
    acc / GRID_POINTS as f64
}

fn check_fit_input(eigenvalues: &[f64], min_len: usize) -> Result<()> {
    if eigenvalues.len() < min_len {
        return Err(Error::InvalidArgument(format!("MP fit needs at least {min_len} eigenvalues, got {}", eigenvalues.len())));
    }
    if eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite eigenvalue".into()));
    }
    let first = eigenvalues[0];
    if eigenvalues.iter().all(|&v| v == first) {
        return Err(Error::DegenerateFit("all eigenvalues are equal".into()));
    }
    Ok(())
}

/// Fits an MP law to a spectrum.
///
/// With `q_fixed`, σ² is the mean eigenvalue (two eigenvalues suffice). Otherwise (σ², q) minimise
/// [`cdf_objective`], searched by Nelder–Mead in (ln σ², ln q).
pub fn fit_mp(eigenvalues: &[f64], q_fixed: Option<f64>) -> Result<MpParams> {
    check_fit_input(eigenvalues, if q_fixed.is_some() { 2 } else { 32 })?;
    let mean = stats::mean(eigenvalues);
    if mean <= 0.0 {
        return Err(Error::DegenerateFit(format!("mean eigenvalue {mean} is not positive")));
    }
    if let Some(q) = q_fixed {
        return MpParams::new(mean, q);
    }
    let sorted = sorted_ascending(eigenvalues);
    let var = eigenvalues.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / eigenvalues.len() as f64;
    let q0 = (var / (mean * mean)).clamp(1e-3, 10.0);
    let objective = |p: &[f64]| {
        let (s2, q) = (p[0].exp(), p[1].exp());
        if !(s2.is_finite() && q.is_finite() && q > 0.0 && q < 1e3) {
            return f64::INFINITY;
        }
        objective_sorted(&sorted, MpParams { sigma2: s2, q })
    };
    let best = nelder_mead(objective, &[mean.ln(), q0.ln()], 0.2, 1e-12, 400);
    MpParams::new(best[0].exp(), best[1].exp())
}

/// MP fit to the bulk after removing the `n_outliers` largest eigenvalues.
///
/// σ² of the bulk conserves total trace, σ²_bulk = (Σ all − Σ removed)/(N − n_outliers);
/// q is either fixed or refit by golden-section search on [`cdf_objective`].
pub fn fit_rescaled_mp(eigenvalues: &[f64], n_outliers: usize, q_fixed: Option<f64>) -> Result<MpParams> {
    if n_outliers == 0 {
        return fit_mp(eigenvalues, q_fixed);
    }
    check_fit_input(eigenvalues, if q_fixed.is_some() { 2 } else { 32 })?;
    if 2 * n_outliers >= eigenvalues.len() {
        return Err(Error::InvalidArgument(format!("{n_outliers} outliers out of {} eigenvalues", eigenvalues.len())));
    }
    let sorted = sorted_ascending(eigenvalues);
    let bulk = &sorted[..sorted.len() - n_outliers];
    let total: f64 = eigenvalues.iter().sum();
    let removed: f64 = sorted[sorted.len() - n_outliers..].iter().sum();
    let sigma2 = (total - removed) / bulk.len() as f64;
    if sigma2 <= 0.0 {
        return Err(Error::DegenerateFit(format!("bulk variance {sigma2} is not positive")));
    }
    if bulk.iter().all(|&v| v == bulk[0]) {
        return Err(Error::DegenerateFit("all bulk eigenvalues are equal".into()));
    }
    if let Some(q) = q_fixed {
        return MpParams::new(sigma2, q);
    }
    let f = |lnq: f64| objective_sorted(bulk, MpParams { sigma2, q: lnq.exp() });
    let lnq = golden_section(f, (1e-3f64).ln(), (20.0f64).ln(), 1e-10);
    MpParams::new(sigma2, lnq.exp())
}

/// Default outlier count: eigenvalues strictly above the fitted upper edge.
pub fn count_above_edge(eigenvalues: &[f64], params: MpParams) -> usize {
    let (_, hi) = params.edges();
    eigenvalues.iter().filter(|&&x| x > hi).count()
}

fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

pub(crate) fn nelder_mead<F: Fn(&[f64]) -> f64>(f: F, start: &[f64], step: f64, ftol: f64, max_iter: usize) -> Vec<f64> {
    let n = start.len();
    let mut simplex: Vec<Vec<f64>> = vec![start.to_vec()];
    for i in 0..n {
        let mut p = start.to_vec();
        p[i] += step;
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| f(p)).collect();
    for _ in 0..max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();
        if (values[n] - values[0]).abs() <= ftol * (values[0].abs() + ftol) {
            break;
        }
        let centroid: Vec<f64> = (0..n).map(|k| simplex[..n].iter().map(|p| p[k]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|k| centroid[k] + t * (simplex[n][k] - centroid[k])).collect() };
        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < values[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
        } else {
            let (xc, fc) = if fr < values[n] {
                let x = along(-0.5);
                let v = f(&x);
                (x, v)
            } else {
                let x = along(0.5);
                let v = f(&x);
                (x, v)
            };
            if fc < values[n].min(fr) {
                simplex[n] = xc;
                values[n] = fc;
            } else {
                for i in 1..=n {
                    simplex[i] = (0..n).map(|k| simplex[0][k] + 0.5 * (simplex[i][k] - simplex[0][k])).collect();
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }
    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
    simplex[best].clone()
}

/// Outcome of [`detect_bulk_cutoff`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BulkCutoff {
    /// Eigenvalues with index below this are spikes.
    pub index: usize,
    /// Set when no index separates large gaps from small ones; `index` is 0.
    pub no_gap_structure: bool,
}

/// Separates isolated spikes from the continuous bulk.
///
/// Returns the smallest index `i` such that every consecutive gap above it
/// exceeds κ·W/N and every gap from `i` on is at most κ·W/N, where W is the
/// spectral width. The bulk keeps at least two eigenvalues.
pub fn detect_bulk_cutoff(eigenvalues: &[f64], kappa: f64) -> Result<BulkCutoff> {
    let n = eigenvalues.len();
    if n < 8 {
        return Err(Error::InvalidArgument(format!("cutoff detection needs at least 8 eigenvalues, got {n}")));
    }
    if !(kappa > 0.0) {
        return Err(Error::InvalidArgument(format!("kappa must be positive, got {kappa}")));
    }
    if eigenvalues.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument("eigenvalues must be sorted descending".into()));
    }
    let width = eigenvalues[0] - eigenvalues[n - 1];
    let threshold = kappa * width / n as f64;
    let large: Vec<bool> = eigenvalues.windows(2).map(|w| w[0] - w[1] > threshold).collect();
    let leading = large.iter().take_while(|&&b| b).count();
    let rest_small = large[leading..].iter().all(|&b| !b);
    if rest_small && leading <= n - 2 {
        Ok(BulkCutoff { index: leading, no_gap_structure: false })
    } else {
        Ok(BulkCutoff { index: 0, no_gap_structure: true })
    }
}

/// How the lower edge x₋ of the λ-map was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowerEdgeSource {
    MpFit,
    SmallestGap,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BulkSpectrum {
    pub bulk_eigenvalues: Vec<f64>,
    pub x_plus: f64,
    pub x_minus: f64,
    pub cutoff_index: usize,
    pub lower_edge_source: LowerEdgeSource,
}

impl BulkSpectrum {
    /// Bulk of a descending spectrum from `cutoff_index` on.
    ///
    /// x₊ is the largest bulk eigenvalue. x₋ is `fitted_lower_edge` when it
    /// lies strictly below the smallest bulk eigenvalue, otherwise the
    /// smallest eigenvalue minus the smallest positive consecutive gap.
    pub fn new(eigenvalues: &[f64], cutoff_index: usize, fitted_lower_edge: Option<f64>) -> Result<Self> {
        if eigenvalues.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument("eigenvalues must be sorted descending".into()));
        }
        if cutoff_index + 2 > eigenvalues.len() {
            return Err(Error::InvalidArgument(format!(
                "cutoff index {cutoff_index} leaves fewer than 2 bulk eigenvalues out of {}",
                eigenvalues.len()
            )));
        }
        let bulk = eigenvalues[cutoff_index..].to_vec();
        let x_plus = bulk[0];
        let x_min = *bulk.last().unwrap();
        let (x_minus, source) = match fitted_lower_edge {
            Some(lo) if lo < x_min && lo.is_finite() => (lo, LowerEdgeSource::MpFit),
            _ => {
                let gap = bulk.windows(2).map(|w| w[0] - w[1]).filter(|&g| g > 0.0).fold(f64::INFINITY, f64::min);
                if !gap.is_finite() {
                    return Err(Error::DegenerateFit("bulk eigenvalues are all equal".into()));
                }
                (x_min - gap, LowerEdgeSource::SmallestGap)
            }
        };
        Ok(Self { bulk_eigenvalues: bulk, x_plus, x_minus, cutoff_index, lower_edge_source: source })
    }

    pub fn len(&self) -> usize {
        self.bulk_eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bulk_eigenvalues.is_empty()
    }
}

/// Kinetic rates λ_μ ascending; index μ matches the μ-th largest bulk eigenvalue.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KineticSpectrum {
    lambdas: Vec<f64>,
    /// (x₋, x₊) of the map that produced the rates, if any.
    edges: Option<(f64, f64)>,
}

impl KineticSpectrum {
    /// Rates given directly; they are sorted ascending.
    pub fn from_lambdas(mut lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::InvalidArgument("empty kinetic spectrum".into()));
        }
        if let Some(i) = lambdas.iter().position(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::Domain(format!("rate {} at index {i} is not finite and nonnegative", lambdas[i])));
        }
        lambdas.sort_by(f64::total_cmp);
        Ok(Self { lambdas, edges: None })
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn lambda_max(&self) -> f64 {
        *self.lambdas.last().unwrap()
    }

    pub fn edges(&self) -> Option<(f64, f64)> {
        self.edges
    }

    /// Uniform weight 1/N_c of each mode.
    pub fn weight(&self) -> f64 {
        1.0 / self.lambdas.len() as f64
    }
}

/// λ_μ = (x_μ − x₋)⁻¹ − (x₊ − x₋)⁻¹.
pub fn lambda_map(bulk: &BulkSpectrum) -> Result<KineticSpectrum> {
    let (lo, hi) = (bulk.x_minus, bulk.x_plus);
    let mut lambdas = Vec::with_capacity(bulk.len());
    let top = 1.0 / (hi - lo);
    for (i, &x) in bulk.bulk_eigenvalues.iter().enumerate() {
        if x <= lo {
            return Err(Error::Domain(format!("bulk eigenvalue {x} at index {i} is not above x_minus = {lo}")));
        }
        if x > hi {
            return Err(Error::Domain(format!("bulk eigenvalue {x} at index {i} exceeds x_plus = {hi}")));
        }
        lambdas.push((1.0 / (x - lo) - top).max(0.0));
    }
    for w in lambdas.windows(2) {
        debug_assert!(w[0] <= w[1]);
    }
    Ok(KineticSpectrum { lambdas, edges: Some((lo, hi)) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::speclin;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    #[test]
    fn density_values_and_support() {
        let p = MpParams::new(1.0, 1.0).unwrap();
        assert_relative_eq!(p.density(2.0), 1.0 / (2.0 * std::f64::consts::PI), epsilon = 1e-15);
        assert_eq!(p.density(4.5), 0.0);
        assert_eq!(p.density(-1.0), 0.0);
    }

    #[test]
    fn edges() {
        let (lo, hi) = mp_edges(MpParams { sigma2: 1.0, q: 1.0 });
        assert_eq!((lo, hi), (0.0, 4.0));
        let (lo, hi) = mp_edges(MpParams { sigma2: 1.0, q: 2.0 });
        assert_relative_eq!(lo, 3.0 - 2.0 * 2f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(hi, 3.0 + 2.0 * 2f64.sqrt(), epsilon = 1e-14);
        let (lo, hi) = mp_edges(MpParams { sigma2: 2.0, q: 1e-14 });
        assert_abs_diff_eq!(lo, 2.0, epsilon = 1e-6);
        assert_abs_diff_eq!(hi, 2.0, epsilon = 1e-6);
    }

    #[test]
    fn density_normalised_by_adaptive_quadrature() {
        for (sigma, q) in [(1.0, 1.0), (1.0, 0.5), (2.0, 0.25)] {
            let p = MpParams::new(sigma * sigma, q).unwrap();
            let (lo, hi) = p.edges();
            let v = quad::adaptive(|x| p.density(x), lo, hi, 1e-12, 1e-10).unwrap();
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-6);
            assert_abs_diff_eq!(p.cdf(hi - 1e-12), 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn cdf_matches_quadrature_of_density() {
        let p = MpParams::new(1.3, 0.4).unwrap();
        let (lo, _) = p.edges();
        for x in [0.5, 1.0, 2.0, 3.0] {
            let v = quad::adaptive(|y| p.density(y), lo, x, 1e-13, 1e-11).unwrap();
            assert_abs_diff_eq!(p.cdf(x), v, epsilon = 1e-9);
        }
        let wide = MpParams::new(1.0, 2.0).unwrap();
        assert_abs_diff_eq!(wide.cdf(0.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(wide.cdf(wide.edges().1), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn quantile_inverts_cdf() {
        let p = MpParams::new(1.0, 0.5).unwrap();
        for u in [0.01, 0.3, 0.5, 0.99] {
            assert_abs_diff_eq!(p.cdf(p.quantile(u)), u, epsilon = 1e-10);
        }
        let s = mp_quantile_spectrum(p, 100);
        assert!(s.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn fit_with_fixed_q_uses_mean() {
        let z = speclin::sample_wishart(400, 400, 1.0, 2).unwrap();
        let e = speclin::eigvalsh(&z);
        let p = fit_mp(&e, Some(1.0)).unwrap();
        assert!((p.sigma2 - 1.0).abs() < 0.05);
    }

    #[test]
    fn free_fit_is_scale_equivariant_and_locally_optimal() {
        let z = speclin::sample_wishart(200, 400, 1.0, 4).unwrap();
        let e = speclin::eigvalsh(&z);
        let p = fit_mp(&e, None).unwrap();
        assert!((p.q - 0.5).abs() < 0.1, "q = {}", p.q);
        let scaled: Vec<f64> = e.iter().map(|x| 4.0 * x).collect();
        let ps = fit_mp(&scaled, None).unwrap();
        assert_relative_eq!(ps.sigma2, 4.0 * p.sigma2, max_relative = 1e-6);
        assert_relative_eq!(ps.q, p.q, max_relative = 1e-6);
        let worse = MpParams { sigma2: 1.2 * p.sigma2, q: p.q };
        assert!(cdf_objective(&e, p) <= cdf_objective(&e, worse));
    }

    #[test]
    fn degenerate_fit() {
        assert!(matches!(fit_mp(&[2.0; 40], None), Err(Error::DegenerateFit(_))));
        assert!(fit_mp(&[1.0; 10], None).is_err());
    }

    #[test]
    fn rescaled_fit_with_planted_spike() {
        let z = speclin::sample_wishart(300, 600, 1.0, 8).unwrap();
        let mut e = speclin::eigvalsh(&z);
        let pure = fit_mp(&e, Some(0.5)).unwrap();
        let edge = pure.edges().1;
        e.insert(0, 30.0 * edge);
        let r = fit_rescaled_mp(&e, 1, Some(0.5)).unwrap();
        assert!((r.sigma2 - pure.sigma2).abs() < 0.05 * pure.sigma2);
        assert_eq!(fit_rescaled_mp(&e, 0, Some(0.5)).unwrap(), fit_mp(&e, Some(0.5)).unwrap());
        let free = fit_rescaled_mp(&e, 1, None).unwrap();
        assert!((free.q - 0.5).abs() < 0.1, "q = {}", free.q);
    }

    #[test]
    fn rescaled_fit_below_unit_for_correlation_spectra() {
        let mut e: Vec<f64> = (0..63).map(|i| 0.5 + i as f64 / 63.0).collect();
        e.push(20.0);
        let n = e.len() as f64;
        let mean: f64 = e.iter().sum::<f64>() / n;
        let e: Vec<f64> = e.iter().map(|x| x / mean).collect();
        let r = fit_rescaled_mp(&e, 1, Some(0.4)).unwrap();
        assert!(r.sigma2 < 1.0);
    }

    #[test]
    fn cutoff_detects_single_spike() {
        let p = MpParams::new(1.0, 0.5).unwrap();
        let mut e = mp_quantile_spectrum(p, 200);
        assert_eq!(detect_bulk_cutoff(&e, 10.0).unwrap(), BulkCutoff { index: 0, no_gap_structure: false });
        e.insert(0, 5.0 * p.edges().1);
        assert_eq!(detect_bulk_cutoff(&e, 10.0).unwrap().index, 1);
    }

    #[test]
    fn cutoff_equal_spacing_sets_flag() {
        let e: Vec<f64> = (0..20).rev().map(|i| i as f64).collect();
        let c = detect_bulk_cutoff(&e, 0.5).unwrap();
        assert_eq!(c, BulkCutoff { index: 0, no_gap_structure: true });
    }

    #[test]
    fn lambda_map_hand_values() {
        let bulk = BulkSpectrum::new(&[4.0, 2.0, 1.0], 0, Some(0.0)).unwrap();
        let k = lambda_map(&bulk).unwrap();
        assert_eq!(k.lambdas()[0], 0.0);
        assert_relative_eq!(k.lambdas()[1], 0.25, epsilon = 1e-15);
        assert_relative_eq!(k.lambdas()[2], 0.75, epsilon = 1e-15);
    }

    #[test]
    fn lower_edge_falls_back_to_gap() {
        let b = BulkSpectrum::new(&[3.0, 2.5, 2.0, 1.9], 0, Some(1.95)).unwrap();
        assert_eq!(b.lower_edge_source, LowerEdgeSource::SmallestGap);
        assert_relative_eq!(b.x_minus, 1.8, epsilon = 1e-12);
        let bad = BulkSpectrum { x_minus: 2.0, ..b.clone() };
        assert!(matches!(lambda_map(&bad), Err(Error::Domain(_))));
    }

    proptest! {
        #[test]
        fn density_normalised(sigma2 in 0.1f64..5.0, q in 0.01f64..1.0) {
            let p = MpParams::new(sigma2, q).unwrap();
            let (lo, hi) = p.edges();
            let v = quad::adaptive(|x| p.density(x), lo, hi, 1e-12, 1e-10).unwrap();
            prop_assert!((v - 1.0).abs() < 1e-6);
        }

        #[test]
        fn lambda_map_is_decreasing(mut xs in proptest::collection::vec(0.1f64..10.0, 3..40)) {
            xs.sort_by(|a, b| b.total_cmp(a));
            xs.dedup();
            prop_assume!(xs.len() >= 2);
            let b = BulkSpectrum::new(&xs, 0, Some(0.05)).unwrap();
            let k = lambda_map(&b).unwrap();
            prop_assert_eq!(k.lambdas()[0], 0.0);
            prop_assert!(k.lambdas().windows(2).all(|w| w[0] < w[1]));
        }

        #[test]
        fn cutoff_affine_invariant(seed in 0u64..1000, scale in 0.1f64..10.0, shift in -5.0f64..5.0) {
            let mut r = crate::rng::stream(seed, &[]);
            use rand::Rng;
            let mut xs: Vec<f64> = (0..60).map(|_| r.random_range(0.0..1.0)).collect();
            xs.push(3.0);
            xs.push(2.0);
            xs.sort_by(|a, b| b.total_cmp(a));
            let ys: Vec<f64> = xs.iter().map(|x| scale * x + shift).collect();
            // the affine map perturbs rounding only; compare decisions away from the threshold
            let a = detect_bulk_cutoff(&xs, 10.0).unwrap();
            let b = detect_bulk_cutoff(&ys, 10.0).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn rescaled_fit_conserves_trace(vals in proptest::collection::vec(0.1f64..3.0, 40..80), k in 1usize..5) {
            let p = fit_rescaled_mp(&vals, k, Some(0.5)).unwrap();
            let mut s = vals.clone();
            s.sort_by(|a, b| b.total_cmp(a));
            let removed: f64 = s[..k].iter().sum();
            let total: f64 = vals.iter().sum();
            let lhs = (vals.len() - k) as f64 * p.sigma2 + removed;
            prop_assert!((lhs - total).abs() <= 1e-12 * total);
        }
    }
}
