//! Closed quenched theory: H(t), its Laplace transform H̄(p), the critical
//! temperature, Ḡ(p), the convolution equation for G(t) and the order
//! parameter reconstructed from (G, H, F).
//!
//! With ρ(λ) the density of kinetic rates:
//!
//! * H(t) = ∫ρ(λ) e^{−2λt} dλ, so H(0) = 1 for a normalised discrete ρ;
//! * G(t) = H(t)/a₀ + (2T/a₀) F(t) with F = H ∗ G;
//! * Ḡ(p) = ½ / (½ a₀ / H̄(p) − T) and T_c = ½ a₀ / H̄(0).
//!
//! The `MpClosed` density is the analytic reference form whose H(t) diverges
//! like t^{−1/2} at the origin; it is used for transform-level checks, while
//! the time-domain solver works on discrete spectra.

use serde::{Deserialize, Serialize};

use crate::rmt::KineticSpectrum;
use crate::series::{ObservableSeries, SeriesLabel};
use crate::stats;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SpectralDensity {
    /// Uniform weights on a list of rates. Rates below `epsilon` (and exact
    /// zeros) are excluded from H̄(0).
    Discrete {
        lambdas: Vec<f64>,
        epsilon: f64,
    },
    MpClosed {
        sigma: f64,
    },
}

impl SpectralDensity {
    /// Discrete density of a kinetic spectrum, with ε = 1/(N_c (x₊ − x₋))
    /// when the map edges are known and ε = 0 otherwise.
    pub fn from_kinetic(spectrum: &KineticSpectrum) -> Self {
        let epsilon = spectrum.edges().map_or(0.0, |(lo, hi)| 1.0 / (spectrum.len() as f64 * (hi - lo)));
        SpectralDensity::Discrete { lambdas: spectrum.lambdas().to_vec(), epsilon }
    }

    /// The same density without the modes that H̄(0) excludes, so that the
    /// dynamics and T_c see one spectrum. Closed forms are returned unchanged.
    pub fn regularized(&self) -> Result<Self> {
        match self {
            SpectralDensity::Discrete { lambdas, epsilon } => {
                let kept: Vec<f64> = lambdas.iter().copied().filter(|&l| l > 0.0 && l >= *epsilon).collect();
                if kept.is_empty() {
                    return Err(Error::Domain("no rate above the regularisation threshold".into()));
                }
                Ok(SpectralDensity::Discrete { lambdas: kept, epsilon: *epsilon })
            }
            SpectralDensity::MpClosed { .. } => Ok(self.clone()),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            SpectralDensity::Discrete { lambdas, epsilon } => {
                if lambdas.is_empty() {
                    return Err(Error::InvalidArgument("empty spectral density".into()));
                }
                if lambdas.iter().any(|l| !(l.is_finite() && *l >= 0.0)) || !(*epsilon >= 0.0) {
                    return Err(Error::Domain("discrete rates must be finite and nonnegative".into()));
                }
            }
            SpectralDensity::MpClosed { sigma } => {
                if !(*sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::Domain(format!("sigma {sigma} must be positive")));
                }
            }
        }
        Ok(())
    }
}

/// Scaled complementary error function e^{x²} erfc(x), for x ≥ −5.
pub fn erfcx(x: f64) -> f64 {
    if x < 6.0 {
        (x * x).exp() * libm::erfc(x)
    } else {
        let inv = 1.0 / (2.0 * x * x);
        let mut term = 1.0;
        let mut sum = 1.0;
        for n in 1..60 {
            let next = -term * (2 * n - 1) as f64 * inv;
            if next.abs() >= term.abs() || next.abs() < 1e-18 {
                break;
            }
            term = next;
            sum += term;
        }
        sum / (x * std::f64::consts::PI.sqrt())
    }
}

/// 1/(√π x) − erfcx(x), accurate for large x where the two terms cancel.
fn leading_minus_erfcx(x: f64) -> f64 {
    let sqrt_pi = std::f64::consts::PI.sqrt();
    if x < 6.0 {
        1.0 / (sqrt_pi * x) - erfcx(x)
    } else {
        // −Σ_{n≥1} (−1)^n (2n−1)!!/(2x²)^n / (x√π)
        let inv = 1.0 / (2.0 * x * x);
        let mut term = 1.0;
        let mut sum = 0.0;
        for n in 1..60 {
            let next = -term * (2 * n - 1) as f64 * inv;
            if next.abs() >= term.abs() || next.abs() < 1e-20 {
                break;
            }
            term = next;
            sum -= term;
        }
        sum / (x * sqrt_pi)
    }
}

/// H(t).
pub fn h_of_t(rho: &SpectralDensity, t: f64) -> Result<f64> {
    rho.validate()?;
    match rho {
        SpectralDensity::Discrete { lambdas, .. } => {
            if !(t >= 0.0) {
                return Err(Error::Domain(format!("H(t) needs t >= 0, got {t}")));
            }
            Ok(lambdas.iter().map(|l| (-2.0 * l * t).exp()).sum::<f64>() / lambdas.len() as f64)
        }
        SpectralDensity::MpClosed { sigma } => {
            if !(t > 0.0) {
                return Err(Error::Domain(format!("closed-form H(t) diverges at t = {t}")));
            }
            let x = t.sqrt() / (std::f64::consts::SQRT_2 * sigma);
            Ok(leading_minus_erfcx(x) / (4.0 * sigma.powi(3)))
        }
    }
}

/// H̄(p) = 1/(2√2 √p σ² + 2σ).
pub fn h_bar_mp(p: f64, sigma: f64) -> f64 {
    1.0 / (2.0 * std::f64::consts::SQRT_2 * p.sqrt() * sigma * sigma + 2.0 * sigma)
}

/// H̄(p). For a discrete density at p = 0, modes below ε are excluded.
pub fn h_bar(rho: &SpectralDensity, p: f64) -> Result<f64> {
    rho.validate()?;
    if !(p >= 0.0) {
        return Err(Error::Domain(format!("Laplace variable {p} must be >= 0")));
    }
    match rho {
        SpectralDensity::MpClosed { sigma } => Ok(h_bar_mp(p, *sigma)),
        SpectralDensity::Discrete { lambdas, epsilon } => {
            let n = lambdas.len() as f64;
            if p > 0.0 {
                Ok(lambdas.iter().map(|l| 1.0 / (p + 2.0 * l)).sum::<f64>() / n)
            } else {
                let kept: Vec<f64> = lambdas.iter().copied().filter(|&l| l > 0.0 && l >= *epsilon).collect();
                if kept.is_empty() {
                    return Err(Error::Domain("H̄(0) diverges: no rate above the regularisation threshold".into()));
                }
                Ok(kept.iter().map(|l| 0.5 / l).sum::<f64>() / n)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalTemperature {
    pub tc: f64,
    pub h_bar0: f64,
    /// Modes left out of H̄(0) by the λ ≥ ε regularisation.
    pub excluded: usize,
}

/// T_c = a₀ / (2 H̄(0)).
pub fn critical_temperature(a0: f64, rho: &SpectralDensity) -> Result<CriticalTemperature> {
    if !(a0 > 0.0 && a0.is_finite()) {
        return Err(Error::InvalidArgument(format!("a0 = {a0} must be positive")));
    }
    let h0 = h_bar(rho, 0.0)?;
    let excluded = match rho {
        SpectralDensity::Discrete { lambdas, epsilon } => lambdas.iter().filter(|&&l| !(l > 0.0 && l >= *epsilon)).count(),
        SpectralDensity::MpClosed { .. } => 0,
    };
    Ok(CriticalTemperature { tc: a0 / (2.0 * h0), h_bar0: h0, excluded })
}

/// Ḡ(p) = ½ / (½ a₀ / H̄(p) − T).
pub fn g_bar(p: f64, a0: f64, temperature: f64, rho: &SpectralDensity) -> Result<f64> {
    let h = h_bar(rho, p)?;
    let denominator = 0.5 * a0 / h - temperature;
    if !(denominator > 0.0) {
        return Err(Error::SuperCritical { temperature, p, denominator });
    }
    Ok(0.5 / denominator)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolterraSolution {
    pub g: ObservableSeries,
    pub h: ObservableSeries,
    pub f: ObservableSeries,
}

/// Solves G = H/a₀ + (2T/a₀) H ∗ G on t_i = iΔ, i = 0..=steps, for a
/// discrete density.
///
/// Product integration: G is linear between nodes and each mode's kernel
/// e^{−2λ(t−s)} is integrated exactly against it, so the per-mode history
/// obeys a two-term recursion and a step costs O(N_c). The unknown G at the
/// new node enters implicitly. G(0) = H(0)/a₀ since F(0) = 0.
pub fn solve_g_volterra(a0: f64, temperature: f64, rho: &SpectralDensity, dt: f64, steps: usize) -> Result<VolterraSolution> {
    rho.validate()?;
    let SpectralDensity::Discrete { lambdas, .. } = rho else {
        return Err(Error::InvalidArgument("the convolution solver needs a discrete density".into()));
    };
    if !(a0 > 0.0 && a0.is_finite()) {
        return Err(Error::InvalidArgument(format!("a0 = {a0} must be positive")));
    }
    if !(temperature >= 0.0 && temperature.is_finite()) {
        return Err(Error::InvalidArgument(format!("temperature {temperature} must be >= 0")));
    }
    if !(dt > 0.0 && dt.is_finite()) || steps == 0 {
        return Err(Error::InvalidArgument("grid needs dt > 0 and at least one step".into()));
    }
    let n = lambdas.len() as f64;
    let k: Vec<f64> = lambdas.iter().map(|l| 2.0 * l).collect();
    let decay: Vec<f64> = k.iter().map(|k| (-k * dt).exp()).collect();
    let (w0, w1): (Vec<f64>, Vec<f64>) = k
        .iter()
        .map(|&k| {
            let x = k * dt;
            if x < 1e-4 {
                (dt * (0.5 - x / 3.0 + x * x / 8.0), dt * (0.5 - x / 6.0 + x * x / 24.0))
            } else {
                let w1 = (x - 1.0 + (-x).exp()) / (k * k * dt);
                (-(-x).exp_m1() / k - w1, w1)
            }
        })
        .unzip();
    let coupling = 2.0 * temperature / a0;
    let denominator = 1.0 - coupling * w1.iter().sum::<f64>() / n;
    if !(denominator > 0.0) {
        return Err(Error::StepSize(format!("implicit denominator {denominator:.3e} is not positive; reduce dt")));
    }
    let mut history = vec![0.0; k.len()];
    let mut g = Vec::with_capacity(steps + 1);
    let mut h = Vec::with_capacity(steps + 1);
    let mut f = Vec::with_capacity(steps + 1);
    h.push(1.0);
    g.push(1.0 / a0);
    f.push(0.0);
    for i in 0..steps {
        let t = (i + 1) as f64 * dt;
        let hn = k.iter().map(|k| (-k * t).exp()).sum::<f64>() / n;
        let gi = g[i];
        let mut explicit = 0.0;
        for ((hist, &e), &w) in history.iter_mut().zip(&decay).zip(&w0) {
            *hist = e * *hist + w * gi;
            explicit += *hist;
        }
        explicit /= n;
        let gn = (hn / a0 + coupling * explicit) / denominator;
        if !gn.is_finite() {
            return Err(Error::Domain(format!("G overflowed at t = {t}")));
        }
        let mut fsum = 0.0;
        for (hist, &w) in history.iter_mut().zip(&w1) {
            *hist += w * gn;
            fsum += *hist;
        }
        g.push(gn);
        h.push(hn);
        f.push(fsum / n);
    }
    let times: Vec<f64> = (0..=steps).map(|i| i as f64 * dt).collect();
    Ok(VolterraSolution {
        g: ObservableSeries::deterministic(SeriesLabel::G, times.clone(), g)?,
        h: ObservableSeries::deterministic(SeriesLabel::H, times.clone(), h)?,
        f: ObservableSeries::deterministic(SeriesLabel::F, times, f)?,
    })
}

/// a(t) = (H(t) + 2T F(t)) / G(t).
pub fn a_closed(g: &ObservableSeries, h: &ObservableSeries, f: &ObservableSeries, temperature: f64) -> Result<ObservableSeries> {
    if g.times != h.times || g.times != f.times {
        return Err(Error::InvalidArgument("G, H and F must share one grid".into()));
    }
    if let Some(i) = g.values.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::Domain(format!("G = {} is not positive at t = {}", g.values[i], g.times[i])));
    }
    let values = g.values.iter().zip(&h.values).zip(&f.values).map(|((g, h), f)| (h + 2.0 * temperature * f) / g).collect();
    ObservableSeries::deterministic(SeriesLabel::AClosed, g.times.clone(), values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub exponent: f64,
    pub stderr: f64,
    pub r2: f64,
    /// Largest deviation (in ln units) attributable to a quadratic term in ln t.
    pub curvature: f64,
    /// Set when `curvature` exceeds 0.01, i.e. the tail is not a clean power law.
    pub curved: bool,
    pub n_points: usize,
    pub t_lo: f64,
    pub t_hi: f64,
}

/// Log–log slope over the final `window` fraction of the points.
pub fn tail_exponent(series: &ObservableSeries, window: f64) -> Result<TailFit> {
    if !(window > 0.0 && window <= 1.0) {
        return Err(Error::InvalidArgument(format!("window fraction {window} outside (0, 1]")));
    }
    let n = series.len();
    let take = ((window * n as f64).ceil() as usize).min(n);
    let start = n - take;
    let (lo, hi) = (series.times[start.min(n.saturating_sub(1))], series.times[n.saturating_sub(1)]);
    log_slope(series, lo, hi)
}

/// Log–log slope of the points with t in [t_lo, t_hi] and t > 0.
pub fn log_slope(series: &ObservableSeries, t_lo: f64, t_hi: f64) -> Result<TailFit> {
    let pts: Vec<(f64, f64)> =
        series.times.iter().zip(&series.values).filter(|(t, _)| **t > 0.0 && **t >= t_lo && **t <= t_hi).map(|(t, v)| (*t, *v)).collect();
    if pts.len() < 16 {
        return Err(Error::InvalidArgument(format!("{} points in the tail window; need 16", pts.len())));
    }
    if let Some((t, v)) = pts.iter().find(|p| !(p.1 > 0.0)) {
        return Err(Error::Domain(format!("non-positive value {v} at t = {t} in the tail window")));
    }
    let x: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let line = stats::fit_line(&x, &y)?;
    let xm = stats::mean(&x);
    let span = x[x.len() - 1] - x[0];
    let quad_cols = vec![vec![1.0; x.len()], x.iter().map(|v| v - xm).collect(), x.iter().map(|v| (v - xm).powi(2)).collect()];
    let curvature = match stats::least_squares(&quad_cols, &y) {
        Ok(q) => q.coef[2].abs() * span * span / 4.0,
        Err(_) => 0.0,
    };
    Ok(TailFit {
        exponent: line.slope,
        stderr: line.slope_stderr,
        r2: line.r2,
        curvature,
        curved: curvature > 0.01,
        n_points: pts.len(),
        t_lo: pts[0].0,
        t_hi: pts[pts.len() - 1].0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn discrete(l: &[f64]) -> SpectralDensity {
        SpectralDensity::Discrete { lambdas: l.to_vec(), epsilon: 0.0 }
    }

    #[test]
    fn regularized_drops_the_edge_mode() {
        let rho = SpectralDensity::Discrete { lambdas: vec![0.0, 0.001, 1.0, 2.0], epsilon: 0.01 };
        let SpectralDensity::Discrete { lambdas, .. } = rho.regularized().unwrap() else { unreachable!() };
        assert_eq!(lambdas, vec![1.0, 2.0]);
    }

    #[test]
    fn erfcx_matches_direct_and_asymptotic_forms() {
        for x in [0.0, 0.5, 2.0, 5.5] {
            assert_relative_eq!(erfcx(x), (x * x).exp() * libm::erfc(x), max_relative = 1e-14);
        }
        // continuity across the branch switch
        let below = (36.0f64 - 1e-9).exp() * libm::erfc(6.0 - 1e-10);
        assert_relative_eq!(erfcx(6.0), below, max_relative = 1e-8);
        assert_relative_eq!(erfcx(1e4), 1.0 / (1e4 * std::f64::consts::PI.sqrt()), max_relative = 1e-8);
    }

    #[test]
    fn discrete_h_values() {
        assert_eq!(h_of_t(&discrete(&[0.3, 2.0, 5.0]), 0.0).unwrap(), 1.0);
        assert_eq!(h_of_t(&discrete(&[0.0]), 17.0).unwrap(), 1.0);
        assert!(h_of_t(&SpectralDensity::MpClosed { sigma: 1.0 }, 0.0).is_err());
    }

    #[test]
    fn closed_form_laplace_at_unit_p() {
        let rho = SpectralDensity::MpClosed { sigma: 1.0 };
        let v = quad::adaptive_semi_infinite(|u| 2.0 * u * (-u * u).exp() * h_of_t(&rho, u * u).unwrap(), 0.0, 1e-13, 1e-11).unwrap();
        assert_relative_eq!(v, h_bar_mp(1.0, 1.0), max_relative = 1e-4);
        assert_relative_eq!(h_bar_mp(1.0, 1.0), 1.0 / (2.0 * 2f64.sqrt() + 2.0), max_relative = 1e-15);
    }

    #[test]
    fn closed_form_h_is_continuous_across_branches() {
        let rho = SpectralDensity::MpClosed { sigma: 1.0 };
        let t = 72.0;
        let a = h_of_t(&rho, t * (1.0 - 1e-9)).unwrap();
        let b = h_of_t(&rho, t * (1.0 + 1e-9)).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-7);
        // tail ~ t^{-3/2}/(4√(2π)) · 2 for σ = 1
        let far = h_of_t(&rho, 1e8).unwrap();
        assert_relative_eq!(far, 1e-12 / (2.0 * std::f64::consts::PI.sqrt() * 4.0) * 2f64.sqrt() * 2.0, max_relative = 1e-6);
    }

    #[test]
    fn h_bar_mp_values() {
        assert_eq!(h_bar_mp(0.0, 1.0), 0.5);
        assert_relative_eq!(h_bar_mp(2.0, 1.0), 1.0 / 6.0, max_relative = 1e-15);
        assert!(h_bar_mp(0.3, 1.0) > h_bar_mp(0.4, 1.0));
    }

    #[test]
    fn critical_temperatures() {
        let tc = critical_temperature(2.0, &SpectralDensity::MpClosed { sigma: 1.0 }).unwrap();
        assert_relative_eq!(tc.tc, 2.0, max_relative = 1e-15);
        let tc = critical_temperature(10.0, &SpectralDensity::MpClosed { sigma: 3.0 }).unwrap();
        assert_relative_eq!(tc.tc, 30.0, max_relative = 1e-15);
        let tc = critical_temperature(3.0, &discrete(&[1.0])).unwrap();
        assert_eq!((tc.tc, tc.h_bar0), (3.0, 0.5));
        let tc = critical_temperature(3.0, &discrete(&[0.0, 1.0])).unwrap();
        assert_eq!(tc.excluded, 1);
        assert!(critical_temperature(3.0, &discrete(&[0.0])).is_err());
    }

    #[test]
    fn g_bar_values() {
        let rho = SpectralDensity::MpClosed { sigma: 1.0 };
        assert_relative_eq!(g_bar(1.0, 2.0, 0.0, &rho).unwrap(), h_bar_mp(1.0, 1.0) / 2.0, max_relative = 1e-14);
        let v = g_bar(1.0, 2.0, 1.0, &rho).unwrap();
        assert_abs_diff_eq!(v, 0.5 / (1.0 / h_bar_mp(1.0, 1.0) - 1.0), epsilon = 1e-14);
        assert_abs_diff_eq!(v, 0.1306, epsilon = 1e-4);
        let small = g_bar(1e-12, 2.0, 1.0, &rho).unwrap();
        assert_abs_diff_eq!(small, 0.5 / (2.0 / (2.0 * 0.5) - 1.0), epsilon = 1e-5);
        assert!(matches!(g_bar(0.0, 2.0, 2.5, &rho), Err(Error::SuperCritical { .. })));
    }

    #[test]
    fn volterra_zero_temperature_is_h_over_a0() {
        let rho = discrete(&[0.0, 0.2, 1.5]);
        let s = solve_g_volterra(2.0, 0.0, &rho, 0.1, 50).unwrap();
        for (g, h) in s.g.values.iter().zip(&s.h.values) {
            assert_eq!(*g, h / 2.0);
        }
    }

    /// Single mode: Ḡ = (1/a₀)/(p + 2λ − 2T/a₀), so G = e^{−(2λ − 2T/a₀)t}/a₀.
    fn single_mode_error(dt: f64) -> f64 {
        let (lam, a0, t) = (1.0, 1.0, 0.1);
        let steps = (5.0 / dt).round() as usize;
        let s = solve_g_volterra(a0, t, &discrete(&[lam]), dt, steps).unwrap();
        s.g.times
            .iter()
            .zip(&s.g.values)
            .map(|(x, g)| {
                let exact = (-(2.0 * lam - 2.0 * t / a0) * x).exp() / a0;
                ((g - exact) / exact).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn volterra_single_mode_is_second_order() {
        let e1 = single_mode_error(0.04);
        let e2 = single_mode_error(0.02);
        assert!(e1 < 1e-3, "error {e1}");
        assert!(e1 / e2 > 3.5, "convergence ratio {}", e1 / e2);
    }

    #[test]
    fn volterra_matches_picard_oracle() {
        let (lam, a0, t) = (1.0, 1.0, 0.1);
        let dt = 0.05;
        let steps = 100;
        let s = solve_g_volterra(a0, t, &discrete(&[lam]), dt, steps).unwrap();
        // Picard iteration with the plain trapezoid rule on a 4x finer grid
        let fine = 4 * steps;
        let h = dt / 4.0;
        let hv: Vec<f64> = (0..=fine).map(|i| (-2.0 * lam * i as f64 * h).exp()).collect();
        let mut g: Vec<f64> = hv.iter().map(|x| x / a0).collect();
        for _ in 0..60 {
            let next: Vec<f64> = (0..=fine)
                .map(|i| {
                    let conv = if i == 0 {
                        0.0
                    } else {
                        let inner: f64 = (1..i).map(|j| hv[i - j] * g[j]).sum();
                        h * (0.5 * hv[i] * g[0] + inner + 0.5 * hv[0] * g[i])
                    };
                    hv[i] / a0 + 2.0 * t / a0 * conv
                })
                .collect();
            g = next;
        }
        let max_rel = (0..=steps).map(|i| ((s.g.values[i] - g[4 * i]) / g[4 * i]).abs()).fold(0.0, f64::max);
        assert!(max_rel < 1e-3, "max relative deviation {max_rel}");
    }

    #[test]
    fn a_closed_identity_and_scaling() {
        let rho = discrete(&[0.0, 0.3, 0.8, 2.0]);
        let s = solve_g_volterra(2.0, 0.4, &rho, 0.05, 200).unwrap();
        let a = a_closed(&s.g, &s.h, &s.f, 0.4).unwrap();
        for v in &a.values {
            assert_relative_eq!(*v, 2.0, max_relative = 1e-12);
        }
        let z = solve_g_volterra(2.0, 0.0, &rho, 0.05, 20).unwrap();
        let scaled = ObservableSeries { values: z.g.values.iter().map(|g| 1.1 * g).collect(), ..z.g.clone() };
        let a = a_closed(&scaled, &z.h, &z.f, 0.0).unwrap();
        for v in &a.values {
            assert_relative_eq!(*v, 2.0 / 1.1, max_relative = 1e-14);
        }
        let neg = ObservableSeries { values: vec![-1.0; z.g.len()], ..z.g.clone() };
        assert!(a_closed(&neg, &z.h, &z.f, 0.0).is_err());
    }

    #[test]
    fn tail_exponent_of_power_law_and_exponential() {
        let t: Vec<f64> = (1..=400).map(|i| i as f64 * 0.25).collect();
        let v: Vec<f64> = t.iter().map(|x| x.powf(-1.5)).collect();
        let s = ObservableSeries::deterministic(SeriesLabel::G, t.clone(), v).unwrap();
        let fit = tail_exponent(&s, 0.25).unwrap();
        assert_abs_diff_eq!(fit.exponent, -1.5, epsilon = 1e-6);
        assert!(!fit.curved);
        let e: Vec<f64> = t.iter().map(|x| (-x).exp()).collect();
        let s = ObservableSeries::deterministic(SeriesLabel::G, t, e).unwrap();
        assert!(tail_exponent(&s, 0.25).unwrap().curved);
    }

    proptest! {
        #[test]
        fn discrete_h_completely_monotone(l in proptest::collection::vec(0.0f64..5.0, 1..20)) {
            let rho = discrete(&l);
            let vals: Vec<f64> = (0..50).map(|i| h_of_t(&rho, i as f64 * 0.1).unwrap()).collect();
            prop_assert!(vals.iter().all(|v| *v > 0.0));
            prop_assert!(vals.windows(2).all(|w| w[1] <= w[0]));
            prop_assert!(vals.windows(3).all(|w| w[0] - 2.0 * w[1] + w[2] >= -1e-14));
        }

        #[test]
        fn discrete_laplace_consistency(l in proptest::collection::vec(0.05f64..3.0, 1..8)) {
            let rho = discrete(&l);
            for p in [0.5, 1.0, 5.0] {
                let v = quad::adaptive_semi_infinite(|t| (-p * t).exp() * h_of_t(&rho, t).unwrap(), 0.0, 1e-14, 1e-10).unwrap();
                let exact = h_bar(&rho, p).unwrap();
                prop_assert!(((v - exact) / exact).abs() < 1e-6);
            }
        }
    }
}
