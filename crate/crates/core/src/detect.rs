//! Signal detection on mode correlation functions F_μ(t, 0): exponent fits
//! of e^{−αt}/t^γ, the short-time concavity criterion and β sweeps.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::market::PricePanel;
use crate::pipeline::{self, SweepConfig};
use crate::series::ObservableSeries;
use crate::{stats, Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub alpha: f64,
    pub gamma: f64,
    pub amplitude: f64,
    pub r2: f64,
    pub window: (f64, f64),
    /// Condition number of the column-normalised regressors (1, −t, −ln t).
    pub condition: f64,
    pub n_points: usize,
}

/// Least squares of ln F on (1, −t, −ln t) over the window. The window is cut
/// at the first non-positive value, which marks the noise floor.
pub fn fit_alpha_gamma(f: &ObservableSeries, window: (f64, f64)) -> Result<ExponentFit> {
    let (lo, hi) = window;
    if !(lo > 0.0) || !(hi > lo) {
        return Err(Error::InvalidArgument(format!("fit window ({lo}, {hi}) needs 0 < t_lo < t_hi")));
    }
    let mut t = Vec::new();
    let mut y = Vec::new();
    for (&ti, &v) in f.times.iter().zip(&f.values) {
        if ti < lo || ti > hi {
            continue;
        }
        if !(v > 0.0) {
            break;
        }
        t.push(ti);
        y.push(v.ln());
    }
    if t.len() < 16 {
        return Err(Error::Inconclusive(format!("{} positive points in the fit window; need 16", t.len())));
    }
    let cols = vec![vec![1.0; t.len()], t.iter().map(|x| -x).collect(), t.iter().map(|x| -x.ln()).collect()];
    let ls = stats::least_squares(&cols, &y)?;
    Ok(ExponentFit {
        alpha: ls.coef[1],
        gamma: ls.coef[2],
        amplitude: ls.coef[0].exp(),
        r2: ls.r2,
        window: (t[0], t[t.len() - 1]),
        condition: ls.condition,
        n_points: t.len(),
    })
}

/// Maximum over the short-time window of the central second difference of
/// the centred moving average (width `smooth_width`, odd). Only nodes whose
/// full stencil lies on the grid are used; a window reaching past the grid is
/// clipped to it.
pub fn second_derivative_max(f: &ObservableSeries, smooth_width: usize, short_window: (f64, f64)) -> Result<f64> {
    let dt = f.uniform_step().ok_or_else(|| Error::InvalidArgument("series grid is not uniform".into()))?;
    if smooth_width == 0 || smooth_width.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("smoothing width {smooth_width} must be odd")));
    }
    let (lo, hi) = short_window;
    let n = f.len();
    let (t0, t1) = (f.times[0], f.times[n - 1]);
    if !(hi > lo) || lo > t1 || hi < t0 {
        return Err(Error::InvalidArgument(format!("window ({lo}, {hi}) lies outside the grid [{t0}, {t1}]")));
    }
    let in_window = f.times.iter().filter(|&&t| t >= lo - 1e-9 * dt && t <= hi + 1e-9 * dt).count();
    if in_window < 5 {
        return Err(Error::InvalidArgument(format!("{in_window} points in the short window; need 5")));
    }
    let h = smooth_width / 2;
    let mut prefix = vec![0.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + f.values[i];
    }
    let smooth = |k: usize| (prefix[k + h + 1] - prefix[k - h]) / smooth_width as f64;
    let mut best: Option<f64> = None;
    for k in (h + 1)..n.saturating_sub(h + 1) {
        let t = f.times[k];
        if t < lo - 1e-9 * dt || t > hi + 1e-9 * dt {
            continue;
        }
        let d2 = (smooth(k - 1) - 2.0 * smooth(k) + smooth(k + 1)) / (dt * dt);
        best = Some(best.map_or(d2, |b: f64| b.max(d2)));
    }
    best.ok_or_else(|| Error::InvalidArgument("no node in the short window has a full stencil".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Signal,
    NoSignal,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectConfig {
    pub threshold: f64,
    pub smooth_width: usize,
    pub short_window: (f64, f64),
    /// Exponent-fit window; by default [5Δ, first t with F/F(0) < k/√R].
    pub fit_window: Option<(f64, f64)>,
    /// The k of the default noise-floor cut.
    pub noise_floor: f64,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self { threshold: 1.0, smooth_width: 5, short_window: (0.25, 2.0), fit_window: None, noise_floor: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeReport {
    pub mode: usize,
    pub fit: Option<ExponentFit>,
    pub fit_error: Option<String>,
    pub second_derivative_max: Option<f64>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub schema_version: u32,
    pub beta: f64,
    pub temperature_ratio: f64,
    pub temperature: Option<f64>,
    pub critical_temperature: Option<f64>,
    pub threshold: f64,
    pub per_mode: Vec<ModeReport>,
}

impl DetectionReport {
    pub fn mode(&self, mu: usize) -> Option<&ModeReport> {
        self.per_mode.iter().find(|m| m.mode == mu)
    }
}

/// Default fit window of a normalised F series.
pub fn default_fit_window(normalised: &ObservableSeries, noise_floor: f64) -> Option<(f64, f64)> {
    let dt = normalised.uniform_step()?;
    let r = normalised.realization_counts.first().copied().unwrap_or(1).max(1) as f64;
    let floor = noise_floor / r.sqrt();
    let end = normalised
        .times
        .iter()
        .zip(&normalised.values)
        .find(|(_, v)| **v < floor)
        .map_or(normalised.times[normalised.len() - 1], |(t, _)| *t);
    Some((5.0 * dt, end))
}

fn evaluate_mode(mode: usize, f: &ObservableSeries, cfg: &DetectConfig) -> ModeReport {
    let inconclusive =
        |msg: String| ModeReport { mode, fit: None, fit_error: Some(msg), second_derivative_max: None, verdict: Verdict::Inconclusive };
    let f0 = f.values.first().copied().unwrap_or(0.0);
    if !(f0 > 0.0 && f0.is_finite()) {
        return inconclusive(format!("F(t0) = {f0} cannot be normalised"));
    }
    let norm = ObservableSeries { values: f.values.iter().map(|v| v / f0).collect(), ..f.clone() };
    let d2 = second_derivative_max(&norm, cfg.smooth_width, cfg.short_window);
    let window = cfg.fit_window.or_else(|| default_fit_window(&norm, cfg.noise_floor));
    let fit = match window {
        Some(w) => fit_alpha_gamma(&norm, w),
        None => Err(Error::InvalidArgument("series grid is not uniform".into())),
    };
    let d2v = d2.as_ref().ok().copied();
    let verdict = match (&fit, d2v) {
        (Ok(_), Some(v)) if v > cfg.threshold => Verdict::Signal,
        (Ok(_), Some(_)) => Verdict::NoSignal,
        _ => Verdict::Inconclusive,
    };
    let fit_error = match (&fit, &d2) {
        (Err(e), _) => Some(e.to_string()),
        (_, Err(e)) => Some(e.to_string()),
        _ => None,
    };
    ModeReport { mode, fit: fit.ok(), fit_error, second_derivative_max: d2v, verdict }
}

/// Verdict per mode: signal iff the short-time second derivative of F/F(0)
/// exceeds the threshold; inconclusive when the exponent fit or the
/// derivative cannot be computed. Modes 0 and 1 must be present.
pub fn detect_signal(
    inputs: &[(usize, ObservableSeries)],
    cfg: &DetectConfig,
    beta: f64,
    temperature_ratio: f64,
) -> Result<DetectionReport> {
    for needed in [0, 1] {
        if !inputs.iter().any(|(m, _)| *m == needed) {
            return Err(Error::InvalidArgument(format!("mode {needed} is required for detection")));
        }
    }
    Ok(DetectionReport {
        schema_version: SCHEMA_VERSION,
        beta,
        temperature_ratio,
        temperature: None,
        critical_temperature: None,
        threshold: cfg.threshold,
        per_mode: inputs.iter().map(|(m, f)| evaluate_mode(*m, f, cfg)).collect(),
    })
}

/// Runs the full pipeline on every (β, T/T_c) cell.
///
/// Panel seeds derive from (master seed, β) and integration seeds from
/// (master seed, β, T/T_c), so any sub-grid reproduces the same cells.
pub fn beta_sweep(
    panel: &PricePanel,
    betas: &[f64],
    modes: &[usize],
    temperature_ratios: &[f64],
    cfg: &SweepConfig,
) -> Result<Vec<DetectionReport>> {
    if betas.is_empty() || modes.is_empty() || temperature_ratios.is_empty() {
        return Err(Error::InvalidArgument("sweep grids must be non-empty".into()));
    }
    let mut reports = Vec::with_capacity(betas.len() * temperature_ratios.len());
    for &beta in betas {
        let cell = |e: Error, ratio: Option<f64>| e.in_cell(beta, ratio);
        let panel_seed = pipeline::panel_seed(cfg.seed, beta);
        let surrogate = crate::market::build_beta_panel(panel, beta, panel_seed, cfg.beta_options).map_err(|e| cell(e, None))?;
        let prepared = pipeline::prepare_spectrum(&surrogate, &cfg.spectrum).map_err(|e| cell(e, None))?;
        for &ratio in temperature_ratios {
            let seed = pipeline::cell_seed(cfg.seed, beta, ratio);
            let result = pipeline::run_cell(&prepared, cfg, beta, ratio, modes, seed).map_err(|e| cell(e, Some(ratio)))?;
            reports.push(result.report);
        }
    }
    Ok(reports)
}

/// One CSV row per (β, T/T_c, μ).
pub fn write_reports_csv<W: Write>(reports: &[DetectionReport], out: W, comments: &[String]) -> Result<()> {
    let mut out = out;
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "beta",
        "temperature_ratio",
        "mode",
        "alpha",
        "gamma",
        "amplitude",
        "r2",
        "condition",
        "second_derivative_max",
        "verdict",
    ])?;
    let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
    for r in reports {
        for m in &r.per_mode {
            let verdict = match m.verdict {
                Verdict::Signal => "signal",
                Verdict::NoSignal => "no_signal",
                Verdict::Inconclusive => "inconclusive",
            };
            w.write_record([
                r.beta.to_string(),
                r.temperature_ratio.to_string(),
                m.mode.to_string(),
                opt(m.fit.map(|f| f.alpha)),
                opt(m.fit.map(|f| f.gamma)),
                opt(m.fit.map(|f| f.amplitude)),
                opt(m.fit.map(|f| f.r2)),
                opt(m.fit.map(|f| f.condition)),
                opt(m.second_derivative_max),
                verdict.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
