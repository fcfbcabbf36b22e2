//! Stage functions shared by the β sweep and the command-line interface:
//! price panel → correlation spectrum → bulk → kinetic rates → Langevin
//! ensemble → detection.

use serde::{Deserialize, Serialize};

use crate::analytics::{self, CriticalTemperature, SpectralDensity};
use crate::detect::{self, DetectConfig, DetectionReport};
use crate::kinetics::{self, KineticsConfig, PotentialParams, Scheme, TrajectoryEnsemble};
use crate::market::{self, BetaOptions, PricePanel};
use crate::rmt::{self, BulkCutoff, BulkSpectrum, KineticSpectrum, MpParams};
use crate::{rng, speclin, stats, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOptions {
    pub kappa: f64,
    /// Overrides the gap rule.
    pub manual_cutoff: Option<usize>,
    /// Aspect ratio of the MP fits; N/(number of returns) by default.
    pub q: Option<f64>,
    /// Fit q as well as σ².
    pub free_q: bool,
    /// Eigenvalues removed by the rescaled fit; all above the plain x₊ by default.
    pub n_outliers: Option<usize>,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self { kappa: 10.0, manual_cutoff: None, q: None, free_q: false, n_outliers: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PreparedSpectrum {
    pub n_assets: usize,
    pub n_returns: usize,
    /// Descending eigenvalues of the return correlation matrix.
    pub eigenvalues: Vec<f64>,
    pub cutoff: BulkCutoff,
    pub manual_cutoff: bool,
    pub plain_fit: MpParams,
    pub plain_ks: f64,
    pub rescaled_fit: MpParams,
    pub rescaled_ks: f64,
    pub n_outliers: usize,
    pub bulk: BulkSpectrum,
    pub kinetic: KineticSpectrum,
}

pub fn prepare_spectrum(panel: &PricePanel, opts: &SpectrumOptions) -> Result<PreparedSpectrum> {
    let returns = market::log_returns(panel);
    let corr = market::correlation_matrix(&returns)?;
    let eigenvalues = speclin::try_eigvalsh(&corr)?;
    prepare_from_eigenvalues(eigenvalues, returns.dates.len(), opts)
}

/// As [`prepare_spectrum`] for a precomputed descending spectrum.
pub fn prepare_from_eigenvalues(eigenvalues: Vec<f64>, n_observations: usize, opts: &SpectrumOptions) -> Result<PreparedSpectrum> {
    let n = eigenvalues.len();
    let q = opts.q.unwrap_or(n as f64 / n_observations as f64);
    let cutoff = match opts.manual_cutoff {
        Some(index) => {
            if index + 2 > n {
                return Err(Error::InvalidArgument(format!("manual cutoff {index} leaves fewer than 2 bulk eigenvalues")));
            }
            BulkCutoff { index, no_gap_structure: false }
        }
        None => rmt::detect_bulk_cutoff(&eigenvalues, opts.kappa)?,
    };
    let plain_fit = rmt::fit_mp(&eigenvalues, (!opts.free_q).then_some(q))?;
    let n_outliers = opts.n_outliers.unwrap_or_else(|| rmt::count_above_edge(&eigenvalues, plain_fit)).min((n - 1) / 2);
    let rescaled_fit = rmt::fit_rescaled_mp(&eigenvalues, n_outliers, (!opts.free_q).then_some(plain_fit.q))?;
    let plain_ks = rmt::ks_distance(&eigenvalues, plain_fit);
    let rescaled_ks = rmt::ks_distance(&eigenvalues[n_outliers..], rescaled_fit);
    let bulk_mean = stats::mean(&eigenvalues[cutoff.index..]);
    let lower = if bulk_mean > 0.0 { Some(MpParams::new(bulk_mean, plain_fit.q)?.edges().0) } else { None };
    let bulk = BulkSpectrum::new(&eigenvalues, cutoff.index, lower)?;
    let kinetic = rmt::lambda_map(&bulk)?;
    Ok(PreparedSpectrum {
        n_assets: n,
        n_returns: n_observations,
        eigenvalues,
        cutoff,
        manual_cutoff: opts.manual_cutoff.is_some(),
        plain_fit,
        plain_ks,
        rescaled_fit,
        rescaled_ks,
        n_outliers,
        bulk,
        kinetic,
    })
}

/// Integration settings shared by all cells; the temperature and seed are
/// set per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KineticsTemplate {
    /// Step size; [`KineticsConfig::default_dt`] when absent.
    pub dt: Option<f64>,
    pub steps: usize,
    pub ensemble: usize,
    pub initial_amplitude: f64,
    pub scheme: Scheme,
}

impl Default for KineticsTemplate {
    fn default() -> Self {
        Self { dt: None, steps: 1000, ensemble: 100, initial_amplitude: 1.0, scheme: Scheme::Exponential }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub potential: PotentialParams,
    pub kinetics: KineticsTemplate,
    pub spectrum: SpectrumOptions,
    pub detect: DetectConfig,
    pub beta_options: BetaOptions,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            potential: PotentialParams::from_minimum(2.0, 1.0),
            kinetics: KineticsTemplate::default(),
            spectrum: SpectrumOptions::default(),
            detect: DetectConfig::default(),
            beta_options: BetaOptions::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub critical: CriticalTemperature,
    pub temperature: f64,
    pub kinetics: KineticsConfig,
    pub ensemble: TrajectoryEnsemble,
    pub report: DetectionReport,
}

/// Seed of the GBM surrogate panel at `beta`.
pub fn panel_seed(master: u64, beta: f64) -> u64 {
    rng::derive_seed(master, &[1, rng::float_key(beta)])
}

/// Seed of the Langevin ensemble of the (β, T/T_c) cell.
pub fn cell_seed(master: u64, beta: f64, ratio: f64) -> u64 {
    rng::derive_seed(master, &[2, rng::float_key(beta), rng::float_key(ratio)])
}

/// T_c of a kinetic spectrum for the potential's a₀.
pub fn critical_for(kinetic: &KineticSpectrum, potential: PotentialParams) -> Result<CriticalTemperature> {
    let a0 = potential
        .a0()
        .filter(|a| *a > 0.0)
        .ok_or_else(|| Error::InvalidArgument("the potential needs h1 > 0 and h0 < 0 (a0 > 0)".into()))?;
    analytics::critical_temperature(a0, &SpectralDensity::from_kinetic(kinetic))
}

/// Integrates one (β, T/T_c) cell and evaluates the detector on `modes`.
pub fn run_cell(prepared: &PreparedSpectrum, cfg: &SweepConfig, beta: f64, ratio: f64, modes: &[usize], seed: u64) -> Result<CellResult> {
    if let Some(&m) = modes.iter().find(|&&m| m >= prepared.kinetic.len()) {
        return Err(Error::InvalidArgument(format!("mode {m} out of range for a bulk of {} modes", prepared.kinetic.len())));
    }
    if !(ratio >= 0.0 && ratio.is_finite()) {
        return Err(Error::InvalidArgument(format!("temperature ratio {ratio} must be >= 0")));
    }
    let critical = critical_for(&prepared.kinetic, cfg.potential)?;
    let temperature = ratio * critical.tc;
    let t = &cfg.kinetics;
    let dt = t.dt.unwrap_or_else(|| KineticsConfig::default_dt(&prepared.kinetic, cfg.potential, t.initial_amplitude, t.scheme));
    let kcfg = KineticsConfig {
        temperature,
        dt,
        steps: t.steps,
        ensemble: t.ensemble,
        seed,
        initial_amplitude: t.initial_amplitude,
        scheme: t.scheme,
        reference_steps: vec![],
    };
    let ensemble = kinetics::integrate(&prepared.kinetic, cfg.potential, &kcfg)?;
    let mut inputs = Vec::with_capacity(modes.len() + 2);
    let mut wanted: Vec<usize> = modes.to_vec();
    for needed in [0, 1] {
        if !wanted.contains(&needed) {
            wanted.push(needed);
        }
    }
    for &m in &wanted {
        inputs.push((m, kinetics::correlation_f(&ensemble, m, 0)?));
    }
    let mut report = detect::detect_signal(&inputs, &cfg.detect, beta, ratio)?;
    report.per_mode.retain(|r| modes.contains(&r.mode));
    report.temperature = Some(temperature);
    report.critical_temperature = Some(critical.tc);
    Ok(CellResult { critical, temperature, kinetics: kcfg, ensemble, report })
}
