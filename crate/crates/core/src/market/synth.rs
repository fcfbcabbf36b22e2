//! Synthetic price panels: independent GBM, shared-noise GBM and
//! block-correlated GBM.

use chrono::{Datelike, NaiveDate, Weekday};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::PricePanel;
use crate::{rng, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SynthKind {
    Independent,
    /// Every asset loads √ρ on one common factor.
    SharedNoise {
        rho: f64,
    },
    /// Assets are split into consecutive blocks of the given fractions; each
    /// block loads √ρ on its own factor.
    Blocks {
        fractions: Vec<f64>,
        rho: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_assets: usize,
    pub n_days: usize,
    pub kind: SynthKind,
    pub seed: u64,
    /// Per-day volatility drawn uniformly from this range.
    pub sigma_range: (f64, f64),
    /// Per-day drift drawn uniformly from this range.
    pub mu_range: (f64, f64),
    pub start_date: NaiveDate,
}

impl SynthSpec {
    fn with_kind(n_assets: usize, n_days: usize, seed: u64, kind: SynthKind) -> Self {
        Self {
            n_assets,
            n_days,
            kind,
            seed,
            sigma_range: (0.01, 0.03),
            mu_range: (-5e-4, 1e-3),
            start_date: NaiveDate::from_ymd_opt(2015, 1, 2).expect("valid date"),
        }
    }

    pub fn independent(n_assets: usize, n_days: usize, seed: u64) -> Self {
        Self::with_kind(n_assets, n_days, seed, SynthKind::Independent)
    }

    pub fn shared_noise(n_assets: usize, n_days: usize, rho: f64, seed: u64) -> Self {
        Self::with_kind(n_assets, n_days, seed, SynthKind::SharedNoise { rho })
    }

    pub fn blocks(n_assets: usize, n_days: usize, fractions: Vec<f64>, rho: f64, seed: u64) -> Self {
        Self::with_kind(n_assets, n_days, seed, SynthKind::Blocks { fractions, rho })
    }

    /// Block index of every asset.
    pub fn block_labels(&self) -> Vec<usize> {
        match &self.kind {
            SynthKind::Independent | SynthKind::SharedNoise { .. } => vec![0; self.n_assets],
            SynthKind::Blocks { fractions, .. } => {
                let total: f64 = fractions.iter().sum();
                let mut labels = Vec::with_capacity(self.n_assets);
                let mut acc = 0.0;
                for (b, f) in fractions.iter().enumerate() {
                    acc += f / total;
                    let end = if b + 1 == fractions.len() { self.n_assets } else { (acc * self.n_assets as f64).round() as usize };
                    while labels.len() < end.min(self.n_assets) {
                        labels.push(b);
                    }
                }
                labels
            }
        }
    }
}

/// `n` consecutive weekdays starting at `start` (or the next weekday).
pub fn business_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d.succ_opt().expect("date in range");
    }
    out
}

/// Generates a panel whose log-returns are (μ_i − σ_i²/2) + σ_i ξ_i(t) with
/// ξ_i = √ρ z_{b(i)} + √(1−ρ) ε_i for factor noise z and idiosyncratic ε.
pub fn generate(spec: &SynthSpec) -> Result<PricePanel> {
    if spec.n_assets < 2 || spec.n_days < 8 {
        return Err(Error::InvalidArgument("synthetic panel needs at least 2 assets and 8 days".into()));
    }
    let (rho, n_factors) = match &spec.kind {
        SynthKind::Independent => (0.0, 1),
        SynthKind::SharedNoise { rho } => (*rho, 1),
        SynthKind::Blocks { fractions, rho } => {
            if fractions.is_empty() || fractions.iter().any(|f| !(*f > 0.0)) {
                return Err(Error::InvalidArgument("block fractions must be positive".into()));
            }
            (*rho, fractions.len())
        }
    };
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidArgument(format!("rho {rho} outside [0, 1]")));
    }
    let labels = spec.block_labels();
    let len = spec.n_days - 1;
    let mut prng = rng::stream(spec.seed, &[0]);
    let params: Vec<(f64, f64, f64)> = (0..spec.n_assets)
        .map(|_| {
            let s = prng.random_range(spec.sigma_range.0..=spec.sigma_range.1);
            let m = prng.random_range(spec.mu_range.0..=spec.mu_range.1);
            let s0 = prng.random_range(20.0..200.0);
            (m, s, s0)
        })
        .collect();
    let factors: Vec<Vec<f64>> = (0..n_factors).map(|b| super::wiener_increments(spec.seed, &[1, b as u64], len)).collect();
    let (a, b) = (rho.sqrt(), (1.0 - rho).sqrt());
    let prices = (0..spec.n_assets)
        .map(|i| {
            let (mu, sigma, s0) = params[i];
            let mut r = rng::stream(spec.seed, &[2, i as u64]);
            let z = &factors[labels[i]];
            let mut logp = s0.ln();
            let mut row = Vec::with_capacity(spec.n_days);
            row.push(s0);
            for zt in z {
                let e: f64 = StandardNormal.sample(&mut r);
                logp += mu - 0.5 * sigma * sigma + sigma * (a * zt + b * e);
                row.push(logp.exp());
            }
            row
        })
        .collect();
    let width = spec.n_assets.to_string().len();
    let tickers = (0..spec.n_assets).map(|i| format!("S{:0width$}", i)).collect();
    PricePanel::new(tickers, business_days(spec.start_date, spec.n_days), prices)
}
