//! Ensemble Langevin dynamics in the eigenbasis.
//!
//! Each realization evolves dq_μ/dt = −(λ_μ + ℓ(t)) q_μ + η_μ with
//! ℓ = h₀ + h₁ a(t), a = (1/N_c) Σ q_μ² computed from that realization's own
//! state, and ⟨η η⟩ = 2T δ. All realizations advance in lock-step; after every
//! step the ensemble sums are accumulated sequentially in realization order,
//! so results do not depend on how many worker threads ran the updates.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::rmt::KineticSpectrum;
use crate::series::{ObservableSeries, SeriesLabel};
use crate::{rng, Error, Result};

/// Quartic confinement truncated at ℓ = h₀ + h₁ a.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialParams {
    pub h0: f64,
    pub h1: f64,
}

impl PotentialParams {
    /// Potential with minimum at `a0` and curvature `h1`.
    pub fn from_minimum(a0: f64, h1: f64) -> Self {
        Self { h0: -a0 * h1, h1 }
    }

    /// a₀ = −h₀/h₁, defined when h₁ ≠ 0.
    pub fn a0(&self) -> Option<f64> {
        (self.h1 != 0.0).then(|| -self.h0 / self.h1)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// q ← q − κ q Δ + √(2TΔ) ξ with κ = λ + ℓ.
    #[default]
    EulerMaruyama,
    /// Exact integration of the linear SDE over one step with ℓ frozen:
    /// q ← q e^{−κΔ} + √(2TΔ φ(2κΔ)) ξ, φ(x) = (1 − e^{−x})/x. Unconditionally
    /// stable in λ, which matters for the stiff modes of the λ-map.
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KineticsConfig {
    pub temperature: f64,
    pub dt: f64,
    pub steps: usize,
    pub ensemble: usize,
    pub seed: u64,
    pub initial_amplitude: f64,
    #[serde(default)]
    pub scheme: Scheme,
    /// Extra time indices t₀ > 0 for which F_μ(t, t₀) is accumulated.
    #[serde(default)]
    pub reference_steps: Vec<usize>,
}

impl KineticsConfig {
    /// Default step 0.1/(λ_max + |h₀| + h₁ max(a₀, c²)); the λ_max term is
    /// dropped for the exponential scheme.
    pub fn default_dt(spectrum: &KineticSpectrum, pot: PotentialParams, c: f64, scheme: Scheme) -> f64 {
        let lam = match scheme {
            Scheme::EulerMaruyama => spectrum.lambda_max(),
            Scheme::Exponential => 0.0,
        };
        let a = pot.a0().unwrap_or(0.0).max(c * c);
        let rate = lam + pot.h0.abs() + pot.h1.abs() * a;
        if rate > 0.0 {
            0.1 / rate
        } else {
            0.1
        }
    }

    fn validate(&self, spectrum: &KineticSpectrum, pot: PotentialParams) -> Result<()> {
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(Error::InvalidArgument(format!("temperature {} must be finite and >= 0", self.temperature)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt {} must be positive", self.dt)));
        }
        if self.ensemble == 0 {
            return Err(Error::InvalidArgument("ensemble size must be positive".into()));
        }
        if !self.initial_amplitude.is_finite() {
            return Err(Error::InvalidArgument("initial amplitude must be finite".into()));
        }
        if let Some(&s) = self.reference_steps.iter().find(|&&s| s > self.steps) {
            return Err(Error::InvalidArgument(format!("reference step {s} beyond {} steps", self.steps)));
        }
        if pot.h1 < 0.0 {
            return Err(Error::InvalidArgument(format!("h1 = {} gives an unbounded potential", pot.h1)));
        }
        let c2 = self.initial_amplitude * self.initial_amplitude;
        let a_cap = (4.0 * pot.a0().unwrap_or(0.0)).max(4.0 * c2);
        let lam = match self.scheme {
            Scheme::EulerMaruyama => spectrum.lambda_max(),
            Scheme::Exponential => 0.0,
        };
        let guard = self.dt * (lam + pot.h0.abs() + pot.h1 * a_cap);
        if guard >= 0.5 {
            return Err(Error::StepSize(format!(
                "dt·(λ_max + |h0| + h1·a_cap) = {guard:.3} must stay below 0.5 for the {:?} scheme",
                self.scheme
            )));
        }
        Ok(())
    }
}

/// Streamed ensemble statistics of an integration.
#[derive(Debug, Clone)]
pub struct TrajectoryEnsemble {
    pub lambdas: Vec<f64>,
    pub times: Vec<f64>,
    pub initial_amplitude: f64,
    /// Per realization a_r(t), truncated before the step at which it diverged.
    pub a_paths: Vec<Vec<f64>>,
    /// Step index at which each realization diverged.
    pub diverged: Vec<Option<usize>>,
    /// Live realizations at each step.
    pub live: Vec<usize>,
    n_modes: usize,
    sum_q: Vec<f64>,
    sum_q2: Vec<f64>,
    cross: Vec<(usize, Vec<f64>)>,
}

struct Realization {
    q: Vec<f64>,
    rng: rng::StreamRng,
    a: Vec<f64>,
    diverged_at: Option<usize>,
    refs: Vec<Vec<f64>>,
}

fn phi(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - 0.5 * x
    } else {
        -(-x).exp_m1() / x
    }
}

impl Realization {
    fn step(&mut self, lambdas: &[f64], decay: &[f64], pot: PotentialParams, cfg: &KineticsConfig, step: usize, limit: f64) {
        if self.diverged_at.is_some() {
            return;
        }
        let n = lambdas.len() as f64;
        let a = *self.a.last().expect("initial value present");
        let ell = pot.h0 + pot.h1 * a;
        let dt = cfg.dt;
        let t = cfg.temperature;
        match cfg.scheme {
            Scheme::EulerMaruyama => {
                let amp = (2.0 * t * dt).sqrt();
                for (q, &lam) in self.q.iter_mut().zip(lambdas) {
                    let xi: f64 = StandardNormal.sample(&mut self.rng);
                    *q += -(lam + ell) * *q * dt + amp * xi;
                }
            }
            Scheme::Exponential => {
                let shift = (-ell * dt).exp();
                for ((q, &lam), &e) in self.q.iter_mut().zip(lambdas).zip(decay) {
                    let xi: f64 = StandardNormal.sample(&mut self.rng);
                    let amp = (2.0 * t * dt * phi(2.0 * (lam + ell) * dt)).sqrt();
                    *q = *q * e * shift + amp * xi;
                }
            }
        }
        let mut ss = 0.0;
        let mut bad = false;
        for &q in &self.q {
            ss += q * q;
            bad |= !(q.abs() <= limit);
        }
        if bad {
            self.diverged_at = Some(step);
            return;
        }
        self.a.push(ss / n);
        if let Some(pos) = cfg.reference_steps.iter().position(|&s| s == step) {
            self.refs[pos] = self.q.clone();
        }
    }
}

/// Integrates the ensemble. Realization r draws its noise from the
/// sub-stream (seed, r), so the output is a deterministic function of the
/// spectrum, potential and configuration.
pub fn integrate(spectrum: &KineticSpectrum, pot: PotentialParams, cfg: &KineticsConfig) -> Result<TrajectoryEnsemble> {
    cfg.validate(spectrum, pot)?;
    let lambdas = spectrum.lambdas().to_vec();
    let n = lambdas.len();
    let c = cfg.initial_amplitude;
    let scale = c.abs().max(pot.a0().filter(|a| *a > 0.0).map_or(0.0, f64::sqrt));
    let limit = 1e6 * if scale > 0.0 { scale } else { 1.0 };
    let decay: Vec<f64> = lambdas.iter().map(|l| (-l * cfg.dt).exp()).collect();
    let mut refs_init = cfg.reference_steps.clone();
    refs_init.sort_unstable();
    refs_init.dedup();
    let cfg = KineticsConfig { reference_steps: refs_init, ..cfg.clone() };
    let mut reals: Vec<Realization> = (0..cfg.ensemble)
        .map(|r| Realization {
            q: vec![c; n],
            rng: rng::stream(cfg.seed, &[r as u64]),
            a: {
                let mut v = Vec::with_capacity(cfg.steps + 1);
                v.push(c * c);
                v
            },
            diverged_at: None,
            refs: vec![Vec::new(); cfg.reference_steps.len()],
        })
        .collect();
    if let Some(pos) = cfg.reference_steps.iter().position(|&s| s == 0) {
        reals.iter_mut().for_each(|r| r.refs[pos] = r.q.clone());
    }
    let rows = cfg.steps + 1;
    let mut sum_q = vec![0.0; rows * n];
    let mut sum_q2 = vec![0.0; rows * n];
    let mut cross: Vec<(usize, Vec<f64>)> = cfg.reference_steps.iter().map(|&s| (s, vec![0.0; (rows - s) * n])).collect();
    let mut live = vec![0usize; rows];
    let accumulate =
        |reals: &[Realization], s: usize, sum_q: &mut [f64], sum_q2: &mut [f64], cross: &mut [(usize, Vec<f64>)], live: &mut [usize]| {
            let sq = &mut sum_q[s * n..(s + 1) * n];
            let sq2 = &mut sum_q2[s * n..(s + 1) * n];
            for r in reals.iter().filter(|r| r.diverged_at.is_none()) {
                live[s] += 1;
                for ((a, b), &q) in sq.iter_mut().zip(sq2.iter_mut()).zip(&r.q) {
                    *a += q;
                    *b += q * q;
                }
                for (k, (s0, acc)) in cross.iter_mut().enumerate() {
                    if s >= *s0 {
                        let row = &mut acc[(s - *s0) * n..(s - *s0 + 1) * n];
                        for ((x, &q), &q0) in row.iter_mut().zip(&r.q).zip(&r.refs[k]) {
                            *x += q * q0;
                        }
                    }
                }
            }
        };
    accumulate(&reals, 0, &mut sum_q, &mut sum_q2, &mut cross, &mut live);
    for s in 1..rows {
        #[cfg(feature = "parallel")]
        reals.par_iter_mut().for_each(|r| r.step(&lambdas, &decay, pot, &cfg, s, limit));
        #[cfg(not(feature = "parallel"))]
        reals.iter_mut().for_each(|r| r.step(&lambdas, &decay, pot, &cfg, s, limit));
        accumulate(&reals, s, &mut sum_q, &mut sum_q2, &mut cross, &mut live);
    }
    Ok(TrajectoryEnsemble {
        lambdas,
        times: (0..rows).map(|s| s as f64 * cfg.dt).collect(),
        initial_amplitude: c,
        diverged: reals.iter().map(|r| r.diverged_at).collect(),
        a_paths: reals.into_iter().map(|r| r.a).collect(),
        live,
        n_modes: n,
        sum_q,
        sum_q2,
        cross,
    })
}

impl TrajectoryEnsemble {
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn n_diverged(&self) -> usize {
        self.diverged.iter().filter(|d| d.is_some()).count()
    }

    fn check_live(&self) -> Result<()> {
        if self.live[0] == 0 || self.diverged.iter().all(Option::is_some) {
            return Err(Error::AllDiverged(self.diverged.len()));
        }
        Ok(())
    }

    /// Last step with at least one live realization.
    fn horizon(&self) -> usize {
        self.live.iter().rposition(|&l| l > 0).unwrap_or(0)
    }

    fn check_mode(&self, mu: usize) -> Result<()> {
        if mu >= self.n_modes {
            return Err(Error::InvalidArgument(format!("mode {mu} out of range for {} modes", self.n_modes)));
        }
        Ok(())
    }

    /// Ensemble mean and variance of q_μ(t) over live realizations.
    pub fn mode_moments(&self, mu: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_live()?;
        self.check_mode(mu)?;
        let n = self.n_modes;
        let h = self.horizon();
        let mut mean = Vec::with_capacity(h + 1);
        let mut var = Vec::with_capacity(h + 1);
        for s in 0..=h {
            let k = self.live[s] as f64;
            let m = self.sum_q[s * n + mu] / k;
            mean.push(m);
            let v = if k > 1.0 { (self.sum_q2[s * n + mu] - k * m * m) / (k - 1.0) } else { 0.0 };
            var.push(v.max(0.0));
        }
        Ok((mean, var))
    }

    fn series(&self, label: SeriesLabel, from: usize, values: Vec<f64>) -> Result<ObservableSeries> {
        let to = from + values.len();
        ObservableSeries::new(label, self.times[from..to].to_vec(), values, self.live[from..to].to_vec())
    }
}

/// Ensemble mean of a_r(t).
pub fn observable_a(ens: &TrajectoryEnsemble) -> Result<ObservableSeries> {
    ens.check_live()?;
    let h = ens.horizon();
    let c2 = ens.initial_amplitude * ens.initial_amplitude;
    let values = (0..=h)
        .map(|s| {
            if s == 0 {
                return c2;
            }
            let (sum, k) = ens.a_paths.iter().filter_map(|p| p.get(s)).fold((0.0, 0usize), |(a, k), v| (a + v, k + 1));
            sum / k as f64
        })
        .collect();
    ens.series(SeriesLabel::A, 0, values)
}

/// F_μ(t, t₀) = ⟨q_μ(t) q_μ(t₀)⟩ for t ≥ t₀. For t₀ = 0 this is c·⟨q_μ(t)⟩;
/// other t₀ must have been listed in [`KineticsConfig::reference_steps`].
pub fn correlation_f(ens: &TrajectoryEnsemble, mu: usize, t0_index: usize) -> Result<ObservableSeries> {
    ens.check_live()?;
    ens.check_mode(mu)?;
    let n = ens.n_modes;
    let h = ens.horizon();
    let label = SeriesLabel::FMu { mode: mu, t0_index };
    if let Some((_, acc)) = ens.cross.iter().find(|(s, _)| *s == t0_index) {
        if t0_index > h {
            return Err(Error::AllDiverged(ens.diverged.len()));
        }
        let values = (t0_index..=h).map(|s| acc[(s - t0_index) * n + mu] / ens.live[s] as f64).collect();
        return ens.series(label, t0_index, values);
    }
    if t0_index != 0 {
        return Err(Error::InvalidArgument(format!("t0 index {t0_index} was not tracked during integration")));
    }
    let c = ens.initial_amplitude;
    let values = (0..=h).map(|s| if s == 0 { c * c } else { c * ens.sum_q[s * n + mu] / ens.live[s] as f64 }).collect();
    ens.series(label, 0, values)
}

/// K(t) = (1/N_c) Σ_μ F_μ(t, 0).
pub fn correlation_k(ens: &TrajectoryEnsemble) -> Result<ObservableSeries> {
    ens.check_live()?;
    let n = ens.n_modes;
    let c = ens.initial_amplitude;
    let h = ens.horizon();
    let values = (0..=h)
        .map(|s| if s == 0 { c * c } else { c * ens.sum_q[s * n..(s + 1) * n].iter().sum::<f64>() / (n as f64 * ens.live[s] as f64) })
        .collect();
    ens.series(SeriesLabel::K, 0, values)
}
