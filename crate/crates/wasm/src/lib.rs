//! Browser bindings. Every export returns a JSON string; errors come back
//! as `{"error": "..."}` so the page never sees a thrown exception.

use serde::Serialize;
use serde_json::json;
use spectral_kinetics::analytics::{self, SpectralDensity};
use spectral_kinetics::kinetics::{self, KineticsConfig, PotentialParams, Scheme};
use spectral_kinetics::rmt::{self, BulkSpectrum, KineticSpectrum, MpParams};
use spectral_kinetics::speclin;
use wasm_bindgen::prelude::*;

const MAX_DIM: usize = 600;
const MAX_POINTS: usize = 800;

fn respond<T: Serialize>(result: Result<T, String>) -> String {
    match result {
        Ok(v) => serde_json::to_string(&v).unwrap_or_else(|e| json!({ "error": e.to_string() }).to_string()),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

fn thin(len: usize) -> impl Iterator<Item = usize> {
    let stride = len.div_ceil(MAX_POINTS).max(1);
    (0..len).step_by(stride)
}

fn mp_kinetic(q: f64, n: usize) -> Result<KineticSpectrum, String> {
    let params = MpParams::new(1.0, q).map_err(|e| e.to_string())?;
    let eig = rmt::mp_quantile_spectrum(params, n);
    let bulk = BulkSpectrum::new(&eig, 0, None).map_err(|e| e.to_string())?;
    rmt::lambda_map(&bulk).map_err(|e| e.to_string())
}

/// Eigenvalues of one sampled Wishart matrix against the MP law.
#[wasm_bindgen]
pub fn wishart_spectrum(n: usize, p: usize, bins: usize, seed: u32) -> String {
    respond((|| {
        if !(2..=MAX_DIM).contains(&n) || p < 2 {
            return Err(format!("need 2 <= n <= {MAX_DIM} and p >= 2"));
        }
        let m = speclin::sample_wishart(n, p, 1.0, u64::from(seed)).map_err(|e| e.to_string())?;
        let eig = speclin::try_eigvalsh(&m).map_err(|e| e.to_string())?;
        let params = MpParams::for_wishart(1.0, n, p).map_err(|e| e.to_string())?;
        let (lo_edge, hi_edge) = params.edges();
        let lo = eig.iter().copied().fold(lo_edge, f64::min);
        let hi = eig.iter().copied().fold(hi_edge, f64::max);
        let bins = bins.clamp(5, 200);
        let width = (hi - lo).max(1e-12) / bins as f64;
        let mut counts = vec![0usize; bins];
        for &x in &eig {
            counts[(((x - lo) / width) as usize).min(bins - 1)] += 1;
        }
        let histogram: Vec<f64> = counts.iter().map(|&c| c as f64 / (n as f64 * width)).collect();
        let xs: Vec<f64> = (0..=300).map(|i| lo + (hi - lo) * i as f64 / 300.0).collect();
        let density: Vec<f64> = xs.iter().map(|&x| params.density(x)).collect();
        Ok(json!({
            "bin_lo": lo,
            "bin_width": width,
            "histogram": histogram,
            "x": xs,
            "density": density,
            "edges": [lo_edge, hi_edge],
            "ks": rmt::ks_distance(&eig, params),
        }))
    })())
}

/// G(t) and H(t) from the closed equation on an MP spectrum.
#[wasm_bindgen]
pub fn volterra_g(q: f64, n: usize, a0: f64, temperature_ratio: f64, dt: f64, steps: usize) -> String {
    respond((|| {
        if !(2..=20_000).contains(&n) || steps == 0 || steps > 20_000 {
            return Err("need 2 <= n <= 20000 and 1 <= steps <= 20000".into());
        }
        let full = SpectralDensity::from_kinetic(&mp_kinetic(q, n)?);
        let tc = analytics::critical_temperature(a0, &full).map_err(|e| e.to_string())?.tc;
        let rho = full.regularized().map_err(|e| e.to_string())?;
        let sol = analytics::solve_g_volterra(a0, temperature_ratio * tc, &rho, dt, steps).map_err(|e| e.to_string())?;
        let idx: Vec<usize> = thin(sol.g.len()).collect();
        let late = analytics::tail_exponent(&sol.g, 0.25).ok().map(|f| f.exponent);
        Ok(json!({
            "critical_temperature": tc,
            "t": idx.iter().map(|&i| sol.g.times[i]).collect::<Vec<_>>(),
            "G": idx.iter().map(|&i| sol.g.values[i]).collect::<Vec<_>>(),
            "H": idx.iter().map(|&i| sol.h.values[i]).collect::<Vec<_>>(),
            "late_log_slope": late,
        }))
    })())
}

/// Ensemble-mean a(t) from Langevin trajectories on an MP spectrum.
#[wasm_bindgen]
pub fn langevin_a(q: f64, n: usize, a0: f64, temperature_ratio: f64, steps: usize, ensemble: usize, seed: u32) -> String {
    respond((|| {
        if !(2..=2_000).contains(&n) || !(1..=20_000).contains(&steps) || !(1..=200).contains(&ensemble) {
            return Err("need 2 <= n <= 2000, 1 <= steps <= 20000 and 1 <= ensemble <= 200".into());
        }
        let spectrum = mp_kinetic(q, n)?;
        let pot = PotentialParams::from_minimum(a0, 1.0);
        let tc = analytics::critical_temperature(a0, &SpectralDensity::from_kinetic(&spectrum)).map_err(|e| e.to_string())?.tc;
        let cfg = KineticsConfig {
            temperature: temperature_ratio * tc,
            dt: KineticsConfig::default_dt(&spectrum, pot, 1.0, Scheme::Exponential),
            steps,
            ensemble,
            seed: u64::from(seed),
            initial_amplitude: 1.0,
            scheme: Scheme::Exponential,
            reference_steps: vec![],
        };
        let ens = kinetics::integrate(&spectrum, pot, &cfg).map_err(|e| e.to_string())?;
        let a = kinetics::observable_a(&ens).map_err(|e| e.to_string())?;
        let idx: Vec<usize> = thin(a.len()).collect();
        Ok(json!({
            "critical_temperature": tc,
            "dt": cfg.dt,
            "t": idx.iter().map(|&i| a.times[i]).collect::<Vec<_>>(),
            "a": idx.iter().map(|&i| a.values[i]).collect::<Vec<_>>(),
            "n_diverged": ens.n_diverged(),
        }))
    })())
}
