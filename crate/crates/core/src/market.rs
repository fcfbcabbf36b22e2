//! Price panels, log-returns, correlation matrices and GBM surrogates.

use std::fs;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::speclin::{self, SymmetricMatrix};
use crate::{rng, Error, Result};

pub mod synth;

/// Aligned daily closing prices; `prices[i][t]` is asset `i` on `dates[t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    tickers: Vec<String>,
    dates: Vec<NaiveDate>,
    prices: Vec<Vec<f64>>,
}

impl PricePanel {
    pub fn new(tickers: Vec<String>, dates: Vec<NaiveDate>, prices: Vec<Vec<f64>>) -> Result<Self> {
        if tickers.len() != prices.len() {
            return Err(Error::InvalidArgument(format!("{} tickers for {} price rows", tickers.len(), prices.len())));
        }
        if tickers.is_empty() || dates.is_empty() {
            return Err(Error::NoData);
        }
        if dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("dates must be strictly increasing".into()));
        }
        for (t, row) in tickers.iter().zip(&prices) {
            if row.len() != dates.len() {
                return Err(Error::InvalidArgument(format!("asset {t} has {} prices for {} dates", row.len(), dates.len())));
            }
            if let Some(k) = row.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
                return Err(Error::InvalidArgument(format!("asset {t} has non-positive price on {}", dates[k])));
            }
        }
        Ok(Self { tickers, dates, prices })
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn prices(&self) -> &[Vec<f64>] {
        &self.prices
    }

    pub fn n_assets(&self) -> usize {
        self.tickers.len()
    }

    pub fn n_days(&self) -> usize {
        self.dates.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel {
    pub tickers: Vec<String>,
    pub dates: Vec<NaiveDate>,
    pub returns: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbmParams {
    pub mu: f64,
    pub sigma: f64,
    pub s0: f64,
}

fn parse_cell(cell: &str) -> Option<f64> {
    let c = cell.trim();
    if c.is_empty() {
        return None;
    }
    c.parse::<f64>().ok().filter(|v| v.is_finite() && *v > 0.0)
}

/// Reads a `date,T1,T2,…` CSV of closing prices.
///
/// Lines starting with `#` are ignored. Empty, unparseable or non-positive
/// cells count as missing. Dates whose fraction of valid cells is below
/// `min_coverage` are dropped first; every asset still missing a cell is
/// then dropped. At least 2 assets and 8 dates must remain.
pub fn load_prices<P: AsRef<Path>>(path: P, min_coverage: f64) -> Result<PricePanel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    parse_prices(&text, min_coverage)
}

/// As [`load_prices`] for in-memory CSV text.
pub fn parse_prices(text: &str, min_coverage: f64) -> Result<PricePanel> {
    if !(0.0..=1.0).contains(&min_coverage) {
        return Err(Error::InvalidArgument(format!("min_coverage {min_coverage} outside [0, 1]")));
    }
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = match reader.headers() {
        Ok(h) if !h.is_empty() => h.clone(),
        Ok(_) => return Err(Error::NoData),
        Err(e) => return Err(e.into()),
    };
    if !header.get(0).is_some_and(|h| h.eq_ignore_ascii_case("date")) {
        return Err(Error::Parse("first column must be named 'date'".into()));
    }
    let tickers: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    let mut rows: Vec<(NaiveDate, Vec<Option<f64>>)> = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        let date_str = rec.get(0).unwrap_or("");
        let date = NaiveDate::parse_from_str(date_str, "%Y-%m-%d")
            .map_err(|_| Error::Parse(format!("data row {}: bad date '{date_str}'", line + 1)))?;
        let cells = (0..tickers.len()).map(|k| rec.get(k + 1).and_then(parse_cell)).collect();
        rows.push((date, cells));
    }
    if rows.is_empty() {
        return Err(Error::NoData);
    }
    rows.sort_by_key(|r| r.0);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::Parse(format!("duplicate date {}", w[0].0)));
    }
    let n = tickers.len().max(1) as f64;
    rows.retain(|(_, cells)| cells.iter().filter(|c| c.is_some()).count() as f64 / n >= min_coverage);
    let keep: Vec<usize> = (0..tickers.len()).filter(|&k| !rows.is_empty() && rows.iter().all(|r| r.1[k].is_some())).collect();
    if keep.len() < 2 || rows.len() < 8 {
        return Err(Error::InvalidArgument(format!(
            "{} complete assets over {} dates after filtering (need at least 2 and 8)",
            keep.len(),
            rows.len()
        )));
    }
    let dates = rows.iter().map(|r| r.0).collect();
    let prices = keep.iter().map(|&k| rows.iter().map(|r| r.1[k].unwrap()).collect()).collect();
    PricePanel::new(keep.iter().map(|&k| tickers[k].clone()).collect(), dates, prices)
}

/// Writes a panel in the ingestion schema, preceded by `# ` comment lines.
pub fn write_prices<W: Write>(panel: &PricePanel, mut out: W, comments: &[String]) -> Result<()> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["date".to_string()];
    header.extend(panel.tickers.iter().cloned());
    w.write_record(&header)?;
    for (t, d) in panel.dates.iter().enumerate() {
        let mut rec = vec![d.format("%Y-%m-%d").to_string()];
        rec.extend(panel.prices.iter().map(|row| row[t].to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn log_returns(panel: &PricePanel) -> ReturnPanel {
    let returns = panel.prices.iter().map(|row| row.windows(2).map(|w| w[1].ln() - w[0].ln()).collect()).collect();
    ReturnPanel { tickers: panel.tickers.clone(), dates: panel.dates[1..].to_vec(), returns }
}

/// Pearson correlation of log-returns (population moments over the return
/// dates). The diagonal is exactly 1 and entries are clamped to [−1, 1].
pub fn correlation_matrix(rp: &ReturnPanel) -> Result<SymmetricMatrix> {
    let n = rp.returns.len();
    let len = rp.returns.first().map_or(0, Vec::len);
    if len < 2 {
        return Err(Error::InvalidArgument(format!("{len} return dates; need at least 2")));
    }
    let mut z = vec![0.0; n * len];
    for (i, row) in rp.returns.iter().enumerate() {
        let m = row.iter().sum::<f64>() / len as f64;
        let dst = &mut z[i * len..(i + 1) * len];
        dst.iter_mut().zip(row).for_each(|(d, r)| *d = r - m);
        let ss: f64 = dst.iter().map(|v| v * v).sum();
        let scale = row.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        if ss == 0.0 || (ss / len as f64).sqrt() <= 1e-14 * scale {
            return Err(Error::ZeroVariance(rp.tickers[i].clone()));
        }
        let inv = 1.0 / ss.sqrt();
        dst.iter_mut().for_each(|v| *v *= inv);
    }
    let mut c = speclin::gram_upper(&z, n, len);
    for i in 0..n {
        c[i * n + i] = 1.0;
        for j in i + 1..n {
            c[i * n + j] = c[i * n + j].clamp(-1.0, 1.0);
        }
    }
    SymmetricMatrix::from_upper(n, c)
}

/// Mean of the off-diagonal entries.
pub fn mean_off_diagonal(m: &SymmetricMatrix) -> f64 {
    let n = m.dim();
    let total: f64 = (0..n).map(|i| m.row(i).iter().sum::<f64>() - m.get(i, i)).sum();
    total / (n * (n - 1)) as f64
}

/// GBM parameters of one price series: σ is the sample standard deviation of
/// daily log-returns and μ = mean log-return + σ²/2.
pub fn estimate_gbm(prices: &[f64]) -> Result<GbmParams> {
    if prices.len() < 8 {
        return Err(Error::InvalidArgument(format!("{} prices; need at least 8", prices.len())));
    }
    if prices.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
        return Err(Error::InvalidArgument("prices must be positive".into()));
    }
    let r: Vec<f64> = prices.windows(2).map(|w| w[1].ln() - w[0].ln()).collect();
    let m = r.iter().sum::<f64>() / r.len() as f64;
    let var = r.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (r.len() - 1) as f64;
    let sigma = var.sqrt();
    Ok(GbmParams { mu: m + 0.5 * var, sigma, s0: prices[0] })
}

/// S_t = S₀ exp((μ − σ²/2)t + σ Σ_{s≤t} ξ_s) for t = 0, …, horizon−1.
pub fn simulate_gbm(params: GbmParams, horizon: usize, noise: &[f64]) -> Result<Vec<f64>> {
    if horizon < 1 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    if noise.len() + 1 < horizon {
        return Err(Error::InvalidArgument(format!("{} noise increments for horizon {horizon}", noise.len())));
    }
    let drift = params.mu - 0.5 * params.sigma * params.sigma;
    let mut w = 0.0;
    let mut out = Vec::with_capacity(horizon);
    out.push(params.s0);
    for t in 1..horizon {
        w += noise[t - 1];
        out.push(params.s0 * (drift * t as f64 + params.sigma * w).exp());
    }
    Ok(out)
}

/// Standard-normal increments of a Wiener stream.
pub fn wiener_increments(seed: u64, path: &[u64], len: usize) -> Vec<f64> {
    let mut r = rng::stream(seed, path);
    (0..len).map(|_| StandardNormal.sample(&mut r)).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BetaOptions {
    /// For β < 0, also give every asset the cross-sectional mean (μ, σ).
    pub share_gbm_params: bool,
}

/// Interpolates real prices with GBM surrogates.
///
/// β ≥ 0: S = β·S_GBM + (1−β)·S with one Wiener stream per asset.
/// β < 0: S = −β·S_GBM,corr + (1+β)·S where all assets share one stream.
pub fn build_beta_panel(real: &PricePanel, beta: f64, seed: u64, options: BetaOptions) -> Result<PricePanel> {
    if !(-1.0..=1.0).contains(&beta) {
        return Err(Error::InvalidArgument(format!("beta {beta} outside [-1, 1]")));
    }
    if beta == 0.0 {
        return Ok(real.clone());
    }
    let p = real.n_days();
    let mut params: Vec<GbmParams> = real.prices.iter().map(|row| estimate_gbm(row)).collect::<Result<_>>()?;
    let shared = (beta < 0.0).then(|| wiener_increments(seed, &[2], p - 1));
    if beta < 0.0 && options.share_gbm_params {
        let n = params.len() as f64;
        let mu = params.iter().map(|g| g.mu).sum::<f64>() / n;
        let sigma = params.iter().map(|g| g.sigma).sum::<f64>() / n;
        params.iter_mut().for_each(|g| {
            g.mu = mu;
            g.sigma = sigma;
        });
    }
    let weight = beta.abs();
    let prices = real
        .prices
        .iter()
        .zip(&params)
        .enumerate()
        .map(|(i, (row, gp))| {
            let own;
            let noise = match &shared {
                Some(s) => s.as_slice(),
                None => {
                    own = wiener_increments(seed, &[1, i as u64], p - 1);
                    own.as_slice()
                }
            };
            let sim = simulate_gbm(*gp, p, noise)?;
            Ok(sim.iter().zip(row).map(|(g, s)| weight * g + (1.0 - weight) * s).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    PricePanel::new(real.tickers.clone(), real.dates.clone(), prices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn dates(n: usize) -> Vec<NaiveDate> {
        synth::business_days(NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(), n)
    }

    #[test]
    fn drops_asset_with_missing_cell_and_sorts() {
        let text = "date,A,B,C\n2020-01-10,1,2,3\n2020-01-01,1,2,\n2020-01-02,1,2,3\n2020-01-03,1,2,3\n\
                    2020-01-06,1,2,3\n2020-01-07,1,2,3\n2020-01-08,1,2,3\n2020-01-09,1,2,3\n2020-01-13,1,2,3\n";
        let p = parse_prices(text, 0.0).unwrap();
        assert_eq!(p.tickers(), ["A", "B"]);
        assert_eq!(p.n_days(), 9);
        assert_eq!(p.dates()[0], NaiveDate::from_ymd_opt(2020, 1, 1).unwrap());
        let q = parse_prices(text, 1.0).unwrap();
        assert_eq!(q.n_assets(), 3);
        assert_eq!(q.n_days(), 8);
    }

    #[test]
    fn empty_input_reports_no_data() {
        assert!(matches!(parse_prices("", 0.0), Err(Error::NoData)));
        assert!(matches!(parse_prices("date,A,B\n", 0.0), Err(Error::NoData)));
        assert!(matches!(parse_prices("# only a comment\n", 0.0), Err(Error::NoData)));
    }

    #[test]
    fn log_returns_of_exponential_prices() {
        let e = std::f64::consts::E;
        let p = PricePanel::new(vec!["A".into(), "B".into()], dates(3), vec![vec![1.0, e, e * e], vec![5.0; 3]]).unwrap();
        let r = log_returns(&p);
        assert_abs_diff_eq!(r.returns[0][0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.returns[0][1], 1.0, epsilon = 1e-15);
        assert_eq!(r.returns[1], vec![0.0, 0.0]);
        let mixed = ReturnPanel { returns: vec![vec![0.1, -0.1], vec![0.0, 0.0]], ..r };
        assert!(matches!(correlation_matrix(&mixed), Err(Error::ZeroVariance(t)) if t == "B"));
    }

    #[test]
    fn perfect_and_anti_correlation() {
        let a = vec![0.1, -0.2, 0.05, 0.3];
        let rp = ReturnPanel {
            tickers: vec!["A".into(), "B".into(), "C".into()],
            dates: dates(4),
            returns: vec![a.clone(), a.clone(), a.iter().map(|x| -x).collect()],
        };
        let c = correlation_matrix(&rp).unwrap();
        assert_abs_diff_eq!(c.get(0, 1), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.get(0, 2), -1.0, epsilon = 1e-15);
        assert_eq!(c.get(2, 2), 1.0);
    }

    #[test]
    fn correlation_matches_double_loop() {
        let mut r = rng::stream(3, &[]);
        let returns: Vec<Vec<f64>> = (0..5).map(|_| (0..100).map(|_| StandardNormal.sample(&mut r)).collect()).collect();
        let rp = ReturnPanel { tickers: (0..5).map(|i| i.to_string()).collect(), dates: dates(100), returns };
        let c = correlation_matrix(&rp).unwrap();
        let t = 100.0;
        for i in 0..5 {
            for j in 0..5 {
                let (ri, rj) = (&rp.returns[i], &rp.returns[j]);
                let mi = ri.iter().sum::<f64>() / t;
                let mj = rj.iter().sum::<f64>() / t;
                let cij = ri.iter().zip(rj).map(|(a, b)| a * b).sum::<f64>() / t - mi * mj;
                let si = (ri.iter().map(|a| a * a).sum::<f64>() / t - mi * mi).sqrt();
                let sj = (rj.iter().map(|a| a * a).sum::<f64>() / t - mj * mj).sqrt();
                assert_abs_diff_eq!(c.get(i, j), cij / (si * sj), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn gbm_estimates_on_deterministic_series() {
        let s: Vec<f64> = (0..50).map(|t| (0.001 * t as f64).exp()).collect();
        let g = estimate_gbm(&s).unwrap();
        assert_abs_diff_eq!(g.mu, 0.001, epsilon = 1e-12);
        assert_abs_diff_eq!(g.sigma, 0.0, epsilon = 1e-12);
        let g = estimate_gbm(&[7.0; 10]).unwrap();
        assert_eq!((g.mu, g.sigma, g.s0), (0.0, 0.0, 7.0));
        assert!(estimate_gbm(&[1.0; 7]).is_err());
    }

    #[test]
    fn gbm_without_noise_is_exponential() {
        let g = GbmParams { mu: 0.002, sigma: 0.0, s0: 3.0 };
        let path = simulate_gbm(g, 20, &wiener_increments(1, &[], 19)).unwrap();
        for (t, s) in path.iter().enumerate() {
            assert_abs_diff_eq!(*s, 3.0 * (0.002 * t as f64).exp(), epsilon = 1e-13);
        }
        let a = simulate_gbm(GbmParams { sigma: 0.02, ..g }, 20, &wiener_increments(4, &[], 19)).unwrap();
        let b = simulate_gbm(GbmParams { sigma: 0.02, ..g }, 20, &wiener_increments(4, &[], 19)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn beta_zero_is_identity_and_range_checked() {
        let p = synth::generate(&synth::SynthSpec::independent(6, 40, 1)).unwrap();
        assert_eq!(build_beta_panel(&p, 0.0, 9, BetaOptions::default()).unwrap(), p);
        assert!(build_beta_panel(&p, 1.5, 9, BetaOptions::default()).is_err());
        let a = build_beta_panel(&p, 0.5, 9, BetaOptions::default()).unwrap();
        assert_eq!(a, build_beta_panel(&p, 0.5, 9, BetaOptions::default()).unwrap());
        assert_ne!(a, build_beta_panel(&p, 0.5, 10, BetaOptions::default()).unwrap());
    }

    #[test]
    fn write_then_parse_round_trips() {
        let p = synth::generate(&synth::SynthSpec::independent(4, 12, 2)).unwrap();
        let mut buf = Vec::new();
        write_prices(&p, &mut buf, &["generated".into()]).unwrap();
        let back = parse_prices(std::str::from_utf8(&buf).unwrap(), 0.0).unwrap();
        assert_eq!(back, p);
    }
}
