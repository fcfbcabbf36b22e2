use std::path::Path;

use serde::Serialize;
use serde_json::json;
use spectral_kinetics::analytics::{self, SpectralDensity, TailFit, VolterraSolution};
use spectral_kinetics::detect::{self, DetectionReport};
use spectral_kinetics::kinetics::{self, KineticsConfig};
use spectral_kinetics::market::{self, synth, BetaOptions, PricePanel};
use spectral_kinetics::pipeline::{self, PreparedSpectrum};
use spectral_kinetics::rmt::{self, BulkSpectrum, KineticSpectrum, MpParams};
use spectral_kinetics::{Error, ObservableSeries};

use crate::config::{Command, RunConfig, TheorySource};
use crate::output::{self, Provenance};
use crate::svg::{Plot, Scale};
use crate::CliError;

pub fn dispatch(command: Command, cfg: &RunConfig) -> Result<(), CliError> {
    if command == Command::Synth {
        return synth(cfg);
    }
    let path = cfg.input_path.as_ref().expect("validated");
    let bytes = std::fs::read(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| CliError::Config(format!("{} is not UTF-8", path.display())))?;
    let real = market::parse_prices(&text, cfg.min_coverage)?;
    let prov = Provenance::new(cfg, Some(&bytes));
    output::ensure_dir(&cfg.out_dir)?;
    match command {
        Command::Spectrum => spectrum(cfg, &real, &prov),
        Command::Simulate => simulate(cfg, &real, &prov),
        Command::Analyze => analyze(cfg, &real, &prov),
        Command::Synth => unreachable!(),
    }
}

/// Cell failures: computation continues on the other cells and the run
/// ends with a nonzero status.
struct Failures {
    events: Vec<String>,
    all_input: bool,
    total: usize,
}

impl Failures {
    fn new() -> Self {
        Self { events: Vec::new(), all_input: true, total: 0 }
    }

    /// Records core errors; output errors abort the run.
    fn absorb(&mut self, beta: f64, ratio: Option<f64>, result: Result<(), CliError>) -> Result<(), CliError> {
        self.total += 1;
        match result {
            Ok(()) => Ok(()),
            Err(CliError::Core(e)) => {
                self.all_input &= e.is_input_error();
                let at = ratio.map_or(format!("beta={beta}"), |r| format!("beta={beta} T/Tc={r}"));
                let line = format!("{at}: cell failed: {e}");
                eprintln!("error: {line}");
                self.events.push(line);
                Ok(())
            }
            Err(e) => Err(e),
        }
    }

    fn finish(self) -> Result<(), CliError> {
        if self.events.is_empty() {
            Ok(())
        } else {
            Err(CliError::Cells { failed: self.events.len(), total: self.total, input: self.all_input })
        }
    }
}

fn surrogate(real: &PricePanel, beta: f64, cfg: &RunConfig) -> spectral_kinetics::Result<PricePanel> {
    let options = BetaOptions { share_gbm_params: cfg.share_gbm_params };
    market::build_beta_panel(real, beta, pipeline::panel_seed(cfg.seed, beta), options)
}

fn prepare(cfg: &RunConfig, real: &PricePanel, beta: f64) -> spectral_kinetics::Result<PreparedSpectrum> {
    let prepared = pipeline::prepare_spectrum(&surrogate(real, beta, cfg)?, &cfg.spectrum)?;
    if prepared.cutoff.no_gap_structure && !prepared.manual_cutoff {
        eprintln!("warning: beta={beta}: no clean spike/bulk gap at kappa = {}; treating every eigenvalue as bulk (set spectrum.cutoff_index to override)", cfg.spectrum.kappa);
    }
    Ok(prepared)
}

fn series_csv(path: &Path, series: &ObservableSeries, prov: &Provenance, extra: &[String]) -> Result<(), CliError> {
    let mut comments = prov.comments();
    comments.extend_from_slice(extra);
    output::write_with(path, |buf| series.write_csv(buf, &comments))
}

/// Spike/bulk threshold: midpoint of the gap at the cutoff.
fn lambda_c(prepared: &PreparedSpectrum) -> f64 {
    let e = &prepared.eigenvalues;
    let i = prepared.cutoff.index;
    if i == 0 {
        e[0]
    } else {
        0.5 * (e[i - 1] + e[i])
    }
}

fn spectrum(cfg: &RunConfig, real: &PricePanel, prov: &Provenance) -> Result<(), CliError> {
    let mut failures = Failures::new();
    for &beta in &cfg.betas {
        let result = spectrum_cell(cfg, real, beta, prov);
        failures.absorb(beta, None, result)?;
    }
    failures.finish()
}

fn spectrum_cell(cfg: &RunConfig, real: &PricePanel, beta: f64, prov: &Provenance) -> Result<(), CliError> {
    let prepared = prepare(cfg, real, beta)?;
    let dir = output::beta_dir(&cfg.out_dir, beta);
    let cut = prepared.cutoff.index;
    output::write_with(&dir.join("eigenvalues.csv"), |buf| {
        use std::io::Write;
        for c in prov.comments() {
            writeln!(buf, "# {c}")?;
        }
        writeln!(buf, "# beta={beta}")?;
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["index", "eigenvalue", "in_bulk", "lambda"])?;
        for (i, x) in prepared.eigenvalues.iter().enumerate() {
            let lambda = if i >= cut { prepared.kinetic.lambdas()[i - cut].to_string() } else { String::new() };
            w.write_record([i.to_string(), x.to_string(), (i >= cut).to_string(), lambda])?;
        }
        w.flush()?;
        Ok(())
    })?;
    let fit = |p: MpParams, ks: f64| {
        let (lo, hi) = p.edges();
        json!({ "sigma2": p.sigma2, "q": p.q, "x_minus": lo, "x_plus": hi, "ks_distance": ks })
    };
    let tc = pipeline::critical_for(&prepared.kinetic, cfg.potential).ok();
    let mut rescaled = fit(prepared.rescaled_fit, prepared.rescaled_ks);
    rescaled["n_outliers"] = json!(prepared.n_outliers);
    let body = json!({
        "beta": beta,
        "n_assets": prepared.n_assets,
        "n_returns": prepared.n_returns,
        "cutoff": {
            "index": cut,
            "lambda_c": lambda_c(&prepared),
            "no_gap_structure": prepared.cutoff.no_gap_structure,
            "manual": prepared.manual_cutoff,
        },
        "plain": fit(prepared.plain_fit, prepared.plain_ks),
        "rescaled": rescaled,
        "bulk": {
            "n": prepared.bulk.len(),
            "x_minus": prepared.bulk.x_minus,
            "x_plus": prepared.bulk.x_plus,
            "lower_edge_source": prepared.bulk.lower_edge_source,
        },
        "critical_temperature": tc,
    });
    output::write_json(&dir.join("mp_fit.json"), prov, &body)?;
    output::write_svg(&dir.join("spectrum.svg"), prov, spectrum_plot(&prepared, beta))
}

fn spectrum_plot(prepared: &PreparedSpectrum, beta: f64) -> Plot {
    let e = &prepared.eigenvalues;
    let n = e.len();
    let (lo, hi) = (e[n - 1].min(prepared.plain_fit.edges().0), e[0]);
    let bins = ((n as f64).sqrt().round() as usize).clamp(10, 60);
    let width = (hi - lo).max(1e-12) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in e {
        counts[(((x - lo) / width) as usize).min(bins - 1)] += 1;
    }
    let bars = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| (lo + i as f64 * width, lo + (i + 1) as f64 * width, c as f64 / (n as f64 * width)))
        .collect();
    let xs: Vec<f64> = (0..=400).map(|i| lo + (hi - lo) * i as f64 / 400.0).collect();
    let mut plot = Plot::new(&format!("Correlation spectrum, beta = {beta}"), "eigenvalue", "density");
    plot.bars(bars);
    let plain: Vec<f64> = xs.iter().map(|&x| prepared.plain_fit.density(x)).collect();
    plot.line("plain MP", &xs, &plain);
    let weight = (n - prepared.n_outliers) as f64 / n as f64;
    let rescaled: Vec<f64> = xs.iter().map(|&x| weight * prepared.rescaled_fit.density(x)).collect();
    plot.dashed("rescaled MP", &xs, &rescaled);
    plot.vertical("Lambda_c", lambda_c(prepared));
    plot
}

#[derive(Serialize)]
struct CellMetadata<'a> {
    command: &'static str,
    beta: f64,
    temperature_ratio: f64,
    temperature: f64,
    critical_temperature: analytics::CriticalTemperature,
    kinetics: &'a KineticsConfig,
    n_modes: usize,
    n_diverged: usize,
    config: &'a RunConfig,
}

fn simulate(cfg: &RunConfig, real: &PricePanel, prov: &Provenance) -> Result<(), CliError> {
    let mut failures = Failures::new();
    let mut log = Vec::new();
    for &beta in &cfg.betas {
        let prepared = match prepare(cfg, real, beta) {
            Ok(p) => p,
            Err(e) => {
                failures.absorb(beta, None, Err(e.into()))?;
                continue;
            }
        };
        for &ratio in &cfg.temperature_ratios {
            let result = simulate_cell(cfg, &prepared, beta, ratio, prov, &mut log);
            failures.absorb(beta, Some(ratio), result)?;
        }
    }
    log.extend(failures.events.iter().cloned());
    let mut text: String = prov.comments().iter().map(|c| format!("# {c}\n")).collect();
    for line in &log {
        text.push_str(line);
        text.push('\n');
    }
    output::write_bytes(&cfg.out_dir.join("divergence.log"), text.as_bytes())?;
    failures.finish()
}

fn simulate_cell(
    cfg: &RunConfig,
    prepared: &PreparedSpectrum,
    beta: f64,
    ratio: f64,
    prov: &Provenance,
    log: &mut Vec<String>,
) -> Result<(), CliError> {
    if let Some(&m) = cfg.modes.iter().find(|&&m| m >= prepared.kinetic.len()) {
        return Err(Error::InvalidArgument(format!("mode {m} out of range for a bulk of {} modes", prepared.kinetic.len())).into());
    }
    let critical = pipeline::critical_for(&prepared.kinetic, cfg.potential)?;
    let temperature = ratio * critical.tc;
    let t = &cfg.kinetics;
    let kcfg = KineticsConfig {
        temperature,
        dt: t.dt.unwrap_or_else(|| KineticsConfig::default_dt(&prepared.kinetic, cfg.potential, t.initial_amplitude, t.scheme)),
        steps: t.steps,
        ensemble: t.ensemble,
        seed: pipeline::cell_seed(cfg.seed, beta, ratio),
        initial_amplitude: t.initial_amplitude,
        scheme: t.scheme,
        reference_steps: vec![],
    };
    let ens = kinetics::integrate(&prepared.kinetic, cfg.potential, &kcfg)?;
    for (r, d) in ens.diverged.iter().enumerate() {
        if let Some(s) = d {
            log.push(format!("beta={beta} T/Tc={ratio}: realization {r} diverged at step {s} (t = {})", ens.times[*s]));
        }
    }
    let dir = output::cell_dir(&cfg.out_dir, beta, ratio);
    let cell = vec![format!("beta={beta}"), format!("temperature_ratio={ratio}"), format!("temperature={temperature}")];
    let a = kinetics::observable_a(&ens)?;
    series_csv(&dir.join("a_of_t.csv"), &a, prov, &cell)?;
    let mut f_plot = Plot::new(&format!("F_mu(t, 0) / c^2, beta = {beta}, T/Tc = {ratio}"), "t", "F / c^2").scales(Scale::Log, Scale::Log);
    let c2 = kcfg.initial_amplitude * kcfg.initial_amplitude;
    for &m in &cfg.modes {
        let f = kinetics::correlation_f(&ens, m, 0)?;
        series_csv(&dir.join(format!("F_mu_{m}.csv")), &f, prov, &cell)?;
        let norm: Vec<f64> = f.values.iter().map(|v| v / c2).collect();
        f_plot.line(&format!("mu = {m}"), &f.times, &norm);
    }
    let k = kinetics::correlation_k(&ens)?;
    series_csv(&dir.join("K.csv"), &k, prov, &cell)?;
    let a0 = cfg.potential.a0().unwrap_or(f64::NAN);
    let mut a_plot = Plot::new(&format!("a(t), beta = {beta}, T/Tc = {ratio}"), "t", "a");
    a_plot.line("ensemble mean", &a.times, &a.values);
    a_plot.horizontal("a0", a0);
    output::write_svg(&dir.join("a_of_t.svg"), prov, a_plot)?;
    output::write_svg(&dir.join("F_mu.svg"), prov, f_plot)?;
    let mut k_plot = Plot::new(&format!("K(t), beta = {beta}, T/Tc = {ratio}"), "t", "K").scales(Scale::Log, Scale::Log);
    k_plot.line("K", &k.times, &k.values);
    output::write_svg(&dir.join("K.svg"), prov, k_plot)?;
    let meta = CellMetadata {
        command: "simulate",
        beta,
        temperature_ratio: ratio,
        temperature,
        critical_temperature: critical,
        kinetics: &kcfg,
        n_modes: ens.n_modes(),
        n_diverged: ens.n_diverged(),
        config: cfg,
    };
    output::write_json(&dir.join("metadata.json"), prov, &meta)
}

#[derive(Serialize)]
struct TailEntry {
    source: &'static str,
    beta: Option<f64>,
    temperature_ratio: f64,
    temperature: f64,
    critical_temperature: f64,
    excluded_modes: usize,
    /// [t₁/10, t₁] with t₁ = 1/(2λ₁) the finite-size crossover, clipped to the horizon.
    window: Option<(f64, f64)>,
    g_exponent: Option<TailFit>,
    late_log_slope: Option<f64>,
    error: Option<String>,
}

fn volterra(
    kinetic: &KineticSpectrum,
    cfg: &RunConfig,
    ratio: f64,
    source: &'static str,
    beta: Option<f64>,
) -> Result<(TailEntry, Option<VolterraSolution>), CliError> {
    let a0 = cfg.potential.a0().expect("validated");
    let full = SpectralDensity::from_kinetic(kinetic);
    let critical = analytics::critical_temperature(a0, &full)?;
    let rho = full.regularized()?;
    let temperature = ratio * critical.tc;
    let mut entry = TailEntry {
        source,
        beta,
        temperature_ratio: ratio,
        temperature,
        critical_temperature: critical.tc,
        excluded_modes: critical.excluded,
        window: None,
        g_exponent: None,
        late_log_slope: None,
        error: None,
    };
    let opts = &cfg.analyze;
    let sol = match analytics::solve_g_volterra(a0, temperature, &rho, opts.volterra_dt, opts.volterra_steps) {
        Ok(sol) => sol,
        Err(e) => {
            entry.error = Some(e.to_string());
            return Ok((entry, None));
        }
    };
    let SpectralDensity::Discrete { lambdas, .. } = &rho else { unreachable!() };
    let l1 = lambdas.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = (0.5 / l1).min(opts.volterra_dt * opts.volterra_steps as f64);
    entry.window = Some((0.1 * hi, hi));
    match analytics::log_slope(&sol.g, 0.1 * hi, hi) {
        Ok(fit) => entry.g_exponent = Some(fit),
        Err(e) => entry.error = Some(e.to_string()),
    }
    entry.late_log_slope = analytics::tail_exponent(&sol.g, 0.25).ok().map(|f| f.exponent);
    Ok((entry, Some(sol)))
}

fn mp_spectrum(q: f64, n: usize) -> spectral_kinetics::Result<KineticSpectrum> {
    let eig = rmt::mp_quantile_spectrum(MpParams::new(1.0, q)?, n);
    rmt::lambda_map(&BulkSpectrum::new(&eig, 0, None)?)
}

fn analyze(cfg: &RunConfig, real: &PricePanel, prov: &Provenance) -> Result<(), CliError> {
    let sweep = cfg.sweep();
    let mut failures = Failures::new();
    let mut reports: Vec<DetectionReport> = Vec::new();
    let mut tails = Vec::new();
    let mut solutions: Vec<(String, VolterraSolution)> = Vec::new();
    let mut keep = |entry: TailEntry, sol: Option<VolterraSolution>, tails: &mut Vec<TailEntry>| {
        if let Some(sol) = sol {
            let label = match entry.beta {
                Some(b) => format!("beta={b} T/Tc={}", entry.temperature_ratio),
                None => format!("MP T/Tc={}", entry.temperature_ratio),
            };
            solutions.push((label, sol));
        }
        tails.push(entry);
    };
    for &beta in &cfg.betas {
        let prepared = match prepare(cfg, real, beta) {
            Ok(p) => p,
            Err(e) => {
                failures.absorb(beta, None, Err(e.into()))?;
                continue;
            }
        };
        for &ratio in &cfg.temperature_ratios {
            let seed = pipeline::cell_seed(cfg.seed, beta, ratio);
            let result = pipeline::run_cell(&prepared, &sweep, beta, ratio, &cfg.modes, seed).map(|cell| reports.push(cell.report));
            failures.absorb(beta, Some(ratio), result.map_err(CliError::from))?;
            if cfg.analyze.source == TheorySource::Panel {
                match volterra(&prepared.kinetic, cfg, ratio, "panel", Some(beta)) {
                    Ok((entry, sol)) => keep(entry, sol, &mut tails),
                    Err(e) => failures.absorb(beta, Some(ratio), Err(e))?,
                }
            }
        }
    }
    if let TheorySource::Mp { q, n } = cfg.analyze.source {
        let kinetic = mp_spectrum(q, n)?;
        for &ratio in &cfg.temperature_ratios {
            let (entry, sol) = volterra(&kinetic, cfg, ratio, "mp", None)?;
            keep(entry, sol, &mut tails);
        }
    }
    write_volterra(cfg, prov, &solutions)?;
    output::write_json(&cfg.out_dir.join("tail_exponents.json"), prov, &json!({ "entries": tails }))?;
    let mut comments = prov.comments();
    comments.push("one row per (beta, temperature_ratio, mode)".into());
    output::write_with(&cfg.out_dir.join("alpha_gamma.csv"), |buf| detect::write_reports_csv(&reports, buf, &comments))?;
    output::write_json(&cfg.out_dir.join("detection_report.json"), prov, &json!({ "reports": reports }))?;
    for (file, title, pick) in [
        ("alpha_beta.svg", "alpha", (|m: &detect::ModeReport| m.fit.map(|f| f.alpha)) as fn(&detect::ModeReport) -> Option<f64>),
        ("gamma_beta.svg", "gamma", |m| m.fit.map(|f| f.gamma)),
        ("second_derivative.svg", "max short-time F''", |m| m.second_derivative_max),
    ] {
        let mut plot = Plot::new(&format!("{title} against beta"), "beta", title);
        for &ratio in &cfg.temperature_ratios {
            for &mu in &cfg.modes {
                let (xs, ys): (Vec<f64>, Vec<f64>) =
                    reports.iter().filter(|r| r.temperature_ratio == ratio).filter_map(|r| Some((r.beta, pick(r.mode(mu)?)?))).unzip();
                plot.line(&format!("T/Tc={ratio} mu={mu}"), &xs, &ys);
            }
        }
        if file == "second_derivative.svg" {
            plot.horizontal("threshold", cfg.detect.threshold);
        }
        output::write_svg(&cfg.out_dir.join(file), prov, plot)?;
    }
    failures.finish()
}

fn write_volterra(cfg: &RunConfig, prov: &Provenance, solutions: &[(String, VolterraSolution)]) -> Result<(), CliError> {
    let stride = cfg.analyze.output_stride;
    output::write_with(&cfg.out_dir.join("G_volterra.csv"), |buf| {
        use std::io::Write;
        for c in prov.comments() {
            writeln!(buf, "# {c}")?;
        }
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["cell", "t", "G", "H", "F"])?;
        for (label, sol) in solutions {
            for i in (0..sol.g.len()).step_by(stride) {
                w.write_record([
                    label.clone(),
                    sol.g.times[i].to_string(),
                    sol.g.values[i].to_string(),
                    sol.h.values[i].to_string(),
                    sol.f.values[i].to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    })?;
    let mut plot = Plot::new("G(t) from the closed equation", "t", "G").scales(Scale::Log, Scale::Log);
    for (label, sol) in solutions {
        let idx: Vec<usize> = (1..sol.g.len()).step_by(stride).collect();
        let t: Vec<f64> = idx.iter().map(|&i| sol.g.times[i]).collect();
        let g: Vec<f64> = idx.iter().map(|&i| sol.g.values[i]).collect();
        plot.line(label, &t, &g);
    }
    output::write_svg(&cfg.out_dir.join("G_volterra.svg"), prov, plot)
}

fn synth(cfg: &RunConfig) -> Result<(), CliError> {
    let prov = Provenance::new(cfg, None);
    let spec = &cfg.synth.spec;
    let panel = synth::generate(spec)?;
    let path = cfg.out_dir.join(&cfg.synth.file);
    let mut comments = prov.comments();
    comments.push(format!("synthetic {} panel, {} assets x {} days", kind_name(spec), spec.n_assets, spec.n_days));
    output::write_with(&path, |buf| market::write_prices(&panel, buf, &comments))?;
    let body = json!({ "file": cfg.synth.file, "spec": spec, "block_labels": spec.block_labels() });
    output::write_json(&cfg.out_dir.join("manifest.json"), &prov, &body)
}

fn kind_name(spec: &synth::SynthSpec) -> &'static str {
    match spec.kind {
        synth::SynthKind::Independent => "independent",
        synth::SynthKind::SharedNoise { .. } => "shared-noise",
        synth::SynthKind::Blocks { .. } => "block-correlated",
    }
}
