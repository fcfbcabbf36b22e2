//! Run configuration: an INI file (sections of `key = value` lines) plus
//! command-line overrides, validated in full before any computation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ini::Ini;
use serde::Serialize;
use spectral_kinetics::detect::DetectConfig;
use spectral_kinetics::kinetics::{PotentialParams, Scheme};
use spectral_kinetics::market::synth::{SynthKind, SynthSpec};
use spectral_kinetics::market::BetaOptions;
use spectral_kinetics::pipeline::{KineticsTemplate, SpectrumOptions, SweepConfig};

use crate::CliError;

/// Which spectrum `analyze` feeds to the closed theory.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TheorySource {
    /// The λ-mapped bulk of each β panel.
    Panel,
    /// The λ-mapped quantiles of an MP law with σ² = 1.
    Mp { q: f64, n: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyzeOptions {
    pub source: TheorySource,
    pub volterra_dt: f64,
    pub volterra_steps: usize,
    /// Every k-th Volterra node is written to G_volterra.csv.
    pub output_stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthOptions {
    pub spec: SynthSpec,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    /// Price panel as written in the config file.
    pub input: Option<String>,
    #[serde(skip)]
    pub input_path: Option<PathBuf>,
    pub min_coverage: f64,
    #[serde(skip)]
    pub out_dir: PathBuf,
    pub betas: Vec<f64>,
    pub temperature_ratios: Vec<f64>,
    pub modes: Vec<usize>,
    pub potential: PotentialParams,
    pub kinetics: KineticsTemplate,
    pub spectrum: SpectrumOptions,
    pub detect: DetectConfig,
    pub share_gbm_params: bool,
    pub seed: u64,
    pub analyze: AnalyzeOptions,
    pub synth: SynthOptions,
}

/// Flag overrides; `None` keeps the file value.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub betas: Option<Vec<f64>>,
    pub temperature_ratios: Option<Vec<f64>>,
    pub modes: Option<Vec<usize>>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Simulate,
    Analyze,
    Synth,
}

const KNOWN: &[(&str, &[&str])] = &[
    ("input", &["prices", "min_coverage"]),
    ("output", &["dir"]),
    ("grid", &["betas", "temperature_ratios", "modes"]),
    ("potential", &["a0", "h0", "h1"]),
    ("kinetics", &["dt", "steps", "ensemble", "c", "scheme"]),
    ("spectrum", &["kappa", "cutoff_index", "q", "free_q", "n_outliers"]),
    ("detect", &["threshold", "smooth_width", "short_window", "fit_window", "noise_floor"]),
    ("surrogate", &["share_gbm_params"]),
    ("seed", &["master"]),
    ("analyze", &["source", "mp_q", "mp_n", "volterra_dt", "volterra_steps", "output_stride"]),
    ("synth", &["kind", "assets", "days", "rho", "fractions", "seed", "file"]),
];

struct Table {
    values: BTreeMap<(String, String), String>,
}

impl Table {
    fn raw(&self, section: &str, key: &str) -> Option<&str> {
        self.values.get(&(section.to_string(), key.to_string())).map(String::as_str).filter(|v| !v.is_empty())
    }

    fn parse<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<T>, CliError> {
        self.raw(section, key)
            .map(|v| v.parse::<T>().map_err(|_| CliError::Config(format!("{section}.{key}: cannot parse {v:?}"))))
            .transpose()
    }

    fn get<T: std::str::FromStr>(&self, section: &str, key: &str, default: T) -> Result<T, CliError> {
        Ok(self.parse(section, key)?.unwrap_or(default))
    }

    fn list<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<Vec<T>>, CliError> {
        self.values
            .get(&(section.to_string(), key.to_string()))
            .map(|v| parse_list(v).map_err(|e| CliError::Config(format!("{section}.{key}: {e}"))))
            .transpose()
    }

    fn pair(&self, section: &str, key: &str) -> Result<Option<(f64, f64)>, CliError> {
        match self.list::<f64>(section, key)? {
            None => Ok(None),
            Some(v) if v.len() == 2 => Ok(Some((v[0], v[1]))),
            Some(_) => Err(CliError::Config(format!("{section}.{key}: expected two comma-separated numbers"))),
        }
    }
}

/// Comma-separated list; an empty string is an empty list.
pub fn parse_list<T: std::str::FromStr>(text: &str) -> Result<Vec<T>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|_| format!("cannot parse list item {s:?}")))
        .collect()
}

fn read_table(path: &Path) -> Result<Table, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let ini = Ini::load_from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut values = BTreeMap::new();
    for (section, props) in ini.iter() {
        let section = section.unwrap_or("").to_string();
        for (key, value) in props.iter() {
            let known = KNOWN.iter().find(|(s, _)| *s == section).is_some_and(|(_, keys)| keys.contains(&key));
            if !known {
                let name = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
                return Err(CliError::Config(format!("unknown config key {name}")));
            }
            values.insert((section.clone(), key.to_string()), value.trim().to_string());
        }
    }
    Ok(Table { values })
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &Overrides, command: Command) -> Result<Self, CliError> {
        let table = read_table(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let cfg = Self::from_table(&table, base, overrides)?;
        cfg.validate(command)?;
        Ok(cfg)
    }

    fn from_table(t: &Table, base: &Path, o: &Overrides) -> Result<Self, CliError> {
        let input = t.raw("input", "prices").map(str::to_string);
        let input_path = input.as_ref().map(|p| base.join(p));
        let out_dir = match &o.out_dir {
            Some(dir) => dir.clone(),
            None => base.join(t.raw("output", "dir").unwrap_or("out")),
        };
        let a0 = t.parse::<f64>("potential", "a0")?;
        let h0 = t.parse::<f64>("potential", "h0")?;
        let h1 = t.get("potential", "h1", 1.0)?;
        let potential = match (a0, h0) {
            (Some(_), Some(_)) => return Err(CliError::Config("potential: give either a0 or h0, not both".into())),
            (Some(a0), None) => PotentialParams::from_minimum(a0, h1),
            (None, Some(h0)) => PotentialParams { h0, h1 },
            (None, None) => PotentialParams::from_minimum(2.0, h1),
        };
        let scheme = match t.raw("kinetics", "scheme").unwrap_or("exponential") {
            "exponential" => Scheme::Exponential,
            "euler_maruyama" | "euler-maruyama" => Scheme::EulerMaruyama,
            other => return Err(CliError::Config(format!("kinetics.scheme: unknown scheme {other:?}"))),
        };
        let defaults = SweepConfig::default();
        let kinetics = KineticsTemplate {
            dt: t.parse("kinetics", "dt")?,
            steps: t.get("kinetics", "steps", defaults.kinetics.steps)?,
            ensemble: t.get("kinetics", "ensemble", defaults.kinetics.ensemble)?,
            initial_amplitude: t.get("kinetics", "c", 1.0)?,
            scheme,
        };
        let spectrum = SpectrumOptions {
            kappa: t.get("spectrum", "kappa", defaults.spectrum.kappa)?,
            manual_cutoff: t.parse("spectrum", "cutoff_index")?,
            q: t.parse("spectrum", "q")?,
            free_q: t.get("spectrum", "free_q", false)?,
            n_outliers: t.parse("spectrum", "n_outliers")?,
        };
        let d = DetectConfig::default();
        let detect = DetectConfig {
            threshold: t.get("detect", "threshold", d.threshold)?,
            smooth_width: t.get("detect", "smooth_width", d.smooth_width)?,
            short_window: t.pair("detect", "short_window")?.unwrap_or(d.short_window),
            fit_window: t.pair("detect", "fit_window")?,
            noise_floor: t.get("detect", "noise_floor", d.noise_floor)?,
        };
        let source = match t.raw("analyze", "source").unwrap_or("panel") {
            "panel" => TheorySource::Panel,
            "mp" => TheorySource::Mp { q: t.get("analyze", "mp_q", 0.5)?, n: t.get("analyze", "mp_n", 1000)? },
            other => return Err(CliError::Config(format!("analyze.source: expected panel or mp, got {other:?}"))),
        };
        let analyze = AnalyzeOptions {
            source,
            volterra_dt: t.get("analyze", "volterra_dt", 0.02)?,
            volterra_steps: t.get("analyze", "volterra_steps", 20_000)?,
            output_stride: t.get("analyze", "output_stride", 10)?,
        };
        let seed = o.seed.map_or_else(|| t.get("seed", "master", 0u64), Ok)?;
        let n_assets = t.get("synth", "assets", 20usize)?;
        let n_days = t.get("synth", "days", 250usize)?;
        let synth_seed = t.get("synth", "seed", seed)?;
        let rho = t.get("synth", "rho", 0.6)?;
        let spec = match t.raw("synth", "kind").unwrap_or("independent") {
            "independent" => SynthSpec::independent(n_assets, n_days, synth_seed),
            "shared_noise" => SynthSpec::shared_noise(n_assets, n_days, rho, synth_seed),
            "blocks" => {
                let fractions = t.list("synth", "fractions")?.unwrap_or_else(|| vec![0.5, 0.5]);
                SynthSpec::blocks(n_assets, n_days, fractions, rho, synth_seed)
            }
            other => return Err(CliError::Config(format!("synth.kind: unknown kind {other:?}"))),
        };
        let synth = SynthOptions { spec, file: t.raw("synth", "file").unwrap_or("panel.csv").to_string() };
        Ok(Self {
            input,
            input_path,
            min_coverage: t.get("input", "min_coverage", 1.0)?,
            out_dir,
            betas: o.betas.clone().map_or_else(|| Ok(t.list("grid", "betas")?.unwrap_or_else(|| vec![0.0])), Ok::<_, CliError>)?,
            temperature_ratios: o
                .temperature_ratios
                .clone()
                .map_or_else(|| Ok(t.list("grid", "temperature_ratios")?.unwrap_or_else(|| vec![0.1])), Ok::<_, CliError>)?,
            modes: o.modes.clone().map_or_else(|| Ok(t.list("grid", "modes")?.unwrap_or_else(|| vec![0, 1])), Ok::<_, CliError>)?,
            potential,
            kinetics,
            spectrum,
            detect,
            share_gbm_params: t.get("surrogate", "share_gbm_params", false)?,
            seed,
            analyze,
            synth,
        })
    }

    fn validate(&self, command: Command) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if command != Command::Synth {
            match &self.input_path {
                None => return bad("input.prices is required".into()),
                Some(p) if !p.is_file() => return bad(format!("input file {} does not exist", p.display())),
                _ => {}
            }
            if self.betas.is_empty() {
                return bad("grid.betas is empty".into());
            }
            if let Some(b) = self.betas.iter().find(|b| !(-1.0..=1.0).contains(*b)) {
                return bad(format!("beta {b} outside [-1, 1]"));
            }
        }
        if matches!(command, Command::Simulate | Command::Analyze) {
            if self.temperature_ratios.is_empty() {
                return bad("grid.temperature_ratios is empty".into());
            }
            if let Some(r) = self.temperature_ratios.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
                return bad(format!("temperature ratio {r} must be finite and >= 0"));
            }
            if self.modes.is_empty() {
                return bad("grid.modes is empty".into());
            }
            if !matches!(self.potential.a0(), Some(a) if a > 0.0) {
                return bad("potential needs h1 > 0 and a minimum a0 > 0".into());
            }
            if self.kinetics.steps == 0 || self.kinetics.ensemble == 0 {
                return bad("kinetics.steps and kinetics.ensemble must be positive".into());
            }
            if let Some(dt) = self.kinetics.dt {
                if !(dt > 0.0 && dt.is_finite()) {
                    return bad(format!("kinetics.dt = {dt} must be positive"));
                }
            }
            if self.detect.smooth_width.is_multiple_of(2) {
                return bad(format!("detect.smooth_width = {} must be odd", self.detect.smooth_width));
            }
        }
        if command == Command::Analyze {
            let a = &self.analyze;
            if !(a.volterra_dt > 0.0) || a.volterra_steps == 0 || a.output_stride == 0 {
                return bad("analyze: volterra_dt, volterra_steps and output_stride must be positive".into());
            }
            if let TheorySource::Mp { q, n } = a.source {
                if !(q > 0.0) || n < 2 {
                    return bad("analyze: mp_q must be positive and mp_n at least 2".into());
                }
            }
        }
        if command == Command::Synth {
            let s = &self.synth.spec;
            if s.n_assets < 2 || s.n_days < 8 {
                return bad("synth needs at least 2 assets and 8 days".into());
            }
            if let SynthKind::SharedNoise { rho } | SynthKind::Blocks { rho, .. } = &s.kind {
                if !(0.0..=1.0).contains(rho) {
                    return bad(format!("synth.rho = {rho} outside [0, 1]"));
                }
            }
            if self.synth.file.contains('/') || self.synth.file.is_empty() {
                return bad("synth.file must be a plain file name".into());
            }
        }
        if !(self.min_coverage > 0.0 && self.min_coverage <= 1.0) {
            return bad(format!("input.min_coverage = {} outside (0, 1]", self.min_coverage));
        }
        Ok(())
    }

    pub fn sweep(&self) -> SweepConfig {
        SweepConfig {
            potential: self.potential,
            kinetics: self.kinetics.clone(),
            spectrum: self.spectrum.clone(),
            detect: self.detect.clone(),
            beta_options: BetaOptions { share_gbm_params: self.share_gbm_params },
            seed: self.seed,
        }
    }
}
