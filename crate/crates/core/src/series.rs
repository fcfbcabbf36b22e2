//! Time series of ensemble observables and their CSV/JSON serialisation.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SeriesLabel {
    A,
    FMu { mode: usize, t0_index: usize },
    K,
    G,
    H,
    F,
    AClosed,
}

impl SeriesLabel {
    pub fn name(&self) -> String {
        match self {
            SeriesLabel::A => "a".into(),
            SeriesLabel::FMu { mode, t0_index: 0 } => format!("F_mu_{mode}"),
            SeriesLabel::FMu { mode, t0_index } => format!("F_mu_{mode}_t0_{t0_index}"),
            SeriesLabel::K => "K".into(),
            SeriesLabel::G => "G".into(),
            SeriesLabel::H => "H".into(),
            SeriesLabel::F => "F".into(),
            SeriesLabel::AClosed => "a_closed".into(),
        }
    }
}

/// Values of one observable on a time grid, with the number of realizations
/// contributing at each time (1 for deterministic series).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableSeries {
    pub label: SeriesLabel,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub realization_counts: Vec<usize>,
}

impl ObservableSeries {
    pub fn new(label: SeriesLabel, times: Vec<f64>, values: Vec<f64>, realization_counts: Vec<usize>) -> Result<Self> {
        if times.len() != values.len() || times.len() != realization_counts.len() {
            return Err(Error::InvalidArgument(format!(
                "series {} has {} times, {} values and {} counts",
                label.name(),
                times.len(),
                values.len(),
                realization_counts.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("series {} is not finite at t = {}", label.name(), times[i])));
        }
        Ok(Self { label, times, values, realization_counts })
    }

    /// A deterministic series (one "realization" per point).
    pub fn deterministic(label: SeriesLabel, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let n = times.len();
        Self::new(label, times, values, vec![1; n])
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Realization count at the final time.
    pub fn realization_count(&self) -> usize {
        self.realization_counts.last().copied().unwrap_or(0)
    }

    /// Grid spacing if the grid is uniform to 1e−9 relative.
    pub fn uniform_step(&self) -> Option<f64> {
        if self.times.len() < 2 {
            return None;
        }
        let dt = (self.times[self.times.len() - 1] - self.times[0]) / (self.times.len() - 1) as f64;
        let uniform = self.times.windows(2).all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt.abs().max(1e-300));
        (uniform && dt > 0.0).then_some(dt)
    }

    /// CSV with columns `t,value,n_realizations`; each comment line is written
    /// first, prefixed with `# `.
    pub fn write_csv<W: Write>(&self, mut out: W, comments: &[String]) -> Result<()> {
        for c in comments {
            writeln!(out, "# {c}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "value", "n_realizations"])?;
        for ((t, v), n) in self.times.iter().zip(&self.values).zip(&self.realization_counts) {
            w.write_record([t.to_string(), v.to_string(), n.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_shape() {
        let s = ObservableSeries::new(SeriesLabel::K, vec![0.0, 0.5], vec![1.0, 0.25], vec![10, 9]).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf, &["config_hash abc".into()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "# config_hash abc\nt,value,n_realizations\n0,1,10\n0.5,0.25,9\n");
        let back: ObservableSeries = serde_json::from_str(&s.to_json().unwrap()).unwrap();
        assert_eq!(back, s);
        assert_eq!(s.uniform_step(), Some(0.5));
    }

    #[test]
    fn rejects_non_finite_and_mismatched() {
        assert!(ObservableSeries::deterministic(SeriesLabel::G, vec![0.0], vec![f64::NAN]).is_err());
        assert!(ObservableSeries::new(SeriesLabel::G, vec![0.0], vec![1.0], vec![]).is_err());
    }
}
