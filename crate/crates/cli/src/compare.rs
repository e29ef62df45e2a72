//! Two-sample comparison of experiment summaries.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use insitu_core::stats::{describe, mann_whitney_u, vargha_delaney_a12, SampleSet};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Generations,
    BestFitness,
    TotalWallMs,
}

impl Metric {
    pub const ALL: [Metric; 3] = [
        Metric::Generations,
        Metric::BestFitness,
        Metric::TotalWallMs,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Metric::Generations => "generations",
            Metric::BestFitness => "best_fitness",
            Metric::TotalWallMs => "total_wall_ms",
        }
    }
}

impl FromStr for Metric {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.key() == s)
            .ok_or_else(|| {
                CliError::Usage(format!(
                    "unknown metric {s:?}; expected generations, best_fitness or total_wall_ms"
                ))
            })
    }
}

/// Reads one value per replicate from a summary JSON.
///
/// The sample is labelled with the summary's directory name (or the file
/// stem when the file is not called `summary.json`).
pub fn load_metric(path: &Path, metric: Metric) -> Result<SampleSet, CliError> {
    let err = |msg: String| CliError::Input(format!("{}: {msg}", path.display()));
    let text = fs::read_to_string(path).map_err(|e| err(format!("cannot read: {e}")))?;
    let doc: serde_json::Value = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
    let replicates = doc
        .get("replicates")
        .and_then(|r| r.as_array())
        .ok_or_else(|| err("no \"replicates\" array".into()))?;
    let values = replicates
        .iter()
        .enumerate()
        .map(|(i, r)| {
            r.get(metric.key()).and_then(|v| v.as_f64()).ok_or_else(|| {
                err(format!(
                    "replicate {} has no numeric {:?}",
                    i + 1,
                    metric.key()
                ))
            })
        })
        .collect::<Result<Vec<f64>, _>>()?;
    Ok(SampleSet::new(sample_label(path), values))
}

fn sample_label(path: &Path) -> String {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("sample");
    if stem == "summary" {
        if let Some(dir) = path
            .parent()
            .and_then(|p| p.file_name())
            .and_then(|s| s.to_str())
        {
            return dir.to_string();
        }
    }
    stem.to_string()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub label: String,
    pub n: usize,
    pub median: f64,
    pub mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub metric: Metric,
    pub alpha: f64,
    pub a: SampleReport,
    pub b: SampleReport,
    pub u_a: f64,
    pub u_b: f64,
    pub z: f64,
    pub p_two_sided: f64,
    /// Probability that a value from `a` exceeds one from `b`, ties counting
    /// half.
    pub a12: f64,
    pub significant: bool,
}

impl CompareReport {
    pub fn verdict(&self) -> String {
        let word = if self.significant {
            "significant"
        } else {
            "not significant"
        };
        format!("{word} at alpha = {}", self.alpha)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "metric: {}", self.metric.key());
        for s in [&self.a, &self.b] {
            let _ = writeln!(
                out,
                "{}: n = {}, median = {}, mean = {}",
                s.label, s.n, s.median, s.mean
            );
        }
        let _ = writeln!(
            out,
            "U = {} (U' = {}), z = {:.4}",
            self.u_a, self.u_b, self.z
        );
        let _ = writeln!(out, "p = {:.6e} (two-sided)", self.p_two_sided);
        let _ = writeln!(
            out,
            "A12({}, {}) = {:.4}",
            self.a.label, self.b.label, self.a12
        );
        let _ = writeln!(out, "{}", self.verdict());
        out
    }
}

pub fn compare(
    a: &SampleSet,
    b: &SampleSet,
    metric: Metric,
    alpha: f64,
) -> Result<CompareReport, CliError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CliError::Usage(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    for s in [a, b] {
        if s.values.len() < 2 {
            return Err(CliError::Input(format!(
                "{}: need at least 2 replicates, found {}",
                s.label,
                s.values.len()
            )));
        }
    }
    let u = mann_whitney_u(&a.values, &b.values).map_err(|e| CliError::Input(e.to_string()))?;
    let a12 =
        vargha_delaney_a12(&a.values, &b.values).map_err(|e| CliError::Input(e.to_string()))?;
    let side = |s: &SampleSet| {
        let d = describe(&s.values).expect("non-empty");
        SampleReport {
            label: s.label.clone(),
            n: s.values.len(),
            median: d.median,
            mean: d.mean,
        }
    };
    Ok(CompareReport {
        metric,
        alpha,
        a: side(a),
        b: side(b),
        u_a: u.u_x,
        u_b: u.u_y,
        z: u.z,
        p_two_sided: u.p_two_sided,
        a12,
        significant: u.p_two_sided < alpha,
    })
}
