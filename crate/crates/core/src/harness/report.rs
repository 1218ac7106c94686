//! Evaluation reports.
//!
//! `report.csv` is the machine form: `#` header lines, then one row per
//! held-out case with space-separated source names and per-repetition
//! accuracies, then an `average` row. Numbers use shortest round-trip
//! formatting, so parsing gives back the exact values. `report.txt` is a
//! table for people.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CaseResult {
    pub sources: Vec<String>,
    pub target: String,
    /// Percent, one per repetition.
    pub accuracies: Vec<f64>,
}

impl CaseResult {
    pub fn mean(&self) -> f64 {
        mean(&self.accuracies)
    }

    /// Sample standard deviation; 0 with a single repetition.
    pub fn std(&self) -> f64 {
        let n = self.accuracies.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        let ss: f64 = self.accuracies.iter().map(|a| (a - m) * (a - m)).sum();
        (ss / (n - 1) as f64).sqrt()
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub dataset: String,
    pub method: String,
    pub classifier: String,
    pub repetitions: usize,
    pub config_hash: String,
    pub cases: Vec<CaseResult>,
}

impl EvalReport {
    /// Mean of the per-case means.
    pub fn overall_mean(&self) -> f64 {
        mean(&self.cases.iter().map(CaseResult::mean).collect::<Vec<_>>())
    }

    pub fn case(&self, target: &str) -> Option<&CaseResult> {
        self.cases.iter().find(|c| c.target == target)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# config_hash = {}", self.config_hash);
        let _ = writeln!(s, "# dataset = {}", self.dataset);
        let _ = writeln!(s, "# method = {}", self.method);
        let _ = writeln!(s, "# classifier = {}", self.classifier);
        let _ = writeln!(s, "# repetitions = {}", self.repetitions);
        s.push_str("sources,target,mean,std,accuracies\n");
        for c in &self.cases {
            let acc: Vec<String> = c.accuracies.iter().map(f64::to_string).collect();
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                c.sources.join(" "),
                c.target,
                c.mean(),
                c.std(),
                acc.join(" ")
            );
        }
        let _ = writeln!(s, "average,,{},,", self.overall_mean());
        s
    }

    pub fn to_table(&self) -> String {
        let width = self
            .cases
            .iter()
            .map(|c| c.sources.join(",").len())
            .max()
            .unwrap_or(0)
            .max(7);
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{} leave-one-domain-out accuracy (%), method {}, classifier {}",
            self.dataset, self.method, self.classifier
        );
        let _ = writeln!(s, "repetitions {}, config {}", self.repetitions, self.config_hash);
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<width$}  {:<8} {:>7} {:>6}", "sources", "target", "mean", "std");
        for c in &self.cases {
            let _ = writeln!(
                s,
                "{:<width$}  {:<8} {:>7.2} {:>6.2}",
                c.sources.join(","),
                c.target,
                c.mean(),
                c.std()
            );
        }
        let _ = writeln!(s, "{:<width$}  {:<8} {:>7.2}", "average", "", self.overall_mean());
        s
    }

    /// Inverse of [`EvalReport::to_csv`].
    pub fn parse_csv(text: &str) -> Result<Self> {
        let bad = |m: String| Error::Parse {
            path: "report.csv".into(),
            row: 0,
            message: m,
        };
        let mut header = std::collections::BTreeMap::new();
        let mut cases = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.split_once('=') {
                    header.insert(k.trim().to_string(), v.trim().to_string());
                }
                continue;
            }
            if line.starts_with("sources,") || line.starts_with("average,") || line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(Error::Parse {
                    path: "report.csv".into(),
                    row: i + 1,
                    message: format!("expected 5 fields, got {}", f.len()),
                });
            }
            let accuracies = f[4]
                .split_whitespace()
                .map(|v| v.parse::<f64>().map_err(|e| bad(e.to_string())))
                .collect::<Result<Vec<_>>>()?;
            cases.push(CaseResult {
                sources: f[0].split_whitespace().map(str::to_string).collect(),
                target: f[1].to_string(),
                accuracies,
            });
        }
        let mut get = |k: &str| header.remove(k).ok_or_else(|| bad(format!("missing header `{k}`")));
        Ok(Self {
            config_hash: get("config_hash")?,
            dataset: get("dataset")?,
            method: get("method")?,
            classifier: get("classifier")?,
            repetitions: get("repetitions")?
                .parse()
                .map_err(|_| bad("bad repetitions".into()))?,
            cases,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text)
    }
}

/// Writes `report.csv` and `report.txt` into `dir`, creating it if needed.
pub fn emit_report(report: &EvalReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, body) in [("report.csv", report.to_csv()), ("report.txt", report.to_table())] {
        let p = dir.join(name);
        std::fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> EvalReport {
        EvalReport {
            dataset: "mnist-r".into(),
            method: "mtae".into(),
            classifier: "linear-svm".into(),
            repetitions: 3,
            config_hash: "00ff".into(),
            cases: vec![
                CaseResult {
                    sources: vec!["M15".into(), "M30".into()],
                    target: "M".into(),
                    accuracies: vec![80.0, 82.0, 0.1 + 0.2],
                },
                CaseResult {
                    sources: vec!["M".into(), "M30".into()],
                    target: "M15".into(),
                    accuracies: vec![90.0, 90.0, 90.0],
                },
            ],
        }
    }

    #[test]
    fn statistics() {
        let r = sample();
        let c = &r.cases[1];
        assert_eq!(c.mean(), 90.0);
        assert_eq!(c.std(), 0.0);
        let c = CaseResult {
            sources: vec![],
            target: "x".into(),
            accuracies: vec![1.0, 3.0],
        };
        assert_eq!(c.std(), 2f64.sqrt());
        let means = [r.cases[0].mean(), 90.0];
        assert_eq!(r.overall_mean(), (means[0] + means[1]) / 2.0);
    }

    #[test]
    fn csv_round_trips_exactly() {
        let r = sample();
        assert_eq!(EvalReport::parse_csv(&r.to_csv()).unwrap(), r);
        assert!(r.to_table().contains("average"));
    }
}
