//! JSON documents emitted by the command line.
//!
//! Floats are rounded to 12 significant digits before serialization, so a
//! document read back and written again is byte-identical.

use std::path::Path;

use ctrlmart_core::certifier::{Certificate, TestFunction};
use ctrlmart_core::simulator::McEstimate;
use ctrlmart_core::ControlFamily;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::round_sig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyRecord {
    pub kind: String,
    pub lambda: Option<f64>,
    pub dim: usize,
}

impl FamilyRecord {
    pub fn of(family: &ControlFamily) -> Self {
        FamilyRecord { kind: family.kind().to_string(), lambda: family.lambda().map(round_sig), dim: family.dim() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestRecord {
    ScaledGaussian { a: f64 },
    BentGaussian { a: f64, b: f64, p: f64, lambda: f64 },
}

impl TestRecord {
    pub fn of(test: &TestFunction) -> Option<Self> {
        match *test {
            TestFunction::ScaledGaussian { a } => Some(TestRecord::ScaledGaussian { a: round_sig(a) }),
            TestFunction::BentGaussian { a, b, p, lambda } => Some(TestRecord::BentGaussian {
                a: round_sig(a),
                b: round_sig(b),
                p: round_sig(p),
                lambda: round_sig(lambda),
            }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRecord {
    pub r_cut: f64,
    pub nodes: usize,
    pub tail_samples: usize,
    pub tail_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateRecord {
    pub direction: String,
    pub beta: f64,
    pub family: FamilyRecord,
    pub params: TestRecord,
    pub worst_residual: f64,
    pub margin: f64,
    pub refined_residual: f64,
    pub grid: GridRecord,
    pub tail_status: String,
    pub tail_dominance: Option<bool>,
}

impl CertificateRecord {
    pub fn of(cert: &Certificate) -> Self {
        CertificateRecord {
            direction: cert.direction.as_str().to_string(),
            beta: round_sig(cert.beta),
            family: FamilyRecord::of(&cert.family),
            params: TestRecord::of(&cert.test).expect("certificates use stationary test functions"),
            worst_residual: round_sig(cert.worst_residual),
            margin: round_sig(cert.margin),
            refined_residual: round_sig(cert.refined_residual),
            grid: GridRecord {
                r_cut: round_sig(cert.grid.r_cut),
                nodes: cert.grid.nodes,
                tail_samples: cert.grid.tail_samples,
                tail_factor: round_sig(cert.grid.tail_factor),
            },
            tail_status: cert.tail_status.as_str().to_string(),
            tail_dominance: cert.tail_dominance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub strategy: String,
    pub n: usize,
    pub delta: f64,
    pub start: Vec<f64>,
    pub p_hat: f64,
    pub hits: u64,
    pub trials: u64,
    pub ci95: f64,
    pub seed: u64,
}

impl EstimateRecord {
    pub fn of(strategy: &str, n: usize, delta: f64, start: &[f64], est: &McEstimate) -> Self {
        EstimateRecord {
            strategy: strategy.to_string(),
            n,
            delta: round_sig(delta),
            start: start.iter().copied().map(round_sig).collect(),
            p_hat: round_sig(est.p_hat),
            hits: est.hits,
            trials: est.trials,
            ci95: round_sig(est.ci95),
            seed: est.seed,
        }
    }
}

/// Summary of a dynamic programming run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpSummary {
    pub mode: String,
    pub n_max: usize,
    pub probe: Vec<f64>,
    pub alpha_hat: Option<f64>,
    pub alpha_stderr: Option<f64>,
    pub fit_range: Option<(usize, usize)>,
    /// Largest ratio to the tail envelope over every step; sup mode only.
    pub azuma_worst: Option<f64>,
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    Ok(serde_json::from_str(text)?)
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ctrlmart_core::certifier::{certify, Direction, RadialGrid};

    #[test]
    fn certificate_round_trip() {
        let fam = ControlFamily::pucci_minimal(0.3, 2).unwrap();
        let test = TestFunction::bent_gaussian(0.7, 0.2, 0.4, 0.3).unwrap();
        let cert = certify(&fam, &test, Direction::Upper, &RadialGrid { nodes: 200, ..RadialGrid::default() }).unwrap();
        let rec = CertificateRecord::of(&cert);
        let text = to_json(&rec).unwrap();
        let back: CertificateRecord = from_json(&text).unwrap();
        assert_eq!(back, rec);
        assert_eq!(to_json(&back).unwrap(), text);
        for key in ["direction", "beta", "family", "params", "worst_residual", "grid", "tail_status"] {
            assert!(text.contains(&format!("\"{key}\"")), "{key}");
        }
    }

    #[test]
    fn estimate_round_trip() {
        let est = McEstimate::from_count(123, 1000, 7);
        let rec = EstimateRecord::of("fixed", 10, 1.0, &[0.0, 1.0 / 3.0], &est);
        let text = to_json(&rec).unwrap();
        assert_eq!(to_json(&from_json::<EstimateRecord>(&text).unwrap()).unwrap(), text);
    }
}
