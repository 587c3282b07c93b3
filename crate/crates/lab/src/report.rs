//! JSON experiment summaries with provenance: config hash, seed list,
//! per-criterion measurements.

use crate::{csvio, Failure, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;

/// One measured check. `pass` is `measured op bound` with `op` either
/// `"<="` or `">="`.
#[derive(Debug, Clone, Serialize)]
pub struct Criterion {
    pub name: String,
    pub measured: f64,
    pub op: String,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub subcommand: String,
    pub config_sha256: String,
    pub seeds: Vec<u64>,
    pub pass: bool,
    pub criteria: Vec<Criterion>,
    pub metrics: BTreeMap<String, f64>,
}

impl Summary {
    pub fn new(subcommand: &str, config_bytes: &[u8], seeds: Vec<u64>) -> Summary {
        Summary {
            subcommand: subcommand.to_string(),
            config_sha256: sha256_hex(config_bytes),
            seeds,
            pass: true,
            criteria: Vec::new(),
            metrics: BTreeMap::new(),
        }
    }

    pub fn check_le(&mut self, name: &str, measured: f64, bound: f64) {
        let pass = measured.is_finite() && measured <= bound;
        self.pass &= pass;
        self.criteria.push(Criterion {
            name: name.to_string(),
            measured,
            op: "<=".to_string(),
            bound,
            pass,
        });
    }

    pub fn check_ge(&mut self, name: &str, measured: f64, bound: f64) {
        let pass = measured.is_finite() && measured >= bound;
        self.pass &= pass;
        self.criteria.push(Criterion {
            name: name.to_string(),
            measured,
            op: ">=".to_string(),
            bound,
            pass,
        });
    }

    pub fn metric(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.to_string(), value);
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Failure::Config(format!("cannot serialize summary: {e}")))
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let mut json = self.to_json()?;
        json.push('\n');
        csvio::write(dir, "summary.json", &json)
    }

    /// Human-readable one-line-per-criterion report for the terminal.
    pub fn render_lines(&self) -> String {
        let mut out = String::new();
        for c in &self.criteria {
            out.push_str(&format!(
                "{}: {} ({} {} {})\n",
                c.name,
                if c.pass { "PASS" } else { "FAIL" },
                c.measured,
                c.op,
                c.bound
            ));
        }
        out
    }

    /// First failing criterion, if any.
    pub fn first_failure(&self) -> Option<&Criterion> {
        self.criteria.iter().find(|c| !c.pass)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_tracking_and_json_shape() {
        let mut s = Summary::new("value", b"[problem]\n", vec![1, 2]);
        s.check_le("max_error", 0.01, 0.02);
        assert!(s.pass);
        s.check_ge("slope", 0.5, 0.8);
        assert!(!s.pass);
        assert_eq!(s.first_failure().unwrap().name, "slope");
        let json = s.to_json().unwrap();
        assert!(json.contains("\"config_sha256\""));
        assert!(json.contains("\"max_error\""));
        // Same content hashes identically.
        assert_eq!(sha256_hex(b"abc"), sha256_hex(b"abc"));
        assert_ne!(sha256_hex(b"abc"), sha256_hex(b"abd"));
    }
}
