//! Line-oriented `key = value` experiment configs with `[section]` headers.
//!
//! Grammar (one construct per line):
//!   - blank lines and lines starting with `#` are ignored
//!   - `[name]` opens a section; keys before any section are an error
//!   - `key = value` assigns within the current section; duplicate keys in
//!     one section are an error
//!
//! All diagnostics carry the line number and the `[section] key` pair.

use crate::{Failure, Result};
use pathlab_core::analysis::SolveMethod;
use pathlab_core::fields::SpaceGrid;
use pathlab_core::problem::{CatalogEntry, Lagrangian, ProblemSpec};
use pathlab_core::time::TimeGrid;
use pathlab_core::vect::{Vect, ZERO};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

/// A parsed config plus the raw bytes it came from (for hashing).
#[derive(Debug, Clone)]
pub struct Config {
    sections: BTreeMap<String, BTreeMap<String, Entry>>,
    raw: Vec<u8>,
}

fn parse_err(msg: String) -> Failure {
    Failure::Config(msg)
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let mut sections: BTreeMap<String, BTreeMap<String, Entry>> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw_line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line.starts_with('[') {
                if !line.ends_with(']') || line.len() < 3 {
                    return Err(parse_err(format!(
                        "line {line_no}: malformed section header '{line}'"
                    )));
                }
                let name = line[1..line.len() - 1].trim().to_string();
                sections.entry(name.clone()).or_default();
                current = Some(name);
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(parse_err(format!(
                    "line {line_no}: expected 'key = value', got '{line}'"
                )));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(parse_err(format!("line {line_no}: empty key")));
            }
            let Some(section) = &current else {
                return Err(parse_err(format!(
                    "line {line_no}: key '{key}' before any [section] header"
                )));
            };
            let table = sections.get_mut(section).unwrap();
            if let Some(prev) = table.get(&key) {
                return Err(parse_err(format!(
                    "line {line_no}: duplicate key '{key}' in [{section}] (first set on line {})",
                    prev.line
                )));
            }
            table.insert(key, Entry { value, line: line_no });
        }
        Ok(Config {
            sections,
            raw: text.as_bytes().to_vec(),
        })
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            parse_err(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    /// Raw config bytes, for provenance hashing.
    pub fn raw_bytes(&self) -> &[u8] {
        &self.raw
    }

    fn entry(&self, section: &str, key: &str) -> Option<&Entry> {
        self.sections.get(section)?.get(key)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.entry(section, key).map(|e| e.value.as_str())
    }

    pub fn require(&self, section: &str, key: &str) -> Result<&str> {
        self.get(section, key).ok_or_else(|| {
            parse_err(format!("[{section}] {key}: missing required key"))
        })
    }

    fn typed<T, F>(&self, section: &str, key: &str, what: &str, f: F) -> Result<Option<T>>
    where
        F: Fn(&str) -> Option<T>,
    {
        match self.entry(section, key) {
            None => Ok(None),
            Some(e) => match f(&e.value) {
                Some(v) => Ok(Some(v)),
                None => Err(parse_err(format!(
                    "line {}: [{section}] {key}: expected {what}, got '{}'",
                    e.line, e.value
                ))),
            },
        }
    }

    pub fn f64_or(&self, section: &str, key: &str, default: f64) -> Result<f64> {
        Ok(self
            .typed(section, key, "a float", |s| s.parse::<f64>().ok())?
            .unwrap_or(default))
    }

    pub fn f64_req(&self, section: &str, key: &str) -> Result<f64> {
        self.require(section, key)?;
        self.f64_or(section, key, f64::NAN)
    }

    pub fn usize_or(&self, section: &str, key: &str, default: usize) -> Result<usize> {
        Ok(self
            .typed(section, key, "an unsigned integer", |s| s.parse::<usize>().ok())?
            .unwrap_or(default))
    }

    pub fn usize_req(&self, section: &str, key: &str) -> Result<usize> {
        self.require(section, key)?;
        self.usize_or(section, key, 0)
    }

    pub fn u128_or(&self, section: &str, key: &str, default: u128) -> Result<u128> {
        Ok(self
            .typed(section, key, "an unsigned integer", |s| s.parse::<u128>().ok())?
            .unwrap_or(default))
    }

    pub fn bool_or(&self, section: &str, key: &str, default: bool) -> Result<bool> {
        Ok(self
            .typed(section, key, "true or false", |s| s.parse::<bool>().ok())?
            .unwrap_or(default))
    }

    fn list<T, F>(&self, section: &str, key: &str, what: &str, f: F) -> Result<Option<Vec<T>>>
    where
        F: Fn(&str) -> Option<T>,
    {
        self.typed(section, key, what, |s| {
            s.split(',').map(|p| f(p.trim())).collect::<Option<Vec<T>>>()
        })
    }

    /// The `[run] seeds` list; required for every subcommand.
    pub fn seeds(&self) -> Result<Vec<u64>> {
        self.require("run", "seeds")?;
        let seeds = self
            .list("run", "seeds", "a comma-separated list of unsigned integers", |s| {
                s.parse::<u64>().ok()
            })?
            .unwrap();
        if seeds.is_empty() {
            return Err(parse_err("[run] seeds: list is empty".into()));
        }
        Ok(seeds)
    }

    pub fn usize_list_or(
        &self,
        section: &str,
        key: &str,
        default: &[usize],
    ) -> Result<Vec<usize>> {
        Ok(self
            .list(section, key, "a comma-separated list of unsigned integers", |s| {
                s.parse::<usize>().ok()
            })?
            .unwrap_or_else(|| default.to_vec()))
    }

    pub fn vect_or(&self, section: &str, key: &str, default: Vect) -> Result<Vect> {
        let parts = self.list(section, key, "one or two comma-separated floats", |s| {
            s.parse::<f64>().ok()
        })?;
        match parts {
            None => Ok(default),
            Some(p) if p.len() == 1 => Ok([p[0], 0.0]),
            Some(p) if p.len() == 2 => Ok([p[0], p[1]]),
            Some(p) => Err(parse_err(format!(
                "[{section}] {key}: expected 1 or 2 components, got {}",
                p.len()
            ))),
        }
    }

    /// Tolerance lookup with a per-subcommand documented default.
    pub fn tolerance(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.f64_or("tolerances", key, default)?;
        if !(v > 0.0) {
            return Err(parse_err(format!(
                "[tolerances] {key}: must be positive, got {v}"
            )));
        }
        Ok(v)
    }
}

/// Parse a catalog function: `name` or `name:p1,p2,...` with positional
/// parameters.
///
///   zero
///   constant:c
///   linear:a_1[,a_2][,offset]          (`dim` slope components)
///   cosine:kappa[,k_1[,k_2]][,phase][,offset]
///   quadratic:kappa[,offset]
///   radial-cosine:kappa[,offset]
pub fn parse_catalog(text: &str, dim: usize) -> std::result::Result<CatalogEntry, String> {
    let (name, params) = match text.split_once(':') {
        Some((n, p)) => (n.trim(), p),
        None => (text.trim(), ""),
    };
    let ps: Vec<f64> = if params.trim().is_empty() {
        Vec::new()
    } else {
        params
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| format!("bad parameter in '{text}': {e}"))?
    };
    let n = ps.len();
    match name {
        "zero" if n == 0 => Ok(CatalogEntry::Zero),
        "constant" if n == 1 => Ok(CatalogEntry::Constant { c: ps[0] }),
        "linear" if n == dim || n == dim + 1 => {
            let mut a = ZERO;
            a[..dim].copy_from_slice(&ps[..dim]);
            let offset = if n == dim + 1 { ps[dim] } else { 0.0 };
            Ok(CatalogEntry::Linear { a, offset })
        }
        "cosine" if n >= 1 && n <= dim + 3 => {
            let kappa = ps[0];
            let mut k = [1.0, 0.0];
            let mut rest = &ps[1..];
            if rest.len() >= dim {
                k = ZERO;
                k[..dim].copy_from_slice(&rest[..dim]);
                rest = &rest[dim..];
            }
            let phase = if !rest.is_empty() { rest[0] } else { 0.0 };
            let offset = if rest.len() >= 2 { rest[1] } else { 0.0 };
            if rest.len() > 2 {
                return Err(format!("too many parameters in '{text}'"));
            }
            Ok(CatalogEntry::Cosine { kappa, k, phase, offset })
        }
        "quadratic" if n == 1 || n == 2 => Ok(CatalogEntry::Quadratic {
            kappa: ps[0],
            offset: if n == 2 { ps[1] } else { 0.0 },
        }),
        "radial-cosine" if n == 1 || n == 2 => Ok(CatalogEntry::RadialCosine {
            kappa: ps[0],
            offset: if n == 2 { ps[1] } else { 0.0 },
        }),
        _ => Err(format!(
            "unknown catalog function '{text}' (name or parameter count)"
        )),
    }
}

fn parse_lagrangian(text: &str) -> std::result::Result<Lagrangian, String> {
    match text.split_once(':') {
        None if text.trim() == "quadratic" => Ok(Lagrangian::Quadratic),
        Some((n, p)) if n.trim() == "pnorm" => {
            let p: f64 = p
                .trim()
                .parse()
                .map_err(|e| format!("bad pnorm exponent: {e}"))?;
            if p <= 1.0 {
                return Err(format!("pnorm exponent must exceed 1, got {p}"));
            }
            Ok(Lagrangian::PNorm { p })
        }
        _ => Err(format!("unknown lagrangian '{text}'")),
    }
}

/// Build the problem instance from the `[problem]` section.
pub fn problem_spec(cfg: &Config) -> Result<ProblemSpec> {
    let dim = cfg.usize_or("problem", "dim", 1)?;
    let nu = cfg.f64_req("problem", "nu")?;
    let t0 = cfg.f64_or("problem", "t0", 0.0)?;
    let t_end = cfg.f64_or("problem", "t_end", 1.0)?;
    let steps = cfg.usize_req("problem", "steps")?;
    let horizon = TimeGrid::new(t0, t_end, steps).map_err(Failure::from)?;
    let potential = parse_catalog(cfg.require("problem", "potential")?, dim)
        .map_err(|e| parse_err(format!("[problem] potential: {e}")))?;
    let terminal = parse_catalog(cfg.require("problem", "terminal")?, dim)
        .map_err(|e| parse_err(format!("[problem] terminal: {e}")))?;
    let control_bound = cfg.f64_or("problem", "control_bound", 8.0)?;
    let lagrangian = parse_lagrangian(cfg.get("problem", "lagrangian").unwrap_or("quadratic"))
        .map_err(|e| parse_err(format!("[problem] lagrangian: {e}")))?;
    let lattice_k = cfg.usize_or("problem", "lattice_k", 20)?;
    let spec = ProblemSpec::new(dim, nu, horizon, potential, terminal, control_bound, lagrangian)
        .map_err(Failure::from)?;
    Ok(spec.with_lattice_k(lattice_k))
}

/// Build the spatial grid from the `[grid]` section.
pub fn space_grid(cfg: &Config, dim: usize) -> Result<SpaceGrid> {
    let m = cfg.usize_req("grid", "m")?;
    let lower = cfg.f64_req("grid", "lower")?;
    let upper = cfg.f64_req("grid", "upper")?;
    let grid = if dim == 1 {
        SpaceGrid::new_1d(lower, upper, m)
    } else {
        SpaceGrid::new_2d([lower, lower], [upper, upper], m)
    };
    grid.map_err(Failure::from)
}

/// Solve methods selected by `[run] method`: `shift`, `splitting` or `both`.
pub fn methods(cfg: &Config) -> Result<Vec<(SolveMethod, &'static str)>> {
    match cfg.get("run", "method").unwrap_or("shift") {
        "shift" => Ok(vec![(SolveMethod::Shift, "shift")]),
        "splitting" => Ok(vec![(SolveMethod::Splitting, "splitting")]),
        "both" => Ok(vec![
            (SolveMethod::Shift, "shift"),
            (SolveMethod::Splitting, "splitting"),
        ]),
        other => Err(parse_err(format!(
            "[run] method: expected shift, splitting or both, got '{other}'"
        ))),
    }
}
