//! TOML run configuration.

use std::fmt;
use std::path::Path;

use pgs_core::driver::default_schedule;
use pgs_core::sparse::SolveOptions;
use pgs_core::{RiemannConfig, SolverConfig, SymmetryMode};
use serde::{Deserialize, Serialize};

/// Bundled default configuration.
pub const DEFAULT_TOML: &str = include_str!("../configs/default.toml");

#[derive(Debug)]
pub enum ConfigError {
    Io(String),
    /// Parse or schema failure; the message names the offending key.
    Schema(String),
    /// A value parsed but violates a type invariant.
    Invariant(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(m) => write!(f, "cannot read config: {m}"),
            ConfigError::Schema(m) => write!(f, "config schema error: {m}"),
            ConfigError::Invariant(m) => write!(f, "invalid config: {m}"),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub p1: f64,
    pub u1: f64,
    pub v1: f64,
    pub p2: f64,
    /// Radians.
    pub alpha1: f64,
    pub alpha2: f64,
}

impl Default for ProblemSection {
    fn default() -> Self {
        let c = RiemannConfig::default();
        ProblemSection { p1: c.p1, u1: c.u1, v1: c.v1, p2: c.p2, alpha1: c.alpha1, alpha2: c.alpha2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Symmetry {
    Half,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub ns: usize,
    pub ntheta: usize,
    pub eps_first: f64,
    pub eps_last: f64,
    /// Explicit schedule; overrides `eps_first`/`eps_last` when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_schedule: Option<Vec<f64>>,
    pub picard_tol: f64,
    pub picard_max: usize,
    pub shock_damping: f64,
    pub outer_tol: f64,
    pub outer_max: usize,
    pub linear_tol: f64,
    pub linear_max_iter: usize,
    pub symmetry: Symmetry,
}

impl Default for SolverSection {
    fn default() -> Self {
        let c = SolverConfig::default();
        SolverSection {
            ns: c.ns,
            ntheta: c.ntheta,
            eps_first: 1e-1,
            eps_last: 1e-6,
            eps_schedule: None,
            picard_tol: c.picard_tol,
            picard_max: c.picard_max,
            shock_damping: c.shock_damping,
            outer_tol: c.outer_tol,
            outer_max: c.outer_max,
            linear_tol: c.linear.tol,
            linear_max_iter: c.linear.max_iter,
            symmetry: Symmetry::Half,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSection,
    #[serde(default)]
    pub solver: SolverSection,
}

impl RunConfig {
    pub fn riemann(&self) -> RiemannConfig {
        let p = &self.problem;
        RiemannConfig { p1: p.p1, u1: p.u1, v1: p.v1, p2: p.p2, alpha1: p.alpha1, alpha2: p.alpha2 }
    }

    pub fn solver(&self) -> SolverConfig {
        let s = &self.solver;
        SolverConfig {
            ns: s.ns,
            ntheta: s.ntheta,
            eps_schedule: s.eps_schedule.clone().unwrap_or_else(|| default_schedule(s.eps_first, s.eps_last)),
            picard_tol: s.picard_tol,
            picard_max: s.picard_max,
            shock_damping: s.shock_damping,
            outer_tol: s.outer_tol,
            outer_max: s.outer_max,
            linear: SolveOptions { tol: s.linear_tol, max_iter: s.linear_max_iter, ..SolveOptions::default() },
            mode: match s.symmetry {
                Symmetry::Half => SymmetryMode::Half,
                Symmetry::Full => SymmetryMode::Full,
            },
        }
    }

    /// Critical configurations bypass the elliptic solver.
    pub fn is_critical(&self) -> bool {
        self.riemann().is_critical()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let inv = |e: pgs_core::Error| ConfigError::Invariant(e.to_string());
        self.riemann().validate().map_err(inv)?;
        if !(self.solver.eps_first > self.solver.eps_last && self.solver.eps_last > 0.0) {
            return Err(ConfigError::Invariant("eps_first > eps_last > 0 required".into()));
        }
        self.solver().validate().map_err(inv)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    /// Sets a numeric key by name, for sweeps.
    pub fn set(&mut self, key: &str, value: f64) -> Result<(), ConfigError> {
        let p = &mut self.problem;
        let s = &mut self.solver;
        match key {
            "p1" => p.p1 = value,
            "u1" => p.u1 = value,
            "v1" => p.v1 = value,
            "p2" => p.p2 = value,
            "alpha1" => p.alpha1 = value,
            "alpha2" => p.alpha2 = value,
            "ns" => s.ns = value as usize,
            "ntheta" => s.ntheta = value as usize,
            "shock_damping" => s.shock_damping = value,
            "eps_last" => s.eps_last = value,
            _ => return Err(ConfigError::Schema(format!("unknown sweep parameter `{key}`"))),
        }
        Ok(())
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Schema(e.message().to_string() + &span_key(text, &e)))?;
    cfg.validate()?;
    Ok(cfg)
}

fn span_key(text: &str, e: &toml::de::Error) -> String {
    match e.span() {
        Some(r) if r.start < text.len() => {
            let line = text[..r.start].lines().count().max(1);
            format!(" (line {line})")
        }
        _ => String::new(),
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_default_matches_code_defaults() {
        let c = parse_config(DEFAULT_TOML).unwrap();
        assert_eq!(c.riemann(), RiemannConfig::default());
        assert_eq!(c.solver(), SolverConfig::default());
    }

    #[test]
    fn toml_round_trip() {
        let c = parse_config(DEFAULT_TOML).unwrap();
        assert_eq!(parse_config(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn unknown_key_is_named() {
        let text = DEFAULT_TOML.replace("shock_damping", "shock_dampening");
        let e = parse_config(&text).unwrap_err().to_string();
        assert!(e.contains("shock_dampening"), "{e}");
    }

    #[test]
    fn pressure_order_is_enforced() {
        let text = DEFAULT_TOML.replace("p2 = 1.0", "p2 = 2.5");
        let e = parse_config(&text).unwrap_err().to_string();
        assert!(e.contains("p1 > p2 required"), "{e}");
    }

    #[test]
    fn critical_angle_is_accepted() {
        let text = DEFAULT_TOML.replace("alpha1 = 0.7853981633974483", "alpha1 = 0.0");
        assert!(parse_config(&text).unwrap().is_critical());
    }
}
