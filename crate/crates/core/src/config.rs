//! Problem configuration shared by the grid builder, the assembler and the
//! experiment harness.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The four benchmark operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PdeKind {
    /// `-Δu = f`
    #[serde(rename = "poisson")]
    Poisson,
    /// Anisotropic two-field system with weak (1/100) zeroth-order coupling.
    #[serde(rename = "weak")]
    WeakCoupled,
    /// Same anisotropy as [`PdeKind::WeakCoupled`], coupling strength 100.
    #[serde(rename = "strong")]
    StrongCoupled,
    /// Plane elastostatics with Lamé parameters λ = 10, μ = 1.
    #[serde(rename = "lame")]
    NavierLame,
}

impl PdeKind {
    pub const ALL: [PdeKind; 4] = [
        PdeKind::Poisson,
        PdeKind::WeakCoupled,
        PdeKind::StrongCoupled,
        PdeKind::NavierLame,
    ];

    /// Number of scalar fields per mesh node.
    pub fn components(self) -> usize {
        match self {
            PdeKind::Poisson => 1,
            _ => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PdeKind::Poisson => "poisson",
            PdeKind::WeakCoupled => "weak",
            PdeKind::StrongCoupled => "strong",
            PdeKind::NavierLame => "lame",
        }
    }
}

impl fmt::Display for PdeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PdeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "poisson" => Ok(PdeKind::Poisson),
            "weak" => Ok(PdeKind::WeakCoupled),
            "strong" => Ok(PdeKind::StrongCoupled),
            "lame" => Ok(PdeKind::NavierLame),
            other => Err(Error::config(format!("unknown pde `{other}`"))),
        }
    }
}

/// What the harness does with a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Preconditioned outer solve.
    #[default]
    Solve,
    /// Solve, then compare against a dense LU solution.
    Verify,
    /// Apply the preconditioner once and report the work counters.
    Count,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "solve" => Ok(Mode::Solve),
            "verify" => Ok(Mode::Verify),
            "count" => Ok(Mode::Count),
            other => Err(Error::config(format!("unknown mode `{other}`"))),
        }
    }
}

fn default_tol() -> f64 {
    1.0e-12
}

fn default_max_outer() -> usize {
    2000
}

/// Full description of one experiment.
///
/// Deserializes from the sweep file format (one JSON object per line);
/// everything except `pde`, `n`, `p` and `gamma` has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub pde: PdeKind,
    /// Nodes per dimension of each leaf sub-domain.
    pub n: usize,
    /// Number of leaf sub-domains.
    pub p: usize,
    /// S-MatVecs spent on each interface solve.
    pub gamma: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_outer")]
    pub max_outer: usize,
    #[serde(default)]
    pub seed: u64,
    /// Assemble the grad-div term of the elasticity operator with the
    /// opposite (indefinite) sign.
    #[serde(default)]
    pub literal_eq4_sign: bool,
    #[serde(default)]
    pub mode: Mode,
    /// Element width; defaults to `1 / (N - 1)` so every leaf is a unit square.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hx: Option<f64>,
    /// Element height; same default as `hx`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hy: Option<f64>,
    /// Test hook: use `u* = 0` instead of a random manufactured solution.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub zero_solution: bool,
}

impl ProblemConfig {
    pub fn new(pde: PdeKind, n: usize, p: usize, gamma: usize) -> Self {
        ProblemConfig {
            pde,
            n,
            p,
            gamma,
            tol: default_tol(),
            max_outer: default_max_outer(),
            seed: 0,
            literal_eq4_sign: false,
            mode: Mode::Solve,
            hx: None,
            hy: None,
            zero_solution: false,
        }
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn components(&self) -> usize {
        self.pde.components()
    }

    /// `(hx, hy)` after applying the unit-square-leaf default.
    pub fn spacing(&self) -> (f64, f64) {
        let unit = 1.0 / (self.n.max(2) - 1) as f64;
        (self.hx.unwrap_or(unit), self.hy.unwrap_or(unit))
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 2 || !self.p.is_power_of_two() {
            return Err(Error::config(format!(
                "P must be a power of two >= 2, got {}",
                self.p
            )));
        }
        if self.n < 3 {
            return Err(Error::config(format!("N must be >= 3, got {}", self.n)));
        }
        if self.gamma == 0 {
            return Err(Error::config("gamma must be >= 1"));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::config(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_outer == 0 {
            return Err(Error::config("max_outer must be >= 1"));
        }
        let (hx, hy) = self.spacing();
        if !(hx > 0.0 && hy > 0.0) {
            return Err(Error::config("element sizes must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_line_defaults() {
        let cfg: ProblemConfig =
            serde_json::from_str(r#"{"pde":"strong","n":17,"p":8,"gamma":2}"#).unwrap();
        assert_eq!(cfg, ProblemConfig::new(PdeKind::StrongCoupled, 17, 8, 2));
        assert_eq!(cfg.tol, 1.0e-12);
        assert_eq!(cfg.max_outer, 2000);
        assert_eq!(cfg.spacing(), (1.0 / 16.0, 1.0 / 16.0));
    }

    #[test]
    fn validation() {
        assert!(ProblemConfig::new(PdeKind::Poisson, 3, 2, 1).validate().is_ok());
        assert!(ProblemConfig::new(PdeKind::Poisson, 3, 6, 1).validate().is_err());
        assert!(ProblemConfig::new(PdeKind::Poisson, 3, 1, 1).validate().is_err());
        assert!(ProblemConfig::new(PdeKind::Poisson, 2, 2, 1).validate().is_err());
        assert!(ProblemConfig::new(PdeKind::Poisson, 3, 2, 0).validate().is_err());
        let mut cfg = ProblemConfig::new(PdeKind::Poisson, 3, 2, 1);
        cfg.tol = 0.0;
        assert!(cfg.validate().unwrap_err().is_config());
    }

    #[test]
    fn names_round_trip() {
        for kind in PdeKind::ALL {
            assert_eq!(kind.name().parse::<PdeKind>().unwrap(), kind);
        }
        assert!("heat".parse::<PdeKind>().is_err());
    }
}
