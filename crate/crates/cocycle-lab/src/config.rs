//! Run configuration: TOML file, defaults, seed override and hashing.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::family::{
    make_constant_family, make_rotation_family, make_schrodinger_family, AnyFamily, Interval, Potential,
};
use crate::mat2::Mat2;

/// Environment variable that replaces the configured seed.
pub const SEED_ENV: &str = "COCYCLE_LAB_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FamilySpec {
    /// `{R_a A, R_a B}`; matrices as `[a, b, c, d]` rows first.
    Rotation { a: [f64; 4], b: [f64; 4], p: f64 },
    Schrodinger { potential: Potential },
    Constant { matrix: [f64; 4] },
}

impl FamilySpec {
    pub fn build(&self, interval: Interval) -> Result<AnyFamily> {
        Ok(match self {
            FamilySpec::Rotation { a, b, p } => {
                AnyFamily::Rotation(make_rotation_family(Mat2::from_array(*a)?, Mat2::from_array(*b)?, *p, interval)?)
            }
            FamilySpec::Schrodinger { potential } => {
                AnyFamily::Schrodinger(make_schrodinger_family(potential.clone(), interval)?)
            }
            FamilySpec::Constant { matrix } => {
                let mut f = make_constant_family(Mat2::from_array(*matrix)?);
                f.j = interval;
                AnyFamily::Constant(f)
            }
        })
    }

    pub fn potential(&self) -> Option<&Potential> {
        match self {
            FamilySpec::Schrodinger { potential } => Some(potential),
            _ => None,
        }
    }
}

fn default_grid_cells() -> usize {
    100
}
fn default_epsilon_prime() -> f64 {
    0.05
}
fn default_reps() -> usize {
    10
}
fn default_output() -> PathBuf {
    PathBuf::from(".")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Word length (steps of the cocycle).
    pub n: usize,
    pub interval: Interval,
    #[serde(default = "default_grid_cells")]
    pub grid_cells: usize,
    #[serde(default = "default_epsilon_prime")]
    pub epsilon_prime: f64,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    pub family: FamilySpec,
    #[serde(default)]
    pub rotation_scan: RotationScanOptions,
    #[serde(default)]
    pub uh_scan: UhScanOptions,
    #[serde(default)]
    pub jump_scan: JumpScanOptions,
    #[serde(default)]
    pub localize: LocalizeOptions,
    #[serde(default)]
    pub contraction: ContractionOptions,
    #[serde(default)]
    pub validate: ValidateOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RotationScanOptions {
    pub x0: f64,
}

impl Default for RotationScanOptions {
    fn default() -> Self {
        RotationScanOptions { x0: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UhScanOptions {
    pub words: usize,
    pub eta_floor: f64,
    /// Replicates of the rotation-number curve.
    pub rho_reps: usize,
    /// Extra single-parameter tests.
    pub points: Vec<f64>,
}

impl Default for UhScanOptions {
    fn default() -> Self {
        UhScanOptions { words: 20, eta_floor: 1e-3f64.exp(), rho_reps: 4, points: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JumpScanOptions {
    pub x0: f64,
    /// Independent words to scan.
    pub words: usize,
    /// Grid cells; `0` selects `⌈8√n⌉`.
    pub cells: usize,
    /// Nodes of the exponent and rotation-number curves.
    pub curve_nodes: usize,
    pub le_n: usize,
    pub le_reps: usize,
    pub rho_n: usize,
    pub rho_reps: usize,
    /// `ε′` of the uniform upper check; `0` skips it.
    pub upper_epsilon_prime: f64,
    /// Hold one row at a time instead of the full table.
    pub streaming: bool,
}

impl Default for JumpScanOptions {
    fn default() -> Self {
        JumpScanOptions {
            x0: 0.0,
            words: 1,
            cells: 0,
            curve_nodes: 101,
            le_n: 10_000,
            le_reps: 4,
            rho_n: 10_000,
            rho_reps: 10,
            upper_epsilon_prime: 0.1,
            streaming: false,
        }
    }
}

impl JumpScanOptions {
    pub fn cells_for(&self, n: usize) -> usize {
        if self.cells > 0 {
            self.cells
        } else {
            (8.0 * (n as f64).sqrt()).ceil() as usize
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalizeOptions {
    /// Box size in sites.
    pub l: usize,
    pub window: [f64; 2],
    pub le_nodes: usize,
    pub le_n: usize,
    pub le_reps: usize,
}

impl Default for LocalizeOptions {
    fn default() -> Self {
        LocalizeOptions { l: 2000, window: [0.3, 0.7], le_nodes: 21, le_n: 10_000, le_reps: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContractionOptions {
    /// Parameter to test; absent means the interval midpoint.
    pub a: Option<f64>,
    pub s_grid: Vec<f64>,
    pub k_grid: Vec<usize>,
    pub pairs: usize,
}

impl Default for ContractionOptions {
    fn default() -> Self {
        ContractionOptions {
            a: None,
            s_grid: (1..=10).rev().map(|i| i as f64 / 10.0).collect(),
            k_grid: vec![1, 2, 4, 8, 16, 32, 64],
            pairs: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateOptions {
    pub samples: usize,
    pub grid: usize,
    pub distortion_density: usize,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions { samples: 200, grid: 50, distortion_density: 100 }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads the file and applies the seed override from the environment.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Ok(v) = std::env::var(SEED_ENV) {
            cfg.seed = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV} is not an unsigned integer: {v:?}")))?;
        }
        Ok(cfg)
    }

    pub fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.n == 0 {
            return bad("n must be positive");
        }
        if !(self.interval.lo < self.interval.hi) || !self.interval.lo.is_finite() || !self.interval.hi.is_finite() {
            return bad("interval must be [lo, hi] with lo < hi");
        }
        if self.grid_cells == 0 {
            return bad("grid_cells must be positive");
        }
        if !(self.epsilon_prime > 0.0 && self.epsilon_prime < 0.5) {
            return bad("epsilon_prime must lie in (0, 0.5)");
        }
        if self.reps == 0 {
            return bad("reps must be positive");
        }
        if let Some(p) = self.family.potential() {
            p.check().map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the canonical serialization.
    pub fn hash(&self) -> Result<String> {
        let digest = Sha256::digest(self.to_toml()?.as_bytes());
        Ok(digest.iter().take(8).map(|b| format!("{b:02x}")).collect())
    }

    pub fn family(&self) -> Result<AnyFamily> {
        self.family.build(self.interval)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
seed = 7
n = 1000
interval = [0.3, 0.9]

[family]
kind = "schrodinger"
potential = { kind = "discrete", values = [0.0, 1.0], weights = [0.5, 0.5] }
"#;

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.grid_cells, 100);
        assert_eq!(c.epsilon_prime, 0.05);
        assert_eq!(c.jump_scan.cells_for(2000), 358);
    }

    #[test]
    fn round_trip() {
        let c = RunConfig::from_toml(MINIMAL).unwrap();
        let back = RunConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(c, back);
        assert_eq!(c.hash().unwrap(), back.hash().unwrap());
    }

    #[test]
    fn missing_key_is_named() {
        let text = MINIMAL.replace("seed = 7", "");
        match RunConfig::from_toml(&text) {
            Err(Error::Config(m)) => assert!(m.contains("seed"), "{m}"),
            other => panic!("{other:?}"),
        }
    }
}
