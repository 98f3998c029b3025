//! Run configuration, loadable from TOML.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::admissibility::Convention;
use super::region::ScanConfig;
use crate::bubbles::TrialConfig;
use crate::error::{Error, Result};
use crate::radial::{RadialFn, RadialGrid, Tail};
use crate::solver::FlowConfig;
use crate::variational::{Potential, Problem};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    Zero,
    /// `v0 (1 + r²)^-s`.
    Rational {
        v0: f64,
        s: f64,
    },
    /// Samples `r,value` read from a CSV file, with the power tail `tail_coef r^-tail_exp`.
    Csv {
        path: PathBuf,
        tail_coef: f64,
        tail_exp: f64,
    },
}

impl PotentialSpec {
    pub fn build(&self, grid: &Arc<RadialGrid>) -> Result<Potential> {
        match self {
            PotentialSpec::Zero => Ok(Potential::Zero),
            PotentialSpec::Rational { v0, s } => Potential::rational(*v0, *s),
            PotentialSpec::Csv { path, tail_coef, tail_exp } => {
                let tail = if *tail_coef == 0.0 { Tail::none() } else { Tail::power(*tail_coef, *tail_exp) };
                Potential::sampled(RadialFn::read_csv(path, grid, tail)?)
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSpec {
    pub dim: usize,
    pub mu1: f64,
    pub mu2: f64,
    pub beta: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub v1: PotentialSpec,
    pub v2: PotentialSpec,
}

impl Default for ProblemSpec {
    fn default() -> Self {
        let v = PotentialSpec::Rational { v0: 0.1, s: 2.0 };
        ProblemSpec { dim: 5, mu1: 1.0, mu2: 2.0, beta: 3.0, lambda1: 0.0, lambda2: 0.0, v1: v.clone(), v2: v }
    }
}

impl ProblemSpec {
    pub fn build(&self, grid: &Arc<RadialGrid>) -> Result<Problem> {
        Problem::new(self.dim, self.mu1, self.mu2, self.beta, self.lambda1, self.lambda2, self.v1.build(grid)?, self.v2.build(grid)?)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Multiplies every numerical tolerance.
    pub tol_scale: f64,
    pub convention: Convention,
    /// The lower proxy for the mountain-pass level is `(1 + margin) c_inf`.
    pub c_star_margin: f64,
    /// Fraction of the bubble's critical mass kept by the trial profile.
    pub support_fraction: f64,
    /// Largest admissible final/initial ratio of a vanishing sequence.
    pub limit_fraction: f64,
    /// Same, for the potential overlaps of the trial family.
    pub overlap_fraction: f64,
    /// Relative slack allowed when testing a sequence for monotone decay.
    pub jitter: f64,
    pub lambda_probe: f64,
    pub random_triples_identity: usize,
    pub random_triples_threshold: usize,
    pub random_pairs: usize,
    pub problem: ProblemSpec,
    pub flow: FlowConfig,
    pub trial: TrialConfig,
    pub scan: ScanConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 20240607,
            tol_scale: 1.0,
            convention: Convention::A3,
            c_star_margin: 0.02,
            support_fraction: 0.9,
            limit_fraction: 0.1,
            overlap_fraction: 0.05,
            jitter: 0.05,
            lambda_probe: 0.1,
            random_triples_identity: 100,
            random_triples_threshold: 10,
            random_pairs: 50,
            problem: ProblemSpec::default(),
            flow: FlowConfig::default(),
            trial: TrialConfig::default(),
            scan: ScanConfig::default(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub grid_m: Option<usize>,
    pub r_max: Option<f64>,
    pub tol_scale: Option<f64>,
    pub seed: Option<u64>,
    pub convention: Option<Convention>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.display().to_string(), msg: e.to_string() })?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(m) = o.grid_m {
            self.flow.grid.nodes = m;
        }
        if let Some(r) = o.r_max {
            self.flow.grid.r_max = r;
        }
        if let Some(t) = o.tol_scale {
            self.tol_scale = t;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(c) = o.convention {
            self.convention = c;
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tol_scale", self.tol_scale),
            ("limit_fraction", self.limit_fraction),
            ("overlap_fraction", self.overlap_fraction),
            ("lambda_probe", self.lambda_probe),
        ];
        for (name, x) in positive {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::Config(format!("{name} = {x} must be positive")));
            }
        }
        if !(self.c_star_margin >= 0.0 && self.jitter >= 0.0) {
            return Err(Error::Config("c_star_margin and jitter must be nonnegative".into()));
        }
        if !(self.support_fraction > 0.0 && self.support_fraction < 1.0) {
            return Err(Error::Config(format!("support_fraction {} outside (0, 1)", self.support_fraction)));
        }
        Ok(())
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or(serde_json::Value::Null)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let cfg = RunConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg = RunConfig::from_toml("seed = 7\n[problem.v1]\nkind = \"zero\"\n").unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.problem.v1, PotentialSpec::Zero);
        assert_eq!(cfg.problem.mu2, 2.0);
    }

    #[test]
    fn misplaced_keys_are_rejected() {
        assert!(matches!(RunConfig::from_toml("mu1 = 1.0\n"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_toml("[flow.grid]\nnode = 10\n"), Err(Error::Config(_))));
    }

    #[test]
    fn missing_file_names_the_path() {
        match RunConfig::load(Path::new("/nonexistent/run.toml")) {
            Err(Error::Io { path, .. }) => assert!(path.contains("run.toml")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn overrides_win() {
        let mut cfg = RunConfig::default();
        cfg.apply(&Overrides { grid_m: Some(200), seed: Some(3), convention: Some(Convention::C3), ..Default::default() });
        assert_eq!((cfg.flow.grid.nodes, cfg.seed, cfg.convention), (200, 3, Convention::C3));
    }
}
