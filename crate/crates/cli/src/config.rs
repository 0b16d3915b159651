//! Run configuration: JSON file, then command-line overrides.

use std::path::{Path, PathBuf};

use rwre::{EnvironmentLaw, GroupElement};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub w: f64,
    pub p: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum LawSpec {
    Mixture { atoms: Vec<AtomSpec> },
    Dirichlet { alphas: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jumps: Option<Vec<Vec<i64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub law: Option<LawSpec>,
    pub steps: usize,
    pub seed: u64,
    /// Smallest stream length reported in estimates.
    pub min_count: usize,
    /// Smallest stream length used when building moment tables.
    pub reconstruct_min_count: usize,
    pub max_total: u64,
    pub degree: u64,
    /// Threshold vectors for the CDF; empty means the default grid.
    pub grid: Vec<Vec<f64>>,
    pub replicas: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dim: 1,
            jumps: None,
            law: None,
            steps: 100_000,
            seed: 0,
            min_count: 30,
            reconstruct_min_count: 200,
            max_total: 60,
            degree: 60,
            grid: Vec::new(),
            replicas: 2,
            max_steps: None,
            out: PathBuf::from("."),
        }
    }
}

/// Flag values that take precedence over the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub steps: Option<usize>,
    pub out: Option<PathBuf>,
    pub min_count: Option<usize>,
    pub degree: Option<u64>,
    pub replicas: Option<usize>,
    pub max_steps: Option<usize>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
    }

    pub fn load(path: Option<&Path>, flags: &Overrides) -> Result<Self, CliError> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                Self::from_json(&text)?
            }
            None => Self::default(),
        };
        if let Some(v) = flags.seed {
            cfg.seed = v;
        }
        if let Some(v) = flags.steps {
            cfg.steps = v;
        }
        if let Some(v) = &flags.out {
            cfg.out = v.clone();
        }
        if let Some(v) = flags.min_count {
            cfg.min_count = v;
        }
        if let Some(v) = flags.degree {
            cfg.degree = v;
        }
        if let Some(v) = flags.replicas {
            cfg.replicas = v;
        }
        if flags.max_steps.is_some() {
            cfg.max_steps = flags.max_steps;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Validation(m));
        if self.dim == 0 {
            return bad("dim must be at least 1".into());
        }
        if self.min_count == 0 || self.reconstruct_min_count == 0 {
            return bad("min_count must be at least 1".into());
        }
        if self.degree == 0 {
            return bad("degree must be at least 1".into());
        }
        if self.replicas == 0 {
            return bad("replicas must be at least 1".into());
        }
        if let Some(p) = self.grid.iter().flatten().find(|&&a| !(a > 0.0 && a <= 1.0)) {
            return bad(format!("grid value {p} outside (0, 1]"));
        }
        if self.law.is_some() {
            self.environment_law()?;
        }
        Ok(())
    }

    pub fn jumps(&self) -> Result<Vec<GroupElement>, CliError> {
        let Some(jumps) = &self.jumps else {
            return Err(CliError::Validation("config: `jumps` is required".into()));
        };
        if jumps.is_empty() {
            return Err(CliError::Validation("config: `jumps` is empty".into()));
        }
        jumps
            .iter()
            .map(|j| {
                if j.len() == self.dim {
                    Ok(GroupElement::new(j.iter().copied()))
                } else {
                    Err(CliError::Validation(format!("jump {j:?} has {} coordinates, dim is {}", j.len(), self.dim)))
                }
            })
            .collect()
    }

    pub fn environment_law(&self) -> Result<EnvironmentLaw, CliError> {
        let jumps = self.jumps()?;
        let law = match &self.law {
            None => return Err(CliError::Validation("config: `law` is required".into())),
            Some(LawSpec::Mixture { atoms }) => {
                let atoms: Vec<(f64, Vec<f64>)> = atoms.iter().map(|a| (a.w, a.p.clone())).collect();
                EnvironmentLaw::mixture(&jumps, &atoms)
            }
            Some(LawSpec::Dirichlet { alphas }) => EnvironmentLaw::dirichlet(&jumps, alphas),
        };
        law.map_err(|e| CliError::Validation(format!("config: {e}")))
    }
}
