//! Run configuration, validated before any computation.

use std::path::PathBuf;
use std::str::FromStr;
use std::time::Duration;

use ngc_core::eval::EvalMode;
use ngc_core::fixtures::{FixtureKind, Fixtures};
use ngc_core::graph::{descendant_family, generate_2d_vector_graphs};
use ngc_core::pipeline::{default_family, family_mode, Stages};
use ngc_core::MicroGraph;
use serde_json::{json, Value};

/// Which graphs a pipeline runs over.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FamilySelector {
    /// The 14 named 2D graphs, or the descendants of 2D graphs 11 and 12.
    Default,
    /// The named fixture graphs of the dimension.
    Named,
    /// Descendants of the listed named 2D graphs.
    Descendants(Vec<String>),
    /// The generated 2D graphs with three Levi-Civita vertices (or their descendants).
    Generated,
}

impl FromStr for FamilySelector {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "default" => Ok(FamilySelector::Default),
            "named" => Ok(FamilySelector::Named),
            "generated" => Ok(FamilySelector::Generated),
            _ => {
                let list = s
                    .strip_prefix("descendants:")
                    .ok_or_else(|| format!("unknown family `{s}` (default, named, generated, descendants:A,B,..)"))?;
                let names: Vec<String> = list.split(',').map(|n| n.trim().to_string()).filter(|n| !n.is_empty()).collect();
                if names.is_empty() {
                    return Err("descendants: needs at least one 2D graph name".into());
                }
                Ok(FamilySelector::Descendants(names))
            }
        }
    }
}

impl std::fmt::Display for FamilySelector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FamilySelector::Default => f.write_str("default"),
            FamilySelector::Named => f.write_str("named"),
            FamilySelector::Generated => f.write_str("generated"),
            FamilySelector::Descendants(n) => write!(f, "descendants:{}", n.join(",")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub dim: usize,
    pub family: FamilySelector,
    pub mode: EvalMode,
    pub stages: Stages,
    pub cache_dir: Option<PathBuf>,
    /// Whole-run budget.
    pub budget: Option<Duration>,
    /// Per-cell budget of pair-search tables.
    pub cell_budget: Option<Duration>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(dim: usize) -> Self {
        RunConfig {
            dim,
            family: FamilySelector::Default,
            mode: family_mode(dim),
            stages: Stages::ALL,
            cache_dir: None,
            budget: None,
            cell_budget: None,
            out: None,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(2..=4).contains(&self.dim) {
            return Err(format!("dimension {} is not supported (2, 3 or 4)", self.dim));
        }
        if self.mode != EvalMode::Plain && self.dim != 4 {
            return Err(format!("mode {} needs dimension 4", self.mode));
        }
        if self.dim == 2 && matches!(self.family, FamilySelector::Descendants(_)) {
            return Err("descendant families need dimension 3 or 4".into());
        }
        Ok(())
    }

    pub fn graphs(&self, fx: &Fixtures) -> Result<Vec<MicroGraph>, ngc_core::Error> {
        match &self.family {
            FamilySelector::Default => default_family(self.dim, fx),
            FamilySelector::Named => Ok(fx.graph_list(self.dim, FixtureKind::Graph)),
            FamilySelector::Generated => {
                let base = generate_2d_vector_graphs(3);
                if self.dim == 2 {
                    Ok(base)
                } else {
                    descendant_family(&base, self.dim)
                }
            }
            FamilySelector::Descendants(names) => {
                let src = names
                    .iter()
                    .map(|n| fx.graph(2, FixtureKind::Graph, n).cloned())
                    .collect::<Result<Vec<_>, _>>()?;
                descendant_family(&src, self.dim)
            }
        }
    }

    pub fn to_json(&self) -> Value {
        let secs = |d: Option<Duration>| d.map(|d| d.as_secs_f64());
        json!({
            "dim": self.dim,
            "family": self.family.to_string(),
            "mode": self.mode.as_str(),
            "stages": {
                "solve": self.stages.solve,
                "kernel": self.stages.kernel,
                "hamiltonians": self.stages.hamiltonians,
            },
            "cache_dir": self.cache_dir.as_ref().map(|p| p.display().to_string()),
            "budget_secs": secs(self.budget),
            "cell_budget_secs": secs(self.cell_budget),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selectors() {
        assert_eq!("descendants:11, 12".parse(), Ok(FamilySelector::Descendants(vec!["11".into(), "12".into()])));
        assert!("descendants:".parse::<FamilySelector>().is_err());
        assert!("everything".parse::<FamilySelector>().is_err());
        assert_eq!(FamilySelector::Descendants(vec!["2".into(), "8".into()]).to_string(), "descendants:2,8");
    }

    #[test]
    fn validation() {
        let mut c = RunConfig::new(3);
        assert!(c.validate().is_ok());
        c.mode = EvalMode::Skew;
        assert!(c.validate().is_err());
        assert!(RunConfig::new(5).validate().is_err());
        let fx = Fixtures::builtin();
        assert_eq!(RunConfig::new(2).graphs(&fx).unwrap().len(), 14);
    }
}
