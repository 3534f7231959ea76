use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rwre_core::simulate::{geometric_checkpoints, BalancedLaw};
use rwre_core::EnvironmentLaw;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// A declarative experiment: which scenario to run, on which laws, with what budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Worker threads; results do not depend on it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub budget: Budget,
    #[serde(default)]
    pub checkpoints: CheckpointPolicy,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub laws: Vec<EnvironmentLaw>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub balanced: Vec<BalancedLaw>,
    /// Overrides for the scenario's acceptance tolerances.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<String, f64>,
}

fn default_seed() -> u64 {
    1
}

/// Sizes of the primary ensemble of a scenario; unset fields take the scenario default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budget {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub environments: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub walks: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    /// Time horizon for continuous-time scenarios.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
    /// Total walk steps after which a run stops and leaves a resumable partial result.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_budget: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointPolicy {
    #[serde(default = "default_per_decade")]
    pub per_decade: u32,
    /// Used instead of the geometric grid when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explicit: Option<Vec<u64>>,
}

fn default_per_decade() -> u32 {
    8
}

impl Default for CheckpointPolicy {
    fn default() -> Self {
        CheckpointPolicy { per_decade: default_per_decade(), explicit: None }
    }
}

impl CheckpointPolicy {
    pub fn grid(&self, max: u64) -> Vec<u64> {
        match &self.explicit {
            Some(list) => {
                let mut v: Vec<u64> = list.iter().copied().filter(|&c| c <= max).collect();
                v.sort_unstable();
                v.dedup();
                v
            }
            None => geometric_checkpoints(max, self.per_decade),
        }
    }
}

impl ExperimentConfig {
    pub fn new(scenario: &str) -> Self {
        ExperimentConfig {
            scenario: scenario.to_string(),
            seed: default_seed(),
            threads: None,
            output: None,
            budget: Budget::default(),
            checkpoints: CheckpointPolicy::default(),
            laws: Vec::new(),
            balanced: Vec::new(),
            tolerances: BTreeMap::new(),
        }
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |s| line_column(text, s.start));
            CliError::Config { path: origin.to_path_buf(), line, column, message: e.message().to_string() }
        })?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }

    /// Semantic checks beyond the syntax.
    pub fn check(&self) -> Result<()> {
        for law in &self.laws {
            law.check()?;
        }
        for law in &self.balanced {
            law.check()?;
        }
        if self.threads == Some(0) {
            return Err(CliError::Invalid("threads must be positive".into()));
        }
        if self.checkpoints.per_decade == 0 {
            return Err(CliError::Invalid("checkpoints.per_decade must be positive".into()));
        }
        if let Some(t) = self.budget.time {
            if !(t > 0.0 && t.is_finite()) {
                return Err(CliError::Invalid(format!("budget.time = {t} must be positive")));
            }
        }
        for (k, v) in &self.tolerances {
            if !(v.is_finite() && *v >= 0.0) {
                return Err(CliError::Invalid(format!("tolerance {k} = {v} must be a nonnegative number")));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, ignoring settings that cannot change results.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.threads = None;
        c.output = None;
        let value = serde_json::to_value(&c).expect("configs always serialize");
        let digest = Sha256::digest(value.to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn tolerance(&self, key: &str, default: f64) -> f64 {
        self.tolerances.get(key).copied().unwrap_or(default)
    }

    pub fn environments(&self, default: usize) -> usize {
        self.budget.environments.unwrap_or(default)
    }

    pub fn walks(&self, default: usize) -> usize {
        self.budget.walks.unwrap_or(default)
    }

    pub fn steps(&self, default: u64) -> u64 {
        self.budget.steps.unwrap_or(default)
    }

    pub fn time(&self, default: f64) -> f64 {
        self.budget.time.unwrap_or(default)
    }

    /// The configured laws, or `defaults` when none are given.
    pub fn laws_or(&self, defaults: Vec<EnvironmentLaw>) -> Vec<EnvironmentLaw> {
        if self.laws.is_empty() {
            defaults
        } else {
            self.laws.clone()
        }
    }
}

/// 1-based line and column of a byte offset.
fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rwre_core::Atom;

    const SAMPLE: &str = r#"
scenario = "ensemble"
seed = 7
threads = 2

[budget]
environments = 10
walks = 2
steps = 1000

[checkpoints]
per_decade = 4

[[laws]]
kind = "two_point_sites"
alpha = 0.8
beta = 0.7

[[laws]]
kind = "discrete_sites"
atoms = [{ value = 0.9, weight = 0.7 }, { value = 0.2, weight = 0.3 }]

[tolerances]
"velocity.rel" = 0.05
"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = ExperimentConfig::parse(SAMPLE, Path::new("sample.toml")).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.laws.len(), 2);
        assert_eq!(cfg.laws[1], EnvironmentLaw::DiscreteSites { atoms: vec![Atom::new(0.9, 0.7), Atom::new(0.2, 0.3)] });
        assert_eq!(cfg.tolerance("velocity.rel", 0.02), 0.05);
        let again = ExperimentConfig::parse(&cfg.to_toml(), Path::new("again.toml")).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.hash(), again.hash());
    }

    #[test]
    fn hash_ignores_threads_and_output() {
        let cfg = ExperimentConfig::parse(SAMPLE, Path::new("sample.toml")).unwrap();
        let mut other = cfg.clone();
        other.threads = Some(16);
        other.output = Some("elsewhere".into());
        assert_eq!(cfg.hash(), other.hash());
        other.seed = 8;
        assert_ne!(cfg.hash(), other.hash());
        assert_eq!(cfg.hash().len(), 64);
    }

    #[test]
    fn errors_carry_line_and_column() {
        let text = "scenario = \"ensemble\"\n[budget]\nsteps = \"many\"\n";
        match ExperimentConfig::parse(text, Path::new("bad.toml")) {
            Err(CliError::Config { line, column, .. }) => assert_eq!((line, column), (3, 9)),
            other => panic!("{other:?}"),
        }
        let text = "scenario = \"ensemble\"\nsed = 3\n";
        match ExperimentConfig::parse(text, Path::new("bad.toml")) {
            Err(CliError::Config { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_laws_are_rejected() {
        let text = "scenario = \"ensemble\"\n[[laws]]\nkind = \"two_point_sites\"\nalpha = 1.5\nbeta = 0.5\n";
        assert!(matches!(ExperimentConfig::parse(text, Path::new("x.toml")), Err(CliError::Core(_))));
    }

    #[test]
    fn explicit_checkpoints_are_sorted_and_capped() {
        let p = CheckpointPolicy { per_decade: 8, explicit: Some(vec![100, 10, 10, 5000]) };
        assert_eq!(p.grid(1000), vec![10, 100]);
    }
}
