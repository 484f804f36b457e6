//! JSON experiment configuration.

use std::path::{Path, PathBuf};

use partial_reinit::engine::Budget;
use partial_reinit::{Level, PerturbationSpec, ReinitSchedule};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{BenchError, Result};
use crate::formats::{load_dataset, Dataset, DatasetKind};
use crate::generate::{generate_dataset, DatasetSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemSpec {
    Kmeans {
        k: usize,
    },
    Kmedoids {
        k: usize,
    },
    Hmm {
        n_states: usize,
    },
    Rbm {
        n_hidden: usize,
        #[serde(default = "defaults::learning_rate")]
        learning_rate: f64,
        #[serde(default = "defaults::epochs")]
        epochs: u64,
        #[serde(default = "defaults::gibbs_k")]
        gibbs_k: usize,
        #[serde(default)]
        lambda: f64,
        #[serde(default = "defaults::reset_prob")]
        reset_prob: f64,
        #[serde(default = "defaults::init_sigma")]
        init_sigma: f64,
    },
}

mod defaults {
    pub fn learning_rate() -> f64 {
        0.01
    }
    pub fn epochs() -> u64 {
        1000
    }
    pub fn gibbs_k() -> usize {
        1
    }
    pub fn reset_prob() -> f64 {
        0.1
    }
    pub fn init_sigma() -> f64 {
        0.1
    }
}

impl ProblemSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Kmeans { .. } => "kmeans",
            Self::Kmedoids { .. } => "kmedoids",
            Self::Hmm { .. } => "hmm",
            Self::Rbm { .. } => "rbm",
        }
    }

    /// The dataset format this problem consumes.
    pub fn dataset_kind(&self) -> DatasetKind {
        match self {
            Self::Kmeans { .. } => DatasetKind::Points,
            Self::Kmedoids { .. } => DatasetKind::Dissimilarity,
            Self::Hmm { .. } => DatasetKind::Bitstring,
            Self::Rbm { .. } => DatasetKind::RbmData,
        }
    }

    /// Number of variable groups on `dataset`.
    pub fn group_count(&self, dataset: &Dataset) -> usize {
        match (self, dataset) {
            (Self::Kmeans { k }, _) | (Self::Kmedoids { k }, _) => *k,
            (Self::Hmm { n_states }, _) => *n_states,
            (Self::Rbm { n_hidden, .. }, Dataset::RbmData(d)) => {
                d.n_visible() * n_hidden + d.n_visible() + n_hidden
            }
            (Self::Rbm { .. }, _) => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum InstanceSpec {
    Path {
        path: PathBuf,
    },
    Generate {
        generate: DatasetSpec,
        #[serde(default)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelSpec {
    pub size: usize,
    /// `None` only on the top level: repeat until the budget runs out.
    #[serde(default)]
    pub repeats: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationConfig {
    pub alpha: f64,
    #[serde(default)]
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_level0_calls: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_cost_evaluations: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_wall_seconds: Option<f64>,
}

impl BudgetSpec {
    pub fn to_budget(self) -> Result<Budget> {
        let budget = Budget {
            max_level0_calls: self.max_level0_calls,
            max_cost_evaluations: self.max_cost_evaluations,
            max_wall_seconds: self.max_wall_seconds,
        };
        budget.validate()?;
        Ok(budget)
    }

    /// True when the run length does not depend on wall time.
    pub fn is_reproducible(&self) -> bool {
        self.max_wall_seconds.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum SeedSpec {
    List(Vec<u64>),
    Range { start: u64, count: u64 },
}

impl SeedSpec {
    pub fn seeds(&self) -> Vec<u64> {
        match self {
            Self::List(v) => v.clone(),
            Self::Range { start, count } => (*start..start + count).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Partial,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub instance: InstanceSpec,
    pub schedule: Vec<LevelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationConfig>,
    pub budget: BudgetSpec,
    pub seeds: SeedSpec,
    #[serde(default)]
    pub mode: Mode,
}

/// A configuration with its instance loaded and every field validated.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub dataset: Dataset,
    pub schedule: ReinitSchedule,
    pub budget: Budget,
    pub perturbation: Option<PerturbationSpec>,
    pub seeds: Vec<u64>,
    pub config_hash: String,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serialises")
    }

    /// SHA-256 of the compact JSON serialisation, hex-encoded.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("configuration serialises");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    /// The same experiment with the baseline schedule: one level that
    /// reinitialises every group, keeping the top level's repeat bound.
    pub fn as_full(&self) -> Self {
        Self { mode: Mode::Full, ..self.clone() }
    }

    /// Loads the instance (relative paths resolve against `base_dir`) and
    /// validates the whole configuration.
    pub fn resolve(&self, base_dir: &Path) -> Result<Experiment> {
        let kind = self.problem.dataset_kind();
        let dataset = match &self.instance {
            InstanceSpec::Path { path } => load_dataset(&base_dir.join(path), kind)?,
            InstanceSpec::Generate { generate, seed } => generate_dataset(generate, *seed)?,
        };
        if dataset.kind() != kind {
            return Err(BenchError::Config(format!(
                "problem {} needs a {kind:?} instance, got {:?}",
                self.problem.name(),
                dataset.kind()
            )));
        }
        let groups = self.problem.group_count(&dataset);
        let top = self
            .schedule
            .last()
            .ok_or_else(|| BenchError::Config("schedule needs at least one level".into()))?;
        let levels = match self.mode {
            Mode::Partial => self.schedule.iter().map(level_of).collect(),
            Mode::Full => vec![level_of(&LevelSpec { size: groups, repeats: top.repeats })],
        };
        let schedule = ReinitSchedule::new(levels)?;
        schedule.check_group_count(groups)?;
        let perturbation =
            self.perturbation.map(|p| PerturbationSpec::new(p.alpha, p.mu, p.sigma)).transpose()?;
        let seeds = self.seeds.seeds();
        if seeds.is_empty() {
            return Err(BenchError::Config("seed list is empty".into()));
        }
        Ok(Experiment {
            config: self.clone(),
            dataset,
            schedule,
            budget: self.budget.to_budget()?,
            perturbation,
            seeds,
            config_hash: self.hash(),
        })
    }
}

fn level_of(spec: &LevelSpec) -> Level {
    match spec.repeats {
        Some(m) => Level::new(spec.size, m),
        None => Level::unbounded(spec.size),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FOUR_POINT: &str = r#"{
        "problem": {"kind": "kmeans", "k": 2},
        "instance": {"path": "four.txt"},
        "schedule": [{"size": 1, "repeats": 20}, {"size": 2}],
        "budget": {"max_level0_calls": 200},
        "seeds": [1, 2]
    }"#;

    #[test]
    fn parses_minimal_config() {
        let cfg = ExperimentConfig::from_json(FOUR_POINT).unwrap();
        assert_eq!(cfg.mode, Mode::Partial);
        assert_eq!(cfg.problem, ProblemSpec::Kmeans { k: 2 });
        assert_eq!(cfg.schedule[1], LevelSpec { size: 2, repeats: None });
        assert_eq!(cfg.seeds.seeds(), vec![1, 2]);
    }

    #[test]
    fn seed_range() {
        let s: SeedSpec = serde_json::from_str(r#"{"start": 10, "count": 3}"#).unwrap();
        assert_eq!(s.seeds(), vec![10, 11, 12]);
    }

    #[test]
    fn rbm_defaults() {
        let p: ProblemSpec = serde_json::from_str(r#"{"kind": "rbm", "n_hidden": 10}"#).unwrap();
        let ProblemSpec::Rbm { learning_rate, epochs, gibbs_k, lambda, reset_prob, init_sigma, .. } = p
        else {
            panic!()
        };
        assert_eq!((learning_rate, epochs, gibbs_k, lambda), (0.01, 1000, 1, 0.0));
        assert_eq!((reset_prob, init_sigma), (0.1, 0.1));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = FOUR_POINT.replace("\"seeds\"", "\"seedz\"");
        assert!(matches!(ExperimentConfig::from_json(&bad), Err(BenchError::Parse { .. })));
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = ExperimentConfig::from_json(FOUR_POINT).unwrap();
        let b = ExperimentConfig::from_json(&a.to_json()).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        assert_ne!(a.hash(), a.as_full().hash());
    }

    #[test]
    fn resolve_generated_instance_and_full_mode() {
        let cfg = ExperimentConfig::from_json(
            r#"{
            "problem": {"kind": "hmm", "n_states": 4},
            "instance": {"generate": {"type": "bitstring", "length": 16}, "seed": 3},
            "schedule": [{"size": 2, "repeats": 10}, {"size": 4}],
            "budget": {"max_cost_evaluations": 1000},
            "seeds": {"start": 0, "count": 2}
        }"#,
        )
        .unwrap();
        let exp = cfg.resolve(Path::new(".")).unwrap();
        assert_eq!(exp.schedule.levels().len(), 2);
        let full = cfg.as_full().resolve(Path::new(".")).unwrap();
        assert_eq!(full.schedule.levels(), &[Level::unbounded(4)]);
    }

    #[test]
    fn resolve_rejects_inconsistent_schedule() {
        let mut cfg = ExperimentConfig::from_json(FOUR_POINT).unwrap();
        cfg.instance = InstanceSpec::Generate { generate: DatasetSpec::Bitstring { length: 4 }, seed: 0 };
        assert!(matches!(cfg.resolve(Path::new(".")), Err(BenchError::Config(_))));

        let mut cfg = ExperimentConfig::from_json(FOUR_POINT).unwrap();
        cfg.instance = InstanceSpec::Generate {
            generate: DatasetSpec::GaussianClusters { n: 8, centers: 2, dim: 1, spread: 1.0, extent: 10.0 },
            seed: 0,
        };
        cfg.schedule[1].size = 3;
        assert!(matches!(cfg.resolve(Path::new(".")), Err(BenchError::Core(_))));
        cfg.schedule[1].size = 2;
        cfg.seeds = SeedSpec::List(vec![]);
        assert!(cfg.resolve(Path::new(".")).is_err());
    }
}
