use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agent::Hyperparams;
use crate::ansatz::AnsatzKind;
use crate::qsim::MAX_QUBITS;
use crate::tsp::{Generator, MIN_CITIES};
use crate::{Error, Result};

/// Grid definition, read from TOML.
///
/// ```toml
/// ansatz = ["eqc"]
/// layers = 1
/// sources = [4, 6, 8, 10]
/// targets = [6, 8, 10, 12, 15]
/// seeds = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9]
/// episodes_scratch = 1000
/// episodes_finetune = 100
/// finetune_eps_start = 0.3
/// eval_instances = 50
/// generator = "random_uniform"
/// scratch_at_target = true
/// baselines = true
///
/// [hyperparams]
/// learning_rate = 0.01
/// eps_start = 1.0
/// eps_end = 0.01
/// eps_decay = 1000.0
/// discount = 0.9
/// fd_step = 0.01
/// init_scale = 0.1
/// readout = "current_pair"
/// instance_mode = "fresh"
///
/// [bound]
/// delta = 0.05
/// p_hat_instances = 200
/// l_u = 2.0
/// ```
///
/// `hyperparams.episodes` is ignored; the episode counts come from
/// `episodes_scratch` and `episodes_finetune`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub ansatz: Vec<AnsatzKind>,
    pub layers: usize,
    pub sources: Vec<usize>,
    pub targets: Vec<usize>,
    pub seeds: Vec<u64>,
    pub episodes_scratch: usize,
    pub episodes_finetune: usize,
    /// ε restarts here for fine-tuning; the rest of the schedule is shared.
    pub finetune_eps_start: f64,
    pub eval_instances: usize,
    pub generator: Generator,
    /// Also train from scratch at every target size.
    pub scratch_at_target: bool,
    pub baselines: bool,
    pub hyperparams: Hyperparams,
    pub bound: BoundConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundConfig {
    pub delta: f64,
    /// Fresh source-size instances behind each P̂_n.
    pub p_hat_instances: usize,
    pub l_u: f64,
    /// `‖A‖_op` for the weighted ZZ layers; defaults to the generator's
    /// largest edge weight.
    pub a_norm: Option<f64>,
}

impl Default for BoundConfig {
    fn default() -> Self {
        BoundConfig {
            delta: 0.05,
            p_hat_instances: 200,
            l_u: 2.0,
            a_norm: None,
        }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            ansatz: vec![AnsatzKind::Eqc],
            layers: 1,
            sources: vec![4, 6, 8, 10],
            targets: vec![6, 8, 10, 12, 15],
            seeds: (0..10).collect(),
            episodes_scratch: 1000,
            episodes_finetune: 100,
            finetune_eps_start: 0.3,
            eval_instances: 50,
            generator: Generator::RandomUniform,
            scratch_at_target: true,
            baselines: true,
            hyperparams: Hyperparams::default(),
            bound: BoundConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&s)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.ansatz.is_empty() {
            return bad("ansatz list is empty".into());
        }
        if self.layers == 0 {
            return bad("layers must be at least 1".into());
        }
        if self.sources.is_empty() || self.seeds.is_empty() {
            return bad("need at least one source size and one seed".into());
        }
        for &k in self.sources.iter().chain(&self.targets) {
            if !(MIN_CITIES..=MAX_QUBITS).contains(&k) {
                return bad(format!("size {k} outside {MIN_CITIES}..={MAX_QUBITS}"));
            }
        }
        let min_source = *self.sources.iter().min().unwrap();
        if let Some(&t) = self.targets.iter().find(|&&t| t < min_source) {
            return bad(format!("target {t} below the smallest source {min_source}"));
        }
        if self.episodes_scratch == 0 {
            return bad("episodes_scratch must be positive".into());
        }
        if self.eval_instances == 0 {
            return bad("eval_instances must be positive".into());
        }
        self.hyperparams.validate()?;
        self.finetune_hyperparams().validate()?;
        let b = &self.bound;
        if !(b.delta > 0.0 && b.delta < 1.0) {
            return bad("bound.delta must lie in (0, 1)".into());
        }
        if b.p_hat_instances == 0 || !(b.l_u >= 0.0) || b.a_norm.is_some_and(|a| !(a >= 0.0)) {
            return bad("bound settings must be non-negative with p_hat_instances > 0".into());
        }
        Ok(())
    }

    pub fn scratch_hyperparams(&self) -> Hyperparams {
        Hyperparams {
            episodes: self.episodes_scratch,
            ..self.hyperparams.clone()
        }
    }

    pub fn finetune_hyperparams(&self) -> Hyperparams {
        Hyperparams {
            episodes: self.episodes_finetune,
            eps_start: self.finetune_eps_start,
            ..self.hyperparams.clone()
        }
    }

    /// Sizes that get a scratch run, ascending and deduplicated.
    pub fn scratch_sizes(&self) -> Vec<usize> {
        let mut v = self.sources.clone();
        if self.scratch_at_target {
            v.extend(&self.targets);
        }
        v.sort_unstable();
        v.dedup();
        v
    }

    /// `(n, m)` transfer pairs with `m > n`, ascending.
    pub fn transfer_pairs(&self) -> Vec<(usize, usize)> {
        let mut v: Vec<_> = self
            .sources
            .iter()
            .flat_map(|&n| self.targets.iter().filter(move |&&m| m > n).map(move |&m| (n, m)))
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn a_norm(&self) -> f64 {
        self.bound.a_norm.unwrap_or_else(|| self.generator.max_weight())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_roundtrip_through_toml() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let back = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn doc_example_parses_to_defaults() {
        let doc = include_str!("config.rs");
        let start = doc.find("/// ```toml").unwrap();
        let body: String = doc[start..]
            .lines()
            .skip(1)
            .take_while(|l| !l.contains("```"))
            .map(|l| l.trim_start().trim_start_matches("///").trim_start())
            .collect::<Vec<_>>()
            .join("\n");
        assert_eq!(ExperimentConfig::from_toml(&body).unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn partial_config_fills_defaults() {
        let cfg = ExperimentConfig::from_toml("sources = [4]\ntargets = [6]\nseeds = [3]\n").unwrap();
        assert_eq!(cfg.transfer_pairs(), vec![(4, 6)]);
        assert_eq!(cfg.scratch_sizes(), vec![4, 6]);
        assert_eq!(cfg.hyperparams, Hyperparams::default());
    }

    #[test]
    fn rejects_bad_grids() {
        for s in [
            "sources = [4]\ntargets = [3]",
            "sources = [2]",
            "targets = [17]",
            "seeds = []",
            "ansatz = []",
            "eval_instances = 0",
            "unknown_key = 1",
            "[hyperparams]\neps_start = 2.0",
            "[bound]\ndelta = 1.5",
            "finetune_eps_start = 0.001",
        ] {
            assert!(ExperimentConfig::from_toml(s).is_err(), "{s}");
        }
    }

    #[test]
    fn transfer_pairs_skip_equal_and_smaller_targets() {
        let cfg = ExperimentConfig::default();
        let pairs = cfg.transfer_pairs();
        assert_eq!(pairs.len(), 5 + 4 + 3 + 2);
        assert!(pairs.iter().all(|(n, m)| m > n));
        assert!(pairs.contains(&(10, 15)));
        assert!(!pairs.contains(&(8, 8)));
    }
}
