//! Learner specification and trained models behind one interface.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Instance};
use crate::error::{Error, Result};
use crate::rules::{train_rules, RuleModel, RuleParams, DEFAULT_PRUNE_FRACTION};
use crate::tree::{argmax, train_tree, TreeModel, TreeParams, DEFAULT_CF, DEFAULT_MIN_LEAF};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnerKind {
    #[default]
    Tree,
    Rules,
    /// Always predicts the training majority; size 1.
    Majority,
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tree" | "c45" | "j48" => Ok(LearnerKind::Tree),
            "rules" | "ripper" | "jrip" => Ok(LearnerKind::Rules),
            "majority" | "zeror" => Ok(LearnerKind::Majority),
            other => Err(Error::config(format!("unknown learner `{other}`"))),
        }
    }
}

impl std::fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LearnerKind::Tree => "tree",
            LearnerKind::Rules => "rules",
            LearnerKind::Majority => "majority",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerSpec {
    pub kind: LearnerKind,
    pub min_leaf: usize,
    pub cf: f64,
    pub prune_fraction: f64,
    /// Seed of the rule learner's grow/prune split.
    pub seed: u64,
}

impl Default for LearnerSpec {
    fn default() -> Self {
        LearnerSpec {
            kind: LearnerKind::Tree,
            min_leaf: DEFAULT_MIN_LEAF,
            cf: DEFAULT_CF,
            prune_fraction: DEFAULT_PRUNE_FRACTION,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Tree(TreeModel),
    Rules(RuleModel),
    Constant { label: u32 },
}

impl LearnerSpec {
    pub fn tree(min_leaf: usize, cf: f64) -> Self {
        LearnerSpec {
            kind: LearnerKind::Tree,
            min_leaf,
            cf,
            ..Default::default()
        }
    }

    pub fn rules() -> Self {
        LearnerSpec {
            kind: LearnerKind::Rules,
            ..Default::default()
        }
    }

    pub fn majority() -> Self {
        LearnerSpec {
            kind: LearnerKind::Majority,
            ..Default::default()
        }
    }

    pub fn tree_params(&self) -> TreeParams {
        TreeParams {
            min_leaf: self.min_leaf,
            cf: self.cf,
        }
    }

    pub fn rule_params(&self) -> RuleParams {
        RuleParams {
            prune_fraction: self.prune_fraction,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.tree_params().validate()?;
        self.rule_params().validate()
    }

    /// Trains a model. An empty training set yields a constant model
    /// predicting the first label, so evaluation stays total when filtering
    /// removed every instance.
    pub fn train(&self, d: &Dataset) -> Result<Model> {
        self.validate()?;
        if d.is_empty() {
            return Ok(Model::Constant { label: 0 });
        }
        match self.kind {
            LearnerKind::Tree => train_tree(d, &self.tree_params()).map(Model::Tree),
            LearnerKind::Rules => train_rules(d, &self.rule_params()).map(Model::Rules),
            LearnerKind::Majority => Ok(Model::Constant {
                label: argmax(&d.class_weights()),
            }),
        }
    }
}

impl Model {
    pub fn predict(&self, inst: &Instance) -> u32 {
        match self {
            Model::Tree(t) => t.predict(inst).0,
            Model::Rules(r) => r.predict(inst),
            Model::Constant { label } => *label,
        }
    }

    /// Node count for trees, rule count (with default) for rule lists.
    pub fn size(&self) -> usize {
        match self {
            Model::Tree(t) => t.size(),
            Model::Rules(r) => r.size(),
            Model::Constant { .. } => 1,
        }
    }

    /// Weighted accuracy on `d`; 0 for an empty set.
    pub fn accuracy(&self, d: &Dataset) -> f64 {
        let mut total = 0.0;
        let mut correct = 0.0;
        for inst in &d.instances {
            total += inst.weight;
            if self.predict(inst) == inst.label {
                correct += inst.weight;
            }
        }
        if total > 0.0 {
            correct / total
        } else {
            0.0
        }
    }

    /// Features the model tests, ascending.
    pub fn used_features(&self) -> Vec<usize> {
        match self {
            Model::Tree(t) => t.split_features(),
            Model::Rules(r) => r.condition_features(),
            Model::Constant { .. } => Vec::new(),
        }
    }

    pub fn to_text(&self, d: &Dataset) -> String {
        match self {
            Model::Tree(t) => t.to_text(),
            Model::Rules(r) => r.to_text(),
            Model::Constant { label } => format!(": {}\n", d.labels.get(*label as usize).map_or("?", String::as_str)),
        }
    }
}
