//! Reference preprocessors: instance selection, column removal and random
//! value removal.

use std::collections::HashSet;
use std::str::FromStr;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Instance, Slot};
use crate::error::{Error, Result};
use crate::eval::stratified_folds;
use crate::learner::LearnerSpec;

pub const DEFAULT_RESERVOIR_FRACTION: f64 = 1.0 / 20.0;
pub const DEFAULT_MISCLASSIFIED_FOLDS: usize = 10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMethod {
    #[default]
    Reservoir,
    Misclassified,
    DropColumns,
    RandomValue,
}

impl FromStr for BaselineMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "reservoir" => Ok(BaselineMethod::Reservoir),
            "misclassified" => Ok(BaselineMethod::Misclassified),
            "drop_columns" => Ok(BaselineMethod::DropColumns),
            "random_value" => Ok(BaselineMethod::RandomValue),
            other => Err(Error::config(format!("unknown baseline `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub method: BaselineMethod,
    pub reservoir_fraction: f64,
    pub drop_columns: Vec<String>,
    pub random_value_rate: f64,
    pub misclassified_folds: usize,
    pub seed: u64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            method: BaselineMethod::Reservoir,
            reservoir_fraction: DEFAULT_RESERVOIR_FRACTION,
            drop_columns: Vec::new(),
            random_value_rate: 0.5,
            misclassified_folds: DEFAULT_MISCLASSIFIED_FOLDS,
            seed: 0,
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        check_fraction(self.reservoir_fraction)?;
        check_rate(self.random_value_rate)?;
        if self.misclassified_folds < 2 {
            return Err(Error::config("misclassified filter needs at least 2 folds"));
        }
        Ok(())
    }
}

fn check_fraction(fraction: f64) -> Result<()> {
    if fraction > 0.0 && fraction <= 1.0 {
        Ok(())
    } else {
        Err(Error::config(format!("reservoir fraction must lie in (0, 1], got {fraction}")))
    }
}

fn check_rate(rate: f64) -> Result<()> {
    if (0.0..=1.0).contains(&rate) {
        Ok(())
    } else {
        Err(Error::config(format!("removal rate must lie in [0, 1], got {rate}")))
    }
}

/// Indices of a uniform `k`-subset of `0..n` by Algorithm R, ascending.
pub fn reservoir_indices(n: usize, k: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut reservoir: Vec<usize> = (0..k.min(n)).collect();
    for i in k..n {
        let j = rng.gen_range(0..=i);
        if j < k {
            reservoir[j] = i;
        }
    }
    reservoir.sort_unstable();
    reservoir
}

pub(crate) fn reservoir_kept(d: &Dataset, fraction: f64, seed: u64) -> Result<Vec<usize>> {
    check_fraction(fraction)?;
    if d.is_empty() {
        return Err(Error::data("cannot sample from an empty dataset"));
    }
    let k = ((fraction * d.len() as f64).ceil() as usize).clamp(1, d.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(reservoir_indices(d.len(), k, &mut rng))
}

/// `⌈fraction·|I|⌉` instances sampled uniformly without replacement, in
/// their original order.
pub fn reservoir_select(d: &Dataset, fraction: f64, seed: u64) -> Result<Dataset> {
    Ok(d.subset(&reservoir_kept(d, fraction, seed)?))
}

pub(crate) fn misclassified_kept(d: &Dataset, learner: &LearnerSpec, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::config("misclassified filter needs at least 2 folds"));
    }
    if folds > d.len() {
        return Err(Error::data(format!("{folds} folds for {} instances", d.len())));
    }
    let assignment = stratified_folds(d, folds, seed)?;
    let mut wrong = vec![false; d.len()];
    for fold in 0..folds {
        let train: Vec<usize> = (0..d.len()).filter(|&i| assignment[i] != fold).collect();
        let model = learner.train(&d.subset(&train))?;
        for i in (0..d.len()).filter(|&i| assignment[i] == fold) {
            wrong[i] = model.predict(&d.instances[i]) != d.instances[i].label;
        }
    }
    let kept: Vec<usize> = (0..d.len()).filter(|&i| !wrong[i]).collect();
    if kept.is_empty() {
        warn!("misclassified filter removed every instance");
    }
    Ok(kept)
}

/// Removes every instance whose out-of-fold prediction is wrong.
pub fn misclassified_filter(d: &Dataset, learner: &LearnerSpec, folds: usize, seed: u64) -> Result<Dataset> {
    Ok(d.subset(&misclassified_kept(d, learner, folds, seed)?))
}

fn column_indices(d: &Dataset, names: &[String]) -> Result<HashSet<usize>> {
    names
        .iter()
        .map(|n| {
            d.features
                .iter()
                .position(|f| &f.name == n)
                .ok_or_else(|| Error::config(format!("no feature named `{n}`")))
        })
        .collect()
}

/// The dataset without the named features.
pub fn drop_columns(d: &Dataset, names: &[String]) -> Result<Dataset> {
    let drop = column_indices(d, names)?;
    let keep: Vec<usize> = (0..d.num_features()).filter(|x| !drop.contains(x)).collect();
    Ok(Dataset {
        name: d.name.clone(),
        features: keep.iter().map(|&x| d.features[x].clone()).collect(),
        instances: d
            .instances
            .iter()
            .map(|inst| Instance {
                slots: keep.iter().map(|&x| inst.slots[x]).collect(),
                label: inst.label,
                weight: inst.weight,
            })
            .collect(),
        labels: d.labels.clone(),
        class_name: d.class_name.clone(),
    })
}

/// Sets the named features to missing everywhere, keeping the schema.
pub fn mask_columns(d: &Dataset, names: &[String]) -> Result<Dataset> {
    let drop = column_indices(d, names)?;
    let mut out = d.clone();
    for inst in &mut out.instances {
        for &x in &drop {
            inst.slots[x] = Slot::MISSING;
        }
    }
    Ok(out)
}

/// Clears each observed cell with probability `rate`, then drops instances
/// left without values. Returns the filtered data and the original indices
/// of the survivors.
pub(crate) fn random_value_kept(d: &Dataset, rate: f64, seed: u64) -> Result<(Dataset, Vec<usize>)> {
    check_rate(rate)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kept = Vec::with_capacity(d.len());
    let mut instances = Vec::with_capacity(d.len());
    for (y, inst) in d.instances.iter().enumerate() {
        let slots: Vec<Slot> = inst
            .slots
            .iter()
            .map(|&s| {
                if !s.is_missing() && rng.gen::<f64>() < rate {
                    Slot::MISSING
                } else {
                    s
                }
            })
            .collect();
        if slots.iter().any(|s| !s.is_missing()) {
            kept.push(y);
            instances.push(Instance {
                slots,
                label: inst.label,
                weight: inst.weight,
            });
        }
    }
    Ok((d.with_instances(instances), kept))
}

pub fn random_value_removal(d: &Dataset, rate: f64, seed: u64) -> Result<Dataset> {
    random_value_kept(d, rate, seed).map(|(out, _)| out)
}
