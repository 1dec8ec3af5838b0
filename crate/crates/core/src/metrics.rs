//! Per-value importance statistics.
//!
//! For every observed value `v` of feature `x` the table records the class
//! distribution of the instances holding `v`, its conditional entropy
//! `H(D|v)` in base `|L|`, the information gain `IG = H(D) − H(D|v)` and the
//! per-feature normalized gain `IG_N = IG / max IG`. By default `H(D)` is the
//! sum of all per-value conditional entropies; [`ConfusionBase::ClassEntropy`]
//! switches to the usual class entropy of the dataset.
//!
//! Missing cells contribute to no value's counts.

use std::fmt::Write as _;
use std::str::FromStr;

use log::warn;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Which information metric drives removal.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Iota {
    #[default]
    Entropy,
    InfoGain,
}

impl FromStr for Iota {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "entropy" => Ok(Iota::Entropy),
            "infogain" | "info_gain" | "ig" => Ok(Iota::InfoGain),
            other => Err(Error::config(format!("unknown information metric `{other}`"))),
        }
    }
}

impl std::fmt::Display for Iota {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Iota::Entropy => "entropy",
            Iota::InfoGain => "infogain",
        })
    }
}

/// Definition of the dataset confusion `H(D)` used by information gain.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ConfusionBase {
    /// Sum of all per-value conditional entropies.
    #[default]
    SumOfValues,
    /// Class entropy of the dataset, base `|L|`.
    ClassEntropy,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValueStats<T> {
    pub feature: usize,
    pub value: u32,
    /// Number of instances holding this value.
    pub support: usize,
    /// `p(l | v)` for each label, indexed like [`Dataset::labels`].
    pub class_probs: Vec<T>,
    /// Share of this value among the feature's observed cells.
    pub weight: T,
    pub entropy: T,
    pub info_gain: T,
    pub norm_info_gain: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureStats<T> {
    /// Observed values in identifier order.
    pub values: Vec<ValueStats<T>>,
    index: Vec<Option<usize>>,
}

impl<T> FeatureStats<T> {
    pub fn get(&self, value: u32) -> Option<&ValueStats<T>> {
        self.index
            .get(value as usize)
            .copied()
            .flatten()
            .map(|i| &self.values[i])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricTable<T> {
    pub fingerprint: u64,
    pub num_labels: usize,
    pub features: Vec<FeatureStats<T>>,
    pub dataset_confusion: T,
}

impl<T: Scalar> MetricTable<T> {
    pub fn get(&self, feature: usize, value: u32) -> Option<&ValueStats<T>> {
        self.features.get(feature).and_then(|f| f.get(value))
    }

    /// All entries, features in index order and values in identifier order.
    pub fn iter(&self) -> impl Iterator<Item = &ValueStats<T>> {
        self.features.iter().flat_map(|f| f.values.iter())
    }

    pub fn len(&self) -> usize {
        self.features.iter().map(|f| f.values.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Tab-separated dump, one row per observed value, with the removal
    /// probability under the given configuration.
    pub fn report(&self, d: &Dataset, iota: Iota, epsilon: f64) -> Result<String> {
        let mut s = String::from("feature\tvalue\tsupport\tH\tIG\tIG_N\tP_remove\n");
        for v in self.iter() {
            let p = removal_probability(v, iota, epsilon)?;
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
                d.features[v.feature].name,
                d.features[v.feature].values[v.value as usize],
                v.support,
                v.entropy,
                v.info_gain,
                v.norm_info_gain,
                p
            );
        }
        Ok(s)
    }
}

/// `−Σ p log_base p` with `0·log 0 = 0`. Defined as 0 when `base < 2`.
pub fn entropy<T: Scalar>(probs: &[T], base: usize) -> T {
    if base < 2 {
        return T::zero();
    }
    let ln_base = T::of(base as f64).ln();
    let h = probs
        .iter()
        .filter(|&&p| p > T::zero())
        .fold(T::zero(), |acc, &p| acc - p * p.ln() / ln_base);
    // Rounding can push a uniform distribution a hair above 1.
    h.max(T::zero()).min(T::one())
}

pub fn compute_stats<T: Scalar>(d: &Dataset) -> Result<MetricTable<T>> {
    compute_stats_with(d, ConfusionBase::default())
}

pub fn compute_stats_with<T: Scalar>(d: &Dataset, base: ConfusionBase) -> Result<MetricTable<T>> {
    if d.is_empty() {
        return Err(Error::data("cannot compute value statistics of an empty dataset"));
    }
    if d.observed_count() == 0 {
        return Err(Error::data("dataset has no observed values"));
    }
    let num_labels = d.num_labels();
    let mut features = Vec::with_capacity(d.num_features());

    for (x, feat) in d.features.iter().enumerate() {
        let nv = feat.values.len();
        let mut class_w = vec![vec![0.0f64; num_labels]; nv];
        let mut support = vec![0usize; nv];
        for inst in &d.instances {
            if let Some(z) = inst.slots[x].get() {
                class_w[z as usize][inst.label as usize] += inst.weight;
                support[z as usize] += 1;
            }
        }
        let total_w: f64 = class_w.iter().flatten().sum();
        let mut index = vec![None; nv];
        let mut values = Vec::new();
        for z in 0..nv {
            if support[z] == 0 {
                continue;
            }
            let wsum: f64 = class_w[z].iter().sum();
            let class_probs: Vec<T> = class_w[z]
                .iter()
                .map(|&c| if wsum > 0.0 { T::of(c / wsum) } else { T::zero() })
                .collect();
            let h = entropy(&class_probs, num_labels);
            index[z] = Some(values.len());
            values.push(ValueStats {
                feature: x,
                value: z as u32,
                support: support[z],
                class_probs,
                weight: if total_w > 0.0 { T::of(wsum / total_w) } else { T::zero() },
                entropy: h,
                info_gain: T::zero(),
                norm_info_gain: T::zero(),
            });
        }
        features.push(FeatureStats { values, index });
    }

    let dataset_confusion = match base {
        ConfusionBase::SumOfValues => features
            .iter()
            .flat_map(|f: &FeatureStats<T>| f.values.iter())
            .fold(T::zero(), |acc, v| acc + v.entropy),
        ConfusionBase::ClassEntropy => {
            let w = d.class_weights();
            let total: f64 = w.iter().sum();
            let p: Vec<T> = w.iter().map(|&c| T::of(c / total)).collect();
            entropy(&p, num_labels)
        }
    };

    for (x, f) in features.iter_mut().enumerate() {
        let mut max_ig = T::neg_infinity();
        for v in &mut f.values {
            v.info_gain = (dataset_confusion - v.entropy).max(T::zero());
            max_ig = max_ig.max(v.info_gain);
        }
        if f.values.is_empty() {
            continue;
        }
        if max_ig <= T::zero() {
            warn!(
                "feature `{}`: every value has zero information gain; IG_N set to 1",
                d.features[x].name
            );
            for v in &mut f.values {
                v.norm_info_gain = T::one();
            }
        } else {
            for v in &mut f.values {
                v.norm_info_gain = (v.info_gain / max_ig).max(T::zero()).min(T::one());
            }
        }
    }

    Ok(MetricTable {
        fingerprint: d.fingerprint(),
        num_labels,
        features,
        dataset_confusion,
    })
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon <= 1.0 {
        Ok(())
    } else {
        Err(Error::config(format!("epsilon must lie in (0, 1], got {epsilon}")))
    }
}

/// Probability that a value is removed: `H/ε` for entropy, `(1 − IG_N)/ε`
/// for information gain, clamped to 1.
pub fn removal_probability<T: Scalar>(s: &ValueStats<T>, iota: Iota, epsilon: f64) -> Result<T> {
    check_epsilon(epsilon)?;
    let eps = T::of(epsilon);
    let num = match iota {
        Iota::Entropy => s.entropy,
        Iota::InfoGain => T::one() - s.norm_info_gain,
    };
    Ok((num / eps).min(T::one()).max(T::zero()))
}

/// Expected post-selection weight of each value, in [`MetricTable::iter`]
/// order: 0 when `H = 1`, otherwise `w·(1 − H)`.
pub fn expected_after_weights<T: Scalar>(table: &MetricTable<T>) -> Vec<T> {
    table
        .iter()
        .map(|v| {
            if v.entropy >= T::one() {
                T::zero()
            } else {
                v.weight * (T::one() - v.entropy)
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Confusion<T> {
    /// `Σ w·H` over all values.
    pub before: T,
    /// `Σ w̃·H` with the supplied post-selection weights.
    pub after: T,
}

pub fn confusion_report<T: Scalar>(before: &MetricTable<T>, after_weights: &[T]) -> Result<Confusion<T>> {
    if after_weights.len() != before.len() {
        return Err(Error::data(format!(
            "{} post-selection weights for a table of {} values",
            after_weights.len(),
            before.len()
        )));
    }
    let mut b = T::zero();
    let mut a = T::zero();
    for (v, &w_after) in before.iter().zip(after_weights) {
        b = b + v.weight * v.entropy;
        a = a + w_after * v.entropy;
    }
    Ok(Confusion { before: b, after: a })
}
