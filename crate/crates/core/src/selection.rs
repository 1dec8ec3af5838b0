//! Probabilistic value selection.
//!
//! * [`pvs`] draws once per distinct value of each feature and removes a
//!   value from every instance at once.
//! * [`pvs_plus`] draws once per occupied cell, removes values locally, then
//!   deletes each instance with probability equal to its missing-rate.
//!
//! Both consume a single ChaCha stream seeded from [`VsConfig::seed`] in a
//! fixed order (PVS: features by index, values by identifier; P⁺VS:
//! instances by index, cells by feature index, then the deletion draw), so a
//! run is reproducible on every platform.
//!
//! The filtered dataset keeps the input schema: removed values become
//! missing cells, value sets and feature lists are untouched, and the
//! feature/instance removals are reported alongside. [`FilterOutcome::compact`]
//! produces the pruned schema for writing out.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{Dataset, Feature, Instance, Slot};
use crate::error::{Error, Result};
use crate::metrics::{check_epsilon, removal_probability, Iota, MetricTable};
use crate::scalar::Scalar;

pub const DEFAULT_EPSILON: f64 = 0.5;
pub const DEFAULT_REPEATS: usize = 5;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Mode {
    /// Global removal per distinct value.
    #[serde(rename = "pvs")]
    Pvs,
    /// Per-instance removal plus missing-rate instance deletion.
    #[default]
    #[serde(rename = "pvs_plus")]
    PvsPlus,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pvs" => Ok(Mode::Pvs),
            "pvs_plus" | "pvs+" | "p+vs" | "pvsplus" => Ok(Mode::PvsPlus),
            other => Err(Error::config(format!("unknown selection mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Pvs => "pvs",
            Mode::PvsPlus => "pvs_plus",
        })
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct VsConfig {
    pub mode: Mode,
    pub iota: Iota,
    pub epsilon: f64,
    pub seed: u64,
    pub repeats: usize,
}

impl Default for VsConfig {
    fn default() -> Self {
        VsConfig {
            mode: Mode::PvsPlus,
            iota: Iota::Entropy,
            epsilon: DEFAULT_EPSILON,
            seed: 0,
            repeats: DEFAULT_REPEATS,
        }
    }
}

impl VsConfig {
    pub fn validate(&self) -> Result<()> {
        check_epsilon(self.epsilon)?;
        if self.repeats == 0 {
            return Err(Error::config("repeats must be at least 1"));
        }
        Ok(())
    }

    /// The same configuration with the seed of repeat `r` (`seed + r`).
    pub fn for_repeat(&self, r: usize) -> VsConfig {
        VsConfig {
            seed: self.seed.wrapping_add(r as u64),
            ..self.clone()
        }
    }
}

/// What was removed.
#[derive(Clone, Debug, PartialEq)]
pub enum RemovalMask {
    /// PVS: `[feature][value id]`, true when the value was removed globally.
    Values(Vec<Vec<bool>>),
    /// P⁺VS: `[original instance][feature]`, true when that cell was
    /// removed by selection (originally missing cells are false).
    Slots(Vec<Vec<bool>>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FilterOutcome<T> {
    /// Surviving instances in original order, same schema as the input.
    pub filtered: Dataset,
    pub mask: RemovalMask,
    /// Original indices of deleted instances, ascending.
    pub removed_instances: Vec<usize>,
    /// Features with no observed value left in `filtered`.
    pub removed_features: Vec<usize>,
    pub stats: MetricTable<T>,
}

impl<T: Scalar> FilterOutcome<T> {
    /// Original indices of the surviving instances, ascending.
    pub fn kept_indices(&self, original_len: usize) -> Vec<usize> {
        let mut removed = self.removed_instances.iter().peekable();
        (0..original_len)
            .filter(|i| {
                if removed.peek() == Some(&i) {
                    removed.next();
                    false
                } else {
                    true
                }
            })
            .collect()
    }

    /// Surviving values `V'^x` per feature: the values still present in at
    /// least one surviving cell.
    pub fn surviving_values(&self) -> Vec<Vec<u32>> {
        let d = &self.filtered;
        let mut seen: Vec<Vec<bool>> = d.features.iter().map(|f| vec![false; f.values.len()]).collect();
        for inst in &d.instances {
            for (x, s) in inst.slots.iter().enumerate() {
                if let Some(z) = s.get() {
                    seen[x][z as usize] = true;
                }
            }
        }
        seen.into_iter()
            .map(|s| (0..s.len() as u32).filter(|&z| s[z as usize]).collect())
            .collect()
    }

    /// The filtered data with removed features dropped and, for PVS, the
    /// removed values dropped from each value set.
    pub fn compact(&self) -> Dataset {
        let d = &self.filtered;
        let keep: Vec<usize> = (0..d.num_features())
            .filter(|x| !self.removed_features.contains(x))
            .collect();
        let mut remaps: Vec<Vec<Option<u32>>> = Vec::with_capacity(keep.len());
        let mut features = Vec::with_capacity(keep.len());
        for &x in &keep {
            let f = &d.features[x];
            let removed = match &self.mask {
                RemovalMask::Values(m) => m[x].clone(),
                RemovalMask::Slots(_) => vec![false; f.values.len()],
            };
            let mut remap = vec![None; f.values.len()];
            let mut values = Vec::new();
            for (z, v) in f.values.iter().enumerate() {
                if !removed[z] {
                    remap[z] = Some(values.len() as u32);
                    values.push(v.clone());
                }
            }
            remaps.push(remap);
            features.push(Feature::new(f.name.clone(), values, f.kind));
        }
        let instances = d
            .instances
            .iter()
            .map(|inst| Instance {
                slots: keep
                    .iter()
                    .zip(&remaps)
                    .map(|(&x, remap)| match inst.slots[x].get() {
                        Some(z) => remap[z as usize].map_or(Slot::MISSING, Slot::value),
                        None => Slot::MISSING,
                    })
                    .collect(),
                label: inst.label,
                weight: inst.weight,
            })
            .collect();
        Dataset {
            name: d.name.clone(),
            features,
            instances,
            labels: d.labels.clone(),
            class_name: d.class_name.clone(),
        }
    }

    /// Text dump of the mask. PVS: one `feature<TAB>value<TAB>kept|removed`
    /// line per value. P⁺VS: one line per original instance with one
    /// character per cell (`v` kept, `x` removed, `-` originally missing)
    /// followed by ` deleted` when the instance was dropped.
    pub fn mask_text(&self, original: &Dataset) -> String {
        let mut s = String::new();
        match &self.mask {
            RemovalMask::Values(m) => {
                for (x, f) in original.features.iter().enumerate() {
                    for (z, v) in f.values.iter().enumerate() {
                        let state = if m[x][z] { "removed" } else { "kept" };
                        let _ = writeln!(s, "{}\t{}\t{}", f.name, v, state);
                    }
                }
            }
            RemovalMask::Slots(m) => {
                let mut removed = self.removed_instances.iter().peekable();
                for (y, inst) in original.instances.iter().enumerate() {
                    for (x, slot) in inst.slots.iter().enumerate() {
                        s.push(if slot.is_missing() {
                            '-'
                        } else if m[y][x] {
                            'x'
                        } else {
                            'v'
                        });
                    }
                    if removed.peek() == Some(&&y) {
                        removed.next();
                        s.push_str(" deleted");
                    }
                    s.push('\n');
                }
            }
        }
        s
    }
}

fn check_table<T: Scalar>(d: &Dataset, stats: &MetricTable<T>) -> Result<()> {
    if stats.fingerprint != d.fingerprint() || stats.features.len() != d.num_features() {
        return Err(Error::data("value statistics were not computed on this dataset"));
    }
    Ok(())
}

fn empty_features(d: &Dataset) -> Vec<usize> {
    (0..d.num_features())
        .filter(|&x| d.instances.iter().all(|i| i.slots[x].is_missing()))
        .collect()
}

/// Runs the configured mode.
pub fn select<T: Scalar>(d: &Dataset, cfg: &VsConfig, stats: &MetricTable<T>) -> Result<FilterOutcome<T>> {
    match cfg.mode {
        Mode::Pvs => pvs(d, cfg, stats),
        Mode::PvsPlus => pvs_plus(d, cfg, stats),
    }
}

/// Global probabilistic value selection.
///
/// For each feature and each observed value a uniform `r ∈ [0, 1)` is drawn;
/// the value is removed from the whole dataset iff `r < P(remove)`.
/// Instances left with no value are deleted.
pub fn pvs<T: Scalar>(d: &Dataset, cfg: &VsConfig, stats: &MetricTable<T>) -> Result<FilterOutcome<T>> {
    check_epsilon(cfg.epsilon)?;
    check_table(d, stats)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut mask: Vec<Vec<bool>> = d.features.iter().map(|f| vec![false; f.values.len()]).collect();
    for (x, fs) in stats.features.iter().enumerate() {
        for v in &fs.values {
            let p = removal_probability(v, cfg.iota, cfg.epsilon)?;
            let r = T::of(rng.gen::<f64>());
            if r < p {
                mask[x][v.value as usize] = true;
            }
        }
    }

    let mut instances = Vec::with_capacity(d.len());
    let mut removed_instances = Vec::new();
    for (y, inst) in d.instances.iter().enumerate() {
        let slots: Vec<Slot> = inst
            .slots
            .iter()
            .enumerate()
            .map(|(x, &s)| match s.get() {
                Some(z) if mask[x][z as usize] => Slot::MISSING,
                _ => s,
            })
            .collect();
        if slots.iter().all(|s| s.is_missing()) {
            removed_instances.push(y);
        } else {
            instances.push(Instance {
                slots,
                label: inst.label,
                weight: inst.weight,
            });
        }
    }
    let filtered = d.with_instances(instances);
    Ok(FilterOutcome {
        removed_features: empty_features(&filtered),
        filtered,
        mask: RemovalMask::Values(mask),
        removed_instances,
        stats: stats.clone(),
    })
}

/// Per-instance probabilistic value selection.
///
/// Each occupied cell draws `r'`; with entropy the cell is cleared iff
/// `H > r'·ε`, with information gain iff `IG_N < r'·ε`. The instance's
/// missing-rate (originally missing plus cleared cells, over `|F|`) is then
/// compared against a fresh `r'` and the instance deleted iff it is larger.
/// Statistics are not recomputed along the way.
pub fn pvs_plus<T: Scalar>(d: &Dataset, cfg: &VsConfig, stats: &MetricTable<T>) -> Result<FilterOutcome<T>> {
    check_epsilon(cfg.epsilon)?;
    check_table(d, stats)?;
    let eps = T::of(cfg.epsilon);
    let nf = d.num_features();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut mask = Vec::with_capacity(d.len());
    let mut instances = Vec::with_capacity(d.len());
    let mut removed_instances = Vec::new();

    for (y, inst) in d.instances.iter().enumerate() {
        let mut cleared = vec![false; nf];
        let mut slots = inst.slots.clone();
        for (x, slot) in slots.iter_mut().enumerate() {
            let Some(z) = slot.get() else { continue };
            let v = stats.get(x, z).ok_or_else(|| {
                Error::data(format!("no statistics for feature {x} value {z}"))
            })?;
            let threshold = T::of(rng.gen::<f64>()) * eps;
            let remove = match cfg.iota {
                Iota::InfoGain => v.norm_info_gain < threshold,
                Iota::Entropy => v.entropy > threshold,
            };
            if remove {
                *slot = Slot::MISSING;
                cleared[x] = true;
            }
        }
        let missing = slots.iter().filter(|s| s.is_missing()).count();
        let miss_rate = if nf == 0 { 1.0 } else { missing as f64 / nf as f64 };
        let r: f64 = rng.gen();
        if miss_rate > r {
            removed_instances.push(y);
        } else {
            instances.push(Instance {
                slots,
                label: inst.label,
                weight: inst.weight,
            });
        }
        mask.push(cleared);
    }
    let filtered = d.with_instances(instances);
    Ok(FilterOutcome {
        removed_features: empty_features(&filtered),
        filtered,
        mask: RemovalMask::Slots(mask),
        removed_instances,
        stats: stats.clone(),
    })
}
