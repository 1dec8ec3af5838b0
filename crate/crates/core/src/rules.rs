//! Ordered rule list learned by sequential covering.
//!
//! A simplified RIPPER/IREP: classes are handled from rarest to most
//! frequent, and the most frequent class becomes the default. For each class
//! the remaining data is split (stratified, seeded) into a grow set and a
//! prune set. A rule is grown on the grow set by repeatedly adding the
//! `feature = value` condition with the best FOIL gain until it covers no
//! negatives. Its tail is then pruned to the prefix with the best
//! `(p − n)/(p + n)` on the prune set. Learning for a class stops once a
//! rule is no more accurate on the instances it covers than predicting the
//! default class there. There is no global optimization pass and no MDL
//! stopping criterion.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Instance};
use crate::error::{Error, Result};
use crate::tree::argmax;

pub const DEFAULT_PRUNE_FRACTION: f64 = 1.0 / 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleParams {
    /// Share of each class's remaining instances held out for pruning.
    pub prune_fraction: f64,
    pub seed: u64,
}

impl Default for RuleParams {
    fn default() -> Self {
        RuleParams {
            prune_fraction: DEFAULT_PRUNE_FRACTION,
            seed: 1,
        }
    }
}

impl RuleParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.prune_fraction) {
            return Err(Error::config(format!(
                "prune fraction must lie in [0, 1), got {}",
                self.prune_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Condition {
    pub feature: usize,
    pub value: u32,
}

impl Condition {
    fn matches(&self, inst: &Instance) -> bool {
        inst.slots.get(self.feature).and_then(|s| s.get()) == Some(self.value)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub conditions: Vec<Condition>,
    pub label: u32,
}

impl Rule {
    pub fn matches(&self, inst: &Instance) -> bool {
        self.conditions.iter().all(|c| c.matches(inst))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleModel {
    pub rules: Vec<Rule>,
    pub default: u32,
    feature_names: Vec<String>,
    value_names: Vec<Vec<String>>,
    labels: Vec<String>,
    class_name: String,
}

/// Weighted positive/negative counts of `items` covered by `conds`.
fn coverage(d: &Dataset, items: &[usize], conds: &[Condition], label: u32) -> (f64, f64) {
    let mut p = 0.0;
    let mut n = 0.0;
    for &i in items {
        let inst = &d.instances[i];
        if conds.iter().all(|c| c.matches(inst)) {
            if inst.label == label {
                p += inst.weight;
            } else {
                n += inst.weight;
            }
        }
    }
    (p, n)
}

fn grow(d: &Dataset, grow_set: &[usize], label: u32) -> Vec<Condition> {
    let mut conds: Vec<Condition> = Vec::new();
    let mut covered: Vec<usize> = grow_set.to_vec();
    loop {
        let (p0, n0) = coverage(d, &covered, &[], label);
        if n0 <= 0.0 || p0 <= 0.0 {
            break;
        }
        let base = (p0 / (p0 + n0)).log2();
        let mut best: Option<(f64, Condition)> = None;
        for (x, f) in d.features.iter().enumerate() {
            if conds.iter().any(|c| c.feature == x) {
                continue;
            }
            let mut pv = vec![0.0; f.values.len()];
            let mut nv = vec![0.0; f.values.len()];
            for &i in &covered {
                let inst = &d.instances[i];
                if let Some(z) = inst.slots[x].get() {
                    if inst.label == label {
                        pv[z as usize] += inst.weight;
                    } else {
                        nv[z as usize] += inst.weight;
                    }
                }
            }
            for z in 0..f.values.len() {
                let (p1, n1) = (pv[z], nv[z]);
                if p1 <= 0.0 {
                    continue;
                }
                let gain = p1 * ((p1 / (p1 + n1)).log2() - base);
                if gain > 1e-12 && best.is_none_or(|(g, _)| gain > g) {
                    best = Some((gain, Condition { feature: x, value: z as u32 }));
                }
            }
        }
        let Some((_, c)) = best else { break };
        covered.retain(|&i| c.matches(&d.instances[i]));
        conds.push(c);
    }
    conds
}

/// Keeps the prefix of `conds` with the best `(p − n)/(p + n)` on
/// `eval_set`, preferring shorter prefixes on ties. Prefixes covering
/// nothing are not eligible.
fn prune(d: &Dataset, eval_set: &[usize], conds: &[Condition], label: u32) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for len in 1..=conds.len() {
        let (p, n) = coverage(d, eval_set, &conds[..len], label);
        if p + n <= 0.0 {
            continue;
        }
        let v = (p - n) / (p + n);
        if best.is_none_or(|(b, _)| v > b + 1e-12) {
            best = Some((v, len));
        }
    }
    best.map(|(_, len)| len)
}

fn split(
    d: &Dataset,
    remaining: &[usize],
    label: u32,
    fraction: f64,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, Vec<usize>) {
    let mut pos: Vec<usize> = remaining.iter().copied().filter(|&i| d.instances[i].label == label).collect();
    let mut neg: Vec<usize> = remaining.iter().copied().filter(|&i| d.instances[i].label != label).collect();
    pos.shuffle(rng);
    neg.shuffle(rng);
    let mut grow = Vec::new();
    let mut prune = Vec::new();
    for part in [pos, neg] {
        let k = (part.len() as f64 * fraction).floor() as usize;
        prune.extend_from_slice(&part[..k]);
        grow.extend_from_slice(&part[k..]);
    }
    grow.sort_unstable();
    prune.sort_unstable();
    (grow, prune)
}

pub fn train_rules(d: &Dataset, params: &RuleParams) -> Result<RuleModel> {
    params.validate()?;
    if d.is_empty() {
        return Err(Error::data("cannot learn rules from an empty dataset"));
    }
    let weights = d.class_weights();
    let mut order: Vec<u32> = (0..d.num_labels() as u32).filter(|&l| weights[l as usize] > 0.0).collect();
    order.sort_by(|&a, &b| weights[a as usize].total_cmp(&weights[b as usize]).then(a.cmp(&b)));
    let default_label = order.last().copied().unwrap_or(0);

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut rules = Vec::new();
    let mut remaining: Vec<usize> = (0..d.len()).collect();

    for &label in order.iter().take(order.len().saturating_sub(1)) {
        while remaining.iter().any(|&i| d.instances[i].label == label) {
            let (grow_set, prune_set) = split(d, &remaining, label, params.prune_fraction, &mut rng);
            let conds = grow(d, &grow_set, label);
            if conds.is_empty() {
                break;
            }
            let (eval_set, len) = match prune(d, &prune_set, &conds, label) {
                Some(len) => (&prune_set, len),
                None => match prune(d, &grow_set, &conds, label) {
                    Some(len) => (&grow_set, len),
                    None => break,
                },
            };
            let conds = conds[..len].to_vec();

            let mut covered_w = 0.0;
            let mut correct = 0.0;
            let mut default_w = 0.0;
            for &i in eval_set {
                let inst = &d.instances[i];
                if conds.iter().all(|c| c.matches(inst)) {
                    covered_w += inst.weight;
                    if inst.label == label {
                        correct += inst.weight;
                    }
                    if inst.label == default_label {
                        default_w += inst.weight;
                    }
                }
            }
            if covered_w <= 0.0 || correct <= default_w {
                break;
            }
            let before = remaining.len();
            remaining.retain(|&i| !conds.iter().all(|c| c.matches(&d.instances[i])));
            rules.push(Rule { conditions: conds, label });
            if remaining.len() == before {
                break;
            }
        }
    }

    let default = if remaining.is_empty() {
        argmax(&weights)
    } else {
        let mut w = vec![0.0; d.num_labels()];
        for &i in &remaining {
            w[d.instances[i].label as usize] += d.instances[i].weight;
        }
        argmax(&w)
    };

    Ok(RuleModel {
        rules,
        default,
        feature_names: d.features.iter().map(|f| f.name.clone()).collect(),
        value_names: d.features.iter().map(|f| f.values.clone()).collect(),
        labels: d.labels.clone(),
        class_name: d.class_name.clone(),
    })
}

impl RuleModel {
    /// Rule count including the default rule.
    pub fn size(&self) -> usize {
        self.rules.len() + 1
    }

    /// Label of the first matching rule, or the default.
    pub fn predict(&self, inst: &Instance) -> u32 {
        self.rules
            .iter()
            .find(|r| r.matches(inst))
            .map_or(self.default, |r| r.label)
    }

    /// Features used in any condition, ascending.
    pub fn condition_features(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self
            .rules
            .iter()
            .flat_map(|r| r.conditions.iter().map(|c| c.feature))
            .collect();
        f.sort_unstable();
        f.dedup();
        f
    }

    /// One rule per line: `(a = 'x') and (b = 'y') => class=L`, ending with
    /// the bare default rule.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for r in &self.rules {
            let conds: Vec<String> = r
                .conditions
                .iter()
                .map(|c| {
                    format!(
                        "({} = '{}')",
                        self.feature_names[c.feature], self.value_names[c.feature][c.value as usize]
                    )
                })
                .collect();
            let _ = writeln!(s, "{} => {}={}", conds.join(" and "), self.class_name, self.labels[r.label as usize]);
        }
        let _ = writeln!(s, " => {}={}", self.class_name, self.labels[self.default as usize]);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::DatasetBuilder;

    #[test]
    fn single_label_is_default_only() {
        let mut b = DatasetBuilder::new("s", ["a"], "class");
        b.push(&[Some("x")], "k", 1.0).unwrap();
        b.push(&[Some("y")], "k", 1.0).unwrap();
        let m = train_rules(&b.build(), &RuleParams::default()).unwrap();
        assert_eq!(m.size(), 1);
        assert_eq!(m.to_text(), " => class=k\n");
    }

    #[test]
    fn one_condition_concept() {
        let mut b = DatasetBuilder::new("c", ["f1", "f2"], "class");
        for i in 0..30 {
            let f2 = ["p", "q", "r"][i % 3];
            if i % 3 == 0 {
                b.push(&[Some("a"), Some(f2)], "X", 1.0).unwrap();
            } else {
                let f1 = if i % 2 == 0 { "b" } else { "c" };
                b.push(&[Some(f1), Some(f2)], "Y", 1.0).unwrap();
            }
        }
        let d = b.build();
        let m = train_rules(&d, &RuleParams::default()).unwrap();
        assert_eq!(m.size(), 2);
        assert_eq!(m.to_text(), "(f1 = 'a') => class=X\n => class=Y\n");
        for inst in &d.instances {
            assert_eq!(m.predict(inst), inst.label);
        }
    }

    #[test]
    fn empty_is_an_error() {
        let d = DatasetBuilder::new("e", ["a"], "c").build();
        assert!(train_rules(&d, &RuleParams::default()).is_err());
    }

    #[test]
    fn bad_prune_fraction() {
        let mut b = DatasetBuilder::new("s", ["a"], "c");
        b.push(&[Some("x")], "k", 1.0).unwrap();
        let p = RuleParams { prune_fraction: 1.0, seed: 0 };
        assert!(train_rules(&b.build(), &p).unwrap_err().is_config());
    }
}
