//! C4.5-style decision tree over categorical data.
//!
//! Multiway splits on one feature per node, one branch per value of the
//! feature that occurs in the training data. The split feature maximizes the
//! gain ratio among candidates whose gain is at least average. Instances
//! missing the split feature descend every branch with their weight scaled by
//! the branch's share of known weight, and prediction routes missing or
//! unseen values the same way. Subtrees are replaced by leaves when the
//! pessimistic error estimate (confidence factor `cf`) does not get worse.
//!
//! Setting `cf = 1` disables pruning; in that mode impure nodes are also
//! split when no candidate has positive gain, so the tree can fit
//! parity-style concepts exactly.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::{Dataset, Instance};
use crate::error::{Error, Result};

pub const DEFAULT_MIN_LEAF: usize = 2;
pub const DEFAULT_CF: f64 = 0.25;

const GAIN_EPS: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// Minimum weight a branch needs to count towards a valid split.
    pub min_leaf: usize,
    /// Pruning confidence factor in `(0, 0.5]`; `1` disables pruning.
    pub cf: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            min_leaf: DEFAULT_MIN_LEAF,
            cf: DEFAULT_CF,
        }
    }
}

impl TreeParams {
    pub fn unpruned() -> Self {
        TreeParams { min_leaf: 1, cf: 1.0 }
    }

    pub fn pruning(&self) -> bool {
        self.cf < 1.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_leaf == 0 {
            return Err(Error::config("min_leaf must be at least 1"));
        }
        if !(self.cf > 0.0 && (self.cf <= 0.5 || self.cf == 1.0)) {
            return Err(Error::config(format!(
                "confidence factor must lie in (0, 0.5] or equal 1, got {}",
                self.cf
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub value: u32,
    pub child: usize,
    /// Share of the parent's known training weight that took this branch.
    pub share: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        /// Weighted training class counts reaching the leaf. Empty branches
        /// inherit their parent's counts.
        counts: Vec<f64>,
        label: u32,
        /// Training weight that actually reached the leaf.
        weight: f64,
    },
    Split {
        feature: usize,
        counts: Vec<f64>,
        branches: Vec<Branch>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    /// Arena; the root is node 0.
    pub nodes: Vec<Node>,
    feature_names: Vec<String>,
    value_names: Vec<Vec<String>>,
    labels: Vec<String>,
}

enum Grown {
    Leaf {
        counts: Vec<f64>,
        weight: f64,
    },
    Split {
        feature: usize,
        counts: Vec<f64>,
        children: Vec<(u32, f64, Grown)>,
    },
}

fn total(counts: &[f64]) -> f64 {
    counts.iter().sum()
}

/// Argmax with ties resolved towards the lowest label index.
pub(crate) fn argmax(counts: &[f64]) -> u32 {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best as u32
}

fn entropy2(counts: &[f64]) -> f64 {
    let n = total(counts);
    if n <= 0.0 {
        return 0.0;
    }
    counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / n;
            -p * p.log2()
        })
        .sum()
}

/// Upper-confidence extra errors for a leaf with `n` training weight and
/// `e` errors, as used by C4.5's pessimistic pruning.
pub fn added_errors(n: f64, e: f64, cf: f64) -> f64 {
    if n <= 0.0 {
        return 0.0;
    }
    if e < 1.0 {
        let base = n * (1.0 - cf.powf(1.0 / n));
        if e == 0.0 {
            return base;
        }
        return base + e * (added_errors(n, 1.0, cf) - base);
    }
    if e + 0.5 >= n {
        return (n - e).max(0.0);
    }
    let z = Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(1.0 - cf);
    let f = (e + 0.5) / n;
    let r = (f + z * z / (2.0 * n) + z * (f / n - f * f / n + z * z / (4.0 * n * n)).sqrt())
        / (1.0 + z * z / n);
    r * n - e
}

struct Grower<'a> {
    d: &'a Dataset,
    params: TreeParams,
    /// Values of each feature carrying positive training weight.
    active: Vec<Vec<u32>>,
}

struct Candidate {
    feature: usize,
    gain: f64,
    ratio: f64,
}

impl Grower<'_> {
    fn counts(&self, items: &[(usize, f64)]) -> Vec<f64> {
        let mut c = vec![0.0; self.d.num_labels()];
        for &(i, w) in items {
            c[self.d.instances[i].label as usize] += w;
        }
        c
    }

    fn evaluate(&self, items: &[(usize, f64)], x: usize, node_w: f64) -> Option<Candidate> {
        let nv = self.d.features[x].values.len();
        let nl = self.d.num_labels();
        let mut per_value = vec![vec![0.0; nl]; nv];
        let mut known = vec![0.0; nl];
        for &(i, w) in items {
            let inst = &self.d.instances[i];
            if let Some(z) = inst.slots[x].get() {
                per_value[z as usize][inst.label as usize] += w;
                known[inst.label as usize] += w;
            }
        }
        let known_w = total(&known);
        if known_w <= 0.0 {
            return None;
        }
        let min_leaf = self.params.min_leaf as f64;
        let big = self.active[x]
            .iter()
            .filter(|&&z| total(&per_value[z as usize]) >= min_leaf)
            .count();
        if big < 2 {
            return None;
        }
        let mut cond = 0.0;
        let mut split_info = 0.0;
        for &z in &self.active[x] {
            let wz = total(&per_value[z as usize]);
            if wz > 0.0 {
                cond += wz / known_w * entropy2(&per_value[z as usize]);
                let p = wz / node_w;
                split_info -= p * p.log2();
            }
        }
        let unknown = node_w - known_w;
        if unknown > 1e-12 {
            let p = unknown / node_w;
            split_info -= p * p.log2();
        }
        let gain = known_w / node_w * (entropy2(&known) - cond);
        let ratio = if split_info > 0.0 { gain / split_info } else { 0.0 };
        Some(Candidate { feature: x, gain, ratio })
    }

    fn grow(&self, items: Vec<(usize, f64)>, used: &mut [bool], parent: &[f64]) -> Grown {
        let counts = self.counts(&items);
        let node_w = total(&counts);
        if node_w <= 0.0 {
            return Grown::Leaf {
                counts: parent.to_vec(),
                weight: 0.0,
            };
        }
        let classes = counts.iter().filter(|&&c| c > 0.0).count();
        if classes <= 1 || node_w < 2.0 * self.params.min_leaf as f64 {
            return Grown::Leaf { counts, weight: node_w };
        }

        let candidates: Vec<Candidate> = (0..self.d.num_features())
            .filter(|&x| !used[x])
            .filter_map(|x| self.evaluate(&items, x, node_w))
            .collect();
        let positive: Vec<&Candidate> = candidates.iter().filter(|c| c.gain > GAIN_EPS).collect();
        let chosen = if !positive.is_empty() {
            let avg = positive.iter().map(|c| c.gain).sum::<f64>() / positive.len() as f64;
            let mut best: Option<&Candidate> = None;
            for c in positive.iter().filter(|c| c.gain >= avg - 1e-3) {
                if best.is_none_or(|b| c.ratio > b.ratio) {
                    best = Some(c);
                }
            }
            best.map(|c| c.feature)
        } else if !self.params.pruning() {
            candidates.first().map(|c| c.feature)
        } else {
            None
        };
        let Some(x) = chosen else {
            return Grown::Leaf { counts, weight: node_w };
        };

        let mut per_value: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.d.features[x].values.len()];
        let mut unknown = Vec::new();
        for &(i, w) in &items {
            match self.d.instances[i].slots[x].get() {
                Some(z) => per_value[z as usize].push((i, w)),
                None => unknown.push((i, w)),
            }
        }
        let known_w: f64 = per_value.iter().flatten().map(|&(_, w)| w).sum();
        used[x] = true;
        let mut children = Vec::with_capacity(self.active[x].len());
        for &z in &self.active[x] {
            let mut sub = std::mem::take(&mut per_value[z as usize]);
            let share = sub.iter().map(|&(_, w)| w).sum::<f64>() / known_w;
            if share > 0.0 {
                sub.extend(unknown.iter().map(|&(i, w)| (i, w * share)));
            }
            let child = self.grow(sub, used, &counts);
            children.push((z, share, child));
        }
        used[x] = false;
        Grown::Split {
            feature: x,
            counts,
            children,
        }
    }
}

fn leaf_estimate(counts: &[f64], cf: f64) -> f64 {
    let n = total(counts);
    let e = n - counts.iter().copied().fold(0.0, f64::max);
    e + added_errors(n, e, cf)
}

/// Returns the pruned tree and its estimated error.
fn prune(node: Grown, cf: f64) -> (Grown, f64) {
    match node {
        Grown::Leaf { counts, weight } => {
            // Empty leaves carry their parent's counts but no training weight.
            let est = if weight > 0.0 { leaf_estimate(&counts, cf) } else { 0.0 };
            (Grown::Leaf { counts, weight }, est)
        }
        Grown::Split {
            feature,
            counts,
            children,
        } => {
            let mut subtree = 0.0;
            let mut kept = Vec::with_capacity(children.len());
            for (z, share, child) in children {
                let (c, e) = prune(child, cf);
                subtree += e;
                kept.push((z, share, c));
            }
            let as_leaf = leaf_estimate(&counts, cf);
            if as_leaf <= subtree + 1e-9 {
                let weight = total(&counts);
                (Grown::Leaf { counts, weight }, as_leaf)
            } else {
                (
                    Grown::Split {
                        feature,
                        counts,
                        children: kept,
                    },
                    subtree,
                )
            }
        }
    }
}

fn flatten(node: Grown, nodes: &mut Vec<Node>) -> usize {
    let id = nodes.len();
    match node {
        Grown::Leaf { counts, weight } => {
            let label = argmax(&counts);
            nodes.push(Node::Leaf { counts, label, weight });
        }
        Grown::Split {
            feature,
            counts,
            children,
        } => {
            nodes.push(Node::Split {
                feature,
                counts,
                branches: Vec::new(),
            });
            let mut branches = Vec::with_capacity(children.len());
            for (value, share, child) in children {
                let child = flatten(child, nodes);
                branches.push(Branch { value, child, share });
            }
            if let Node::Split { branches: b, .. } = &mut nodes[id] {
                *b = branches;
            }
        }
    }
    id
}

pub fn train_tree(d: &Dataset, params: &TreeParams) -> Result<TreeModel> {
    params.validate()?;
    if d.is_empty() {
        return Err(Error::data("cannot train a tree on an empty dataset"));
    }
    let mut active = vec![Vec::new(); d.num_features()];
    for (x, f) in d.features.iter().enumerate() {
        let mut w = vec![0.0; f.values.len()];
        for inst in &d.instances {
            if let Some(z) = inst.slots[x].get() {
                w[z as usize] += inst.weight;
            }
        }
        active[x] = (0..w.len() as u32).filter(|&z| w[z as usize] > 0.0).collect();
    }
    let grower = Grower {
        d,
        params: *params,
        active,
    };
    let items: Vec<(usize, f64)> = d
        .instances
        .iter()
        .enumerate()
        .map(|(i, inst)| (i, inst.weight))
        .collect();
    let mut used = vec![false; d.num_features()];
    let uniform = vec![0.0; d.num_labels()];
    let mut root = grower.grow(items, &mut used, &uniform);
    if params.pruning() {
        root = prune(root, params.cf).0;
    }
    let mut nodes = Vec::new();
    flatten(root, &mut nodes);
    Ok(TreeModel {
        nodes,
        feature_names: d.features.iter().map(|f| f.name.clone()).collect(),
        value_names: d.features.iter().map(|f| f.values.clone()).collect(),
        labels: d.labels.clone(),
    })
}

impl TreeModel {
    /// A single leaf with the given class counts.
    pub fn leaf(d: &Dataset, counts: Vec<f64>) -> TreeModel {
        let weight = total(&counts);
        TreeModel {
            nodes: vec![Node::Leaf {
                label: argmax(&counts),
                counts,
                weight,
            }],
            feature_names: d.features.iter().map(|f| f.name.clone()).collect(),
            value_names: d.features.iter().map(|f| f.values.clone()).collect(),
            labels: d.labels.clone(),
        }
    }

    /// Internal nodes plus leaves reachable from the root.
    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    /// Number of leaves, i.e. root-to-leaf paths.
    pub fn num_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], id: usize) -> usize {
            match &nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { branches, .. } => {
                    1 + branches.iter().map(|b| go(nodes, b.child)).max().unwrap_or(0)
                }
            }
        }
        go(&self.nodes, 0)
    }

    /// Features tested anywhere in the tree, ascending.
    pub fn split_features(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .collect();
        f.sort_unstable();
        f.dedup();
        f
    }

    /// Class distribution for `inst`; sums to 1.
    pub fn distribution(&self, inst: &Instance) -> Vec<f64> {
        let mut out = vec![0.0; self.labels.len()];
        self.accumulate(0, inst, 1.0, &mut out);
        let s = total(&out);
        if s > 0.0 {
            out.iter_mut().for_each(|p| *p /= s);
        } else if !out.is_empty() {
            let u = 1.0 / out.len() as f64;
            out.iter_mut().for_each(|p| *p = u);
        }
        out
    }

    fn accumulate(&self, id: usize, inst: &Instance, w: f64, out: &mut [f64]) {
        match &self.nodes[id] {
            Node::Leaf { counts, .. } => {
                let n = total(counts);
                if n > 0.0 {
                    for (o, c) in out.iter_mut().zip(counts) {
                        *o += w * c / n;
                    }
                } else {
                    let u = w / out.len() as f64;
                    out.iter_mut().for_each(|o| *o += u);
                }
            }
            Node::Split {
                feature, branches, ..
            } => {
                let routed = inst
                    .slots
                    .get(*feature)
                    .and_then(|s| s.get())
                    .and_then(|z| branches.iter().find(|b| b.value == z));
                match routed {
                    Some(b) => self.accumulate(b.child, inst, w, out),
                    None => {
                        for b in branches {
                            if b.share > 0.0 {
                                self.accumulate(b.child, inst, w * b.share, out);
                            }
                        }
                    }
                }
            }
        }
    }

    /// Predicted label (ties go to the earlier label) and distribution.
    pub fn predict(&self, inst: &Instance) -> (u32, Vec<f64>) {
        let dist = self.distribution(inst);
        (argmax(&dist), dist)
    }

    /// Indented text rendering in the style of Weka's J48 output.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        match &self.nodes[0] {
            Node::Leaf { .. } => {
                let _ = writeln!(s, ": {}", self.leaf_text(0));
            }
            Node::Split { .. } => self.write_node(0, 0, &mut s),
        }
        s
    }

    fn leaf_text(&self, id: usize) -> String {
        match &self.nodes[id] {
            Node::Leaf { counts, label, weight } => {
                let errors = (weight - counts[*label as usize] * weight / total(counts).max(1e-300)).max(0.0);
                if errors > 1e-9 {
                    format!("{} ({:.1}/{:.1})", self.labels[*label as usize], weight, errors)
                } else {
                    format!("{} ({:.1})", self.labels[*label as usize], weight)
                }
            }
            Node::Split { .. } => String::new(),
        }
    }

    fn write_node(&self, id: usize, depth: usize, s: &mut String) {
        let Node::Split { feature, branches, .. } = &self.nodes[id] else {
            return;
        };
        for b in branches {
            s.push_str(&"|   ".repeat(depth));
            let _ = write!(
                s,
                "{} = {}",
                self.feature_names[*feature], self.value_names[*feature][b.value as usize]
            );
            match &self.nodes[b.child] {
                Node::Leaf { .. } => {
                    let _ = writeln!(s, ": {}", self.leaf_text(b.child));
                }
                Node::Split { .. } => {
                    s.push('\n');
                    self.write_node(b.child, depth + 1, s);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{DatasetBuilder, Slot};

    fn xor() -> Dataset {
        let mut b = DatasetBuilder::new("xor", ["a", "b"], "c");
        for (a, bb) in [("0", "0"), ("0", "1"), ("1", "0"), ("1", "1")] {
            let l = if a == bb { "0" } else { "1" };
            b.push(&[Some(a), Some(bb)], l, 1.0).unwrap();
        }
        b.build()
    }

    #[test]
    fn single_label_is_one_leaf() {
        let mut b = DatasetBuilder::new("s", ["a"], "c");
        b.push(&[Some("x")], "k", 1.0).unwrap();
        b.push(&[Some("y")], "k", 1.0).unwrap();
        let t = train_tree(&b.build(), &TreeParams::default()).unwrap();
        assert_eq!(t.size(), 1);
    }

    #[test]
    fn xor_needs_seven_nodes_unpruned() {
        let d = xor();
        let t = train_tree(&d, &TreeParams::unpruned()).unwrap();
        assert_eq!(t.size(), 7);
        assert_eq!(t.num_leaves(), 4);
        assert_eq!(t.depth(), 2);
        for inst in &d.instances {
            assert_eq!(t.predict(inst).0, inst.label);
        }
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let d = DatasetBuilder::new("e", ["a"], "c").build();
        assert!(train_tree(&d, &TreeParams::default()).is_err());
    }

    #[test]
    fn no_features_gives_majority_leaf() {
        let mut b = DatasetBuilder::new("n", Vec::<String>::new(), "c");
        b.push(&[], "a", 1.0).unwrap();
        b.push(&[], "b", 1.0).unwrap();
        b.push(&[], "b", 1.0).unwrap();
        let d = b.build();
        let t = train_tree(&d, &TreeParams::default()).unwrap();
        assert_eq!(t.size(), 1);
        assert_eq!(t.predict(&d.instances[0]).0, 1);
    }

    #[test]
    fn invalid_params() {
        let d = xor();
        assert!(train_tree(&d, &TreeParams { min_leaf: 0, cf: 0.25 }).is_err());
        assert!(train_tree(&d, &TreeParams { min_leaf: 2, cf: 0.7 }).is_err());
        assert!(train_tree(&d, &TreeParams { min_leaf: 2, cf: 0.0 }).is_err());
    }

    #[test]
    fn all_missing_instance_gets_root_distribution() {
        let d = xor();
        let t = train_tree(&d, &TreeParams::unpruned()).unwrap();
        let dist = t.distribution(&Instance::new(vec![Slot::MISSING; 2], 0));
        assert!((dist[0] - 0.5).abs() < 1e-12 && (dist[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn added_errors_reference_points() {
        // Zero errors: n·(1 − cf^(1/n)).
        assert!((added_errors(6.0, 0.0, 0.25) - 6.0 * (1.0 - 0.25f64.powf(1.0 / 6.0))).abs() < 1e-12);
        // Saturation.
        assert_eq!(added_errors(2.0, 1.5, 0.25), 0.5);
        assert_eq!(added_errors(0.0, 0.0, 0.25), 0.0);
        // Monotone in errors.
        assert!(added_errors(20.0, 3.0, 0.25) + 3.0 < added_errors(20.0, 5.0, 0.25) + 5.0);
    }

    #[test]
    fn text_form_names_features_and_values() {
        let t = train_tree(&xor(), &TreeParams::unpruned()).unwrap();
        let text = t.to_text();
        assert!(text.starts_with("a = 0\n|   b = 0: 0 (1.0)\n"), "{text}");
    }
}
