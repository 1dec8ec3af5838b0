//! Categorical / discretized tabular datasets.
//!
//! Feature values are interned per feature as small integer identifiers so
//! that counting and masking become plain array indexing. A missing cell is
//! represented by the reserved [`Slot::MISSING`] sentinel.

mod arff;
mod csv;

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

pub use self::arff::load_arff;
pub use self::csv::{load_csv, ClassIndex, CsvOptions};

use crate::error::{Error, Result};

/// One cell of an instance: either a value identifier of the owning feature
/// or missing.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Slot(u32);

impl Slot {
    pub const MISSING: Slot = Slot(u32::MAX);

    pub fn value(id: u32) -> Slot {
        assert!(id != u32::MAX, "value identifier collides with MISSING");
        Slot(id)
    }

    pub fn get(self) -> Option<u32> {
        (self != Slot::MISSING).then_some(self.0)
    }

    pub fn is_missing(self) -> bool {
        self == Slot::MISSING
    }
}

impl fmt::Debug for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.get() {
            Some(id) => write!(f, "{id}"),
            None => f.write_str("?"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureKind {
    Categorical,
    DiscretizedNumeric,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Feature {
    pub name: String,
    /// Distinct value identifiers; a value's id is its position here.
    pub values: Vec<String>,
    pub kind: FeatureKind,
}

impl Feature {
    pub fn new(name: impl Into<String>, values: Vec<String>, kind: FeatureKind) -> Self {
        Feature {
            name: name.into(),
            values,
            kind,
        }
    }

    pub fn value_id(&self, token: &str) -> Option<u32> {
        self.values.iter().position(|v| v == token).map(|i| i as u32)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub slots: Vec<Slot>,
    /// Index into [`Dataset::labels`].
    pub label: u32,
    pub weight: f64,
}

impl Instance {
    pub fn new(slots: Vec<Slot>, label: u32) -> Self {
        Instance {
            slots,
            label,
            weight: 1.0,
        }
    }

    pub fn missing_count(&self) -> usize {
        self.slots.iter().filter(|s| s.is_missing()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.iter().all(|s| s.is_missing())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub features: Vec<Feature>,
    pub instances: Vec<Instance>,
    pub labels: Vec<String>,
    /// Name of the class column, kept for serialization.
    pub class_name: String,
}

impl Dataset {
    pub fn num_features(&self) -> usize {
        self.features.len()
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn num_labels(&self) -> usize {
        self.labels.len()
    }

    /// Checks the structural invariants: slot arity, referential closure of
    /// value identifiers and labels, non-negative weights.
    pub fn validate(&self) -> Result<()> {
        if !self.instances.is_empty() && self.labels.is_empty() {
            return Err(Error::data("dataset has instances but no class labels"));
        }
        for (y, inst) in self.instances.iter().enumerate() {
            if inst.slots.len() != self.features.len() {
                return Err(Error::data(format!(
                    "instance {y} has {} slots, expected {}",
                    inst.slots.len(),
                    self.features.len()
                )));
            }
            if inst.label as usize >= self.labels.len() {
                return Err(Error::data(format!("instance {y} has unknown label {}", inst.label)));
            }
            if !(inst.weight >= 0.0) {
                return Err(Error::data(format!("instance {y} has negative weight")));
            }
            for (x, slot) in inst.slots.iter().enumerate() {
                if let Some(id) = slot.get() {
                    if id as usize >= self.features[x].values.len() {
                        return Err(Error::data(format!(
                            "instance {y}, feature `{}`: value id {id} out of range",
                            self.features[x].name
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Token of a slot, `None` when missing.
    pub fn token(&self, feature: usize, slot: Slot) -> Option<&str> {
        slot.get()
            .map(|id| self.features[feature].values[id as usize].as_str())
    }

    /// Weighted class histogram, indexed like [`Dataset::labels`].
    pub fn class_weights(&self) -> Vec<f64> {
        let mut counts = vec![0.0; self.labels.len()];
        for inst in &self.instances {
            counts[inst.label as usize] += inst.weight;
        }
        counts
    }

    /// Unweighted class histogram.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.labels.len()];
        for inst in &self.instances {
            counts[inst.label as usize] += 1;
        }
        counts
    }

    /// Same schema, different instances.
    pub fn with_instances(&self, instances: Vec<Instance>) -> Dataset {
        Dataset {
            name: self.name.clone(),
            features: self.features.clone(),
            instances,
            labels: self.labels.clone(),
            class_name: self.class_name.clone(),
        }
    }

    /// Same schema, the instances at `indices` in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        self.with_instances(indices.iter().map(|&i| self.instances[i].clone()).collect())
    }

    /// Stable 64-bit FNV-1a digest of schema shape and content.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv::default();
        h.write_u64(self.features.len() as u64);
        for f in &self.features {
            h.write_u64(f.values.len() as u64);
        }
        h.write_u64(self.labels.len() as u64);
        h.write_u64(self.instances.len() as u64);
        for inst in &self.instances {
            for s in &inst.slots {
                h.write_u64(s.0 as u64);
            }
            h.write_u64(inst.label as u64);
            h.write_u64(inst.weight.to_bits());
        }
        h.0
    }

    /// Number of non-missing slots in the whole dataset.
    pub fn observed_count(&self) -> usize {
        self.instances
            .iter()
            .map(|i| i.slots.len() - i.missing_count())
            .sum()
    }
}

struct Fnv(u64);

impl Default for Fnv {
    fn default() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }
}

impl Fnv {
    fn write_u64(&mut self, v: u64) {
        for b in v.to_le_bytes() {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }
}

/// Incremental construction from string tokens with per-feature interning.
pub struct DatasetBuilder {
    name: String,
    class_name: String,
    features: Vec<Feature>,
    lookup: Vec<HashMap<String, u32>>,
    labels: Vec<String>,
    label_lookup: HashMap<String, u32>,
    // Fixed domains reject unknown tokens instead of growing.
    fixed_domain: Vec<bool>,
    fixed_labels: bool,
    instances: Vec<Instance>,
}

impl DatasetBuilder {
    pub fn new<S: Into<String>>(
        name: impl Into<String>,
        feature_names: impl IntoIterator<Item = S>,
        class_name: impl Into<String>,
    ) -> Self {
        let features: Vec<Feature> = feature_names
            .into_iter()
            .map(|n| Feature::new(n, Vec::new(), FeatureKind::Categorical))
            .collect();
        let n = features.len();
        DatasetBuilder {
            name: name.into(),
            class_name: class_name.into(),
            features,
            lookup: vec![HashMap::new(); n],
            labels: Vec::new(),
            label_lookup: HashMap::new(),
            fixed_domain: vec![false; n],
            fixed_labels: false,
            instances: Vec::new(),
        }
    }

    /// Declares the complete value domain of a feature up front.
    pub fn domain(&mut self, feature: usize, values: Vec<String>) -> Result<&mut Self> {
        let mut map = HashMap::new();
        for (i, v) in values.iter().enumerate() {
            if map.insert(v.clone(), i as u32).is_some() {
                return Err(Error::data(format!(
                    "duplicate value `{v}` in domain of `{}`",
                    self.features[feature].name
                )));
            }
        }
        self.features[feature].values = values;
        self.lookup[feature] = map;
        self.fixed_domain[feature] = true;
        Ok(self)
    }

    pub fn label_domain(&mut self, labels: Vec<String>) -> Result<&mut Self> {
        let mut map = HashMap::new();
        for (i, v) in labels.iter().enumerate() {
            if map.insert(v.clone(), i as u32).is_some() {
                return Err(Error::data(format!("duplicate class label `{v}`")));
            }
        }
        self.labels = labels;
        self.label_lookup = map;
        self.fixed_labels = true;
        Ok(self)
    }

    pub fn kind(&mut self, feature: usize, kind: FeatureKind) -> &mut Self {
        self.features[feature].kind = kind;
        self
    }

    pub fn push(&mut self, tokens: &[Option<&str>], label: &str, weight: f64) -> Result<()> {
        if tokens.len() != self.features.len() {
            return Err(Error::data(format!(
                "row has {} feature cells, expected {}",
                tokens.len(),
                self.features.len()
            )));
        }
        let mut slots = Vec::with_capacity(tokens.len());
        for (x, tok) in tokens.iter().enumerate() {
            slots.push(match tok {
                None => Slot::MISSING,
                Some(t) => Slot::value(self.intern(x, t)?),
            });
        }
        let label = match self.label_lookup.get(label) {
            Some(&id) => id,
            None if self.fixed_labels => {
                return Err(Error::data(format!("class label `{label}` not declared")))
            }
            None => {
                let id = self.labels.len() as u32;
                self.labels.push(label.to_string());
                self.label_lookup.insert(label.to_string(), id);
                id
            }
        };
        self.instances.push(Instance {
            slots,
            label,
            weight,
        });
        Ok(())
    }

    fn intern(&mut self, x: usize, token: &str) -> Result<u32> {
        if let Some(&id) = self.lookup[x].get(token) {
            return Ok(id);
        }
        if self.fixed_domain[x] {
            return Err(Error::data(format!(
                "value `{token}` not in declared domain of `{}`",
                self.features[x].name
            )));
        }
        let id = self.features[x].values.len() as u32;
        self.features[x].values.push(token.to_string());
        self.lookup[x].insert(token.to_string(), id);
        Ok(id)
    }

    pub fn build(self) -> Dataset {
        Dataset {
            name: self.name,
            features: self.features,
            instances: self.instances,
            labels: self.labels,
            class_name: self.class_name,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Arff,
}

impl Format {
    /// Guesses the format from a file extension; CSV unless `.arff`.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("arff") => Format::Arff,
            _ => Format::Csv,
        }
    }
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "arff" => Ok(Format::Arff),
            other => Err(Error::config(format!("unknown format `{other}`"))),
        }
    }
}

/// Loads CSV or ARFF, guessing the format from the extension when not
/// given. `opts` only applies to CSV.
pub fn load_dataset(path: impl AsRef<Path>, format: Option<Format>, opts: &CsvOptions) -> Result<Dataset> {
    let path = path.as_ref();
    match format.unwrap_or_else(|| Format::from_path(path)) {
        Format::Csv => load_csv(path, opts),
        Format::Arff => load_arff(path),
    }
}

/// Writes `d` to `path`. CSV uses `?` for missing cells; ARFF uses Weka's
/// conventions (`?`, `{weight}` suffix for non-unit weights).
pub fn save_dataset(d: &Dataset, path: impl AsRef<Path>, format: Format) -> Result<()> {
    let path = path.as_ref();
    let text = match format {
        Format::Csv => csv::to_csv_string(d)?,
        Format::Arff => arff::to_arff_string(d),
    };
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Serializes to an in-memory string in the given format.
pub fn to_string(d: &Dataset, format: Format) -> Result<String> {
    match format {
        Format::Csv => csv::to_csv_string(d),
        Format::Arff => Ok(arff::to_arff_string(d)),
    }
}

/// Marks features whose whole value set consists of interval labels as
/// discretized-numeric.
pub(crate) fn detect_kinds(d: &mut Dataset) {
    for f in &mut d.features {
        if !f.values.is_empty()
            && f.values
                .iter()
                .all(|v| crate::discretize::parse_interval_label(v).is_some())
        {
            f.kind = FeatureKind::DiscretizedNumeric;
        }
    }
}
