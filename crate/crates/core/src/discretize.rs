//! Numeric-to-interval discretization: equal-width, equal-frequency and
//! Fayyad–Irani MDL.
//!
//! A fitted [`DiscretizationSpec`] holds sorted cut points per numeric
//! feature. Applying it replaces each numeric token by the label of the
//! interval containing it, formatted the way Weka prints them:
//! `(-inf-c1]`, `(c1-c2]`, ..., `(ck-inf)`.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::data::{Dataset, Feature, FeatureKind, Slot};
use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Equal-width binning.
    Binning,
    /// Equal-frequency binning.
    Frequency,
    /// Supervised MDL (Fayyad–Irani).
    Mdl,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "binning" | "width" | "equal-width" => Ok(Method::Binning),
            "frequency" | "equal-frequency" => Ok(Method::Frequency),
            "mdl" => Ok(Method::Mdl),
            other => Err(Error::config(format!("unknown discretization method `{other}`"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Binning => "binning",
            Method::Frequency => "frequency",
            Method::Mdl => "mdl",
        })
    }
}

/// Cut points fitted on one dataset, reusable on another with the same
/// schema.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscretizationSpec {
    pub method: Method,
    pub bins: usize,
    pub num_features: usize,
    /// `(feature index, feature name, cuts)` for every numeric feature, in
    /// feature order. Cuts are strictly increasing.
    pub cuts: Vec<(usize, String, Vec<f64>)>,
}

fn all_missing() -> Error {
    Error::AllMissing(String::new())
}

fn present(column: &[Option<f64>]) -> Result<Vec<f64>> {
    let v: Vec<f64> = column.iter().flatten().copied().collect();
    if v.is_empty() {
        return Err(all_missing());
    }
    Ok(v)
}

/// Cuts at `min + k·(max−min)/bins` for `k = 1..bins`.
pub fn fit_equal_width(column: &[Option<f64>], bins: usize) -> Result<Vec<f64>> {
    if bins == 0 {
        return Err(Error::config("bins must be at least 1"));
    }
    let v = present(column)?;
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return Ok(Vec::new());
    }
    let width = (max - min) / bins as f64;
    let mut cuts: Vec<f64> = (1..bins).map(|k| min + k as f64 * width).collect();
    cuts.dedup();
    Ok(cuts)
}

/// Cuts so that each bin receives roughly `n/bins` values. Cuts sit midway
/// between distinct adjacent sorted values, so ties are never split; when
/// ties make a bin impossible it is merged with its neighbour.
pub fn fit_equal_frequency(column: &[Option<f64>], bins: usize) -> Result<Vec<f64>> {
    if bins == 0 {
        return Err(Error::config("bins must be at least 1"));
    }
    let mut v = present(column)?;
    v.sort_by(f64::total_cmp);
    let n = v.len();
    // Positions b where v[b-1] < v[b]: the only places a cut may go.
    let boundaries: Vec<usize> = (1..n).filter(|&b| v[b - 1] < v[b]).collect();
    if boundaries.is_empty() {
        return Ok(Vec::new());
    }
    let mut chosen: Vec<usize> = Vec::new();
    for k in 1..bins {
        let ideal = (k * n) as f64 / bins as f64;
        let i = boundaries.partition_point(|&b| (b as f64) < ideal);
        let mut best = None;
        for cand in [i.checked_sub(1), Some(i)].into_iter().flatten() {
            if let Some(&b) = boundaries.get(cand) {
                let dist = (b as f64 - ideal).abs();
                match best {
                    Some((_, d)) if d <= dist => {}
                    _ => best = Some((b, dist)),
                }
            }
        }
        if let Some((b, _)) = best {
            if chosen.last() != Some(&b) {
                chosen.push(b);
            }
        }
    }
    chosen.sort_unstable();
    chosen.dedup();
    Ok(chosen.iter().map(|&b| (v[b - 1] + v[b]) / 2.0).collect())
}

/// Recursive minimal-entropy binary splitting with the MDLPC acceptance
/// test. `labels` holds class indices aligned with `column`.
pub fn fit_mdl(column: &[Option<f64>], labels: &[u32]) -> Result<Vec<f64>> {
    if column.len() != labels.len() {
        return Err(Error::data(format!(
            "column has {} values but {} labels",
            column.len(),
            labels.len()
        )));
    }
    let mut pairs: Vec<(f64, u32)> = column
        .iter()
        .zip(labels)
        .filter_map(|(v, &l)| v.map(|v| (v, l)))
        .collect();
    if pairs.is_empty() {
        return Err(all_missing());
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let num_classes = labels.iter().copied().max().map_or(0, |m| m as usize + 1);
    let mut cuts = Vec::new();
    mdl_split(&pairs, num_classes, &mut cuts);
    cuts.sort_by(f64::total_cmp);
    Ok(cuts)
}

fn class_counts(pairs: &[(f64, u32)], num_classes: usize) -> Vec<usize> {
    let mut c = vec![0; num_classes];
    for &(_, l) in pairs {
        c[l as usize] += 1;
    }
    c
}

fn entropy2(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

fn mdl_split(pairs: &[(f64, u32)], num_classes: usize, cuts: &mut Vec<f64>) {
    let n = pairs.len();
    if n < 2 {
        return;
    }
    let total = class_counts(pairs, num_classes);
    let ent = entropy2(&total);
    if ent == 0.0 {
        return;
    }
    // Sweep once, keeping running left counts.
    let mut left = vec![0usize; num_classes];
    let mut best: Option<(usize, f64, Vec<usize>)> = None;
    for b in 1..n {
        left[pairs[b - 1].1 as usize] += 1;
        if pairs[b - 1].0 == pairs[b].0 {
            continue;
        }
        let right: Vec<usize> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
        let e = (b as f64 * entropy2(&left) + (n - b) as f64 * entropy2(&right)) / n as f64;
        if best.as_ref().is_none_or(|(_, be, _)| e < *be) {
            best = Some((b, e, left.clone()));
        }
    }
    let Some((b, split_ent, left)) = best else {
        return;
    };
    let right: Vec<usize> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
    let k = total.iter().filter(|&&c| c > 0).count() as f64;
    let k1 = left.iter().filter(|&&c| c > 0).count() as f64;
    let k2 = right.iter().filter(|&&c| c > 0).count() as f64;
    let (e1, e2) = (entropy2(&left), entropy2(&right));
    let gain = ent - split_ent;
    let delta = (3f64.powf(k) - 2.0).log2() - (k * ent - k1 * e1 - k2 * e2);
    let threshold = (((n - 1) as f64).log2() + delta) / n as f64;
    if gain <= threshold {
        return;
    }
    cuts.push((pairs[b - 1].0 + pairs[b].0) / 2.0);
    mdl_split(&pairs[..b], num_classes, cuts);
    mdl_split(&pairs[b..], num_classes, cuts);
}

fn format_cut(c: f64) -> String {
    let r = (c * 1e6).round() / 1e6;
    let r = if r == 0.0 { 0.0 } else { r };
    format!("{r}")
}

/// Interval labels for a cut list. Cut values are printed with at most six
/// decimals unless that would make two labels collide.
pub fn interval_labels(cuts: &[f64]) -> Vec<String> {
    if cuts.is_empty() {
        return vec!["(-inf-inf)".to_string()];
    }
    let mut texts: Vec<String> = cuts.iter().map(|&c| format_cut(c)).collect();
    for i in 1..texts.len() {
        if texts[i] == texts[i - 1] {
            texts[i - 1] = format!("{}", cuts[i - 1]);
            texts[i] = format!("{}", cuts[i]);
        }
    }
    let mut out = Vec::with_capacity(cuts.len() + 1);
    out.push(format!("(-inf-{}]", texts[0]));
    for w in texts.windows(2) {
        out.push(format!("({}-{}]", w[0], w[1]));
    }
    out.push(format!("({}-inf)", texts[texts.len() - 1]));
    out
}

/// Parses a label produced by [`interval_labels`] back into its bounds.
pub fn parse_interval_label(s: &str) -> Option<(f64, f64)> {
    let open_hi = s.ends_with(')');
    let inner = s.strip_prefix('(')?.strip_suffix([']', ')'])?;
    // The separator is the first '-' that is not a leading sign.
    let bytes = inner.as_bytes();
    let mut split = None;
    for i in 1..bytes.len() {
        if bytes[i] == b'-' && bytes[i - 1] != b'e' && bytes[i - 1] != b'E' {
            split = Some(i);
            break;
        }
    }
    let i = split?;
    let lo = parse_bound(&inner[..i])?;
    let hi = parse_bound(&inner[i + 1..])?;
    if open_hi != hi.is_infinite() {
        return None;
    }
    Some((lo, hi))
}

fn parse_bound(s: &str) -> Option<f64> {
    match s {
        "-inf" => Some(f64::NEG_INFINITY),
        "inf" => Some(f64::INFINITY),
        _ => s.parse().ok().filter(|v: &f64| v.is_finite()),
    }
}

/// Bin index of `v`: the number of cuts strictly below it, so each bin is
/// the half-open interval `(c_{i-1}, c_i]`.
pub fn bin_of(cuts: &[f64], v: f64) -> usize {
    cuts.partition_point(|&c| c < v)
}

/// A feature is numeric when it is categorical and every value parses as a
/// finite number.
pub fn is_numeric(f: &Feature) -> bool {
    f.kind == FeatureKind::Categorical
        && !f.values.is_empty()
        && f
            .values
            .iter()
            .all(|v| v.parse::<f64>().is_ok_and(f64::is_finite))
}

fn numeric_column(d: &Dataset, x: usize) -> Vec<Option<f64>> {
    let parsed: Vec<f64> = d.features[x]
        .values
        .iter()
        .map(|v| v.parse().unwrap_or(f64::NAN))
        .collect();
    d.instances
        .iter()
        .map(|i| i.slots[x].get().map(|id| parsed[id as usize]))
        .collect()
}

impl DiscretizationSpec {
    /// Fits cut points for every numeric feature of `d`. Only MDL reads the
    /// labels.
    pub fn fit(d: &Dataset, method: Method, bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::config("bins must be at least 1"));
        }
        let labels: Vec<u32> = d.instances.iter().map(|i| i.label).collect();
        let mut cuts = Vec::new();
        for (x, f) in d.features.iter().enumerate() {
            if !is_numeric(f) {
                continue;
            }
            let col = numeric_column(d, x);
            let fitted = match method {
                Method::Binning => fit_equal_width(&col, bins),
                Method::Frequency => fit_equal_frequency(&col, bins),
                Method::Mdl => fit_mdl(&col, &labels),
            }
            .map_err(|e| match e {
                Error::AllMissing(_) => Error::AllMissing(f.name.clone()),
                other => other,
            })?;
            cuts.push((x, f.name.clone(), fitted));
        }
        Ok(DiscretizationSpec {
            method,
            bins,
            num_features: d.num_features(),
            cuts,
        })
    }

    /// Replaces every numeric feature named in the spec by its interval
    /// labels. Missing stays missing; values beyond the fitted range fall
    /// into the open end bins.
    pub fn apply(&self, d: &Dataset) -> Result<Dataset> {
        if d.num_features() != self.num_features {
            return Err(Error::data(format!(
                "discretization spec expects {} features, dataset has {}",
                self.num_features,
                d.num_features()
            )));
        }
        let mut out = d.clone();
        for (x, name, cuts) in &self.cuts {
            let f = &d.features[*x];
            if &f.name != name {
                return Err(Error::data(format!(
                    "feature {x} is `{}` but spec expects `{name}`",
                    f.name
                )));
            }
            // Map old value ids to bins.
            let mut remap = Vec::with_capacity(f.values.len());
            for v in &f.values {
                let num: f64 = v.parse().map_err(|_| {
                    Error::data(format!("feature `{name}`: `{v}` is not numeric"))
                })?;
                remap.push(bin_of(cuts, num) as u32);
            }
            out.features[*x] = Feature::new(
                name.clone(),
                interval_labels(cuts),
                FeatureKind::DiscretizedNumeric,
            );
            for (inst, orig) in out.instances.iter_mut().zip(&d.instances) {
                inst.slots[*x] = match orig.slots[*x].get() {
                    Some(id) => Slot::value(remap[id as usize]),
                    None => Slot::MISSING,
                };
            }
        }
        Ok(out)
    }

    /// Maps a single numeric value of feature `x` to its interval label.
    pub fn label_for(&self, x: usize, value: f64) -> Option<String> {
        self.cuts
            .iter()
            .find(|(i, _, _)| *i == x)
            .map(|(_, _, cuts)| interval_labels(cuts).swap_remove(bin_of(cuts, value)))
    }

    /// Line-oriented text form:
    ///
    /// ```text
    /// method=frequency bins=10 features=20
    /// 1<TAB>duration<TAB>9.5,13.5,...
    /// ```
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "method={} bins={} features={}\n",
            self.method, self.bins, self.num_features
        );
        for (x, name, cuts) in &self.cuts {
            let list: Vec<String> = cuts.iter().map(|c| format!("{c:?}")).collect();
            let _ = writeln!(s, "{x}\t{name}\t{}", list.join(","));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let head = lines
            .next()
            .ok_or_else(|| Error::data("empty discretization spec"))?;
        let mut method = None;
        let mut bins = None;
        let mut num_features = None;
        for kv in head.split_whitespace() {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::data(format!("bad spec header field `{kv}`")))?;
            match k {
                "method" => method = Some(v.parse()?),
                "bins" => bins = v.parse().ok(),
                "features" => num_features = v.parse().ok(),
                _ => return Err(Error::data(format!("unknown spec header field `{k}`"))),
            }
        }
        let (Some(method), Some(bins), Some(num_features)) = (method, bins, num_features) else {
            return Err(Error::data("spec header needs method, bins and features"));
        };
        let mut cuts = Vec::new();
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let bad = || Error::Parse {
                row: i + 2,
                msg: format!("bad spec line `{line}`"),
            };
            let mut parts = line.splitn(3, '\t');
            let x: usize = parts.next().and_then(|p| p.parse().ok()).ok_or_else(bad)?;
            let name = parts.next().ok_or_else(bad)?.to_string();
            let list = parts.next().unwrap_or("");
            let c: Vec<f64> = if list.is_empty() {
                Vec::new()
            } else {
                list.split(',')
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad())?
            };
            if c.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::data(format!("cuts for `{name}` are not strictly increasing")));
            }
            cuts.push((x, name, c));
        }
        Ok(DiscretizationSpec {
            method,
            bins,
            num_features,
            cuts,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

/// Fits on `d` and applies to it in one step.
pub fn discretize(d: &Dataset, method: Method, bins: usize) -> Result<(Dataset, DiscretizationSpec)> {
    let spec = DiscretizationSpec::fit(d, method, bins)?;
    let out = spec.apply(d)?;
    Ok((out, spec))
}
