//! Cross-validation, the size/accuracy ratios and experiment orchestration.
//!
//! An experiment has two arms evaluated on the same stratified folds: the
//! original arm trains on the discretized data, the preprocessed arm trains
//! on the output of the chosen method. Both arms are scored on the held-out
//! discretized instances, which are never filtered. Accuracy and model size
//! are averaged over every (repeat, fold) run before MR and AR are formed.
//!
//! By default discretization and filtering run once per repeat on the whole
//! dataset and each fold trains on the surviving instances outside it. With
//! `fold_safe` both are refitted on each training fold.

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::{Duration, Instant};

use log::warn;
use num_traits::Num;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    mask_columns, misclassified_kept, random_value_kept, reservoir_kept, DEFAULT_MISCLASSIFIED_FOLDS,
    DEFAULT_RESERVOIR_FRACTION,
};
use crate::data::Dataset;
use crate::discretize::{self, DiscretizationSpec, DEFAULT_BINS};
use crate::error::{Error, Result};
use crate::learner::LearnerSpec;
use crate::metrics::{check_epsilon, compute_stats, Iota};
use crate::selection::{self, VsConfig, DEFAULT_EPSILON, DEFAULT_REPEATS};

pub const DEFAULT_FOLDS: usize = 10;

/// Fold index of every instance.
///
/// Instances are shuffled with `seed`, grouped by label (labels in index
/// order, shuffled order within a label) and dealt round-robin with a
/// counter that carries over from one label to the next, so every fold's
/// label histogram is within one of proportional.
pub fn stratified_folds(d: &Dataset, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::config(format!("need at least 2 folds, got {folds}")));
    }
    if folds > d.len() {
        return Err(Error::data(format!("{folds} folds for {} instances", d.len())));
    }
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut by_label: Vec<Vec<usize>> = vec![Vec::new(); d.num_labels()];
    for i in order {
        by_label[d.instances[i].label as usize].push(i);
    }
    let mut assignment = vec![0; d.len()];
    let mut counter = 0;
    for (l, members) in by_label.iter().enumerate() {
        if !members.is_empty() && members.len() < folds {
            warn!(
                "label `{}` has {} instances for {folds} folds; some folds will lack it",
                d.labels[l],
                members.len()
            );
        }
        for &i in members {
            assignment[i] = counter % folds;
            counter += 1;
        }
    }
    Ok(assignment)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CvSummary {
    pub accuracy: f64,
    pub size: f64,
    pub runs: usize,
}

/// Stratified `folds`-fold cross-validation of `learner` on `d`.
pub fn cross_validate(d: &Dataset, learner: &LearnerSpec, folds: usize, seed: u64) -> Result<CvSummary> {
    learner.validate()?;
    let assignment = stratified_folds(d, folds, seed)?;
    let mut acc = 0.0;
    let mut size = 0.0;
    for fold in 0..folds {
        let (train, test) = split_fold(&assignment, fold);
        let model = learner.train(&d.subset(&train))?;
        acc += model.accuracy(&d.subset(&test));
        size += model.size() as f64;
    }
    Ok(CvSummary {
        accuracy: acc / folds as f64,
        size: size / folds as f64,
        runs: folds,
    })
}

fn split_fold(assignment: &[usize], fold: usize) -> (Vec<usize>, Vec<usize>) {
    (0..assignment.len()).partition(|&i| assignment[i] != fold)
}

/// Model size reduction `(size_o − size_p)/size_o`.
pub fn mr<T: Num + PartialOrd + Copy>(size_o: T, size_p: T) -> Result<T> {
    if !(size_o > T::zero()) {
        return Err(Error::data("original model size must be positive"));
    }
    Ok((size_o - size_p) / size_o)
}

/// Accuracy ratio `acc_p/acc_o`.
pub fn ar<T: Num + PartialOrd + Copy>(acc_o: T, acc_p: T) -> Result<T> {
    if !(acc_o > T::zero()) {
        return Err(Error::data("original accuracy must be positive"));
    }
    Ok(acc_p / acc_o)
}

/// Harmonic mean `2·ar·mr/(ar + mr)`, or `None` when there is no
/// reduction (`mr ≤ 0`) or `ar ≤ 0`.
pub fn harmonic<T: Num + PartialOrd + Copy>(ar: T, mr: T) -> Option<T> {
    if !(mr > T::zero()) || !(ar > T::zero()) {
        return None;
    }
    if ar == mr {
        return Some(ar);
    }
    let two = T::one() + T::one();
    Some(two * ar * mr / (ar + mr))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    None,
    Pvs,
    PvsPlus,
    Reservoir,
    Misclassified,
    DropColumns,
    RandomValue,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "none" => Ok(Method::None),
            "pvs" => Ok(Method::Pvs),
            "pvs_plus" | "pvs+" | "p+vs" | "pvsplus" => Ok(Method::PvsPlus),
            "reservoir" => Ok(Method::Reservoir),
            "misclassified" => Ok(Method::Misclassified),
            "drop_columns" => Ok(Method::DropColumns),
            "random_value" => Ok(Method::RandomValue),
            other => Err(Error::config(format!("unknown method `{other}`"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::None => "none",
            Method::Pvs => "pvs",
            Method::PvsPlus => "pvs_plus",
            Method::Reservoir => "reservoir",
            Method::Misclassified => "misclassified",
            Method::DropColumns => "drop_columns",
            Method::RandomValue => "random_value",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub discretization: discretize::Method,
    pub bins: usize,
    pub method: Method,
    pub iota: Iota,
    pub epsilon: f64,
    pub seed: u64,
    pub repeats: usize,
    pub reservoir_fraction: f64,
    pub drop_columns: Vec<String>,
    pub random_value_rate: f64,
    pub misclassified_folds: usize,
    pub learner: LearnerSpec,
    pub folds: usize,
    pub fold_safe: bool,
    /// Worker threads; 0 uses every core. Not part of serialized reports
    /// since it cannot change results.
    #[serde(skip)]
    pub jobs: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            discretization: discretize::Method::Frequency,
            bins: DEFAULT_BINS,
            method: Method::PvsPlus,
            iota: Iota::Entropy,
            epsilon: DEFAULT_EPSILON,
            seed: 0,
            repeats: DEFAULT_REPEATS,
            reservoir_fraction: DEFAULT_RESERVOIR_FRACTION,
            drop_columns: Vec::new(),
            random_value_rate: 0.5,
            misclassified_folds: DEFAULT_MISCLASSIFIED_FOLDS,
            learner: LearnerSpec::default(),
            folds: DEFAULT_FOLDS,
            fold_safe: false,
            jobs: 0,
        }
    }
}

impl PipelineConfig {
    /// Checks everything that can be checked before touching the data.
    pub fn validate(&self) -> Result<()> {
        check_epsilon(self.epsilon)?;
        if self.repeats == 0 {
            return Err(Error::config("repeats must be at least 1"));
        }
        if self.folds < 2 {
            return Err(Error::config(format!("need at least 2 folds, got {}", self.folds)));
        }
        if self.bins == 0 {
            return Err(Error::config("bins must be at least 1"));
        }
        if !(self.reservoir_fraction > 0.0 && self.reservoir_fraction <= 1.0) {
            return Err(Error::config(format!(
                "reservoir fraction must lie in (0, 1], got {}",
                self.reservoir_fraction
            )));
        }
        if !(0.0..=1.0).contains(&self.random_value_rate) {
            return Err(Error::config(format!(
                "random value rate must lie in [0, 1], got {}",
                self.random_value_rate
            )));
        }
        if self.misclassified_folds < 2 {
            return Err(Error::config("misclassified filter needs at least 2 folds"));
        }
        self.learner.validate()
    }

    fn check_against(&self, d: &Dataset) -> Result<()> {
        self.validate()?;
        if d.len() < self.folds {
            return Err(Error::data(format!("{} folds for {} instances", self.folds, d.len())));
        }
        for name in &self.drop_columns {
            if !d.features.iter().any(|f| &f.name == name) {
                return Err(Error::config(format!("no feature named `{name}`")));
            }
        }
        Ok(())
    }

    fn vs_config(&self, seed: u64) -> VsConfig {
        VsConfig {
            mode: if self.method == Method::Pvs {
                selection::Mode::Pvs
            } else {
                selection::Mode::PvsPlus
            },
            iota: self.iota,
            epsilon: self.epsilon,
            seed,
            repeats: self.repeats,
        }
    }
}

/// Training pool produced by a preprocessing method: the instances to train
/// on and their original indices.
struct Pool {
    data: Dataset,
    origin: Vec<usize>,
}

fn preprocess(d: &Dataset, cfg: &PipelineConfig, seed: u64) -> Result<Pool> {
    let all = || (0..d.len()).collect::<Vec<_>>();
    match cfg.method {
        Method::None => Ok(Pool {
            data: d.clone(),
            origin: all(),
        }),
        Method::Pvs | Method::PvsPlus => {
            if d.is_empty() || d.observed_count() == 0 {
                return Ok(Pool {
                    data: d.clone(),
                    origin: all(),
                });
            }
            let stats = compute_stats::<f64>(d)?;
            let out = selection::select(d, &cfg.vs_config(seed), &stats)?;
            let origin = out.kept_indices(d.len());
            Ok(Pool {
                data: out.filtered,
                origin,
            })
        }
        Method::Reservoir => {
            let origin = reservoir_kept(d, cfg.reservoir_fraction, seed)?;
            Ok(Pool {
                data: d.subset(&origin),
                origin,
            })
        }
        Method::Misclassified => {
            let folds = cfg.misclassified_folds.min(d.len());
            let origin = if folds < 2 {
                all()
            } else {
                misclassified_kept(d, &cfg.learner, folds, seed)?
            };
            Ok(Pool {
                data: d.subset(&origin),
                origin,
            })
        }
        Method::DropColumns => Ok(Pool {
            data: mask_columns(d, &cfg.drop_columns)?,
            origin: all(),
        }),
        Method::RandomValue => {
            let (data, origin) = random_value_kept(d, cfg.random_value_rate, seed)?;
            Ok(Pool { data, origin })
        }
    }
}

/// Instances of `pool` whose original index is not in `fold`.
fn training_part(pool: &Pool, assignment: &[usize], fold: usize) -> Dataset {
    let keep: Vec<usize> = (0..pool.origin.len())
        .filter(|&k| assignment[pool.origin[k]] != fold)
        .collect();
    pool.data.subset(&keep)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Original,
    Preprocessed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub arm: Arm,
    pub repeat: usize,
    pub seed: u64,
    pub fold: usize,
    pub train_instances: usize,
    pub accuracy: f64,
    pub size: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub discretize_ms: f64,
    pub preprocess_ms: f64,
    pub train_eval_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub config: PipelineConfig,
    pub records: Vec<RunRecord>,
    pub acc_o: f64,
    pub acc_p: f64,
    pub size_o: f64,
    pub size_p: f64,
    pub mr: f64,
    pub ar: f64,
    /// `None` when MR ≤ 0 (no reduction).
    pub harmonic: Option<f64>,
    /// Wall-clock per stage. Left out of serialized reports unless asked
    /// for, so that reports are reproducible byte for byte.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

fn mean(records: &[RunRecord], arm: Arm, f: impl Fn(&RunRecord) -> f64) -> f64 {
    let v: Vec<f64> = records.iter().filter(|r| r.arm == arm).map(f).collect();
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

impl EvalReport {
    fn from_records(dataset: String, config: PipelineConfig, records: Vec<RunRecord>, timings: Timings) -> Result<Self> {
        let acc_o = mean(&records, Arm::Original, |r| r.accuracy);
        let acc_p = mean(&records, Arm::Preprocessed, |r| r.accuracy);
        let size_o = mean(&records, Arm::Original, |r| r.size as f64);
        let size_p = mean(&records, Arm::Preprocessed, |r| r.size as f64);
        let mr = mr(size_o, size_p)?;
        let ar = ar(acc_o, acc_p)?;
        Ok(EvalReport {
            dataset,
            config,
            records,
            acc_o,
            acc_p,
            size_o,
            size_p,
            mr,
            ar,
            harmonic: harmonic(ar, mr),
            timings: Some(timings),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::data(format!("cannot serialize report: {e}")))
    }

    pub fn harmonic_text(&self) -> String {
        self.harmonic
            .map_or_else(|| "undefined (no reduction)".to_string(), |h| format!("{h:.4}"))
    }
}

/// Aligned text table with one row per report.
pub fn report_table(reports: &[EvalReport]) -> String {
    let header = ["dataset", "method", "iota", "epsilon", "learner", "Acc_o", "Acc_p", "|M_o|", "|M_p|", "AR", "MR", "X"];
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                r.dataset.clone(),
                r.config.method.to_string(),
                r.config.iota.to_string(),
                format!("{}", r.config.epsilon),
                r.config.learner.kind.to_string(),
                format!("{:.4}", r.acc_o),
                format!("{:.4}", r.acc_p),
                format!("{:.1}", r.size_o),
                format!("{:.1}", r.size_p),
                format!("{:.4}", r.ar),
                format!("{:.4}", r.mr),
                r.harmonic.map_or_else(|| "-".to_string(), |h| format!("{h:.4}")),
            ]
        })
        .collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut s = String::new();
    let line = |s: &mut String, cells: &[&str]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, &w))| if i < 5 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        let _ = writeln!(s, "{}", padded.join("  ").trim_end());
    };
    line(&mut s, &header);
    for row in &rows {
        let cells: Vec<&str> = row.iter().map(String::as_str).collect();
        line(&mut s, &cells);
    }
    s
}

fn with_pool<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    if jobs == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::config(format!("cannot start {jobs} worker threads: {e}")))?;
    Ok(pool.install(f))
}

/// Runs both arms of an experiment on `d` (raw or already discretized).
pub fn run_experiment(d: &Dataset, cfg: &PipelineConfig) -> Result<EvalReport> {
    cfg.check_against(d)?;
    d.validate()?;
    with_pool(cfg.jobs, || {
        if cfg.fold_safe {
            run_fold_safe(d, cfg)
        } else {
            run_global(d, cfg)
        }
    })?
}

fn run_global(d: &Dataset, cfg: &PipelineConfig) -> Result<EvalReport> {
    let t0 = Instant::now();
    let (disc, _) = discretize::discretize(d, cfg.discretization, cfg.bins)?;
    let discretize_time = t0.elapsed();

    let t1 = Instant::now();
    let prepared: Vec<(u64, Vec<usize>, Pool)> = (0..cfg.repeats)
        .into_par_iter()
        .map(|r| {
            let seed = cfg.seed.wrapping_add(r as u64);
            let assignment = stratified_folds(&disc, cfg.folds, seed)?;
            let pool = preprocess(&disc, cfg, seed)?;
            Ok((seed, assignment, pool))
        })
        .collect::<Result<_>>()?;
    let preprocess_time = t1.elapsed();

    let t2 = Instant::now();
    let units: Vec<(usize, usize, Arm)> = (0..cfg.repeats)
        .flat_map(|r| (0..cfg.folds).flat_map(move |f| [(r, f, Arm::Original), (r, f, Arm::Preprocessed)]))
        .collect();
    let records: Vec<RunRecord> = units
        .into_par_iter()
        .map(|(r, fold, arm)| {
            let (seed, assignment, pool) = &prepared[r];
            let test: Vec<usize> = (0..disc.len()).filter(|&i| assignment[i] == fold).collect();
            let train = match arm {
                Arm::Original => {
                    let idx: Vec<usize> = (0..disc.len()).filter(|&i| assignment[i] != fold).collect();
                    disc.subset(&idx)
                }
                Arm::Preprocessed => training_part(pool, assignment, fold),
            };
            let model = cfg.learner.train(&train)?;
            Ok(RunRecord {
                arm,
                repeat: r,
                seed: *seed,
                fold,
                train_instances: train.len(),
                accuracy: model.accuracy(&disc.subset(&test)),
                size: model.size(),
            })
        })
        .collect::<Result<_>>()?;
    let timings = timings(discretize_time, preprocess_time, t2.elapsed());
    EvalReport::from_records(d.name.clone(), cfg.clone(), records, timings)
}

fn run_fold_safe(d: &Dataset, cfg: &PipelineConfig) -> Result<EvalReport> {
    let assignments: Vec<(u64, Vec<usize>)> = (0..cfg.repeats)
        .map(|r| {
            let seed = cfg.seed.wrapping_add(r as u64);
            stratified_folds(d, cfg.folds, seed).map(|a| (seed, a))
        })
        .collect::<Result<_>>()?;
    let units: Vec<(usize, usize)> = (0..cfg.repeats).flat_map(|r| (0..cfg.folds).map(move |f| (r, f))).collect();
    let per_unit: Vec<([RunRecord; 2], [Duration; 3])> = units
        .into_par_iter()
        .map(|(r, fold)| {
            let (seed, assignment) = &assignments[r];
            let (train_idx, test_idx) = split_fold(assignment, fold);
            let t0 = Instant::now();
            let raw_train = d.subset(&train_idx);
            let spec = DiscretizationSpec::fit(&raw_train, cfg.discretization, cfg.bins)?;
            let train = spec.apply(&raw_train)?;
            let test = spec.apply(&d.subset(&test_idx))?;
            let dt = t0.elapsed();

            let t1 = Instant::now();
            let pool = preprocess(&train, cfg, *seed)?;
            let pt = t1.elapsed();

            let t2 = Instant::now();
            let mut out = Vec::with_capacity(2);
            for (arm, data) in [(Arm::Original, &train), (Arm::Preprocessed, &pool.data)] {
                let model = cfg.learner.train(data)?;
                out.push(RunRecord {
                    arm,
                    repeat: r,
                    seed: *seed,
                    fold,
                    train_instances: data.len(),
                    accuracy: model.accuracy(&test),
                    size: model.size(),
                });
            }
            let pre = out.pop().expect("two arms");
            let orig = out.pop().expect("two arms");
            Ok(([orig, pre], [dt, pt, t2.elapsed()]))
        })
        .collect::<Result<_>>()?;

    let mut records = Vec::with_capacity(per_unit.len() * 2);
    let mut totals = [Duration::ZERO; 3];
    for (recs, times) in per_unit {
        records.extend(recs);
        for (t, x) in totals.iter_mut().zip(times) {
            *t += x;
        }
    }
    EvalReport::from_records(d.name.clone(), cfg.clone(), records, timings(totals[0], totals[1], totals[2]))
}

fn timings(discretize: Duration, preprocess: Duration, train_eval: Duration) -> Timings {
    Timings {
        discretize_ms: discretize.as_secs_f64() * 1e3,
        preprocess_ms: preprocess.as_secs_f64() * 1e3,
        train_eval_ms: train_eval.as_secs_f64() * 1e3,
    }
}
