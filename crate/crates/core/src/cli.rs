//! The `valsel` command line.
//!
//! Every subcommand starts from a [`RunConfig`], read from `--config` when
//! given and otherwise defaulted, then applies its flags on top. Relative
//! output paths are resolved against `VALSEL_OUTPUT_DIR` when it is set.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::baselines::{
    drop_columns, misclassified_filter, random_value_removal, reservoir_select, DEFAULT_MISCLASSIFIED_FOLDS,
    DEFAULT_RESERVOIR_FRACTION,
};
use crate::data::{load_dataset, save_dataset, ClassIndex, CsvOptions, Dataset, Format};
use crate::discretize::{self, DiscretizationSpec, DEFAULT_BINS};
use crate::error::{Error, Result};
use crate::eval::{report_table, run_experiment, EvalReport, Method, PipelineConfig, DEFAULT_FOLDS};
use crate::learner::{LearnerKind, LearnerSpec};
use crate::metrics::{compute_stats, confusion_report, expected_after_weights, Iota};
use crate::selection::{self, VsConfig, DEFAULT_EPSILON, DEFAULT_REPEATS};

pub const OUTPUT_DIR_ENV: &str = "VALSEL_OUTPUT_DIR";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    pub path: Option<PathBuf>,
    /// `csv` or `arff`; guessed from the extension when absent.
    pub format: Option<Format>,
    /// `last` or a zero-based column index (CSV only).
    pub class_index: String,
    pub missing_token: String,
    /// Single character, or `tab`.
    pub delimiter: String,
    pub header: bool,
}

impl Default for InputConfig {
    fn default() -> Self {
        InputConfig {
            path: None,
            format: None,
            class_index: "last".into(),
            missing_token: "?".into(),
            delimiter: ",".into(),
            header: true,
        }
    }
}

impl InputConfig {
    fn csv_options(&self) -> Result<CsvOptions> {
        let delimiter = match self.delimiter.as_str() {
            "tab" | "\\t" | "\t" => b'\t',
            "space" | " " => b' ',
            d if d.len() == 1 => d.as_bytes()[0],
            d => return Err(Error::config(format!("delimiter must be a single byte, got `{d}`"))),
        };
        Ok(CsvOptions {
            class_index: self.class_index.parse::<ClassIndex>()?,
            missing_token: self.missing_token.clone(),
            delimiter,
            has_header: self.header,
        })
    }

    pub fn load(&self) -> Result<Dataset> {
        let path = self
            .path
            .as_ref()
            .ok_or_else(|| Error::config("no input file given (use --input)"))?;
        let d = load_dataset(path, self.format, &self.csv_options()?)?;
        d.validate()?;
        Ok(d)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscretizationConfig {
    pub method: discretize::Method,
    pub bins: usize,
}

impl Default for DiscretizationConfig {
    fn default() -> Self {
        DiscretizationConfig {
            method: discretize::Method::Frequency,
            bins: DEFAULT_BINS,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    pub method: Method,
    pub iota: Iota,
    pub epsilon: f64,
    /// Sweep over ε, e.g. `0.1..1.0 step 0.1`; overrides `epsilon`.
    pub epsilon_sweep: Option<String>,
    pub seed: u64,
    pub repeats: usize,
    pub reservoir_fraction: f64,
    pub drop_columns: Vec<String>,
    pub random_value_rate: f64,
    pub misclassified_folds: usize,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            method: Method::PvsPlus,
            iota: Iota::Entropy,
            epsilon: DEFAULT_EPSILON,
            epsilon_sweep: None,
            seed: 0,
            repeats: DEFAULT_REPEATS,
            reservoir_fraction: DEFAULT_RESERVOIR_FRACTION,
            drop_columns: Vec::new(),
            random_value_rate: 0.5,
            misclassified_folds: DEFAULT_MISCLASSIFIED_FOLDS,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub folds: usize,
    pub fold_safe: bool,
    pub jobs: usize,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            folds: DEFAULT_FOLDS,
            fold_safe: false,
            jobs: 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Structured report (JSON) for `experiment`.
    pub report: Option<PathBuf>,
    /// Aligned text table for `experiment`.
    pub table: Option<PathBuf>,
    /// Include wall-clock stage timings in the report.
    pub timings: bool,
}

/// Everything a run needs, mirrored by the TOML config file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: InputConfig,
    pub discretization: DiscretizationConfig,
    pub selection: SelectionConfig,
    pub learner: LearnerSpec,
    pub evaluation: EvaluationConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(format!("bad config file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::config(format!("cannot serialize config: {e}")))
    }

    /// Pipeline configuration for one ε.
    pub fn pipeline(&self, epsilon: f64) -> PipelineConfig {
        let s = &self.selection;
        PipelineConfig {
            discretization: self.discretization.method,
            bins: self.discretization.bins,
            method: s.method,
            iota: s.iota,
            epsilon,
            seed: s.seed,
            repeats: s.repeats,
            reservoir_fraction: s.reservoir_fraction,
            drop_columns: s.drop_columns.clone(),
            random_value_rate: s.random_value_rate,
            misclassified_folds: s.misclassified_folds,
            learner: self.learner,
            folds: self.evaluation.folds,
            fold_safe: self.evaluation.fold_safe,
            jobs: self.evaluation.jobs,
        }
    }

    /// The ε values to run: the sweep when given, else the single ε.
    pub fn epsilons(&self) -> Result<Vec<f64>> {
        match &self.selection.epsilon_sweep {
            Some(s) => parse_sweep(s),
            None => Ok(vec![self.selection.epsilon]),
        }
    }
}

/// Parses `a..b step c`, `a..b:c` or `a..b` (step 0.1) into the inclusive
/// arithmetic sequence, each value rounded to 10 decimals.
pub fn parse_sweep(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::config(format!("bad sweep `{s}`; expected `start..end step s`"));
    let (range, step) = if let Some((r, st)) = s.split_once("step") {
        (r.trim(), Some(st.trim()))
    } else if let Some((r, st)) = s.split_once(':') {
        (r.trim(), Some(st.trim()))
    } else {
        (s.trim(), None)
    };
    let (a, b) = range.split_once("..").ok_or_else(bad)?;
    let start: f64 = a.trim().parse().map_err(|_| bad())?;
    let end: f64 = b.trim().parse().map_err(|_| bad())?;
    let step: f64 = match step {
        Some(st) => st.parse().map_err(|_| bad())?,
        None => 0.1,
    };
    if !(step > 0.0) || !(end >= start) || !start.is_finite() || !end.is_finite() {
        return Err(bad());
    }
    let n = ((end - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..n)
        .map(|i| ((start + i as f64 * step) * 1e10).round() / 1e10)
        .collect())
}

fn output_path(p: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if p.is_relative() => Path::new(&dir).join(p),
        _ => p.to_path_buf(),
    }
}

fn write_file(p: &Path, text: &str) -> Result<()> {
    let p = output_path(p);
    if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(&p, text).map_err(|e| Error::io(&p, e))
}

fn save(d: &Dataset, p: &Path, format: Option<Format>) -> Result<()> {
    let p = output_path(p);
    if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    save_dataset(d, &p, format.unwrap_or_else(|| Format::from_path(&p)))
}

#[derive(Debug, Parser)]
#[command(name = "valsel", version, about = "Probabilistic value selection for tabular data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print per-value entropy, information gain and removal probability.
    Stats(StatsArgs),
    /// Discretize numeric features and write the data plus a cut-point spec.
    Discretize(DiscretizeArgs),
    /// Apply value selection or a baseline and write the filtered data.
    Filter(FilterArgs),
    /// Train a classifier and print it.
    Train(TrainArgs),
    /// Cross-validated comparison of a preprocessing method against the original data.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Default, Args)]
pub struct CommonArgs {
    /// TOML run configuration; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write the effective configuration to this file.
    #[arg(long)]
    pub dump_config: Option<PathBuf>,
    /// Input dataset (CSV or ARFF).
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    /// Input format; guessed from the extension by default.
    #[arg(long)]
    pub format: Option<String>,
    /// Class column: `last` or a zero-based index (CSV).
    #[arg(long)]
    pub class_index: Option<String>,
    /// Token marking a missing cell (CSV).
    #[arg(long)]
    pub missing_token: Option<String>,
    /// Field delimiter (CSV): a single character or `tab`.
    #[arg(long)]
    pub delimiter: Option<String>,
    /// The CSV has no header row.
    #[arg(long)]
    pub no_header: bool,
}

#[derive(Debug, Default, Args)]
pub struct SelectionArgs {
    /// none, pvs, pvs_plus, reservoir, misclassified, drop_columns, random_value.
    #[arg(long)]
    pub method: Option<String>,
    /// entropy or infogain.
    #[arg(long)]
    pub iota: Option<String>,
    /// Amplifier ε in (0, 1], or a sweep such as `0.1..1.0 step 0.1`.
    #[arg(long)]
    pub epsilon: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Reservoir sample size as a fraction of the instances.
    #[arg(long)]
    pub fraction: Option<f64>,
    /// Comma-separated feature names for drop_columns.
    #[arg(long, value_delimiter = ',')]
    pub drop: Option<Vec<String>>,
    /// Per-cell removal probability for random_value.
    #[arg(long)]
    pub rate: Option<f64>,
    /// Cross-validation folds of the misclassified filter.
    #[arg(long)]
    pub misclassified_folds: Option<usize>,
}

#[derive(Debug, Default, Args)]
pub struct LearnerArgs {
    /// tree, rules or majority.
    #[arg(long)]
    pub learner: Option<String>,
    #[arg(long)]
    pub min_leaf: Option<usize>,
    /// Pruning confidence factor in (0, 0.5]; 1 disables pruning.
    #[arg(long)]
    pub cf: Option<f64>,
    #[arg(long)]
    pub prune_fraction: Option<f64>,
}

#[derive(Debug, Default, Args)]
pub struct DiscretizationArgs {
    /// Discretize numeric features first: binning, frequency or mdl.
    #[arg(long)]
    pub discretization: Option<String>,
    #[arg(long)]
    pub bins: Option<usize>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub disc: DiscretizationArgs,
    #[arg(long)]
    pub iota: Option<String>,
    #[arg(long)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DiscretizeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// binning, frequency or mdl.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub bins: Option<usize>,
    /// Reuse the cut points of an earlier run instead of fitting.
    #[arg(long)]
    pub apply: Option<PathBuf>,
    /// Discretized dataset; format follows the extension.
    #[arg(long, short)]
    pub output: PathBuf,
    /// Cut-point spec file; defaults to the output path with `.cuts` added.
    #[arg(long)]
    pub spec: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub selection: SelectionArgs,
    #[command(flatten)]
    pub disc: DiscretizationArgs,
    #[command(flatten)]
    pub learner: LearnerArgs,
    /// Filtered dataset; format follows the extension.
    #[arg(long, short)]
    pub output: PathBuf,
    /// Write the removal mask here.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Drop emptied features (and removed values for pvs) from the output schema.
    #[arg(long)]
    pub compact: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub disc: DiscretizationArgs,
    #[command(flatten)]
    pub learner: LearnerArgs,
    /// Write the model text here instead of standard output.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub selection: SelectionArgs,
    #[command(flatten)]
    pub disc: DiscretizationArgs,
    #[command(flatten)]
    pub learner: LearnerArgs,
    #[arg(long)]
    pub folds: Option<usize>,
    /// Refit discretization and filtering inside each training fold.
    #[arg(long)]
    pub fold_safe: bool,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// JSON report path.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Text table path.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Include stage timings in the report.
    #[arg(long)]
    pub timings: bool,
}

fn base_config(common: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let input = &mut cfg.input;
    if let Some(p) = &common.input {
        input.path = Some(p.clone());
    }
    if let Some(f) = &common.format {
        input.format = Some(f.parse()?);
    }
    if let Some(c) = &common.class_index {
        c.parse::<ClassIndex>()?;
        input.class_index = c.clone();
    }
    if let Some(m) = &common.missing_token {
        input.missing_token = m.clone();
    }
    if let Some(d) = &common.delimiter {
        input.delimiter = d.clone();
    }
    if common.no_header {
        input.header = false;
    }
    Ok(cfg)
}

fn apply_selection(cfg: &mut RunConfig, a: &SelectionArgs) -> Result<()> {
    let s = &mut cfg.selection;
    if let Some(m) = &a.method {
        s.method = m.parse()?;
    }
    if let Some(i) = &a.iota {
        s.iota = i.parse()?;
    }
    if let Some(e) = &a.epsilon {
        if e.contains("..") {
            parse_sweep(e)?;
            s.epsilon_sweep = Some(e.clone());
        } else {
            s.epsilon = e
                .trim()
                .parse()
                .map_err(|_| Error::config(format!("bad epsilon `{e}`")))?;
            s.epsilon_sweep = None;
        }
    }
    if let Some(v) = a.seed {
        s.seed = v;
    }
    if let Some(v) = a.repeats {
        s.repeats = v;
    }
    if let Some(v) = a.fraction {
        s.reservoir_fraction = v;
    }
    if let Some(v) = &a.drop {
        s.drop_columns = v.iter().filter(|n| !n.is_empty()).cloned().collect();
    }
    if let Some(v) = a.rate {
        s.random_value_rate = v;
    }
    if let Some(v) = a.misclassified_folds {
        s.misclassified_folds = v;
    }
    Ok(())
}

fn apply_learner(cfg: &mut RunConfig, a: &LearnerArgs) -> Result<()> {
    let l = &mut cfg.learner;
    if let Some(k) = &a.learner {
        l.kind = k.parse::<LearnerKind>()?;
    }
    if let Some(v) = a.min_leaf {
        l.min_leaf = v;
    }
    if let Some(v) = a.cf {
        l.cf = v;
    }
    if let Some(v) = a.prune_fraction {
        l.prune_fraction = v;
    }
    l.validate()
}

/// Returns true when the caller asked for discretization explicitly.
fn apply_discretization(cfg: &mut RunConfig, a: &DiscretizationArgs) -> Result<bool> {
    if let Some(m) = &a.discretization {
        cfg.discretization.method = m.parse()?;
    }
    if let Some(b) = a.bins {
        cfg.discretization.bins = b;
    }
    Ok(a.discretization.is_some())
}

fn dump(common: &CommonArgs, cfg: &RunConfig) -> Result<()> {
    if let Some(p) = &common.dump_config {
        write_file(p, &cfg.to_toml()?)?;
    }
    Ok(())
}

fn maybe_discretize(d: Dataset, cfg: &RunConfig, enabled: bool) -> Result<Dataset> {
    if enabled {
        Ok(discretize::discretize(&d, cfg.discretization.method, cfg.discretization.bins)?.0)
    } else {
        Ok(d)
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Stats(a) => cmd_stats(a),
        Command::Discretize(a) => cmd_discretize(a),
        Command::Filter(a) => cmd_filter(a),
        Command::Train(a) => cmd_train(a),
        Command::Experiment(a) => cmd_experiment(a),
    }
}

fn cmd_stats(a: StatsArgs) -> Result<()> {
    let mut cfg = base_config(&a.common)?;
    let disc = apply_discretization(&mut cfg, &a.disc)?;
    if let Some(i) = &a.iota {
        cfg.selection.iota = i.parse()?;
    }
    if let Some(e) = a.epsilon {
        cfg.selection.epsilon = e;
    }
    dump(&a.common, &cfg)?;
    let d = maybe_discretize(cfg.input.load()?, &cfg, disc)?;
    let table = compute_stats::<f64>(&d)?;
    let confusion = confusion_report(&table, &expected_after_weights(&table))?;
    let mut out = std::io::stdout().lock();
    let _ = write!(out, "{}", table.report(&d, cfg.selection.iota, cfg.selection.epsilon)?);
    let _ = writeln!(
        out,
        "# weighted confusion before={:.6} expected after={:.6}",
        confusion.before, confusion.after
    );
    Ok(())
}

fn cmd_discretize(a: DiscretizeArgs) -> Result<()> {
    let mut cfg = base_config(&a.common)?;
    if let Some(m) = &a.method {
        cfg.discretization.method = m.parse()?;
    }
    if let Some(b) = a.bins {
        cfg.discretization.bins = b;
    }
    dump(&a.common, &cfg)?;
    let d = cfg.input.load()?;
    let spec = match &a.apply {
        Some(p) => DiscretizationSpec::load(p)?,
        None => DiscretizationSpec::fit(&d, cfg.discretization.method, cfg.discretization.bins)?,
    };
    let out = spec.apply(&d)?;
    save(&out, &a.output, None)?;
    let spec_path = a.spec.clone().unwrap_or_else(|| {
        let mut s = a.output.clone().into_os_string();
        s.push(".cuts");
        PathBuf::from(s)
    });
    write_file(&spec_path, &spec.to_text())
}

fn cmd_filter(a: FilterArgs) -> Result<()> {
    let mut cfg = base_config(&a.common)?;
    apply_selection(&mut cfg, &a.selection)?;
    apply_learner(&mut cfg, &a.learner)?;
    let disc = apply_discretization(&mut cfg, &a.disc)?;
    if cfg.selection.epsilon_sweep.is_some() {
        return Err(Error::config("filter takes a single epsilon"));
    }
    cfg.pipeline(cfg.selection.epsilon).validate()?;
    dump(&a.common, &cfg)?;
    let d = maybe_discretize(cfg.input.load()?, &cfg, disc)?;
    let s = &cfg.selection;
    let out = match s.method {
        Method::None => d.clone(),
        Method::Pvs | Method::PvsPlus => {
            let vs = VsConfig {
                mode: if s.method == Method::Pvs {
                    selection::Mode::Pvs
                } else {
                    selection::Mode::PvsPlus
                },
                iota: s.iota,
                epsilon: s.epsilon,
                seed: s.seed,
                repeats: 1,
            };
            let stats = compute_stats::<f64>(&d)?;
            let outcome = selection::select(&d, &vs, &stats)?;
            if let Some(p) = &a.mask {
                write_file(p, &outcome.mask_text(&d))?;
            }
            eprintln!(
                "kept {} of {} instances; {} features emptied",
                outcome.filtered.len(),
                d.len(),
                outcome.removed_features.len()
            );
            if a.compact {
                outcome.compact()
            } else {
                outcome.filtered
            }
        }
        Method::Reservoir => reservoir_select(&d, s.reservoir_fraction, s.seed)?,
        Method::Misclassified => misclassified_filter(&d, &cfg.learner, s.misclassified_folds, s.seed)?,
        Method::DropColumns => drop_columns(&d, &s.drop_columns)?,
        Method::RandomValue => random_value_removal(&d, s.random_value_rate, s.seed)?,
    };
    save(&out, &a.output, None)
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let mut cfg = base_config(&a.common)?;
    apply_learner(&mut cfg, &a.learner)?;
    let disc = apply_discretization(&mut cfg, &a.disc)?;
    dump(&a.common, &cfg)?;
    let d = maybe_discretize(cfg.input.load()?, &cfg, disc)?;
    let model = cfg.learner.train(&d)?;
    let text = format!(
        "{}\nsize: {}\ntraining accuracy: {:.4}\n",
        model.to_text(&d),
        model.size(),
        model.accuracy(&d)
    );
    match &a.output {
        Some(p) => write_file(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_experiment(a: ExperimentArgs) -> Result<()> {
    let mut cfg = base_config(&a.common)?;
    apply_selection(&mut cfg, &a.selection)?;
    apply_learner(&mut cfg, &a.learner)?;
    apply_discretization(&mut cfg, &a.disc)?;
    if let Some(f) = a.folds {
        cfg.evaluation.folds = f;
    }
    if a.fold_safe {
        cfg.evaluation.fold_safe = true;
    }
    if let Some(j) = a.jobs {
        cfg.evaluation.jobs = j;
    }
    if let Some(p) = &a.output {
        cfg.output.report = Some(p.clone());
    }
    if let Some(p) = &a.table {
        cfg.output.table = Some(p.clone());
    }
    if a.timings {
        cfg.output.timings = true;
    }
    let epsilons = cfg.epsilons()?;
    for &e in &epsilons {
        cfg.pipeline(e).validate()?;
    }
    dump(&a.common, &cfg)?;

    let d = cfg.input.load()?;
    let mut reports: Vec<EvalReport> = Vec::with_capacity(epsilons.len());
    for &e in &epsilons {
        let mut r = run_experiment(&d, &cfg.pipeline(e))?;
        if !cfg.output.timings {
            r.timings = None;
        }
        reports.push(r);
    }
    let table = report_table(&reports);
    print!("{table}");
    if let Some(p) = &cfg.output.table {
        write_file(p, &table)?;
    }
    if let Some(p) = &cfg.output.report {
        let json = if cfg.selection.epsilon_sweep.is_some() {
            serde_json::to_string_pretty(&reports)
        } else {
            serde_json::to_string_pretty(&reports[0])
        }
        .map_err(|e| Error::data(format!("cannot serialize report: {e}")))?;
        write_file(p, &(json + "\n"))?;
    }
    Ok(())
}

/// Process exit code for a result: 0 success, 2 configuration error, 1
/// anything else.
pub fn exit_code(r: &Result<()>) -> i32 {
    match r {
        Ok(()) => 0,
        Err(e) if e.is_config() => 2,
        Err(_) => 1,
    }
}
