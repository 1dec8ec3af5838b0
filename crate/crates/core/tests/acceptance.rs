//! Acceptance checks, one `[PASS]`/`[FAIL]`/`[SKIP]` line per criterion.
//! Exits non-zero when any criterion fails.

mod common;

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use valsel::baselines::reservoir_indices;
use valsel::data::{load_csv, CsvOptions, DatasetBuilder};
use valsel::eval::{ar, harmonic, mr, run_experiment, PipelineConfig};
use valsel::learner::LearnerSpec;
use valsel::metrics::{compute_stats, confusion_report, expected_after_weights, Iota};
use valsel::selection::{pvs, pvs_plus, Mode, RemovalMask, VsConfig};
use valsel::tree::{train_tree, TreeParams};
use valsel::Dataset;

use common::{entropy_from_counts, mixed_entropy, random_dataset, table2, value_counts};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn budget(elapsed: Duration, limit: Duration, detail: String) -> Outcome {
    if elapsed > limit {
        Outcome::Fail(format!("{detail}; took {elapsed:.2?}, budget {limit:?}"))
    } else {
        Outcome::Pass(format!("{detail} ({elapsed:.2?})"))
    }
}

fn c1() -> Outcome {
    let t = Instant::now();
    let d = table2();
    let stats = compute_stats::<f64>(&d).unwrap();
    let f3 = &d.features[2];
    let mut worst: f64 = 0.0;
    for (tok, want) in [("2", 0.0), ("1", 0.9183), ("-1", 0.0)] {
        let h = stats.get(2, f3.value_id(tok).unwrap()).unwrap().entropy;
        worst = worst.max((h - want).abs());
    }
    if worst > 1e-4 {
        return Outcome::Fail(format!("max deviation {worst:.2e}"));
    }
    budget(t.elapsed(), Duration::from_secs(1), format!("f3 entropies within {worst:.1e}"))
}

fn c2() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let d = random_dataset(&mut rng, 200, 10, 5);
        let stats = compute_stats::<f64>(&d).unwrap();
        let c = confusion_report(&stats, &expected_after_weights(&stats)).unwrap();
        // Independent ΣwH² from raw counts.
        let k = d.num_labels();
        let mut sum_wh2 = 0.0;
        for x in 0..d.num_features() {
            let observed = d.instances.iter().filter(|i| !i.slots[x].is_missing()).count();
            for z in 0..d.features[x].values.len() as u32 {
                let counts = value_counts(&d, x, z);
                let n: usize = counts.iter().sum();
                if n == 0 {
                    continue;
                }
                let h = entropy_from_counts(&counts, k);
                sum_wh2 += n as f64 / observed as f64 * h * h;
            }
        }
        if c.after > c.before + 1e-12 {
            return Outcome::Fail(format!("case {case}: after {} > before {}", c.after, c.before));
        }
        worst = worst.max(((c.before - c.after) - sum_wh2).abs());
    }
    if worst > 1e-9 {
        return Outcome::Fail(format!("difference deviates from sum w*H^2 by {worst:.2e}"));
    }
    budget(t.elapsed(), Duration::from_secs(10), format!("100 datasets, max deviation {worst:.1e}"))
}

/// One feature: `a` (32 instances, 1 positive), `b` (9, 1), `c` (16, 5).
fn calibration_fixture() -> Dataset {
    let mut b = DatasetBuilder::new("calib", ["f"], "class");
    for (value, n, pos) in [("a", 32, 1), ("b", 9, 1), ("c", 16, 5)] {
        for i in 0..n {
            b.push(&[Some(value)], if i < pos { "pos" } else { "neg" }, 1.0).unwrap();
        }
    }
    b.build()
}

fn c3() -> Outcome {
    const TRIALS: u64 = 20_000;
    let t = Instant::now();
    let d = calibration_fixture();
    let stats = compute_stats::<f64>(&d).unwrap();
    let eps = 0.5;
    let values: Vec<(u32, f64)> = ["a", "b", "c"]
        .iter()
        .map(|tok| {
            let z = d.features[0].value_id(tok).unwrap();
            let h = entropy_from_counts(&value_counts(&d, 0, z), 2);
            (z, (h / eps).min(1.0))
        })
        .collect();

    let mut pvs_hits = [0u64; 3];
    let mut plus_hits = [0u64; 3];
    let mut plus_cells = [0u64; 3];
    for seed in 0..TRIALS {
        let cfg = VsConfig {
            mode: Mode::Pvs,
            iota: Iota::Entropy,
            epsilon: eps,
            seed,
            repeats: 1,
        };
        let out = pvs(&d, &cfg, &stats).unwrap();
        let RemovalMask::Values(m) = &out.mask else { unreachable!() };
        for (k, &(z, _)) in values.iter().enumerate() {
            pvs_hits[k] += m[0][z as usize] as u64;
        }
        let out = pvs_plus(&d, &VsConfig { mode: Mode::PvsPlus, ..cfg }, &stats).unwrap();
        let RemovalMask::Slots(m) = &out.mask else { unreachable!() };
        for (y, inst) in d.instances.iter().enumerate() {
            let k = values.iter().position(|&(z, _)| inst.slots[0].get() == Some(z)).unwrap();
            plus_cells[k] += 1;
            plus_hits[k] += m[y][0] as u64;
        }
    }
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (k, &(_, target)) in values.iter().enumerate() {
        let f_pvs = pvs_hits[k] as f64 / TRIALS as f64;
        let f_plus = plus_hits[k] as f64 / plus_cells[k] as f64;
        worst = worst.max((f_pvs - target).abs()).max((f_plus - target).abs());
        parts.push(format!("target {target:.3}: pvs {f_pvs:.4}, p+vs {f_plus:.4}"));
    }
    if worst > 0.015 {
        return Outcome::Fail(format!("{}; max deviation {worst:.4}", parts.join("; ")));
    }
    budget(t.elapsed(), Duration::from_secs(30), parts.join("; "))
}

fn c4() -> Outcome {
    const TRIALS: u64 = 20_000;
    let mut b = DatasetBuilder::new("miss", ["a", "b", "c", "d"], "class");
    b.push(&[None, None, None, Some("x")], "p", 1.0).unwrap();
    b.push(&[Some("u"), Some("v"), Some("w"), Some("x")], "p", 1.0).unwrap();
    b.push(&[Some("u"), Some("v"), Some("w"), Some("y")], "q", 1.0).unwrap();
    let d = b.build();
    let stats = compute_stats::<f64>(&d).unwrap();
    let x = d.features[3].value_id("x").unwrap();
    if stats.get(3, x).unwrap().entropy != 0.0 {
        return Outcome::Fail("fixture value is not pure".into());
    }
    let mut deleted = 0u64;
    for seed in 0..TRIALS {
        let cfg = VsConfig {
            seed,
            ..Default::default()
        };
        let out = pvs_plus(&d, &cfg, &stats).unwrap();
        deleted += out.removed_instances.contains(&0) as u64;
    }
    let f = deleted as f64 / TRIALS as f64;
    if (f - 0.75).abs() > 0.015 {
        Outcome::Fail(format!("deleted with frequency {f:.4}"))
    } else {
        Outcome::Pass(format!("deleted with frequency {f:.4}"))
    }
}

fn c5() -> Outcome {
    let m = mr(1981.0f64, 991.0).unwrap();
    let a = ar(0.883f64, 0.798).unwrap();
    let mut bad = Vec::new();
    if (m - 0.49975).abs() > 1e-4 {
        bad.push(format!("mr = {m}"));
    }
    if (a - 0.9037).abs() > 1e-4 {
        bad.push(format!("ar = {a}"));
    }
    for x in [0.1, 0.3, 0.7, 0.9037, 1.0 / 3.0, 0.99] {
        if harmonic(x, x) != Some(x) {
            bad.push(format!("harmonic({x}, {x}) = {:?}", harmonic(x, x)));
        }
    }
    if bad.is_empty() {
        Outcome::Pass(format!("mr {m:.5}, ar {a:.4}, harmonic(x,x) exact"))
    } else {
        Outcome::Fail(bad.join("; "))
    }
}

fn c6() -> Outcome {
    const SEEDS: u64 = 20;
    let t = Instant::now();
    let epsilons: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
    let data: Vec<Dataset> = (0..SEEDS).map(|s| mixed_entropy(1000, 100 + s)).collect();
    let mut mean_mr = Vec::new();
    let mut mean_ar = Vec::new();
    for &eps in &epsilons {
        let mut m = 0.0;
        let mut a = 0.0;
        for (s, d) in data.iter().enumerate() {
            let cfg = PipelineConfig {
                epsilon: eps,
                seed: s as u64,
                repeats: 1,
                ..Default::default()
            };
            let r = run_experiment(d, &cfg).unwrap();
            m += r.mr;
            a += r.ar;
        }
        mean_mr.push(m / SEEDS as f64);
        mean_ar.push(a / SEEDS as f64);
    }
    let mr_viol = mean_mr.windows(2).filter(|w| w[1] > w[0]).count();
    let ar_viol = mean_ar.windows(2).filter(|w| w[1] < w[0]).count();
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ");
    let detail = format!(
        "MR [{}] ({mr_viol} rises), AR [{}] ({ar_viol} drops)",
        fmt(&mean_mr),
        fmt(&mean_ar)
    );
    if mr_viol > 1 || ar_viol > 1 {
        return Outcome::Fail(detail);
    }
    budget(t.elapsed(), Duration::from_secs(120), detail)
}

fn german_path() -> PathBuf {
    std::env::var_os("VALSEL_GERMAN_CREDIT")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/german.data"))
}

fn c7() -> Outcome {
    let path = german_path();
    if !path.exists() {
        return Outcome::Skip(format!(
            "{} not found; set VALSEL_GERMAN_CREDIT to the UCI german.data file",
            path.display()
        ));
    }
    let t = Instant::now();
    let opts = CsvOptions {
        delimiter: b' ',
        has_header: false,
        ..Default::default()
    };
    let d = load_csv(&path, &opts).unwrap();
    let r = run_experiment(&d, &PipelineConfig::default()).unwrap();
    let detail = format!(
        "MR {:.4}, AR {:.4} (Acc {:.4} -> {:.4}, |M| {:.1} -> {:.1})",
        r.mr, r.ar, r.acc_o, r.acc_p, r.size_o, r.size_p
    );
    if r.mr < 0.85 || r.ar < 0.90 {
        return Outcome::Fail(detail);
    }
    budget(t.elapsed(), Duration::from_secs(120), detail)
}

fn c8() -> Outcome {
    const DRAWS: usize = 50_000;
    let mut counts = [0u64; 20];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..DRAWS {
        for i in reservoir_indices(20, 5, &mut rng) {
            counts[i] += 1;
        }
    }
    let expected = DRAWS as f64 * 5.0 / 20.0;
    let chi2: f64 = counts.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new(19.0).unwrap().cdf(chi2);
    let detail = format!("chi2 {chi2:.2} on 19 df, p = {p:.4}");
    if p > 0.01 {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn c9() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let input = common::fixture("mixed.csv");
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("report{k}.json"));
        let status = Command::new(env!("CARGO_BIN_EXE_valsel"))
            .args(["experiment", "--input"])
            .arg(&input)
            .args(["--seed", "7", "--jobs", if k == 0 { "1" } else { "4" }, "--output"])
            .arg(&out)
            .output()
            .unwrap();
        if !status.status.success() {
            return Outcome::Fail(String::from_utf8_lossy(&status.stderr).into_owned());
        }
        outputs.push(std::fs::read(&out).unwrap());
    }
    if outputs[0] == outputs[1] {
        Outcome::Pass(format!("two runs, {} identical bytes", outputs[0].len()))
    } else {
        Outcome::Fail("reports differ".into())
    }
}

fn c10() -> Outcome {
    // `coin` is balanced within each of its values, so both have H = 1.
    let mut b = DatasetBuilder::new("fs", ["signal", "coin"], "class");
    for i in 0..40 {
        let label = if i % 2 == 0 { "p" } else { "q" };
        let signal = if (i % 2 == 0) != (i % 10 == 0) { "s1" } else { "s2" };
        let coin = if (i / 2) % 2 == 0 { "h" } else { "t" };
        b.push(&[Some(signal), Some(coin)], label, 1.0).unwrap();
    }
    let d = b.build();
    let stats = compute_stats::<f64>(&d).unwrap();
    if stats.features[1].values.iter().any(|v| v.entropy != 1.0) {
        return Outcome::Fail("fixture feature is not fully confused".into());
    }
    for eps in [0.1, 0.25, 0.5] {
        for seed in 0..50 {
            let cfg = VsConfig {
                mode: Mode::Pvs,
                epsilon: eps,
                seed,
                ..Default::default()
            };
            let out = pvs(&d, &cfg, &stats).unwrap();
            if !out.removed_features.contains(&1) {
                return Outcome::Fail(format!("eps {eps} seed {seed}: feature kept"));
            }
            if out.filtered.is_empty() {
                continue;
            }
            for params in [TreeParams::default(), TreeParams::unpruned()] {
                let tree = train_tree(&out.filtered, &params).unwrap();
                if tree.split_features().contains(&1) {
                    return Outcome::Fail(format!("eps {eps} seed {seed}: tree splits on removed feature"));
                }
            }
            let rules = LearnerSpec::rules().train(&out.filtered).unwrap();
            if rules.used_features().contains(&1) {
                return Outcome::Fail(format!("eps {eps} seed {seed}: rule uses removed feature"));
            }
        }
    }
    Outcome::Pass("feature removed for every eps <= 0.5 and seed; no split or condition on it".into())
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("C1 entropy oracle on the worked example", c1),
        ("C2 weighted-confusion proposition", c2),
        ("C3 removal-probability calibration", c3),
        ("C4 missing-rate deletion", c4),
        ("C5 MR/AR/harmonic exactness", c5),
        ("C6 epsilon-sweep shape", c6),
        ("C7 german credit reproduction", c7),
        ("C8 reservoir uniformity", c8),
        ("C9 experiment determinism", c9),
        ("C10 feature-selection subsumption", c10),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Outcome::Pass(msg) => println!("[PASS] {name}: {msg}"),
            Outcome::Fail(msg) => {
                failed += 1;
                println!("[FAIL] {name}: {msg}");
            }
            Outcome::Skip(msg) => println!("[SKIP] {name}: {msg}"),
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
