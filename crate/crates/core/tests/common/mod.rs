#![allow(dead_code)]

use std::path::PathBuf;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use valsel::data::{load_csv, CsvOptions, DatasetBuilder};
use valsel::Dataset;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// The five-instance worked example, `-` marking missing cells.
pub fn table2() -> Dataset {
    let opts = CsvOptions {
        missing_token: "-".into(),
        ..Default::default()
    };
    load_csv(fixture("table2.csv"), &opts).unwrap()
}

/// Base-`k` entropy straight from counts.
pub fn entropy_from_counts(counts: &[usize], k: usize) -> f64 {
    let n: usize = counts.iter().sum();
    if k < 2 || n == 0 {
        return 0.0;
    }
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n as f64;
            -p * p.ln() / (k as f64).ln()
        })
        .sum()
}

/// Label counts of instances holding value `z` of feature `x`, recounted
/// from the raw cells.
pub fn value_counts(d: &Dataset, x: usize, z: u32) -> Vec<usize> {
    let mut c = vec![0; d.num_labels()];
    for inst in &d.instances {
        if inst.slots[x].get() == Some(z) {
            c[inst.label as usize] += 1;
        }
    }
    c
}

/// Random categorical dataset with every label used at least once.
pub fn random_dataset(rng: &mut impl Rng, max_instances: usize, max_features: usize, max_labels: usize) -> Dataset {
    let nf = rng.gen_range(1..=max_features);
    let nl = rng.gen_range(2..=max_labels);
    let n = rng.gen_range(nl..=max_instances.max(nl));
    let names: Vec<String> = (0..nf).map(|x| format!("f{x}")).collect();
    let mut b = DatasetBuilder::new("random", names, "class");
    let arity: Vec<usize> = (0..nf).map(|_| rng.gen_range(1..=6)).collect();
    for i in 0..n {
        let cells: Vec<Option<String>> = arity
            .iter()
            .map(|&a| (rng.gen::<f64>() >= 0.1).then(|| format!("v{}", rng.gen_range(0..a))))
            .collect();
        let tokens: Vec<Option<&str>> = cells.iter().map(|c| c.as_deref()).collect();
        let label = if i < nl { i } else { rng.gen_range(0..nl) };
        b.push(&tokens, &format!("l{label}"), 1.0).unwrap();
    }
    b.build()
}

/// Four-class data whose features report the class through increasingly
/// noisy channels, so value entropies spread over (0, 1].
///
/// Feature `j` reports the true class with probability `1 − ERROR[j]` and
/// one of the other three classes otherwise, followed by a uniform nuisance
/// digit, giving eight values per feature.
pub const ERROR: [f64; 8] = [0.1, 0.2, 0.3, 0.35, 0.4, 0.45, 0.5, 0.6];

pub fn mixed_entropy(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> = (0..ERROR.len()).map(|j| format!("g{j}")).collect();
    let mut b = DatasetBuilder::new("mixed", names, "y");
    for _ in 0..n {
        let y = rng.gen_range(0..4u32);
        let cells: Vec<String> = ERROR
            .iter()
            .map(|&e| {
                let seen = if rng.gen::<f64>() < e { (y + rng.gen_range(1..4u32)) % 4 } else { y };
                format!("{}{}", ["a", "b", "c", "d"][seen as usize], rng.gen_range(0..3u32))
            })
            .collect();
        let tokens: Vec<Option<&str>> = cells.iter().map(|c| Some(c.as_str())).collect();
        b.push(&tokens, &format!("k{y}"), 1.0).unwrap();
    }
    b.build()
}

/// Proptest strategy: small categorical datasets, possibly with missing
/// cells, at least one instance.
pub fn arb_dataset() -> impl Strategy<Value = Dataset> {
    (1usize..5, 2usize..4).prop_flat_map(|(nf, nl)| {
        let row = (
            proptest::collection::vec(proptest::option::weighted(0.85, 0u8..4), nf),
            0..nl,
        );
        proptest::collection::vec(row, 1..40).prop_map(move |rows| {
            let names: Vec<String> = (0..nf).map(|x| format!("f{x}")).collect();
            let mut b = DatasetBuilder::new("arb", names, "class");
            for (cells, label) in rows {
                let owned: Vec<Option<String>> = cells.iter().map(|c| c.map(|v| format!("v{v}"))).collect();
                let tokens: Vec<Option<&str>> = owned.iter().map(|c| c.as_deref()).collect();
                b.push(&tokens, &format!("l{label}"), 1.0).unwrap();
            }
            b.build()
        })
    })
}
