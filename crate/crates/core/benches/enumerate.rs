use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use speedprior::enumerate::{enumerate_up_to_phase, tally_family, EnumerateConfig, Mode, OutputTrie};
use speedprior::measures::Generator;
use speedprior::Workers;

fn backends() -> Vec<(&'static str, Workers)> {
    let mut v = vec![("sequential", Workers::Sequential)];
    if cfg!(feature = "parallel") {
        v.push(("rayon", Workers::Auto));
    }
    v
}

fn ledger(c: &mut Criterion) {
    let mut group = c.benchmark_group("ledger_tree");
    group.sample_size(10);
    for k in [14u32, 16] {
        for (name, workers) in backends() {
            let cfg = EnumerateConfig::default().with_workers(workers);
            group.bench_with_input(BenchmarkId::new(name, k), &k, |b, &k| {
                b.iter(|| enumerate_up_to_phase(black_box(k), Mode::Tree, &cfg).unwrap().len())
            });
        }
    }
    group.finish();
}

fn prediction_tally(c: &mut Criterion) {
    let seq = Generator::Alternating.prefix(32);
    let mut group = c.benchmark_group("tally_alternating_32");
    group.sample_size(10);
    for k in [20u32, 22] {
        for (name, workers) in backends() {
            let cfg = EnumerateConfig::default().with_workers(workers);
            group.bench_with_input(BenchmarkId::new(name, k), &k, |b, &k| {
                b.iter(|| tally_family(OutputTrie::prediction_family(&seq), black_box(k), &cfg).unwrap().stats())
            });
        }
    }
    group.finish();
}

fn naive_vs_tree(c: &mut Criterion) {
    let mut group = c.benchmark_group("naive_vs_tree");
    let cfg = EnumerateConfig::default().with_workers(Workers::Sequential);
    for mode in [Mode::Naive, Mode::Tree] {
        group.bench_function(format!("{mode:?}_k10"), |b| b.iter(|| enumerate_up_to_phase(10, mode, &cfg).unwrap().len()));
    }
    group.finish();
}

criterion_group!(benches, ledger, prediction_tally, naive_vs_tree);
criterion_main!(benches);
