use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use memvasicek_core::calibration::{objective, QuoteSet};
use memvasicek_core::option::value_option;
use memvasicek_core::pde::{default_grid, solve};
use memvasicek_core::simulation::{mc_bond_price, Scheme, SimConfig};
use memvasicek_core::{fixtures, OptionSpec};

fn closed_form(c: &mut Criterion) {
    let params = fixtures::bond_example(0.05);
    c.bench_function("bond_price_10y", |b| {
        b.iter(|| black_box(&params).initial_bond_price(black_box(10.0)).unwrap())
    });
    let option = fixtures::option_example();
    let spec = OptionSpec::call(0.5, 1.0, 0.3).unwrap();
    c.bench_function("bond_call", |b| {
        b.iter(|| value_option(black_box(&spec), black_box(&option)).unwrap())
    });
}

fn calibration_objective(c: &mut Criterion) {
    let quotes = QuoteSet::from_model(&fixtures::FIT_2007_12_31, &fixtures::TREASURY_MATURITIES).unwrap();
    let trial = fixtures::FIT_2005_05_24;
    c.bench_function("objective_10_quotes", |b| {
        b.iter(|| objective(black_box(&trial), black_box(&quotes)))
    });
}

fn engines(c: &mut Criterion) {
    let mut group = c.benchmark_group("engines");
    group.sample_size(10);
    let params = fixtures::bond_example(0.05);
    let grid = default_grid(&params, 1.0, 6.0, 51, 51, 50).unwrap();
    group.bench_function("pde_bond_51x51x50", |b| {
        b.iter(|| solve(&params, 1.0, |_, _| 1.0, black_box(&grid)).unwrap())
    });
    for scheme in [Scheme::Euler, Scheme::ExactGaussian] {
        let cfg = SimConfig::new(1.0, 64, 2_000, 1).with_scheme(scheme);
        group.bench_function(format!("mc_bond_2000x64_{scheme:?}"), |b| {
            b.iter(|| mc_bond_price(&params, 1.0, black_box(&cfg)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, closed_form, calibration_objective, engines);
criterion_main!(benches);
