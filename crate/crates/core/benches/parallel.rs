//! Data-parallel lane versus the sequential fallback.
//!
//! The GMRLC witness search enumerates supersets of the forced contraction
//! set; the worst case is a refutation, which visits all 2^k candidates.
//! Both execution modes visit candidates in the same order and return the
//! same verdict, so this is a pure scheduling comparison. The second group
//! sweeps independent MMP runs over an exhaustive fan list.
//!
//! Built with `--no-default-features` the `parallel` mode degrades to the
//! sequential path and the two curves coincide.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rayon::prelude::*;

use mmp_surface::discrepancy::{classify_with, ClassifyOptions, SearchMode};
use mmp_surface::exactlin::Rational;
use mmp_surface::mmp::{run_mmp, MmpOptions};
use mmp_surface::surface::{CurveConfig, CurveId, CurveRecord, Divisor, SingularModel};
use mmp_surface::toric::{config_from_fan, enumerate_complete_fans};

/// A model whose GMRLC verdict needs the full exhaustive refutation: one
/// non-rational point forced into every candidate, plus `n - 1` disjoint A1
/// points that only inflate the subset lattice.
fn refutation_model(n: usize) -> (SingularModel, Divisor) {
    let mut curves = vec![
        CurveRecord::with_adjunction("E0", -1, 1),
        CurveRecord::with_adjunction("L", -1, 0),
    ];
    for i in 1..n {
        curves.push(CurveRecord::with_adjunction(
            format!("E{i}").as_str(),
            -2,
            0,
        ));
    }
    let config = CurveConfig::new(curves)
        .with_intersection("E0", "L", 1)
        .attest_snc();
    let contracted = (0..n).map(|i| CurveId::from(format!("E{i}").as_str()));
    let model = SingularModel::new(config, contracted);
    // The line through the non-rational point pushes c(E0) to 2, forcing
    // E0 into the contraction set; no superset ever certifies.
    let delta = Divisor::zero().with("L", Rational::one());
    (model, delta)
}

fn bench_witness_search(c: &mut Criterion) {
    let mut group = c.benchmark_group("gmrlc_witness_refutation");
    group.sample_size(10);
    for n in [10usize, 14, 16] {
        let (model, delta) = refutation_model(n);
        for (label, mode) in [
            ("seq", SearchMode::Sequential),
            ("par", SearchMode::Parallel),
        ] {
            let opts = ClassifyOptions {
                max_witness_curves: 20,
                search: mode,
            };
            group.bench_with_input(BenchmarkId::new(label, n), &n, |b, _| {
                b.iter(|| {
                    let report = classify_with(black_box(&model), &delta, &opts).unwrap();
                    assert!(report.gmrlc.is_false());
                    report
                })
            });
        }
    }
    group.finish();
}

fn bench_mmp_sweep(c: &mut Criterion) {
    let fans = enumerate_complete_fans(8, 1);
    let surfaces: Vec<_> = fans.iter().map(|f| config_from_fan(f).unwrap()).collect();
    let run_one = |s: &mmp_surface::toric::ToricSurface| {
        let opts = MmpOptions {
            toric: Some(s),
            ..Default::default()
        };
        run_mmp(&s.model, &Divisor::zero(), &s.universe, &opts)
            .unwrap()
            .steps
            .len()
    };

    let mut group = c.benchmark_group("mmp_fan_sweep");
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("seq", surfaces.len()), |b| {
        b.iter(|| surfaces.iter().map(run_one).sum::<usize>())
    });
    group.bench_function(BenchmarkId::new("par", surfaces.len()), |b| {
        b.iter(|| surfaces.par_iter().map(run_one).sum::<usize>())
    });
    group.finish();
}

criterion_group!(benches, bench_witness_search, bench_mmp_sweep);
criterion_main!(benches);
