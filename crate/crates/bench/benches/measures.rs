use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use proxyhpo::measures::{local_ncc, mutual_information, pairwise_from_prepared};
use proxyhpo::preprocess::{labelcrop, resample_trilinear};
use proxyhpo::synth::{generate_item, item_id, SynthConfig};
use proxyhpo::{MeasureConfig, MeasureKind, RoiMode, Volume3D};

fn items(n: usize, extent: usize) -> Vec<(Volume3D, proxyhpo::LabelMask)> {
    let mut cfg = SynthConfig::duplicate_family(n, 7);
    cfg.shape = [extent; 3];
    (0..n).map(|i| generate_item(&cfg, i).unwrap()).collect()
}

fn pair_measures(c: &mut Criterion) {
    let mut group = c.benchmark_group("pair");
    for extent in [32, 64] {
        let v = items(2, extent);
        let (a, b) = (&v[0].0, &v[1].0);
        group.bench_with_input(BenchmarkId::new("mi_32bins", extent), &extent, |bench, _| {
            bench.iter(|| mutual_information(black_box(a), black_box(b), 32).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("ncc_9", extent), &extent, |bench, _| {
            bench.iter(|| local_ncc(black_box(a), black_box(b), [9; 3]).unwrap())
        });
    }
    group.finish();
}

fn preprocessing(c: &mut Criterion) {
    let v = items(1, 64);
    let (img, lbl) = &v[0];
    c.bench_function("resample_64_to_48", |bench| {
        bench.iter(|| resample_trilinear(black_box(img), [48; 3]).unwrap())
    });
    c.bench_function("labelcrop_64", |bench| {
        bench.iter(|| labelcrop(black_box(img), black_box(lbl), 64).unwrap())
    });
}

fn pairwise(c: &mut Criterion) {
    let n = 8;
    let prepared: Vec<Volume3D> = items(n, 32).into_iter().map(|(img, _)| img).collect();
    let ids: Vec<String> = (0..n).map(item_id).collect();
    let mut group = c.benchmark_group("pairwise_8x32");
    group.sample_size(10);
    for kind in [MeasureKind::Mi, MeasureKind::Ncc] {
        let mut cfg = MeasureConfig::new(kind, RoiMode::WholeVolume);
        cfg.canonical_cube = 32;
        group.bench_function(format!("{kind:?}"), |bench| {
            bench.iter(|| pairwise_from_prepared(ids.clone(), black_box(&prepared), &cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, pair_measures, preprocessing, pairwise);
criterion_main!(benches);
