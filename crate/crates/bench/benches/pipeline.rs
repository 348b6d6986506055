use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use thinloop::curve::corpus::{spec_for, word_from_names};
use thinloop::curve::{decompose, synth_curve, DecomposeOptions, SampledCurve, SynthOptions};
use thinloop::holonomy::{signature, transport, ConnectionField, GroupKind};
use thinloop::homotopy::{check_thin, remove_whiskers};
use thinloop::tree::{factorize, DEFAULT_THETA_TOL};
use thinloop::word::{Letter, Word};

fn curve(names: &str, spu: usize) -> SampledCurve {
    let opts = SynthOptions {
        samples_per_unit: spu,
        ..SynthOptions::default()
    };
    synth_curve(&spec_for(2, &word_from_names(names)), &opts)
        .expect("corpus word synthesises")
        .curve
}

fn random_word(rng: &mut ChaCha8Rng, len: usize) -> Word {
    let letters = (0..len)
        .map(|_| {
            let l = Letter::new(rng.gen_range(0..3));
            if rng.gen_bool(0.5) {
                l
            } else {
                l.inv()
            }
        })
        .collect();
    Word::new(letters)
}

fn words(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut group = c.benchmark_group("reduce");
    for len in [64, 1024, 16384] {
        let w = random_word(&mut rng, len);
        group.bench_with_input(BenchmarkId::from_parameter(len), &w, |b, w| b.iter(|| black_box(w.reduce())));
    }
    group.finish();
}

fn geometry(c: &mut Criterion) {
    let whisker = curve("p0 p1 s2 s2' p1' p0'", 256);
    let opts = DecomposeOptions::default();
    let dec = decompose(&whisker, &opts).expect("decomposes");

    c.bench_function("decompose", |b| b.iter(|| black_box(decompose(&whisker, &opts).unwrap())));
    c.bench_function("factorize", |b| {
        b.iter(|| black_box(factorize(&whisker, &dec, DEFAULT_THETA_TOL).unwrap()))
    });

    let mut slow = c.benchmark_group("homotopy");
    slow.sample_size(10);
    slow.bench_function("remove_whiskers", |b| {
        b.iter(|| black_box(remove_whiskers(&whisker, &dec, DEFAULT_THETA_TOL, 128, 32).unwrap()))
    });
    let (grid, _) = remove_whiskers(&whisker, &dec, DEFAULT_THETA_TOL, 128, 32).unwrap();
    slow.bench_function("check_thin", |b| b.iter(|| black_box(check_thin(&grid, 1e-3, 1e-6).unwrap())));
    slow.finish();
}

fn holonomy(c: &mut Criterion) {
    let loop_ = curve("p0 p1 p0' p1'", 256);
    let mut group = c.benchmark_group("transport");
    for kind in GroupKind::ALL {
        let conn = ConnectionField::random(kind, 2, 1);
        group.bench_function(kind.name(), |b| {
            b.iter(|| black_box(transport(&loop_, &conn, loop_.segments()).unwrap()))
        });
    }
    group.finish();
    c.bench_function("signature level 4", |b| b.iter(|| black_box(signature(&loop_, 4).unwrap())));
}

criterion_group!(benches, words, geometry, holonomy);
criterion_main!(benches);
