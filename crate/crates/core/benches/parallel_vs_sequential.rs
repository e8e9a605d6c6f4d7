//! Data-parallel kernels on a one-thread pool against the default pool.
//! Build with `--no-default-features` to time the plain sequential loops.

use actcluster::clustering::{gmm_fit, GmmConfig};
use actcluster::dimreduce::{fuzzy_simplicial_set, knn_graph};
use actcluster::encoder::{Encoder, EncoderConfig, WINDOW_LEN};
use actcluster::seed::SeedStream;
use criterion::{criterion_group, criterion_main, Criterion};
use rand::Rng;

fn uniform(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = SeedStream::new(seed).rng();
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Runs `f` under each available scheduling mode.
fn modes(c: &mut Criterion, group: &str, f: impl Fn() + Send + Sync) {
    let mut g = c.benchmark_group(group);
    g.sample_size(10);
    #[cfg(feature = "parallel")]
    {
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        g.bench_function("rayon_1_thread", |b| b.iter(|| single.install(&f)));
        let threads = rayon::current_num_threads();
        g.bench_function(format!("rayon_{threads}_threads"), |b| b.iter(&f));
    }
    #[cfg(not(feature = "parallel"))]
    g.bench_function("sequential", |b| b.iter(&f));
    g.finish();
}

fn encode(c: &mut Criterion) {
    let channels = 3;
    let enc = Encoder::new(EncoderConfig::new(channels), SeedStream::new(1)).unwrap();
    let windows = uniform(128 * channels * WINDOW_LEN, 2);
    modes(c, "encode_128_windows", || {
        std::hint::black_box(enc.encode_all(&windows, 64).unwrap());
    });
}

fn fuzzy_graph(c: &mut Criterion) {
    let (n, d) = (1000, 32);
    let pts = uniform(n * d, 3);
    modes(c, "knn_fuzzy_graph_1000x32", || {
        let knn = knn_graph(&pts, d, 60).unwrap();
        std::hint::black_box(fuzzy_simplicial_set(&knn));
    });
}

fn gmm(c: &mut Criterion) {
    let (n, d) = (2000, 2);
    let pts = uniform(n * d, 4);
    modes(c, "gmm_2000x2_k6", || {
        std::hint::black_box(gmm_fit(&pts, d, 6, &GmmConfig::default(), SeedStream::new(5)).unwrap());
    });
}

criterion_group!(benches, encode, fuzzy_graph, gmm);
criterion_main!(benches);
