use addbo::acquisition::{BetaSchedule, BoxDomain, OptimizerConfig};
use addbo::batch::{run_batch_bo, BatchConfig};
use addbo::decomposition::{GibbsConfig, GibbsSampler};
use addbo::experiment::{generate_synthetic, Objective, RunConfig, Variant};
use addbo::rng::substream;
use addbo::{Decomposition, GpState, KernelSpec, ObservationSet};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::Rng;

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    vec![
        ("1-thread", rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap()),
        ("all-threads", rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()),
    ]
}

fn sample_data(d: usize, n: usize, spec: &KernelSpec) -> ObservationSet {
    let f = generate_synthetic(d, 3, spec, 256).unwrap();
    let mut rng = substream(4, &[]);
    let points: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect();
    let values = points.iter().map(|x| f.evaluate(x).unwrap()).collect();
    ObservationSet::new(d, points, values).unwrap()
}

fn gibbs_sweep(c: &mut Criterion) {
    let spec = KernelSpec::default();
    let data = sample_data(10, 200, &spec);
    let mut group = c.benchmark_group("gibbs_sweep");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            let mut sampler =
                GibbsSampler::new(&data, &spec, &[1.0; 10], None, Decomposition::fully_partitioned(10)).unwrap();
            let mut rng = substream(5, &[]);
            b.iter(|| pool.install(|| sampler.sweep(&mut rng).unwrap()))
        });
    }
    group.finish();
}

fn posterior_batch(c: &mut Criterion) {
    let spec = KernelSpec::default();
    let data = sample_data(10, 300, &spec);
    let decomp = Decomposition::new(vec![0, 0, 1, 1, 1, 2, 3, 3, 4, 4]).unwrap();
    let state = GpState::fit(&data, &decomp, &spec).unwrap();
    let mut rng = substream(6, &[]);
    let queries: Vec<Vec<f64>> = (0..4096).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
    let refs: Vec<&[f64]> = queries.iter().map(Vec::as_slice).collect();
    let mut group = c.benchmark_group("posterior_group_batch");
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| state.posterior_group_batch(0, &refs).unwrap()))
        });
    }
    group.finish();
}

fn batch_round(c: &mut Criterion) {
    let spec = KernelSpec::default();
    let f = generate_synthetic(6, 11, &spec, 256).unwrap();
    let domain = BoxDomain::unit(6);
    let run = RunConfig {
        rounds: 2,
        n_init: 10,
        variant: Variant::Known,
        optimizer: OptimizerConfig { budget: 2000, ..Default::default() },
        ..Default::default()
    };
    let config = BatchConfig { batch_size: 5, pool_size: 256, ..Default::default() };
    let mut group = c.benchmark_group("batch_run");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                pool.install(|| {
                    run_batch_bo(&f, &domain, &config, &run, &GibbsConfig::default(), &spec, &BetaSchedule::standard())
                        .unwrap()
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, gibbs_sweep, posterior_batch, batch_round);
criterion_main!(benches);
