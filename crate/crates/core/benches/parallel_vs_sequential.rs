use commonnoise::harness::ExperimentConfig;
use commonnoise::kernel::pairwise_drift;
use commonnoise::transport::{self, TransportOptions};
use commonnoise::{simulate, EmpiricalMeasure, Exec, InteractionKernel, SimConfig};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn strategies() -> Vec<(&'static str, Exec)> {
    vec![
        ("sequential", Exec::Sequential),
        #[cfg(feature = "parallel")]
        ("parallel", Exec::Parallel),
    ]
}

fn drift(c: &mut Criterion) {
    let cfg = ExperimentConfig::default();
    let mut g = c.benchmark_group("pairwise_drift_gaussian_kernel");
    for n in [512, 2048] {
        let x = cfg.sample_initial(n, 1).unwrap();
        let k = InteractionKernel::Gaussian { amplitude: -1.0, length: 0.5 };
        for (name, exec) in strategies() {
            g.bench_with_input(BenchmarkId::new(name, n), &x, |b, x| b.iter(|| pairwise_drift(black_box(x), k, exec).unwrap()));
        }
    }
    g.finish();
}

fn particle_run(c: &mut Criterion) {
    let cfg = ExperimentConfig::default();
    let noise = cfg.noise.build().unwrap();
    let mut g = c.benchmark_group("simulate_linear_kernel_T1");
    g.sample_size(10);
    for n in [1024, 8192] {
        let x0 = cfg.sample_initial(n, 2).unwrap();
        for (name, exec) in strategies() {
            let sim = SimConfig::new(n, 2, 1.0, 1.0 / 256.0).with_stride(256).with_exec(exec);
            let path = sim.brownian_path(&noise, 3).unwrap();
            g.bench_with_input(BenchmarkId::new(name, n), &x0, |b, x0| b.iter(|| simulate(&sim, &noise, black_box(x0), &path).unwrap()));
        }
    }
    g.finish();
}

fn exact_w1(c: &mut Criterion) {
    let cfg = ExperimentConfig::default();
    let mut g = c.benchmark_group("exact_w1");
    g.sample_size(10);
    let a = EmpiricalMeasure::uniform(cfg.sample_initial(1024, 4).unwrap()).unwrap();
    let b = EmpiricalMeasure::uniform(cfg.sample_initial(1024, 5).unwrap().translated(&[0.2, 0.0])).unwrap();
    for (name, exec) in strategies() {
        let o = TransportOptions::default().with_exec(exec);
        g.bench_function(BenchmarkId::new(name, 1024), |bch| bch.iter(|| transport::w1(&a, &b, &o).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, drift, particle_run, exact_w1);
criterion_main!(benches);
