use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use diga::data::synth_dataset;
use diga::engine::{run_evolution, EvolutionConfig};
use diga::model::{evaluate, init_zero_params};
use diga::{exec, Architecture, ParamSet, RunRng};
use rand::{Rng, SeedableRng};

fn params(max: &Architecture) -> ParamSet {
    let mut rng = RunRng::seed_from_u64(1);
    let mut p = init_zero_params(max);
    p.values_mut().for_each(|v| *v = rng.random_range(-0.05..0.05));
    p
}

fn population(c: &mut Criterion) {
    let max = Architecture::new(vec![12288, 20, 5, 1]).unwrap();
    let data = synth_dataset(12288, 209, 7, false).unwrap();
    let p = params(&max);
    let archs: Vec<Architecture> = (1..=20)
        .map(|w| Architecture::new(vec![12288, w, 5, 1]).unwrap())
        .collect();
    let cost = |a: &Architecture| evaluate(&p, a, &data).unwrap();

    let mut g = c.benchmark_group("population_cost");
    g.sample_size(10);
    g.bench_function("sequential", |b| b.iter(|| exec::sequential::map(&archs, cost)));
    #[cfg(feature = "parallel")]
    g.bench_function("parallel", |b| b.iter(|| exec::parallel::map(&archs, cost)));
    g.finish();
}

fn seed_sweep(c: &mut Criterion) {
    let train = synth_dataset(50, 100, 42, true).unwrap();
    let configs: Vec<EvolutionConfig> = (41..45)
        .map(|seed| {
            let mut cfg =
                EvolutionConfig::new(Architecture::new(vec![50, 5, 5, 1]).unwrap(), 1e-12);
            cfg.seed = seed;
            cfg.max_iter = 200;
            cfg
        })
        .collect();
    let run = |cfg: &EvolutionConfig| run_evolution(cfg.clone(), &train, None).unwrap();

    let mut g = c.benchmark_group("seed_sweep");
    g.sample_size(10);
    g.bench_with_input(BenchmarkId::new("sequential", configs.len()), &configs, |b, cs| {
        b.iter(|| exec::sequential::map(cs, run))
    });
    #[cfg(feature = "parallel")]
    g.bench_with_input(BenchmarkId::new("parallel", configs.len()), &configs, |b, cs| {
        b.iter(|| exec::parallel::map(cs, run))
    });
    g.finish();
}

criterion_group!(benches, population, seed_sweep);
criterion_main!(benches);
