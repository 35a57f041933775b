use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use layerflow::coupling::{InterfaceProblem, InterfaceSide};
use layerflow::numflux::NumericalFlux;
use layerflow::rockphys::{KirchhoffMode, PowerLaw, RockFunctions};
use layerflow::scheme::{BoundaryData, Discretization, LayeredMedium, MediumLayer, Scheme, SolverOptions};
use layerflow::Exec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn rock(name: &str, scale: f64, offset: f64) -> Arc<RockFunctions> {
    let pi = PowerLaw::new(offset, 1.0, 5.0).unwrap();
    Arc::new(RockFunctions::rational_shape(name, scale, pi, 0.05, 0.0, 5.0, KirchhoffMode::Auto).unwrap())
}

fn column(n: usize, m: usize, t: f64) -> Scheme {
    let (sand, shale) = (rock("sand", 10.0, 0.0), rock("shale", 0.1, 0.5));
    let medium = LayeredMedium::new(vec![
        MediumLayer::new(0.0, 0.5, sand.clone()),
        MediumLayer::new(0.5, 0.7, shale),
        MediumLayer::new(0.7, 1.0, sand),
    ])
    .unwrap();
    let disc = Discretization::uniform(&medium, n, m, t).unwrap();
    Scheme::new(medium, disc, BoundaryData::constant(0.001, 0.0)).unwrap()
}

fn random_pairs(k: usize) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    (0..k).map(|_| (rng.random(), rng.random())).collect()
}

fn interface_batch(c: &mut Criterion) {
    let (sand, shale) = (rock("sand", 10.0, 0.0), rock("shale", 0.1, 0.5));
    let (gs, gh) = (NumericalFlux::godunov(sand.flux_fn()), NumericalFlux::godunov(shale.flux_fn()));
    let p = InterfaceProblem::new(
        InterfaceSide { rock: &sand, flux: &gs, dx: 0.005 },
        InterfaceSide { rock: &shale, flux: &gh, dx: 0.005 },
    );
    let pairs = random_pairs(4096);
    let mut g = c.benchmark_group("interface_batch_4096");
    for (name, exec) in MODES {
        g.bench_function(name, |b| {
            b.iter(|| exec.map(&pairs, |&(a, bb)| p.solve(black_box(a), black_box(bb)).unwrap().flux))
        });
    }
    g.finish();
}

fn implicit_step(c: &mut Criterion) {
    let mut g = c.benchmark_group("implicit_step");
    for n in [100, 200] {
        // case-1 state at t = 80, just after the capillary pressure connects
        let base = column(n, 1600, 160.0);
        let u_old = base
            .run(vec![0.0; base.disc().cells()])
            .nth(800)
            .unwrap()
            .unwrap()
            .u;
        for (name, exec) in MODES {
            let scheme = base.clone().with_options(SolverOptions { exec, ..SolverOptions::default() });
            g.bench_with_input(BenchmarkId::new(name, n), &u_old, |b, u| {
                b.iter(|| scheme.step(black_box(u), 800).unwrap())
            });
        }
    }
    g.finish();
}

fn ensemble(c: &mut Criterion) {
    let scheme = column(20, 50, 5.0);
    let cells = scheme.disc().cells();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let members: Vec<Vec<f64>> = (0..16).map(|_| (0..cells).map(|_| rng.random::<f64>()).collect()).collect();
    let mut g = c.benchmark_group("ensemble_16_runs");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(name, |b| {
            b.iter(|| exec.map(&members, |u0| scheme.run(u0.clone()).last().unwrap().unwrap().u))
        });
    }
    g.finish();
}

criterion_group!(benches, interface_batch, implicit_step, ensemble);
criterion_main!(benches);
