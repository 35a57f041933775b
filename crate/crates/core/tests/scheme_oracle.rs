mod common;

use layerflow::scheme::{BoundaryData, Scheme};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{column, residual_oracle, two_layer};

fn random_state(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>()).collect()
}

#[test]
fn residual_matches_direct_transcription() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    // four cells: two sand, two shale
    let scheme = two_layer(2, 10, 1.0, BoundaryData::constant(0.3, 0.6));
    assert_eq!(scheme.disc().cells(), 4);
    let (ul, ur) = scheme.boundary_values(0);
    for _ in 0..20 {
        let u = random_state(&mut rng, 4);
        let u_old = random_state(&mut rng, 4);
        let got = scheme.residual(&u, &u_old, 0).unwrap();
        let want = residual_oracle(&scheme, &u, &u_old, ul, ur);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-9 * (1.0 + w.abs()), "{got:?} vs {want:?}");
        }
    }
}

/// Nonlinear Gauss–Seidel with plain bisection per cell, driven only by the
/// public residual.
fn gauss_seidel_step(scheme: &Scheme, u_old: &[f64], step: usize) -> Vec<f64> {
    let mut u = u_old.to_vec();
    let cell = |u: &[f64], j: usize| scheme.residual(u, u_old, step).unwrap()[j];
    for _sweep in 0..4000 {
        for j in 0..u.len() {
            let (mut lo, mut hi) = (0.0, 1.0);
            u[j] = 0.0;
            if cell(&u, j) >= 0.0 {
                continue;
            }
            u[j] = 1.0;
            if cell(&u, j) <= 0.0 {
                continue;
            }
            for _ in 0..60 {
                u[j] = 0.5 * (lo + hi);
                if cell(&u, j) < 0.0 {
                    lo = u[j];
                } else {
                    hi = u[j];
                }
            }
            u[j] = 0.5 * (lo + hi);
        }
        let r = scheme.residual(&u, u_old, step).unwrap();
        if r.iter().all(|v| v.abs() < 1e-13) {
            break;
        }
    }
    u
}

#[test]
fn step_matches_gauss_seidel_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let scheme = two_layer(4, 3, 3.0, BoundaryData::constant(0.2, 0.0));
    for _ in 0..3 {
        let u_old = random_state(&mut rng, scheme.disc().cells());
        let state = scheme.step(&u_old, 0).unwrap();
        let oracle = gauss_seidel_step(&scheme, &u_old, 0);
        for (a, b) in state.u.iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-8, "{:?} vs {oracle:?}", state.u);
        }
    }
}

#[test]
fn dry_column_stays_dry_without_inflow() {
    let mut scheme = column(1.0, 10, 5, 0.5);
    scheme = Scheme::new(
        scheme.medium().clone(),
        scheme.disc().clone(),
        BoundaryData::constant(0.0, 0.0),
    )
    .unwrap();
    let last = scheme.run(vec![0.0; 20]).last().unwrap().unwrap();
    assert!(last.u.iter().all(|&v| v == 0.0));
    assert!(last.fluxes.iter().all(|&f| f == 0.0));
}
