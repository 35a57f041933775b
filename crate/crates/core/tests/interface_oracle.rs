mod common;

use layerflow::coupling::{InterfaceProblem, InterfaceSide};
use layerflow::numflux::NumericalFlux;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{interface_oracle, sand_shale, Side};

#[test]
fn traces_match_curve_scan_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for amp in [1.0, 0.2] {
        let (sand, shale) = sand_shale(amp);
        let gs = NumericalFlux::godunov(sand.flux_fn());
        let gh = NumericalFlux::godunov(shale.flux_fn());
        // both orientations: sand below shale and shale below sand
        for (lr, lf, rr, rf) in [(&sand, &gs, &shale, &gh), (&shale, &gh, &sand, &gs)] {
            for _ in 0..40 {
                let (a, b) = (rng.random::<f64>(), rng.random::<f64>());
                let dx = rng.random_range(0.002..0.05);
                let p = InterfaceProblem::new(
                    InterfaceSide { rock: lr, flux: lf, dx },
                    InterfaceSide { rock: rr, flux: rf, dx },
                );
                let s = p.solve(a, b).unwrap();
                let (c, d, _) = interface_oracle(
                    &Side { rock: lr, flux: lf, dx },
                    &Side { rock: rr, flux: rf, dx },
                    a,
                    b,
                );
                assert!(
                    (s.c - c).abs() <= 1e-8 && (s.d - d).abs() <= 1e-8,
                    "a={a} b={b} dx={dx}: solver ({}, {}) oracle ({c}, {d})",
                    s.c,
                    s.d
                );
                assert!(p.flux_mismatch(a, b, &s) <= 1e-9 * (1.0 + s.flux.abs()));
            }
        }
    }
}

#[test]
fn trapped_regime_has_zero_flux() {
    // dry shale above partly filled sand: the sand pressure stays below the
    // entry pressure, so nothing crosses
    let (sand, shale) = sand_shale(1.0);
    let gs = NumericalFlux::godunov(sand.flux_fn());
    let gh = NumericalFlux::godunov(shale.flux_fn());
    let dx = 0.005;
    let p = InterfaceProblem::new(
        InterfaceSide { rock: &sand, flux: &gs, dx },
        InterfaceSide { rock: &shale, flux: &gh, dx },
    );
    for a in [0.1, 0.5, 0.8] {
        let s = p.solve(a, 0.0).unwrap();
        assert_eq!(s.d, 0.0);
        assert!(s.flux.abs() < 1e-12, "a={a}: {}", s.flux);
    }
}
