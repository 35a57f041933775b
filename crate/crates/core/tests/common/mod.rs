//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use layerflow::numflux::NumericalFlux;
use layerflow::rockphys::{KirchhoffMode, PowerLaw, RockFunctions};
use layerflow::scheme::{BoundaryData, Discretization, LayeredMedium, MediumLayer, Scheme};

pub const POROSITY: f64 = 0.05;

pub fn rock(name: &str, scale: f64, offset: f64, amplitude: f64, porosity: f64) -> Arc<RockFunctions> {
    Arc::new(
        RockFunctions::rational_shape(
            name,
            scale,
            PowerLaw::new(offset, amplitude, 5.0).unwrap(),
            porosity,
            0.0,
            5.0,
            KirchhoffMode::Auto,
        )
        .unwrap(),
    )
}

/// Sand and shale with capillary amplitude `amp` (1 or 0.2 in the two
/// column experiments).
pub fn sand_shale(amp: f64) -> (Arc<RockFunctions>, Arc<RockFunctions>) {
    (
        rock("sand", 10.0, 0.0, amp, POROSITY),
        rock("shale", 0.1, 0.5, amp, POROSITY),
    )
}

/// Sand (0, 0.5), shale (0.5, 0.7), sand (0.7, 1).
pub fn column(amp: f64, n: usize, m: usize, t_final: f64) -> Scheme {
    let (sand, shale) = sand_shale(amp);
    let medium = LayeredMedium::new(vec![
        MediumLayer::new(0.0, 0.5, sand.clone()),
        MediumLayer::new(0.5, 0.7, shale),
        MediumLayer::new(0.7, 1.0, sand),
    ])
    .unwrap();
    let disc = Discretization::uniform(&medium, n, m, t_final).unwrap();
    Scheme::new(medium, disc, BoundaryData::constant(0.001, 0.0)).unwrap()
}

/// Sand (0, 0.5) over shale (0.5, 1), `2n` cells.
pub fn two_layer(n: usize, m: usize, t_final: f64, bc: BoundaryData) -> Scheme {
    let (sand, shale) = sand_shale(1.0);
    let medium = LayeredMedium::new(vec![
        MediumLayer::new(0.0, 0.5, sand),
        MediumLayer::new(0.5, 1.0, shale),
    ])
    .unwrap();
    let disc = Discretization::uniform(&medium, n, m, t_final).unwrap();
    Scheme::new(medium, disc, bc).unwrap()
}

/// Godunov flux by dense sampling: the extremum over 4001 samples, polished
/// by ternary search between the neighbouring samples.
pub fn godunov_oracle(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if a == b {
        return f(a);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    // minimize g = sign·f
    let g = |x: f64| sign * f(x);
    let k = 4000;
    let h = (hi - lo) / k as f64;
    let x_at = |i: usize| if i == k { hi } else { lo + i as f64 * h };
    let (mut best, mut best_i) = (f64::INFINITY, 0);
    for i in 0..=k {
        let v = g(x_at(i));
        if v < best {
            best = v;
            best_i = i;
        }
    }
    let (mut l, mut r) = (x_at(best_i.saturating_sub(1)), x_at((best_i + 1).min(k)));
    for _ in 0..200 {
        let m1 = l + (r - l) / 3.0;
        let m2 = r - (r - l) / 3.0;
        if g(m1) < g(m2) {
            r = m2;
        } else {
            l = m1;
        }
    }
    let polished = g(0.5 * (l + r));
    sign * best.min(polished).min(g(lo)).min(g(hi))
}

/// One side of an interface as seen by the oracle.
pub struct Side<'a> {
    pub rock: &'a RockFunctions,
    pub flux: &'a NumericalFlux,
    pub dx: f64,
}

fn lower(rock: &RockFunctions, u: f64) -> Option<f64> {
    (u > 0.0).then(|| rock.pi_curve().excess(u))
}

fn upper(rock: &RockFunctions, u: f64) -> Option<f64> {
    (u < 1.0).then(|| rock.pi_curve().excess(u))
}

/// Sign of `x − y` for pressures written as `αₓ + eₓ` and `α_y + e_y`,
/// formed without cancelling the excesses against the offsets.
fn above(alpha_x: f64, ex: f64, alpha_y: f64, ey: f64) -> bool {
    (ex - ey) + (alpha_x - alpha_y) > 0.0
}

/// The point `(c, d)` of the graph-condition curve with `c + d = t`. The
/// curve `{π̃₁(c) ∩ π̃₂(d) ≠ ∅}` is monotone in the unit square, so `c + d`
/// parametrises it and `c` follows by bisection.
pub fn graph_point(left: &RockFunctions, right: &RockFunctions, t: f64) -> (f64, f64) {
    let (al, ar) = (left.pi_range().0, right.pi_range().0);
    let (mut lo, mut hi) = ((t - 1.0).max(0.0), t.min(1.0));
    for _ in 0..200 {
        let c = 0.5 * (lo + hi);
        let d = (t - c).clamp(0.0, 1.0);
        // left pressure set strictly above the right one: c too large
        let too_large = match (lower(left, c), upper(right, d)) {
            (Some(lc), Some(ud)) => above(al, lc, ar, ud),
            (Some(_), None) | (None, _) => false,
        };
        let too_small = match (lower(right, d), upper(left, c)) {
            (Some(ld), Some(uc)) => above(ar, ld, al, uc),
            _ => false,
        };
        if too_large {
            hi = c;
        } else if too_small {
            lo = c;
        } else {
            return (c, d);
        }
        if hi - lo <= f64::EPSILON * 0.25 {
            break;
        }
    }
    let c = 0.5 * (lo + hi);
    (c, (t - c).clamp(0.0, 1.0))
}

/// Interface traces by a scan of the graph curve followed by bisection on
/// the flux mismatch, which is nonincreasing along the curve.
pub fn interface_oracle(l: &Side, r: &Side, a: f64, b: f64) -> (f64, f64, f64) {
    // the Godunov fluxes have their own oracle; here they are taken as given
    let fl = |c: f64| l.flux.eval(a, c) - 2.0 * (l.rock.phi(c) - l.rock.phi(a)) / l.dx;
    let fr = |d: f64| r.flux.eval(d, b) - 2.0 * (r.rock.phi(b) - r.rock.phi(d)) / r.dx;
    let mismatch = |t: f64| {
        let (c, d) = graph_point(l.rock, r.rock, t);
        fl(c) - fr(d)
    };
    let k = 400;
    let ts: Vec<f64> = (0..=k).map(|i| 2.0 * i as f64 / k as f64).collect();
    let first = ts.iter().position(|&t| mismatch(t) <= 0.0);
    let t = match first {
        Some(0) => 0.0,
        None => 2.0,
        Some(i) => {
            let (mut lo, mut hi) = (ts[i - 1], ts[i]);
            while hi - lo > 1e-15 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if mismatch(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        }
    };
    let (c, d) = graph_point(l.rock, r.rock, t);
    (c, d, fl(c))
}

/// Residual of the scheme written out directly from its definition, with
/// oracle Godunov fluxes and oracle interface traces.
pub fn residual_oracle(scheme: &Scheme, u: &[f64], u_old: &[f64], ul: f64, ur: f64) -> Vec<f64> {
    let disc = scheme.disc();
    let layers = scheme.medium().layers();
    let n = u.len();
    let mut flux = vec![0.0; n + 1];
    let first = &layers[0].rock;
    flux[0] = godunov_oracle(&|s| first.f(s), ul, u[0]);
    let last = &layers[layers.len() - 1].rock;
    flux[n] = godunov_oracle(&|s| last.f(s), u[n - 1], ur);
    for e in 1..n {
        let (lj, rj) = (disc.layer_of_cell(e - 1), disc.layer_of_cell(e));
        if lj == rj {
            let rock = &layers[lj].rock;
            let dx = disc.layer_dx(lj);
            flux[e] = godunov_oracle(&|s| rock.f(s), u[e - 1], u[e])
                - (rock.phi(u[e]) - rock.phi(u[e - 1])) / dx;
        } else {
            let l = Side {
                rock: &layers[lj].rock,
                flux: &layers[lj].flux,
                dx: disc.layer_dx(lj),
            };
            let r = Side {
                rock: &layers[rj].rock,
                flux: &layers[rj].flux,
                dx: disc.layer_dx(rj),
            };
            flux[e] = interface_oracle(&l, &r, u[e - 1], u[e]).2;
        }
    }
    (0..n)
        .map(|j| {
            let l = disc.layer_of_cell(j);
            let acc = layers[l].rock.porosity() * disc.layer_dx(l) / disc.dt();
            acc * (u[j] - u_old[j]) + flux[j + 1] - flux[j]
        })
        .collect()
}
