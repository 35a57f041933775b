//! Two-point monotone numerical fluxes.
//!
//! The Godunov flux of a scalar flux function `f` is
//! `G(a, b) = min_{[a,b]} f` when `a ≤ b` and `max_{[b,a]} f` otherwise. It is
//! consistent (`G(a, a) = f(a)`), nondecreasing in `a` and nonincreasing in
//! `b`.

use crate::rockphys::ScalarFn;

const SCAN_POINTS: usize = 64;
const GOLDEN_TOL: f64 = 1e-12;
/// Scan resolution used to locate the interior extrema of `f` once, when a
/// [`NumericalFlux`] is built.
const CRITICAL_SCAN_POINTS: usize = 4096;

/// Which side of the domain a boundary flux sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Flux rule selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FluxScheme {
    #[default]
    Godunov,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Extremum {
    Min,
    Max,
}

/// Godunov flux by direct search: a 64-point scan of the interval followed by
/// golden-section refinement around the best sample.
pub fn godunov(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if a == b {
        return f(a);
    }
    if a < b {
        search_extremum(f, a, b, Extremum::Min)
    } else {
        search_extremum(f, b, a, Extremum::Max)
    }
}

fn search_extremum(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, kind: Extremum) -> f64 {
    let better = |x: f64, y: f64| match kind {
        Extremum::Min => x < y,
        Extremum::Max => x > y,
    };
    let h = (hi - lo) / SCAN_POINTS as f64;
    let mut best_i = 0;
    let mut best_v = f(lo);
    let mut samples = [0.0; SCAN_POINTS + 1];
    samples[0] = best_v;
    for (i, slot) in samples.iter_mut().enumerate().skip(1) {
        let x = if i == SCAN_POINTS { hi } else { lo + i as f64 * h };
        let v = f(x);
        *slot = v;
        if better(v, best_v) {
            best_v = v;
            best_i = i;
        }
    }
    let left = lo + best_i.saturating_sub(1) as f64 * h;
    let right = if best_i + 1 >= SCAN_POINTS {
        hi
    } else {
        lo + (best_i + 1) as f64 * h
    };
    let refined = golden(f, left, right, kind);
    let v = f(refined);
    if better(v, best_v) {
        v
    } else {
        best_v
    }
}

fn golden(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, kind: Extremum) -> f64 {
    let sign = match kind {
        Extremum::Min => 1.0,
        Extremum::Max => -1.0,
    };
    let g = |x: f64| sign * f(x);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..200 {
        if (b - a).abs() <= GOLDEN_TOL {
            break;
        }
        if gc < gd {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d);
        }
    }
    0.5 * (a + b)
}

/// A monotone numerical flux `G` built on a convective flux `f`.
///
/// Interior local extrema of `f` are located once at construction (scan plus
/// golden-section), so that evaluating `G(a, b)` only compares `f` at the two
/// endpoints and at the extrema inside `[a, b]`.
#[derive(Clone)]
pub struct NumericalFlux {
    f: ScalarFn,
    scheme: FluxScheme,
    minima: Vec<f64>,
    maxima: Vec<f64>,
    sup_norm: f64,
    lipschitz: f64,
}

impl std::fmt::Debug for NumericalFlux {
    fn fmt(&self, fmt: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fmt.debug_struct("NumericalFlux")
            .field("scheme", &self.scheme)
            .field("minima", &self.minima)
            .field("maxima", &self.maxima)
            .field("sup_norm", &self.sup_norm)
            .finish()
    }
}

impl NumericalFlux {
    pub fn new(f: ScalarFn, scheme: FluxScheme) -> Self {
        let n = CRITICAL_SCAN_POINTS;
        let h = 1.0 / n as f64;
        let vals: Vec<f64> = (0..=n).map(|i| f(i as f64 * h)).collect();
        let mut minima = Vec::new();
        let mut maxima = Vec::new();
        for i in 1..n {
            let (l, c, r) = (vals[i - 1], vals[i], vals[i + 1]);
            let lo = (i - 1) as f64 * h;
            let hi = (i + 1) as f64 * h;
            if c >= l && c >= r && (c > l || c > r) {
                maxima.push(golden(&*f, lo, hi, Extremum::Max));
            }
            if c <= l && c <= r && (c < l || c < r) {
                minima.push(golden(&*f, lo, hi, Extremum::Min));
            }
        }
        minima.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        maxima.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        let mut sup_norm = vals.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for &x in minima.iter().chain(&maxima) {
            sup_norm = sup_norm.max(f(x).abs());
        }
        let lipschitz = vals
            .windows(2)
            .fold(0.0_f64, |m, w| m.max((w[1] - w[0]).abs() / h));
        Self {
            f,
            scheme,
            minima,
            maxima,
            sup_norm,
            lipschitz,
        }
    }

    pub fn godunov(f: ScalarFn) -> Self {
        Self::new(f, FluxScheme::Godunov)
    }

    pub fn scheme(&self) -> FluxScheme {
        self.scheme
    }

    /// Underlying convective flux.
    #[inline]
    pub fn f(&self, u: f64) -> f64 {
        (self.f)(u)
    }

    /// `‖G‖∞ = max_{[0,1]} |f|`.
    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    /// Sampled Lipschitz constant of `f`, which bounds that of `G` in each
    /// argument.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    #[inline]
    pub fn eval(&self, a: f64, b: f64) -> f64 {
        match self.scheme {
            FluxScheme::Godunov => self.godunov_eval(a, b),
        }
    }

    #[inline]
    fn godunov_eval(&self, a: f64, b: f64) -> f64 {
        let (fa, fb) = (self.f(a), self.f(b));
        if a <= b {
            let mut m = fa.min(fb);
            for &x in &self.minima {
                if x > a && x < b {
                    m = m.min(self.f(x));
                }
            }
            m
        } else {
            let mut m = fa.max(fb);
            for &x in &self.maxima {
                if x > b && x < a {
                    m = m.max(self.f(x));
                }
            }
            m
        }
    }

    /// Boundary flux: `G(exterior, interior)` on the left end,
    /// `G(interior, exterior)` on the right end.
    #[inline]
    pub fn boundary_flux(&self, side: Side, exterior: f64, interior: f64) -> f64 {
        match side {
            Side::Left => self.eval(exterior, interior),
            Side::Right => self.eval(interior, exterior),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn f_sand(u: f64) -> f64 {
        50.0 * u * u * (1.0 - u * u) / (1.0 - 2.0 * u + 2.0 * u * u)
    }

    fn dense_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
        (0..=n)
            .map(|i| f(lo + (hi - lo) * i as f64 / n as f64))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn consistency_at_half() {
        assert!((godunov(&f_sand, 0.5, 0.5) - 18.75).abs() < 1e-12);
        let g = NumericalFlux::godunov(Arc::new(f_sand));
        assert!((g.eval(0.5, 0.5) - 18.75).abs() < 1e-12);
    }

    #[test]
    fn minimum_over_full_interval_is_zero() {
        assert_eq!(godunov(&f_sand, 0.0, 1.0), 0.0);
        let g = NumericalFlux::godunov(Arc::new(f_sand));
        assert_eq!(g.eval(0.0, 1.0), 0.0);
    }

    #[test]
    fn maximum_over_full_interval_matches_dense_sampling() {
        let oracle = dense_max(f_sand, 0.0, 1.0, 1_000_000);
        assert!((godunov(&f_sand, 1.0, 0.0) - oracle).abs() < 1e-10);
        let g = NumericalFlux::godunov(Arc::new(f_sand));
        assert!((g.eval(1.0, 0.0) - oracle).abs() < 1e-10);
        assert!((g.sup_norm() - oracle).abs() < 1e-10);
    }

    #[test]
    fn boundary_flux_cases() {
        let g = NumericalFlux::godunov(Arc::new(f_sand));
        assert_eq!(g.boundary_flux(Side::Left, 0.0, 0.0), 0.0);
        let inflow = g.boundary_flux(Side::Left, 0.001, 0.0);
        let oracle = dense_max(f_sand, 0.0, 0.001, 1_000_000);
        assert!((inflow - oracle).abs() < 1e-15);
        let shale = NumericalFlux::godunov(Arc::new(|u| f_sand(u) / 100.0));
        // right end evaluates G(interior, exterior)
        assert_eq!(shale.boundary_flux(Side::Right, 1.0, 0.0), 0.0);
        let outflow = shale.boundary_flux(Side::Right, 0.0, 1.0);
        assert!((outflow - dense_max(|u| f_sand(u) / 100.0, 0.0, 1.0, 1_000_000)).abs() < 1e-12);
        assert!(inflow.abs() <= g.sup_norm());
    }

    #[test]
    fn monotone_in_each_argument() {
        let g = NumericalFlux::godunov(Arc::new(f_sand));
        let n = 100;
        for i in 0..=n {
            for j in 0..n {
                let (a, b0, b1) = (i as f64 / n as f64, j as f64 / n as f64, (j + 1) as f64 / n as f64);
                assert!(g.eval(a, b1) <= g.eval(a, b0) + 1e-14);
                assert!(g.eval(b1, a) >= g.eval(b0, a) - 1e-14);
            }
        }
    }
}
