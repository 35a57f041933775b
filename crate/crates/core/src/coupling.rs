//! Capillary-pressure graphs and the discrete interface transmission solve.
//!
//! Each rock's capillary curve `π` is extended to a maximal monotone graph by
//! vertical half-lines at `u = 0` (all pressures `≤ π(0)`) and `u = 1` (all
//! pressures `≥ π(1)`). Its resolvent clamps to 0 / 1 outside `[π(0), π(1)]`.
//!
//! At an interface with adjacent cell values `a` (left) and `b` (right) the
//! traces `(c, d)` solve
//!
//! ```text
//! G₁(a,c) − 2(ϕ₁(c) − ϕ₁(a))/δx₁ = G₂(d,b) − 2(ϕ₂(b) − ϕ₂(d))/δx₂,
//! π̃₁(c) ∩ π̃₂(d) ≠ ∅.
//! ```
//!
//! Writing `c = π̃₁⁻¹(p)`, `d = π̃₂⁻¹(p)` turns this into a scalar equation
//! `Λ(p) = 0` with `Λ` continuous and nondecreasing, which is solved by
//! bisection. Pressures are carried as `anchor + τ` with the anchor on one of
//! the kinks `πᵢ(0)`, `πᵢ(1)`; the excess `p − πᵢ(0)` is then formed without
//! cancellation and small traces keep full resolution.

use crate::numflux::NumericalFlux;
use crate::rockphys::{CapillaryCurve, RockFunctions};

/// Residual tolerance on `Λ` and bracket-width tolerance of the bisection.
pub const LAMBDA_TOL: f64 = 1e-12;
pub const BRACKET_TOL: f64 = 1e-14;
const MAX_BISECTIONS: usize = 256;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CouplingError {
    #[error(
        "interface bracket fails its sign conditions (Λ(low) = {low}, Λ(high) = {high}); \
         constitutive data is inconsistent"
    )]
    Inconsistent { low: f64, high: f64 },
    #[error("invalid interface input: {0}")]
    InvalidInput(String),
}

/// Capillary curve extended to a monotone graph.
#[derive(Debug, Clone)]
pub struct MonotoneGraph {
    curve: CapillaryCurve,
    alpha: f64,
    beta: f64,
}

impl MonotoneGraph {
    pub fn new(curve: CapillaryCurve) -> Result<Self, CouplingError> {
        let (alpha, beta) = (curve.alpha(), curve.beta());
        if !(alpha < beta) {
            return Err(CouplingError::InvalidInput(format!(
                "graph needs π(0) < π(1), got {alpha} and {beta}"
            )));
        }
        Ok(Self { curve, alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn curve(&self) -> &CapillaryCurve {
        &self.curve
    }

    /// Generalized inverse: 0 below `π(0)`, 1 above `π(1)`, `π⁻¹(p)` between.
    pub fn resolvent(&self, p: f64) -> f64 {
        if p <= self.alpha {
            return 0.0;
        }
        if p >= self.beta {
            return 1.0;
        }
        self.curve.inverse_excess(p - self.alpha)
    }

    /// Whether `p ∈ π̃(u)` up to `tol`.
    pub fn contains(&self, u: f64, p: f64, tol: f64) -> bool {
        if u <= 0.0 {
            p <= self.alpha + tol
        } else if u >= 1.0 {
            p >= self.beta - tol
        } else {
            (self.curve.eval(u) - p).abs() <= tol
        }
    }
}

/// Result of one interface solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceSolve {
    /// Left trace.
    pub c: f64,
    /// Right trace.
    pub d: f64,
    /// A common value of both graphs at `(c, d)`.
    pub p_star: f64,
    /// Interface flux, from the left-side expression.
    pub flux: f64,
}

/// One side of an interface: rock, numerical flux and the cell size used for
/// the half-cell distance to the interface.
#[derive(Debug, Clone, Copy)]
pub struct InterfaceSide<'a> {
    pub rock: &'a RockFunctions,
    pub flux: &'a NumericalFlux,
    pub dx: f64,
}

/// The interface system for fixed rocks and cell sizes.
#[derive(Debug, Clone, Copy)]
pub struct InterfaceProblem<'a> {
    pub left: InterfaceSide<'a>,
    pub right: InterfaceSide<'a>,
}

#[derive(Clone, Copy)]
struct Pressure {
    anchor: f64,
    tau: f64,
}

#[inline]
fn resolvent_at(curve: &CapillaryCurve, alpha: f64, p: Pressure) -> f64 {
    curve.inverse_excess((p.anchor - alpha) + p.tau)
}

impl<'a> InterfaceProblem<'a> {
    pub fn new(left: InterfaceSide<'a>, right: InterfaceSide<'a>) -> Self {
        Self { left, right }
    }

    /// Left-side flux expression `G₁(a,c) − 2(ϕ₁(c) − ϕ₁(a))/δx₁`.
    #[inline]
    pub fn left_flux(&self, a: f64, c: f64) -> f64 {
        let l = &self.left;
        l.flux.eval(a, c) - 2.0 * (l.rock.phi(c) - l.rock.phi(a)) / l.dx
    }

    /// Right-side flux expression `G₂(d,b) − 2(ϕ₂(b) − ϕ₂(d))/δx₂`.
    #[inline]
    pub fn right_flux(&self, d: f64, b: f64) -> f64 {
        let r = &self.right;
        r.flux.eval(d, b) - 2.0 * (r.rock.phi(b) - r.rock.phi(d)) / r.dx
    }

    fn traces(&self, p: Pressure) -> (f64, f64) {
        let (lc, rc) = (self.left.rock.pi_curve(), self.right.rock.pi_curve());
        (
            resolvent_at(lc, lc.alpha(), p),
            resolvent_at(rc, rc.alpha(), p),
        )
    }

    fn lambda_at(&self, a: f64, b: f64, p: Pressure) -> (f64, f64, f64) {
        let (c, d) = self.traces(p);
        (self.right_flux(d, b) - self.left_flux(a, c), c, d)
    }

    /// `Λ(p) = G₂(π̃₂⁻¹(p), b) − G₁(a, π̃₁⁻¹(p)) + 2/δx₁·(ϕ₁∘π̃₁⁻¹(p) − ϕ₁(a))
    /// + 2/δx₂·(ϕ₂∘π̃₂⁻¹(p) − ϕ₂(b))`.
    pub fn lambda(&self, a: f64, b: f64, p: f64) -> f64 {
        self.lambda_at(a, b, Pressure { anchor: p, tau: 0.0 }).0
    }

    /// Sorted kinks of `Λ` framed by the initial bracket
    /// `[min πᵢ(0) − 1, max πᵢ(1) + 1]`.
    fn breakpoints(&self) -> ([f64; 6], usize) {
        let (a1, b1) = self.left.rock.pi_range();
        let (a2, b2) = self.right.rock.pi_range();
        let mut k = [a1, b1, a2, b2];
        k.sort_by(f64::total_cmp);
        let mut pts = [0.0; 6];
        pts[0] = a1.min(a2) - 1.0;
        let mut n = 1;
        for v in k {
            if v > pts[n - 1] {
                pts[n] = v;
                n += 1;
            }
        }
        pts[n] = b1.max(b2) + 1.0;
        (pts, n + 1)
    }

    /// Solves the transmission system for cell values `a` (left) and `b`
    /// (right).
    pub fn solve(&self, a: f64, b: f64) -> Result<InterfaceSolve, CouplingError> {
        if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
            return Err(CouplingError::InvalidInput(format!(
                "cell saturations must lie in [0, 1], got a = {a}, b = {b}"
            )));
        }
        if !(self.left.dx > 0.0 && self.right.dx > 0.0) {
            return Err(CouplingError::InvalidInput("cell sizes must be positive".into()));
        }
        let (pts, n) = self.breakpoints();
        let at = |anchor: f64, tau: f64| self.lambda_at(a, b, Pressure { anchor, tau });
        let (low, ..) = at(pts[0], 0.0);
        let (high, ..) = at(pts[n - 1], 0.0);
        if low > LAMBDA_TOL || high < -LAMBDA_TOL {
            return Err(CouplingError::Inconsistent { low, high });
        }
        // first kink where Λ turns nonnegative
        let mut seg = n - 2;
        let mut prev = low;
        for (k, &p) in pts.iter().enumerate().take(n).skip(1) {
            let (v, c, d) = at(p, 0.0);
            if v == 0.0 || (prev <= 0.0 && v == 0.0) {
                return Ok(self.finish(a, c, d, p));
            }
            if v > 0.0 {
                seg = k - 1;
                break;
            }
            prev = v;
        }
        let anchor = pts[seg];
        let width = pts[seg + 1] - anchor;
        let (mut lo, mut hi) = (0.0_f64, width);
        let mut best = None;
        for _ in 0..MAX_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            if !(mid > lo && mid < hi) {
                break;
            }
            let (v, c, d) = at(anchor, mid);
            if v == 0.0 {
                best = Some((mid, c, d));
                break;
            }
            if v < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (tau, c, d) = best.unwrap_or_else(|| {
            let mid = 0.5 * (lo + hi);
            let (_, c, d) = at(anchor, mid);
            (mid, c, d)
        });
        let solve = self.finish(a, c, d, anchor + tau);
        #[cfg(feature = "interface-audit")]
        assert!(
            self.lambda_is_monotone(a, b, 1000),
            "Λ is not monotone for a = {a}, b = {b}"
        );
        Ok(solve)
    }

    fn finish(&self, a: f64, c: f64, d: f64, p_star: f64) -> InterfaceSolve {
        InterfaceSolve {
            c,
            d,
            p_star,
            flux: self.left_flux(a, c),
        }
    }

    /// Samples `Λ` at `samples` points of the bracket and checks it is
    /// nondecreasing.
    pub fn lambda_is_monotone(&self, a: f64, b: f64, samples: usize) -> bool {
        let (pts, n) = self.breakpoints();
        let (lo, hi) = (pts[0], pts[n - 1]);
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=samples {
            let p = lo + (hi - lo) * k as f64 / samples as f64;
            let v = self.lambda(a, b, p);
            if v < prev - 1e-12 * (1.0 + prev.abs()) {
                return false;
            }
            prev = v;
        }
        true
    }

    /// Difference between the two flux expressions at a solution.
    pub fn flux_mismatch(&self, a: f64, b: f64, s: &InterfaceSolve) -> f64 {
        self.left_flux(a, s.c) - self.right_flux(s.d, b)
    }

    /// Graph condition `π̃₁(c) ∩ π̃₂(d) ∋ p⋆` up to `tol`.
    pub fn graph_condition_holds(&self, s: &InterfaceSolve, tol: f64) -> bool {
        let g1 = graph_of(self.left.rock);
        let g2 = graph_of(self.right.rock);
        g1.contains(s.c, s.p_star, tol) && g2.contains(s.d, s.p_star, tol)
    }
}

fn graph_of(rock: &RockFunctions) -> MonotoneGraph {
    let (alpha, beta) = rock.pi_range();
    MonotoneGraph {
        curve: rock.pi_curve().clone(),
        alpha,
        beta,
    }
}

/// Solves the interface system between `left` and `right` rocks.
#[allow(clippy::too_many_arguments)]
pub fn solve_interface(
    left: &RockFunctions,
    right: &RockFunctions,
    gl: &NumericalFlux,
    gr: &NumericalFlux,
    a: f64,
    b: f64,
    dx_left: f64,
    dx_right: f64,
) -> Result<InterfaceSolve, CouplingError> {
    InterfaceProblem::new(
        InterfaceSide {
            rock: left,
            flux: gl,
            dx: dx_left,
        },
        InterfaceSide {
            rock: right,
            flux: gr,
            dx: dx_right,
        },
    )
    .solve(a, b)
}
