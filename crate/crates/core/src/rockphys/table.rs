//! Tabulated monotone transforms.
//!
//! Kirchhoff-type transforms `s ↦ ∫₀ˢ w(a) da` with a nonnegative weight are
//! tabulated on a uniform grid of `[0, 1]`. Each subinterval is integrated by
//! adaptive Simpson; values between nodes come from a Hermite cubic whose
//! node slopes are the exact integrand values, limited with the
//! Fritsch–Carlson conditions so the interpolant stays monotone.

use super::{MonotoneFn, RockError};

/// Default number of tabulation nodes, `2¹² + 1`.
pub const DEFAULT_TABLE_NODES: usize = (1 << 12) + 1;

/// Relative tolerance of the per-subinterval adaptive quadrature.
pub const QUADRATURE_REL_TOL: f64 = 1e-10;

const MAX_SIMPSON_DEPTH: u32 = 50;

/// Which Kirchhoff transform to tabulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformKind {
    /// `ϕ(s) = ∫₀ˢ λ π′`
    Phi,
    /// `ξ(s) = ∫₀ˢ √λ π′`
    Xi,
}

/// Piecewise-cubic monotone interpolant of a nondecreasing function on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct MonotoneTable {
    step: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneTable {
    /// Builds a table from nodal values and (unlimited) nodal derivatives on a
    /// uniform grid of `[0, 1]`. Values must be nondecreasing.
    pub fn from_nodes(values: Vec<f64>, derivatives: Vec<f64>) -> Result<Self, RockError> {
        let n = values.len();
        if n < 2 || derivatives.len() != n {
            return Err(RockError::validation(
                "table needs at least two nodes and one derivative per node",
            ));
        }
        if let Some(k) = values.windows(2).position(|w| w[1] < w[0]) {
            return Err(RockError::validation(format!(
                "tabulated values decrease between nodes {k} and {}",
                k + 1
            )));
        }
        if derivatives.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
            return Err(RockError::validation(
                "tabulated derivatives must be finite and nonnegative",
            ));
        }
        let step = 1.0 / (n - 1) as f64;
        let mut slopes = derivatives;
        for k in 0..n - 1 {
            let secant = (values[k + 1] - values[k]) / step;
            if secant == 0.0 {
                slopes[k] = 0.0;
                slopes[k + 1] = 0.0;
                continue;
            }
            let a = slopes[k] / secant;
            let b = slopes[k + 1] / secant;
            let r2 = a * a + b * b;
            if r2 > 9.0 {
                let tau = 3.0 / r2.sqrt();
                slopes[k] = tau * a * secant;
                slopes[k + 1] = tau * b * secant;
            }
        }
        Ok(Self {
            step,
            values,
            slopes,
        })
    }

    pub fn nodes(&self) -> usize {
        self.values.len()
    }

    /// Nodal values, nondecreasing by construction.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, s: f64) -> f64 {
        let n = self.values.len();
        if !(s > 0.0) {
            return self.values[0];
        }
        if s >= 1.0 {
            return self.values[n - 1];
        }
        let pos = s / self.step;
        let k = (pos.floor() as usize).min(n - 2);
        let t = pos - k as f64;
        if t == 0.0 {
            return self.values[k];
        }
        let h = self.step;
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let (m0, m1) = (self.slopes[k] * h, self.slopes[k + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let v = h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1;
        // Rounding can push the cubic a hair outside the node interval.
        v.clamp(y0, y1)
    }
}

impl MonotoneFn for MonotoneTable {
    fn eval(&self, s: f64) -> f64 {
        MonotoneTable::eval(self, s)
    }
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to relative tolerance
/// `rel_tol`. Returns an error if a negative integrand value is sampled.
pub fn adaptive_simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    rel_tol: f64,
) -> Result<f64, RockError> {
    let mut negative = None;
    let mut eval = |x: f64| {
        let v = f(x);
        if v < 0.0 || v.is_nan() {
            negative.get_or_insert(x);
        }
        v
    };
    let fa = eval(a);
    let fb = eval(b);
    let m = 0.5 * (a + b);
    let fm = eval(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let value = simpson_step(&mut eval, a, b, fa, fm, fb, whole, rel_tol, MAX_SIMPSON_DEPTH);
    match negative {
        Some(x) => Err(RockError::validation(format!(
            "negative or undefined integrand at s = {x}"
        ))),
        None => Ok(value),
    }
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &mut dyn FnMut(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    rel_tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let refined = left + right;
    let delta = refined - whole;
    if depth == 0 || delta.abs() <= 15.0 * rel_tol * refined.abs() {
        return refined + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, rel_tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, rel_tol, depth - 1)
}

/// Tabulates `ϕ = ∫λπ′` or `ξ = ∫√λ π′` on `nodes` uniform nodes of `[0, 1]`.
pub fn transform_tabulate(
    lambda: &dyn Fn(f64) -> f64,
    pi_derivative: &dyn Fn(f64) -> f64,
    kind: TransformKind,
    nodes: usize,
) -> Result<MonotoneTable, RockError> {
    if nodes < 2 {
        return Err(RockError::validation("tabulation needs at least two nodes"));
    }
    let integrand = |s: f64| -> f64 {
        let l = lambda(s);
        let dp = pi_derivative(s);
        match kind {
            TransformKind::Phi => l * dp,
            // tiny negative mobility products from rounding are clipped here;
            // genuinely negative λ is caught by the rock validation.
            TransformKind::Xi => l.max(0.0).sqrt() * dp,
        }
    };
    let h = 1.0 / (nodes - 1) as f64;
    let mut values = Vec::with_capacity(nodes);
    let mut derivs = Vec::with_capacity(nodes);
    let mut acc = 0.0;
    values.push(0.0);
    for k in 0..nodes {
        let s = k as f64 * h;
        let d = integrand(s);
        if d < 0.0 || !d.is_finite() {
            return Err(RockError::validation(format!(
                "transform integrand is negative or undefined at s = {s}"
            )));
        }
        derivs.push(d);
        if k + 1 < nodes {
            let a = s;
            let b = if k + 2 == nodes { 1.0 } else { (k + 1) as f64 * h };
            acc += adaptive_simpson(&integrand, a, b, QUADRATURE_REL_TOL)?;
            values.push(acc);
        }
    }
    MonotoneTable::from_nodes(values, derivs)
}
