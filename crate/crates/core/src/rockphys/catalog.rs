//! Closed-form rock families.
//!
//! Capillary pressures of the form `π(u) = α + β·uᵏ` and the mobility shape
//! `λ(u) = K·u²(1−u²)/(1−2u+2u²)`. For an integer exponent the Kirchhoff
//! transform `K·β·k·∫₀ˢ a^{k−1}·λ̂(a) da` of this pair has an elementary
//! antiderivative (polynomial part plus `ln` and `atan` terms), which is used
//! instead of a table.

use std::sync::OnceLock;

use super::{MonotoneFn, RockError};

/// `π(u) = offset + amplitude·u^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw {
    pub offset: f64,
    pub amplitude: f64,
    pub exponent: f64,
}

impl PowerLaw {
    pub fn new(offset: f64, amplitude: f64, exponent: f64) -> Result<Self, RockError> {
        if !(amplitude > 0.0) || !amplitude.is_finite() || !offset.is_finite() {
            return Err(RockError::validation(
                "power-law capillary pressure needs a finite offset and positive amplitude",
            ));
        }
        // exponent < 1 would make π non-Lipschitz at 0
        if !(exponent >= 1.0) || !exponent.is_finite() {
            return Err(RockError::validation(
                "power-law capillary pressure exponent must be at least 1",
            ));
        }
        Ok(Self {
            offset,
            amplitude,
            exponent,
        })
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        self.offset + self.amplitude * pow(u, self.exponent)
    }

    #[inline]
    pub fn derivative(&self, u: f64) -> f64 {
        self.amplitude * self.exponent * pow(u, self.exponent - 1.0)
    }

    /// Inverse expressed through the excess `p − offset`, which callers can
    /// form without cancellation when `p` sits just above the offset.
    #[inline]
    pub fn inverse_excess(&self, excess: f64) -> f64 {
        if !(excess > 0.0) {
            return 0.0;
        }
        let r = excess / self.amplitude;
        if r >= 1.0 {
            return 1.0;
        }
        r.powf(1.0 / self.exponent)
    }

    /// Integer value of the exponent, if it is one.
    pub fn integer_exponent(&self) -> Option<u32> {
        let k = self.exponent;
        (k.fract() == 0.0 && (1.0..=64.0).contains(&k)).then_some(k as u32)
    }
}

#[inline]
pub(crate) fn pow(u: f64, k: f64) -> f64 {
    if k == 0.0 {
        return 1.0;
    }
    if u <= 0.0 {
        return 0.0;
    }
    if k.fract() == 0.0 && k.abs() <= 64.0 {
        u.powi(k as i32)
    } else {
        u.powf(k)
    }
}

/// The dimensionless mobility shape `u²(1−u²)/(1−2u+2u²)`.
#[inline]
pub fn rational_shape(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    let u2 = u * u;
    u2 * (1.0 - u2) / (1.0 - 2.0 * u + 2.0 * u2)
}

/// Oil mobility whose harmonic combination with [`rational_water_mobility`]
/// reproduces [`rational_shape`]: `2u²(1+u)/(2−2u+u²)`.
pub fn rational_oil_mobility(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    2.0 * u * u * (1.0 + u) / (2.0 - 2.0 * u + u * u)
}

/// Water mobility `2(1−u)`.
pub fn rational_water_mobility(u: f64) -> f64 {
    2.0 * (1.0 - u.clamp(0.0, 1.0))
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

const SMALL_S_BRANCH: f64 = 0.3;
const SMALL_S_POINTS: usize = 24;

fn small_s_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(SMALL_S_POINTS))
}

/// Closed-form `ϕ(s) = scale·∫₀ˢ rational_shape(a)·π′(a) da` for
/// `π(a) = α + β·aᵏ` with integer `k`.
///
/// Below `s = 0.3` the antiderivative loses relative accuracy to
/// cancellation, so a 24-point Gauss–Legendre rule on `[0, s]` is used there;
/// the integrand is analytic with poles at `(1 ± i)/2`, so that rule is exact
/// to rounding.
#[derive(Debug, Clone)]
pub struct RationalShapeKirchhoff {
    factor: f64,
    exponent: u32,
    quotient_antiderivative: Vec<f64>,
    log_coef: f64,
    atan_coef: f64,
}

impl RationalShapeKirchhoff {
    pub fn new(scale: f64, pi: &PowerLaw) -> Option<Self> {
        let k = pi.integer_exponent()?;
        let k_us = k as usize;
        // numerator a^{k+1} − a^{k+3}
        let deg = k_us + 3;
        let mut rem = vec![0.0; deg + 1];
        rem[k_us + 1] = 1.0;
        rem[k_us + 3] = -1.0;
        let mut quotient = vec![0.0; deg - 1];
        // divide by 2a² − 2a + 1
        for d in (2..=deg).rev() {
            let c = rem[d] / 2.0;
            quotient[d - 2] = c;
            rem[d] = 0.0;
            rem[d - 1] += 2.0 * c;
            rem[d - 2] -= c;
        }
        let (r0, r1) = (rem[0], rem[1]);
        let quotient_antiderivative = quotient
            .iter()
            .enumerate()
            .map(|(i, q)| q / (i + 1) as f64)
            .collect();
        Some(Self {
            factor: scale * pi.amplitude * k as f64,
            exponent: k,
            quotient_antiderivative,
            log_coef: r1 / 4.0,
            atan_coef: r0 + r1 / 2.0,
        })
    }

    fn integrand(&self, a: f64) -> f64 {
        let a2 = a * a;
        a.powi(self.exponent as i32 + 1) * (1.0 - a2) / (1.0 - 2.0 * a + 2.0 * a2)
    }

    pub fn eval(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, 1.0);
        if s == 0.0 {
            return 0.0;
        }
        let raw = if s < SMALL_S_BRANCH {
            let (x, w) = small_s_rule();
            let half = 0.5 * s;
            x.iter()
                .zip(w)
                .map(|(xi, wi)| wi * self.integrand(half * (xi + 1.0)))
                .sum::<f64>()
                * half
        } else {
            let poly = self
                .quotient_antiderivative
                .iter()
                .rev()
                .fold(0.0, |acc, c| acc * s + c)
                * s;
            let d = 1.0 - 2.0 * s + 2.0 * s * s;
            poly + self.log_coef * d.ln()
                + self.atan_coef * ((2.0 * s - 1.0).atan() + std::f64::consts::FRAC_PI_4)
        };
        self.factor * raw
    }
}

impl MonotoneFn for RationalShapeKirchhoff {
    fn eval(&self, s: f64) -> f64 {
        RationalShapeKirchhoff::eval(self, s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_mobilities_reproduce_shape() {
        for k in 0..=1000 {
            let u = k as f64 / 1000.0;
            let (o, w) = (rational_oil_mobility(u), rational_water_mobility(u));
            let lam = if o + w > 0.0 { o * w / (o + w) } else { 0.0 };
            assert!((lam - rational_shape(u)).abs() < 1e-15, "u={u}");
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((v - 2.0 / 19.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn branches_agree_at_switch() {
        let pi = PowerLaw::new(0.0, 1.0, 5.0).unwrap();
        let k = RationalShapeKirchhoff::new(10.0, &pi).unwrap();
        let s = SMALL_S_BRANCH;
        let below = k.eval(s - 1e-12);
        let above = k.eval(s);
        // the closed form carries an absolute rounding error of order eps·ϕ(1)
        assert!((above - below).abs() <= 1e-13 * k.eval(1.0), "{above} vs {below}");
    }

    #[test]
    fn inverse_excess_round_trips() {
        let pi = PowerLaw::new(0.5, 1.0, 5.0).unwrap();
        for k in 0..=100 {
            let u = k as f64 / 100.0;
            let back = pi.inverse_excess(pi.amplitude * u.powi(5));
            assert!((back - u).abs() < 1e-12);
        }
    }
}
