//! Constitutive functions of a single rock type.
//!
//! A [`RockFunctions`] bundle carries, for one layer, the capillary pressure
//! `π`, the convective flux `f`, the mobility product `λ = μₒμ_w/(μₒ+μ_w)`, and
//! the two Kirchhoff transforms `ϕ = ∫λπ′` and `ξ = ∫√λ π′`. Bundles are
//! immutable once built and can be shared across threads.

pub mod catalog;
pub mod table;

use std::fmt;
use std::sync::Arc;

use catalog::pow as catalog_pow;
pub use catalog::{rational_shape, RationalShapeKirchhoff, PowerLaw};
pub use table::{transform_tabulate, MonotoneTable, TransformKind, DEFAULT_TABLE_NODES};

/// Shared scalar function on `[0, 1]`.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Sampling resolution used by validation and Lipschitz estimates.
pub const SAMPLE_POINTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RockError {
    #[error("constitutive validation failed: {0}")]
    Validation(String),
    #[error("value {y} outside the range [{lo}, {hi}] of the monotone function")]
    Range { y: f64, lo: f64, hi: f64 },
}

impl RockError {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        RockError::Validation(msg.into())
    }
}

/// A nondecreasing function of saturation on `[0, 1]`.
pub trait MonotoneFn: Send + Sync {
    fn eval(&self, s: f64) -> f64;

    fn range(&self) -> (f64, f64) {
        (self.eval(0.0), self.eval(1.0))
    }

    fn inverse(&self, y: f64) -> Result<f64, RockError> {
        invert_monotone(self, y)
    }
}

/// Bisection inverse of a strictly increasing function on `[0, 1]`.
///
/// Values outside the range are an error; clamping belongs to the graph
/// resolvent, not here.
pub fn invert_monotone<F: MonotoneFn + ?Sized>(f: &F, y: f64) -> Result<f64, RockError> {
    let (lo_v, hi_v) = f.range();
    if !(y >= lo_v && y <= hi_v) {
        return Err(RockError::Range {
            y,
            lo: lo_v,
            hi: hi_v,
        });
    }
    if y == lo_v {
        return Ok(0.0);
    }
    if y == hi_v {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f.eval(mid);
        if v == y {
            return Ok(mid);
        }
        if v < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (el, eh) = ((f.eval(lo) - y).abs(), (f.eval(hi) - y).abs());
    Ok(if el <= eh { lo } else { hi })
}

/// Capillary pressure curve.
#[derive(Clone)]
pub enum CapillaryCurve {
    PowerLaw(PowerLaw),
    /// User-supplied strictly increasing curve with its derivative.
    Custom { value: ScalarFn, derivative: ScalarFn },
}

impl fmt::Debug for CapillaryCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CapillaryCurve::PowerLaw(p) => f.debug_tuple("PowerLaw").field(p).finish(),
            CapillaryCurve::Custom { .. } => f.write_str("Custom"),
        }
    }
}

impl CapillaryCurve {
    pub fn power_law(offset: f64, amplitude: f64, exponent: f64) -> Result<Self, RockError> {
        PowerLaw::new(offset, amplitude, exponent).map(CapillaryCurve::PowerLaw)
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            CapillaryCurve::PowerLaw(p) => p.eval(u),
            CapillaryCurve::Custom { value, .. } => value(u),
        }
    }

    #[inline]
    pub fn derivative(&self, u: f64) -> f64 {
        match self {
            CapillaryCurve::PowerLaw(p) => p.derivative(u),
            CapillaryCurve::Custom { derivative, .. } => derivative(u),
        }
    }

    /// `π(u) − π(0)`, free of cancellation for power laws.
    #[inline]
    pub fn excess(&self, u: f64) -> f64 {
        match self {
            CapillaryCurve::PowerLaw(p) => p.amplitude * catalog_pow(u, p.exponent),
            CapillaryCurve::Custom { value, .. } => value(u) - value(0.0),
        }
    }

    /// `π(0)`.
    pub fn alpha(&self) -> f64 {
        self.eval(0.0)
    }

    /// `π(1)`.
    pub fn beta(&self) -> f64 {
        self.eval(1.0)
    }

    /// Inverse evaluated from the excess `p − π(0)`; `excess ≤ 0` maps to 0
    /// and `excess ≥ π(1) − π(0)` maps to 1.
    pub fn inverse_excess(&self, excess: f64) -> f64 {
        match self {
            CapillaryCurve::PowerLaw(p) => p.inverse_excess(excess),
            CapillaryCurve::Custom { .. } => {
                let (a, b) = (self.alpha(), self.beta());
                if !(excess > 0.0) {
                    return 0.0;
                }
                if excess >= b - a {
                    return 1.0;
                }
                invert_monotone(self, a + excess).unwrap_or(if excess > 0.0 { 1.0 } else { 0.0 })
            }
        }
    }
}

impl MonotoneFn for CapillaryCurve {
    fn eval(&self, s: f64) -> f64 {
        CapillaryCurve::eval(self, s)
    }

    fn inverse(&self, y: f64) -> Result<f64, RockError> {
        let (a, b) = (self.alpha(), self.beta());
        if !(y >= a && y <= b) {
            return Err(RockError::Range { y, lo: a, hi: b });
        }
        match self {
            CapillaryCurve::PowerLaw(p) => Ok(p.inverse_excess(y - p.offset)),
            CapillaryCurve::Custom { .. } => invert_monotone(self, y),
        }
    }
}

/// Oil and water phase mobilities.
#[derive(Clone)]
pub struct MobilityPair {
    pub oil: ScalarFn,
    pub water: ScalarFn,
    /// Declared Lipschitz constant for both mobilities.
    pub lipschitz: f64,
}

impl fmt::Debug for MobilityPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MobilityPair")
            .field("lipschitz", &self.lipschitz)
            .finish_non_exhaustive()
    }
}

impl MobilityPair {
    pub fn new(oil: ScalarFn, water: ScalarFn, lipschitz: f64) -> Self {
        Self {
            oil,
            water,
            lipschitz,
        }
    }

    /// Mobilities `K·2u²(1+u)/(2−2u+u²)` and `K·2(1−u)`, whose mobility
    /// product is `K·u²(1−u²)/(1−2u+2u²)`.
    pub fn rational_shape(scale: f64) -> Self {
        Self {
            oil: Arc::new(move |u| scale * catalog::rational_oil_mobility(u)),
            water: Arc::new(move |u| scale * catalog::rational_water_mobility(u)),
            // oil slope peaks at 10 (u = 1), water slope is 2
            lipschitz: 10.0 * scale,
        }
    }

    /// Corey-type mobilities `k_o·u^{n_o}` and `k_w·(1−u)^{n_w}`.
    pub fn corey(oil_scale: f64, oil_exp: f64, water_scale: f64, water_exp: f64) -> Self {
        let lip = oil_scale * oil_exp.max(1.0) + water_scale * water_exp.max(1.0);
        Self {
            oil: Arc::new(move |u| oil_scale * u.clamp(0.0, 1.0).powf(oil_exp)),
            water: Arc::new(move |u| water_scale * (1.0 - u.clamp(0.0, 1.0)).powf(water_exp)),
            lipschitz: lip,
        }
    }

    /// Checks the monotonicity, endpoint and Lipschitz requirements by
    /// sampling.
    pub fn validate(&self) -> Result<(), RockError> {
        let n = SAMPLE_POINTS;
        let h = 1.0 / n as f64;
        if (self.oil)(0.0) != 0.0 {
            return Err(RockError::validation("oil mobility must vanish at u = 0"));
        }
        if (self.water)(1.0) != 0.0 {
            return Err(RockError::validation("water mobility must vanish at u = 1"));
        }
        let mut prev_o = (self.oil)(0.0);
        let mut prev_w = (self.water)(0.0);
        for k in 1..=n {
            let u = k as f64 * h;
            let (o, w) = ((self.oil)(u), (self.water)(u));
            if !(o.is_finite() && w.is_finite() && o >= 0.0 && w >= 0.0) {
                return Err(RockError::validation(format!(
                    "mobilities must be finite and nonnegative (u = {u})"
                )));
            }
            if o < prev_o {
                return Err(RockError::validation(format!(
                    "oil mobility decreases near u = {u}"
                )));
            }
            if w > prev_w {
                return Err(RockError::validation(format!(
                    "water mobility increases near u = {u}"
                )));
            }
            let slope = ((o - prev_o) / h).max((prev_w - w) / h);
            if slope > self.lipschitz * (1.0 + 1e-9) {
                return Err(RockError::validation(format!(
                    "mobility difference quotient {slope} exceeds declared Lipschitz constant {}",
                    self.lipschitz
                )));
            }
            prev_o = o;
            prev_w = w;
        }
        Ok(())
    }
}

/// How the Kirchhoff transform `ϕ` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KirchhoffMode {
    /// Closed form when the catalog admits one, otherwise a table.
    #[default]
    Auto,
    /// Always tabulate.
    Tabulated,
}

/// The Kirchhoff transform `ϕ`.
#[derive(Debug, Clone)]
pub enum Kirchhoff {
    ClosedForm(RationalShapeKirchhoff),
    Tabulated(MonotoneTable),
}

impl Kirchhoff {
    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            Kirchhoff::ClosedForm(k) => k.eval(s),
            Kirchhoff::Tabulated(t) => t.eval(s),
        }
    }

    pub fn is_closed_form(&self) -> bool {
        matches!(self, Kirchhoff::ClosedForm(_))
    }
}

impl MonotoneFn for Kirchhoff {
    fn eval(&self, s: f64) -> f64 {
        Kirchhoff::eval(self, s)
    }
}

/// Sampled Lipschitz constants (max difference quotient over 10⁴ intervals).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzBounds {
    pub f: f64,
    pub phi: f64,
    pub pi: f64,
}

/// Max sampled difference quotient of `g` on `[0, 1]`.
pub fn sampled_lipschitz(g: &dyn Fn(f64) -> f64) -> f64 {
    let h = 1.0 / SAMPLE_POINTS as f64;
    let mut prev = g(0.0);
    let mut best = 0.0_f64;
    for k in 1..=SAMPLE_POINTS {
        let v = g(k as f64 * h);
        best = best.max((v - prev).abs() / h);
        prev = v;
    }
    best
}

/// Constitutive bundle of one rock type.
#[derive(Clone)]
pub struct RockFunctions {
    name: String,
    porosity: f64,
    total_rate: f64,
    gravity_drive: f64,
    pi: CapillaryCurve,
    lambda: ScalarFn,
    flux: ScalarFn,
    phi: Kirchhoff,
    xi: MonotoneTable,
    lipschitz: LipschitzBounds,
}

impl fmt::Debug for RockFunctions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RockFunctions")
            .field("name", &self.name)
            .field("porosity", &self.porosity)
            .field("total_rate", &self.total_rate)
            .field("gravity_drive", &self.gravity_drive)
            .field("pi", &self.pi)
            .field("closed_form_phi", &self.phi.is_closed_form())
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

/// Assembles `f(u) = μₒ/(μₒ+μ_w)·q + λ(u)·g` and tabulates `ϕ`, `ξ`.
///
/// `gravity_drive` is the product `(ρₒ − ρ_w)·g` with the sign convention of
/// the transport equation (positive drives oil towards increasing `x`).
pub fn build_from_mobilities(
    name: &str,
    mob: &MobilityPair,
    pi: CapillaryCurve,
    porosity: f64,
    total_rate: f64,
    gravity_drive: f64,
) -> Result<RockFunctions, RockError> {
    mob.validate()?;
    let (oil, water) = (mob.oil.clone(), mob.water.clone());
    let lambda: ScalarFn = Arc::new(move |u| {
        let (o, w) = (oil(u), water(u));
        let sum = o + w;
        if sum > 0.0 {
            o * w / sum
        } else {
            0.0
        }
    });
    RockFunctions::assemble(
        name,
        Some(mob),
        lambda,
        pi,
        porosity,
        total_rate,
        gravity_drive,
        None,
    )
}

impl RockFunctions {
    /// Catalog rock with mobility product `scale·u²(1−u²)/(1−2u+2u²)` and a
    /// power-law capillary pressure. With `KirchhoffMode::Auto` and an
    /// integer exponent, `ϕ` is evaluated in closed form.
    pub fn rational_shape(
        name: &str,
        scale: f64,
        pi: PowerLaw,
        porosity: f64,
        total_rate: f64,
        gravity_drive: f64,
        mode: KirchhoffMode,
    ) -> Result<Self, RockError> {
        if !(scale > 0.0) {
            return Err(RockError::validation("mobility scale must be positive"));
        }
        let mob = MobilityPair::rational_shape(scale);
        mob.validate()?;
        let lambda: ScalarFn = Arc::new(move |u| scale * rational_shape(u));
        let closed = match mode {
            KirchhoffMode::Auto => RationalShapeKirchhoff::new(scale, &pi),
            KirchhoffMode::Tabulated => None,
        };
        Self::assemble(
            name,
            Some(&mob),
            lambda,
            CapillaryCurve::PowerLaw(pi),
            porosity,
            total_rate,
            gravity_drive,
            closed,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        name: &str,
        mob: Option<&MobilityPair>,
        lambda: ScalarFn,
        pi: CapillaryCurve,
        porosity: f64,
        total_rate: f64,
        gravity_drive: f64,
        closed_phi: Option<RationalShapeKirchhoff>,
    ) -> Result<Self, RockError> {
        if !(porosity > 0.0 && porosity < 1.0) {
            return Err(RockError::validation(format!(
                "porosity {porosity} outside (0, 1)"
            )));
        }
        if !total_rate.is_finite() || !gravity_drive.is_finite() {
            return Err(RockError::validation("total rate and gravity drive must be finite"));
        }
        let flux: ScalarFn = match (mob, total_rate) {
            (Some(m), q) if q != 0.0 => {
                let (oil, water, lam) = (m.oil.clone(), m.water.clone(), lambda.clone());
                Arc::new(move |u| {
                    let u = u.clamp(0.0, 1.0);
                    let (o, w) = (oil(u), water(u));
                    let frac = if o + w > 0.0 { o / (o + w) } else { 0.0 };
                    frac * q + lam(u) * gravity_drive
                })
            }
            _ => {
                let lam = lambda.clone();
                Arc::new(move |u| lam(u.clamp(0.0, 1.0)) * gravity_drive)
            }
        };
        let pi_for_tab = pi.clone();
        let dpi = move |s: f64| pi_for_tab.derivative(s);
        let phi = match closed_phi {
            Some(k) => Kirchhoff::ClosedForm(k),
            None => Kirchhoff::Tabulated(transform_tabulate(
                &*lambda,
                &dpi,
                TransformKind::Phi,
                DEFAULT_TABLE_NODES,
            )?),
        };
        let xi = transform_tabulate(&*lambda, &dpi, TransformKind::Xi, DEFAULT_TABLE_NODES)?;
        let lipschitz = LipschitzBounds {
            f: sampled_lipschitz(&*flux),
            phi: sampled_lipschitz(&|s| phi.eval(s)),
            pi: sampled_lipschitz(&|s| pi.eval(s)),
        };
        let rock = Self {
            name: name.to_string(),
            porosity,
            total_rate,
            gravity_drive,
            pi,
            lambda,
            flux,
            phi,
            xi,
            lipschitz,
        };
        rock.validate()?;
        Ok(rock)
    }

    /// Sampled checks of the constitutive invariants.
    pub fn validate(&self) -> Result<(), RockError> {
        let n = SAMPLE_POINTS;
        let h = 1.0 / n as f64;
        let mut prev_pi = self.pi.excess(0.0);
        let mut prev_phi = self.phi.eval(0.0);
        for k in 1..=n {
            let u = k as f64 * h;
            let p = self.pi.excess(u);
            if !(p > prev_pi) {
                return Err(RockError::validation(format!(
                    "capillary pressure not strictly increasing near u = {u}"
                )));
            }
            prev_pi = p;
            let ph = self.phi.eval(u);
            if ph < prev_phi {
                return Err(RockError::validation(format!(
                    "Kirchhoff transform decreases near u = {u}"
                )));
            }
            prev_phi = ph;
            if k < n {
                let l = (self.lambda)(u);
                if !(l > 0.0) {
                    return Err(RockError::validation(format!(
                        "mobility product must be positive inside (0, 1); λ({u}) = {l}"
                    )));
                }
            }
        }
        let (l0, l1) = ((self.lambda)(0.0), (self.lambda)(1.0));
        if l0 != 0.0 || l1 != 0.0 {
            return Err(RockError::validation(format!(
                "mobility product must vanish at both ends (λ(0) = {l0}, λ(1) = {l1})"
            )));
        }
        if self.phi.eval(0.0) != 0.0 || self.xi.eval(0.0) != 0.0 {
            return Err(RockError::validation("transforms must vanish at 0"));
        }
        if !(self.phi.eval(1.0) > 0.0 && self.xi.eval(1.0) > 0.0) {
            return Err(RockError::validation("transforms must be increasing"));
        }
        let (f0, f1) = (self.f(0.0), self.f(1.0));
        if f0 != 0.0 || (f1 - self.total_rate).abs() > 1e-14 * self.total_rate.abs() {
            return Err(RockError::validation(format!(
                "convective flux must satisfy f(0) = 0 and f(1) = q (got {f0}, {f1})"
            )));
        }
        // Cauchy–Schwarz chain on a coarse grid of pairs
        let m = 64;
        for i in 0..=m {
            for j in 0..i {
                let (a, b) = (i as f64 / m as f64, j as f64 / m as f64);
                let lhs = (self.pi(a) - self.pi(b)) * (self.phi(a) - self.phi(b));
                let rhs = (self.xi(a) - self.xi(b)).powi(2);
                if lhs < rhs - 1e-12 * (1.0 + rhs) {
                    return Err(RockError::validation(format!(
                        "(π(a)−π(b))(ϕ(a)−ϕ(b)) < (ξ(a)−ξ(b))² at a = {a}, b = {b}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn porosity(&self) -> f64 {
        self.porosity
    }

    /// Total flow rate `q`.
    pub fn total_rate(&self) -> f64 {
        self.total_rate
    }

    pub fn gravity_drive(&self) -> f64 {
        self.gravity_drive
    }

    #[inline]
    pub fn pi(&self, u: f64) -> f64 {
        self.pi.eval(u)
    }

    pub fn pi_curve(&self) -> &CapillaryCurve {
        &self.pi
    }

    /// `[π(0), π(1)]`.
    pub fn pi_range(&self) -> (f64, f64) {
        (self.pi.alpha(), self.pi.beta())
    }

    #[inline]
    pub fn f(&self, u: f64) -> f64 {
        (self.flux)(u)
    }

    pub fn flux_fn(&self) -> ScalarFn {
        self.flux.clone()
    }

    #[inline]
    pub fn lambda(&self, u: f64) -> f64 {
        (self.lambda)(u)
    }

    #[inline]
    pub fn phi(&self, u: f64) -> f64 {
        self.phi.eval(u)
    }

    pub fn kirchhoff(&self) -> &Kirchhoff {
        &self.phi
    }

    #[inline]
    pub fn xi(&self, u: f64) -> f64 {
        self.xi.eval(u)
    }

    pub fn xi_table(&self) -> &MonotoneTable {
        &self.xi
    }

    pub fn lipschitz(&self) -> LipschitzBounds {
        self.lipschitz
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sand() -> RockFunctions {
        RockFunctions::rational_shape(
            "sand",
            10.0,
            PowerLaw::new(0.0, 1.0, 5.0).unwrap(),
            0.5,
            0.0,
            5.0,
            KirchhoffMode::Auto,
        )
        .unwrap()
    }

    #[test]
    fn zero_drive_gives_zero_flux() {
        let mob = MobilityPair::rational_shape(1.0);
        let r = build_from_mobilities(
            "still",
            &mob,
            CapillaryCurve::power_law(0.0, 1.0, 2.0).unwrap(),
            0.3,
            0.0,
            0.0,
        )
        .unwrap();
        for k in 0..=100 {
            assert_eq!(r.f(k as f64 / 100.0), 0.0);
        }
    }

    #[test]
    fn flux_endpoints_with_total_rate() {
        let mob = MobilityPair::corey(1.0, 2.0, 1.0, 2.0);
        let r = build_from_mobilities(
            "corey",
            &mob,
            CapillaryCurve::power_law(0.0, 1.0, 2.0).unwrap(),
            0.3,
            0.7,
            -1.5,
        )
        .unwrap();
        assert_eq!(r.f(0.0), 0.0);
        assert_eq!(r.f(1.0), 0.7);
    }

    #[test]
    fn mobilities_reproduce_closed_form_flux() {
        let mob = MobilityPair::rational_shape(10.0);
        let r = build_from_mobilities(
            "sand",
            &mob,
            CapillaryCurve::power_law(0.0, 1.0, 5.0).unwrap(),
            0.5,
            0.0,
            5.0,
        )
        .unwrap();
        for k in 0..=1000 {
            let u = k as f64 / 1000.0;
            let expect = 50.0 * u * u * (1.0 - u * u) / (1.0 - 2.0 * u + 2.0 * u * u);
            assert!((r.f(u) - expect).abs() <= 1e-12, "u={u}");
        }
    }

    #[test]
    fn closed_form_matches_table() {
        let pi = PowerLaw::new(0.0, 1.0, 5.0).unwrap();
        let closed = sand();
        let tab = RockFunctions::rational_shape("t", 10.0, pi, 0.5, 0.0, 5.0, KirchhoffMode::Tabulated)
            .unwrap();
        assert!(closed.kirchhoff().is_closed_form());
        assert!(!tab.kirchhoff().is_closed_form());
        for k in 0..=997 {
            let u = k as f64 / 997.0;
            assert!((closed.phi(u) - tab.phi(u)).abs() < 1e-11, "u={u}");
        }
    }

    #[test]
    fn decreasing_oil_mobility_rejected() {
        let mob = MobilityPair::new(Arc::new(|u| u * (1.0 - u)), Arc::new(|u| 1.0 - u), 2.0);
        assert!(matches!(mob.validate(), Err(RockError::Validation(_))));
    }

    #[test]
    fn bad_porosity_rejected() {
        let r = RockFunctions::rational_shape(
            "x",
            1.0,
            PowerLaw::new(0.0, 1.0, 2.0).unwrap(),
            1.0,
            0.0,
            1.0,
            KirchhoffMode::Auto,
        );
        assert!(r.is_err());
    }

    #[test]
    fn inverse_examples() {
        let sand_pi = CapillaryCurve::power_law(0.0, 1.0, 5.0).unwrap();
        assert_eq!(invert_monotone(&sand_pi, 0.0).unwrap(), 0.0);
        let x = invert_monotone(&sand_pi, 0.5).unwrap();
        assert!((x - 0.5f64.powf(0.2)).abs() < 1e-12);
        assert!((x - 0.870_550_563_296_123).abs() < 1e-12);
        let shale_pi = CapillaryCurve::power_law(0.5, 1.0, 5.0).unwrap();
        assert_eq!(invert_monotone(&shale_pi, 1.5).unwrap(), 1.0);
        assert!(matches!(
            invert_monotone(&shale_pi, 1.6),
            Err(RockError::Range { .. })
        ));
    }
}
