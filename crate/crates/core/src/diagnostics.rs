//! Discrete quantities from the stability estimates, invariant audits and the
//! steady-state comparators for trapped oil.

use serde::{Deserialize, Serialize};

use crate::rockphys::RockFunctions;
use crate::scheme::{Discretization, Scheme, State};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiagnosticsError {
    #[error("region endpoint {0} is not a cell edge")]
    Misaligned(f64),
    #[error("invalid region [{0}, {1}]")]
    InvalidRegion(f64, f64),
    #[error("states of different sizes")]
    SizeMismatch,
}

/// `δt Σⱼ δx ((ξ(u_{j+1}) − ξ(u_j))/δx)²` for one time level, over the edges
/// inside `layer`.
fn seminorm_term(scheme: &Scheme, u: &[f64], layer: usize) -> f64 {
    let disc = scheme.disc();
    let rock = &scheme.medium().layers()[layer].rock;
    let dx = disc.layer_dx(layer);
    let range = disc.layer_range(layer);
    let xi: Vec<f64> = u[range].iter().map(|&v| rock.xi(v)).collect();
    let sum: f64 = xi.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    disc.dt() * sum / dx
}

/// Discrete `L²(0,T;H¹)` seminorm of `ξᵢ(u)` over one layer, summed over the
/// time levels `n ≥ 1` among `states`.
pub fn discrete_seminorm<'a>(
    scheme: &Scheme,
    states: impl IntoIterator<Item = &'a State>,
    layer: usize,
) -> f64 {
    states
        .into_iter()
        .filter(|s| s.step > 0)
        .map(|s| seminorm_term(scheme, &s.u, layer))
        .sum()
}

/// `Σ u δx` over the cells of `[a, b]`, which must be aligned with edges.
/// Porosity is not included.
pub fn trapped_oil(disc: &Discretization, u: &[f64], region: (f64, f64)) -> Result<f64, DiagnosticsError> {
    let (a, b) = region;
    if !(a < b) {
        return Err(DiagnosticsError::InvalidRegion(a, b));
    }
    if u.len() != disc.cells() {
        return Err(DiagnosticsError::SizeMismatch);
    }
    let ea = disc.edge_at(a).ok_or(DiagnosticsError::Misaligned(a))?;
    let eb = disc.edge_at(b).ok_or(DiagnosticsError::Misaligned(b))?;
    Ok((ea..eb).map(|j| u[j] * disc.dx(j)).sum())
}

/// Outcome of comparing a state against a reference profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// `uⱼ ≥ refⱼ − 1e−6` in every cell.
    pub dominates: bool,
    /// `maxⱼ (refⱼ − uⱼ)⁺`.
    pub defect: f64,
}

pub const DOMINANCE_SLACK: f64 = 1e-6;

pub fn steady_comparator(u: &[f64], reference: &[f64]) -> Result<Comparison, DiagnosticsError> {
    if u.len() != reference.len() {
        return Err(DiagnosticsError::SizeMismatch);
    }
    let defect = u
        .iter()
        .zip(reference)
        .fold(0.0_f64, |m, (v, r)| m.max(r - v));
    Ok(Comparison {
        dominates: u
            .iter()
            .zip(reference)
            .all(|(v, r)| *v >= r - DOMINANCE_SLACK),
        defect,
    })
}

/// Cell averages of `f` by a composite Gauss–Legendre rule with `panels`
/// panels of 8 nodes per cell.
pub fn cell_averages(disc: &Discretization, f: &dyn Fn(f64) -> f64, panels: usize) -> Vec<f64> {
    let (nodes, weights) = crate::rockphys::catalog::gauss_legendre(8);
    let edges = disc.edges();
    (0..disc.cells())
        .map(|j| {
            let (a, b) = (edges[j], edges[j + 1]);
            let h = (b - a) / panels as f64;
            let mut acc = 0.0;
            for p in 0..panels {
                let mid = a + (p as f64 + 0.5) * h;
                for (x, w) in nodes.iter().zip(&weights) {
                    acc += w * f(mid + 0.5 * h * x);
                }
            }
            // weights sum to 2 on [-1, 1]
            acc / (2.0 * panels as f64)
        })
        .collect()
}

/// Zero-flux profile trapped below an interface at `x_if` by a capillary
/// barrier: with `q = 0` the flux vanishes where `∂ₓπ = g`, so the pressure
/// rises linearly with slope `g` (the left rock's gravity drive) up to the
/// entry pressure `π_right(0)` at the interface. Oil-free where that pressure
/// would fall below `π_left(0)`, and zero beyond the interface.
pub fn trapped_profile<'r>(
    left: &'r RockFunctions,
    right: &RockFunctions,
    x_if: f64,
) -> impl Fn(f64) -> f64 + use<'r> {
    let g = left.gravity_drive();
    let entry = right.pi_range().0;
    let curve = left.pi_curve();
    let (alpha, beta) = (curve.alpha(), curve.beta());
    move |x| {
        if x > x_if || g <= 0.0 {
            return 0.0;
        }
        let p = entry - g * (x_if - x);
        if p <= alpha {
            0.0
        } else if p >= beta {
            1.0
        } else {
            curve.inverse_excess(p - alpha)
        }
    }
}

/// `maxᵢ ‖∂ₓϕᵢ(u₀)‖∞`, estimated by difference quotients on `samples`
/// points per layer.
pub fn initial_phi_gradient(scheme: &Scheme, u0: &dyn Fn(f64) -> f64, samples: usize) -> f64 {
    let mut best = 0.0_f64;
    for l in scheme.medium().layers() {
        let h = l.length() / samples as f64;
        let mut prev = l.rock.phi(u0(l.start));
        for k in 1..=samples {
            let x = if k == samples { l.end } else { l.start + k as f64 * h };
            // one-sided limit at the layer end
            let x = if k == samples { x - 1e-12 * l.length() } else { x };
            let cur = l.rock.phi(u0(x));
            best = best.max((cur - prev).abs() / h);
            prev = cur;
        }
    }
    best
}

/// One step's flux extremes and whether they obey the discrete flux
/// maximum principle relative to the previous level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxBound {
    pub step: usize,
    pub t: f64,
    pub max: f64,
    pub min: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassEntry {
    pub step: usize,
    pub t: f64,
    /// `Σ φ u δx`.
    pub mass: f64,
    /// Initial mass plus cumulative boundary transport.
    pub expected: f64,
    /// `|Δmass − δt (F_in − F_out)|` for this step alone.
    pub step_defect: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionEntry {
    pub step: usize,
    /// `Σ φ δx (u − v)⁺`.
    pub positive: f64,
    /// `Σ φ δx (u − v)⁻`.
    pub negative: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterfaceEntry {
    pub step: usize,
    pub t: f64,
    pub interface: usize,
    pub c: f64,
    pub d: f64,
    pub p_star: f64,
    pub flux: f64,
}

/// Audit of one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunAudit {
    /// `|ξᵢ(u_D)|²_{1,D,i}` per layer.
    pub seminorms: Vec<f64>,
    pub flux_bounds: Vec<FluxBound>,
    pub mass_ledger: Vec<MassEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contraction_log: Option<Vec<ContractionEntry>>,
    pub interface_log: Vec<InterfaceEntry>,
    pub summary: AuditSummary,
}

/// Worst cases over every observed step, thinned or not.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditSummary {
    pub steps: usize,
    pub max_step_mass_defect: f64,
    pub max_abs_flux: f64,
    /// Largest violation of `max F^{n+1} ≤ max(max Fⁿ, ‖G‖∞)` and its
    /// mirror image for the minimum; 0 when the principle holds.
    pub flux_monotonicity_violation: f64,
    /// Largest increase of the contraction sums between steps.
    pub contraction_violation: f64,
    pub saturation_min: f64,
    pub saturation_max: f64,
    pub all_finite: bool,
}

/// Per-step mass defect allowed by the audit invariants.
pub const AUDIT_MASS_TOL: f64 = 1e-10;

impl RunAudit {
    /// Violated audit invariants, as messages.
    pub fn violations(&self) -> Vec<String> {
        let s = &self.summary;
        let mut out = Vec::new();
        if !s.all_finite {
            out.push("non-finite values in the run".to_string());
        }
        if s.max_step_mass_defect > AUDIT_MASS_TOL {
            out.push(format!(
                "per-step mass defect {:e} exceeds {AUDIT_MASS_TOL:e}",
                s.max_step_mass_defect
            ));
        }
        out
    }
}

/// Streaming auditor; feed it the states of one run in order.
pub struct Auditor<'a> {
    scheme: &'a Scheme,
    thinning: usize,
    audit: RunAudit,
    prev: Option<(f64, f64, f64)>,
    last_contraction: Option<(f64, f64)>,
    g_sup: f64,
}

fn finite(xs: &[f64]) -> bool {
    xs.iter().all(|v| v.is_finite())
}

impl<'a> Auditor<'a> {
    pub fn new(scheme: &'a Scheme, thinning: usize) -> Self {
        Self {
            scheme,
            thinning: thinning.max(1),
            audit: RunAudit {
                seminorms: vec![0.0; scheme.medium().len()],
                summary: AuditSummary {
                    all_finite: true,
                    saturation_min: f64::INFINITY,
                    saturation_max: f64::NEG_INFINITY,
                    ..AuditSummary::default()
                },
                ..RunAudit::default()
            },
            prev: None,
            last_contraction: None,
            g_sup: scheme.medium().max_flux_sup(),
        }
    }

    pub fn observe(&mut self, s: &State) {
        let keep = s.step.is_multiple_of(self.thinning) || s.step == self.scheme.disc().m();
        let a = &mut self.audit;
        let sum = &mut a.summary;
        sum.all_finite &= finite(&s.u) && finite(&s.fluxes);
        for v in &s.u {
            sum.saturation_min = sum.saturation_min.min(*v);
            sum.saturation_max = sum.saturation_max.max(*v);
        }
        let (fmax, fmin) = s
            .fluxes
            .iter()
            .fold((f64::NEG_INFINITY, f64::INFINITY), |(hi, lo), f| (hi.max(*f), lo.min(*f)));
        sum.max_abs_flux = sum.max_abs_flux.max(fmax.abs()).max(fmin.abs());
        let mass = self.scheme.mass(&s.u);
        let mut step_defect = 0.0;
        if let Some((prev_mass, prev_max, prev_min)) = self.prev {
            sum.steps += 1;
            let dt = self.scheme.disc().dt();
            step_defect = (mass - prev_mass - dt * (s.inflow() - s.outflow())).abs();
            sum.max_step_mass_defect = sum.max_step_mass_defect.max(step_defect);
            let over = fmax - prev_max.max(self.g_sup);
            let under = prev_min.min(-self.g_sup) - fmin;
            sum.flux_monotonicity_violation =
                sum.flux_monotonicity_violation.max(over).max(under);
            for (l, acc) in a.seminorms.iter_mut().enumerate() {
                *acc += seminorm_term(self.scheme, &s.u, l);
            }
        }
        self.prev = Some((mass, fmax, fmin));
        if keep {
            a.flux_bounds.push(FluxBound {
                step: s.step,
                t: s.t,
                max: fmax,
                min: fmin,
            });
            a.mass_ledger.push(MassEntry {
                step: s.step,
                t: s.t,
                mass,
                expected: s.ledger.expected_mass(),
                step_defect,
            });
            let edges = self.scheme.disc().interface_edges();
            for (id, tr) in s.traces.iter().enumerate() {
                a.interface_log.push(InterfaceEntry {
                    step: s.step,
                    t: s.t,
                    interface: id,
                    c: tr.c,
                    d: tr.d,
                    p_star: tr.p_star,
                    flux: s.fluxes[edges[id]],
                });
            }
        }
    }

    /// Records the porosity-weighted positive and negative parts of `u − v`
    /// for two runs of the same scheme at the same level.
    pub fn observe_pair(&mut self, u: &State, v: &State) {
        let (pos, neg) = self.scheme.weighted_parts(&u.u, &v.u);
        if let Some((p0, n0)) = self.last_contraction {
            let sum = &mut self.audit.summary;
            sum.contraction_violation = sum.contraction_violation.max(pos - p0).max(neg - n0);
        }
        self.last_contraction = Some((pos, neg));
        if u.step.is_multiple_of(self.thinning) || u.step == self.scheme.disc().m() {
            self.audit
                .contraction_log
                .get_or_insert_with(Vec::new)
                .push(ContractionEntry {
                    step: u.step,
                    positive: pos,
                    negative: neg,
                });
        }
    }

    pub fn finish(self) -> RunAudit {
        self.audit
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::rockphys::{KirchhoffMode, PowerLaw};
    use crate::scheme::{BoundaryData, LayeredMedium, MediumLayer};

    fn rock(offset: f64, scale: f64) -> Arc<RockFunctions> {
        Arc::new(
            RockFunctions::rational_shape(
                "r",
                scale,
                PowerLaw::new(offset, 1.0, 5.0).unwrap(),
                0.05,
                0.0,
                5.0,
                KirchhoffMode::Auto,
            )
            .unwrap(),
        )
    }

    fn column(n: usize) -> Scheme {
        let (sand, shale) = (rock(0.0, 10.0), rock(0.5, 0.1));
        let medium = LayeredMedium::new(vec![
            MediumLayer::new(0.0, 0.5, sand.clone()),
            MediumLayer::new(0.5, 0.7, shale),
            MediumLayer::new(0.7, 1.0, sand),
        ])
        .unwrap();
        let disc = Discretization::uniform(&medium, n, 1, 0.1).unwrap();
        Scheme::new(medium, disc, BoundaryData::constant(0.001, 0.0)).unwrap()
    }

    #[test]
    fn trapped_oil_trivial_cases() {
        let s = column(100);
        let d = s.disc();
        assert_eq!(trapped_oil(d, &vec![0.0; d.cells()], (0.0, 0.5)).unwrap(), 0.0);
        let ones = vec![1.0; d.cells()];
        assert!((trapped_oil(d, &ones, (0.0, 0.5)).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(
            trapped_oil(d, &ones, (0.0, 0.5025)),
            Err(DiagnosticsError::Misaligned(0.5025))
        );
    }

    #[test]
    fn trapped_reference_integral() {
        // ∫₀^0.1 (5s)^{1/5} ds = 0.5^{6/5}/6, by an independent fine midpoint sum
        let s = column(100);
        let layers = s.medium().layers();
        let us = trapped_profile(&layers[0].rock, &layers[1].rock, 0.5);
        let k = 200_000;
        let h = 0.5 / k as f64;
        let mid: f64 = (0..k).map(|i| us((i as f64 + 0.5) * h)).sum::<f64>() * h;
        let exact = 0.5_f64.powf(1.2) / 6.0;
        assert!((mid - exact).abs() < 1e-6, "{mid} vs {exact}");
        assert!((exact - 0.072_545_8).abs() < 1e-7);
        let avg = cell_averages(s.disc(), &us, 8);
        let integral = trapped_oil(s.disc(), &avg, (0.0, 0.5)).unwrap();
        assert!((integral - exact).abs() < 1e-6, "{integral}");
    }

    #[test]
    fn comparator_examples() {
        let s = column(100);
        let layers = s.medium().layers();
        let us = trapped_profile(&layers[0].rock, &layers[1].rock, 0.5);
        assert!((us(0.5) - 0.5_f64.powf(0.2)).abs() < 1e-12);
        assert_eq!(us(0.39), 0.0);
        let reference: Vec<f64> = (0..s.disc().cells()).map(|j| us(s.disc().cell_center(j))).collect();
        let same = steady_comparator(&reference, &reference).unwrap();
        assert!(same.dominates && same.defect == 0.0);
        let zero = steady_comparator(&vec![0.0; reference.len()], &reference).unwrap();
        assert!(!zero.dominates);
        // the largest cell-centre value sits half a cell below the interface
        let top = (5.0_f64 * 0.0975).powf(0.2);
        assert!((zero.defect - top).abs() < 1e-12);
    }

    #[test]
    fn seminorm_by_hand() {
        // one step, δt = 0.1; two cells of the first layer differ
        let s = column(100);
        let mut u = vec![0.0; s.disc().cells()];
        u[0] = 0.5;
        u[1] = 0.2;
        let rock = &s.medium().layers()[0].rock;
        let dx = 0.005;
        let expected = 0.1 * dx * ((rock.xi(0.2) - rock.xi(0.5)) / dx).powi(2)
            + 0.1 * dx * ((rock.xi(0.0) - rock.xi(0.2)) / dx).powi(2);
        let st = s.initial_state(u.clone()).unwrap();
        let mut one = st.clone();
        one.step = 1;
        let got = discrete_seminorm(&s, [&st, &one], 0);
        assert!((got - expected).abs() <= 1e-12 * expected);
        let flat = State { u: vec![0.3; u.len()], ..one };
        assert_eq!(discrete_seminorm(&s, [&flat], 0), 0.0);
    }
}
