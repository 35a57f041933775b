//! Time levels and the time loop.

use serde::{Deserialize, Serialize};

use crate::coupling::InterfaceSolve;

use super::{Discretization, Scheme, SchemeError, SolveStats};

/// Composite midpoint points per cell for initial cell averages.
const INITIAL_QUADRATURE_POINTS: usize = 16;

/// Cumulative boundary transport since the initial state.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MassLedger {
    pub initial_mass: f64,
    /// `Σ δt·F_left` over the steps taken.
    pub inflow: f64,
    /// `Σ δt·F_right` over the steps taken.
    pub outflow: f64,
}

impl MassLedger {
    /// Mass predicted by the boundary fluxes alone.
    pub fn expected_mass(&self) -> f64 {
        self.initial_mass + self.inflow - self.outflow
    }
}

/// One time level.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub step: usize,
    pub t: f64,
    /// Cell saturations.
    pub u: Vec<f64>,
    /// Interface solves, one per interface.
    pub traces: Vec<InterfaceSolve>,
    /// Edge fluxes, `u.len() + 1` of them.
    pub fluxes: Vec<f64>,
    /// Exterior saturations `(u̲, ū)` used for the fluxes.
    pub exterior: (f64, f64),
    pub ledger: MassLedger,
    pub solve: SolveStats,
}

impl State {
    pub fn inflow(&self) -> f64 {
        self.fluxes[0]
    }

    pub fn outflow(&self) -> f64 {
        *self.fluxes.last().unwrap()
    }
}

/// Cell averages of `u0` by a 16-point composite midpoint rule per cell.
pub fn discretize_initial(
    u0: &dyn Fn(f64) -> f64,
    disc: &Discretization,
) -> Result<Vec<f64>, SchemeError> {
    let edges = disc.edges();
    let k = INITIAL_QUADRATURE_POINTS;
    (0..disc.cells())
        .map(|j| {
            let (a, b) = (edges[j], edges[j + 1]);
            let h = (b - a) / k as f64;
            let mut acc = 0.0;
            for i in 0..k {
                let x = a + (i as f64 + 0.5) * h;
                let v = u0(x);
                if !(0.0..=1.0).contains(&v) {
                    return Err(SchemeError::validation(format!(
                        "initial saturation u0({x}) = {v} outside [0, 1]"
                    )));
                }
                acc += v;
            }
            Ok((acc / k as f64).clamp(0.0, 1.0))
        })
        .collect()
}

impl Scheme {
    /// Time level 0: `u⁰` with the fluxes it induces under the first
    /// step's boundary data.
    pub fn initial_state(&self, u0: Vec<f64>) -> Result<State, SchemeError> {
        self.check_sizes(&u0)?;
        let exterior = self.boundary_values(0);
        let (fluxes, traces) = self.fluxes(&u0, exterior.0, exterior.1)?;
        Ok(State {
            step: 0,
            t: 0.0,
            ledger: MassLedger {
                initial_mass: self.mass(&u0),
                ..MassLedger::default()
            },
            u: u0,
            traces,
            fluxes,
            exterior,
            solve: SolveStats::default(),
        })
    }

    /// Advances `u_old` at level `step` to level `step + 1`. The returned
    /// ledger holds this step's boundary transport only.
    pub fn step(&self, u_old: &[f64], step: usize) -> Result<State, SchemeError> {
        self.check_sizes(u_old)?;
        if step >= self.disc.m() {
            return Err(SchemeError::validation(format!(
                "step index {step} beyond M = {}",
                self.disc.m()
            )));
        }
        let (u, solve) = self.solve_step(u_old, step)?;
        debug_assert!(u.iter().all(|v| (0.0..=1.0).contains(v)));
        let exterior = self.boundary_values(step);
        let (fluxes, traces) = self.fluxes(&u, exterior.0, exterior.1)?;
        let dt = self.disc.dt();
        let ledger = MassLedger {
            initial_mass: self.mass(u_old),
            inflow: dt * fluxes[0],
            outflow: dt * fluxes[fluxes.len() - 1],
        };
        Ok(State {
            step: step + 1,
            t: self.disc.time(step + 1),
            u,
            traces,
            fluxes,
            exterior,
            ledger,
            solve,
        })
    }

    /// Streams the initial state followed by one state per step.
    pub fn run(&self, u0: Vec<f64>) -> Run<'_> {
        Run {
            scheme: self,
            pending: Some(u0),
            last: None,
            failed: false,
        }
    }
}

/// Iterator over the time levels of a run. Stops after the first error.
pub struct Run<'a> {
    scheme: &'a Scheme,
    pending: Option<Vec<f64>>,
    last: Option<State>,
    failed: bool,
}

impl Iterator for Run<'_> {
    type Item = Result<State, SchemeError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let out = if let Some(u0) = self.pending.take() {
            self.scheme.initial_state(u0)
        } else {
            let prev = self.last.as_ref()?;
            if prev.step >= self.scheme.disc.m() {
                return None;
            }
            self.scheme.step(&prev.u, prev.step).map(|mut s| {
                s.ledger = MassLedger {
                    initial_mass: prev.ledger.initial_mass,
                    inflow: prev.ledger.inflow + s.ledger.inflow,
                    outflow: prev.ledger.outflow + s.ledger.outflow,
                };
                s
            })
        };
        match &out {
            Ok(s) => self.last = Some(s.clone()),
            Err(_) => self.failed = true,
        }
        Some(out)
    }
}
