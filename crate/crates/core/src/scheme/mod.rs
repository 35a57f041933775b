//! Implicit finite-volume scheme.
//!
//! For every cell `j` of layer `i` and step `n → n+1`,
//!
//! ```text
//! φᵢ (uⱼⁿ⁺¹ − uⱼⁿ) δxᵢ/δt + F_{j+1}ⁿ⁺¹ − F_jⁿ⁺¹ = 0,
//! ```
//!
//! with interior edge fluxes `G(u_l, u_r) − (ϕ(u_r) − ϕ(u_l))/δx`, boundary
//! fluxes `G₁(u̲, u₀)` and `G(u_last, ū)`, and interface fluxes from the
//! transmission solve of [`crate::coupling`]. The interface traces are
//! eliminated inside the residual, so the unknowns are the cell values only
//! and the Jacobian is tridiagonal.

mod boundary;
mod grid;
mod run;
mod solver;

pub use boundary::{BoundaryData, TimeProfile};
pub use grid::{Discretization, EdgeKind, LayeredMedium, MediumLayer};
pub use run::{discretize_initial, MassLedger, Run, State};
pub use solver::{SolveStats, SolverOptions};

use crate::coupling::{CouplingError, InterfaceProblem, InterfaceSide, InterfaceSolve};
use crate::numflux::Side;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SchemeError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error(transparent)]
    Coupling(#[from] CouplingError),
    #[error(
        "nonlinear solve failed at step {step}: residual {residual:.3e} (worst cell {worst_cell}) \
         after {newton_iterations} Newton iterations and {sweeps} Gauss–Seidel sweeps"
    )]
    StepFailure {
        step: usize,
        residual: f64,
        worst_cell: usize,
        newton_iterations: usize,
        sweeps: usize,
    },
}

impl SchemeError {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        SchemeError::Validation(msg.into())
    }
}

/// A layered medium on a grid with boundary data: everything needed to
/// advance the scheme.
#[derive(Debug, Clone)]
pub struct Scheme {
    medium: LayeredMedium,
    disc: Discretization,
    bc: BoundaryData,
    options: SolverOptions,
}

impl Scheme {
    pub fn new(
        medium: LayeredMedium,
        disc: Discretization,
        bc: BoundaryData,
    ) -> Result<Self, SchemeError> {
        bc.validate()?;
        if disc.layer_cells().len() != medium.len() {
            return Err(SchemeError::validation("grid does not match the medium"));
        }
        Ok(Self {
            medium,
            disc,
            bc,
            options: SolverOptions::default(),
        })
    }

    pub fn with_options(mut self, options: SolverOptions) -> Self {
        self.options = options;
        self
    }

    pub fn medium(&self) -> &LayeredMedium {
        &self.medium
    }

    pub fn disc(&self) -> &Discretization {
        &self.disc
    }

    pub fn boundary(&self) -> &BoundaryData {
        &self.bc
    }

    pub fn options(&self) -> &SolverOptions {
        &self.options
    }

    /// Exterior saturations for step index `n` (the step `n → n+1`).
    pub fn boundary_values(&self, n: usize) -> (f64, f64) {
        self.bc.step_values(n, self.disc.dt())
    }

    /// Interface problem `id` (between layers `id` and `id + 1`).
    pub fn interface(&self, id: usize) -> InterfaceProblem<'_> {
        let (l, r) = (&self.medium.layers()[id], &self.medium.layers()[id + 1]);
        InterfaceProblem::new(
            InterfaceSide {
                rock: &l.rock,
                flux: &l.flux,
                dx: self.disc.layer_dx(id),
            },
            InterfaceSide {
                rock: &r.rock,
                flux: &r.flux,
                dx: self.disc.layer_dx(id + 1),
            },
        )
    }

    /// Flux through edge `e` for cell values `u` and exterior values
    /// `(ul, ur)`; also returns the interface solve at interface edges.
    pub fn edge_flux(
        &self,
        e: usize,
        u: &[f64],
        ul: f64,
        ur: f64,
    ) -> Result<(f64, Option<InterfaceSolve>), SchemeError> {
        let layers = self.medium.layers();
        Ok(match self.disc.edge_kind(e) {
            EdgeKind::LeftBoundary => (layers[0].flux.boundary_flux(Side::Left, ul, u[0]), None),
            EdgeKind::RightBoundary => (
                layers
                    .last()
                    .unwrap()
                    .flux
                    .boundary_flux(Side::Right, ur, u[u.len() - 1]),
                None,
            ),
            EdgeKind::Interior { layer } => {
                let l = &layers[layer];
                let (a, b) = (u[e - 1], u[e]);
                let dx = self.disc.layer_dx(layer);
                (l.flux.eval(a, b) - (l.rock.phi(b) - l.rock.phi(a)) / dx, None)
            }
            EdgeKind::Interface { id } => {
                let s = self.interface(id).solve(u[e - 1], u[e])?;
                (s.flux, Some(s))
            }
        })
    }

    /// All edge fluxes, and the interface solves in interface order.
    pub fn fluxes(
        &self,
        u: &[f64],
        ul: f64,
        ur: f64,
    ) -> Result<(Vec<f64>, Vec<InterfaceSolve>), SchemeError> {
        let mut fluxes = vec![0.0; u.len() + 1];
        let mut traces = Vec::with_capacity(self.disc.interface_edges().len());
        for (e, slot) in fluxes.iter_mut().enumerate() {
            let (f, s) = self.edge_flux(e, u, ul, ur)?;
            *slot = f;
            traces.extend(s);
        }
        Ok((fluxes, traces))
    }

    #[inline]
    pub(crate) fn accumulation(&self, j: usize) -> f64 {
        let layer = self.disc.layer_of_cell(j);
        self.medium.layers()[layer].rock.porosity() * self.disc.layer_dx(layer) / self.disc.dt()
    }

    /// Residual without clamping; `u_new` must already lie in `[0, 1]`.
    pub(crate) fn residual_unclamped(
        &self,
        u_new: &[f64],
        u_old: &[f64],
        ul: f64,
        ur: f64,
        out: &mut [f64],
    ) -> Result<(), SchemeError> {
        let mut left = self.edge_flux(0, u_new, ul, ur)?.0;
        for j in 0..u_new.len() {
            let right = self.edge_flux(j + 1, u_new, ul, ur)?.0;
            out[j] = self.accumulation(j) * (u_new[j] - u_old[j]) + right - left;
            left = right;
        }
        Ok(())
    }

    /// Per-cell residuals of the scheme for step index `step` (the step from
    /// `u_old` at `tⁿ` to `u_new` at `tⁿ⁺¹`). `u_new` is clamped to `[0, 1]`
    /// first.
    pub fn residual(
        &self,
        u_new: &[f64],
        u_old: &[f64],
        step: usize,
    ) -> Result<Vec<f64>, SchemeError> {
        if u_new.len() != u_old.len() {
            return Err(SchemeError::validation("old and new states differ in size"));
        }
        self.check_sizes(u_old)?;
        if self.disc.m() == 0 {
            return Err(SchemeError::validation("grid has no time steps"));
        }
        let clamped: Vec<f64> = u_new.iter().map(|v| v.clamp(0.0, 1.0)).collect();
        let (ul, ur) = self.boundary_values(step);
        let mut out = vec![0.0; clamped.len()];
        self.residual_unclamped(&clamped, u_old, ul, ur, &mut out)?;
        Ok(out)
    }

    /// Residual of cell `j` alone.
    pub(crate) fn cell_residual(
        &self,
        j: usize,
        u_new: &[f64],
        u_old: &[f64],
        ul: f64,
        ur: f64,
    ) -> Result<f64, SchemeError> {
        let left = self.edge_flux(j, u_new, ul, ur)?.0;
        let right = self.edge_flux(j + 1, u_new, ul, ur)?.0;
        Ok(self.accumulation(j) * (u_new[j] - u_old[j]) + right - left)
    }

    /// Porosity-weighted mass `Σ φ u δx`.
    pub fn mass(&self, u: &[f64]) -> f64 {
        u.iter()
            .enumerate()
            .map(|(j, v)| {
                let layer = self.disc.layer_of_cell(j);
                self.medium.layers()[layer].rock.porosity() * v * self.disc.layer_dx(layer)
            })
            .sum()
    }

    /// Porosity-weighted `Σ φ δx (u − v)^±`.
    pub fn weighted_parts(&self, u: &[f64], v: &[f64]) -> (f64, f64) {
        let (mut pos, mut neg) = (0.0, 0.0);
        for j in 0..u.len() {
            let layer = self.disc.layer_of_cell(j);
            let w = self.medium.layers()[layer].rock.porosity() * self.disc.layer_dx(layer);
            let d = u[j] - v[j];
            if d > 0.0 {
                pos += w * d;
            } else {
                neg -= w * d;
            }
        }
        (pos, neg)
    }

    fn check_sizes(&self, u: &[f64]) -> Result<(), SchemeError> {
        if u.len() != self.disc.cells() {
            return Err(SchemeError::validation(format!(
                "state has {} cells, grid has {}",
                u.len(),
                self.disc.cells()
            )));
        }
        if let Some(v) = u.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(SchemeError::validation(format!("saturation {v} outside [0, 1]")));
        }
        Ok(())
    }

    /// Capillary pressure `π(uⱼ)` of each cell under its own rock.
    pub fn cell_pressures(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .enumerate()
            .map(|(j, &v)| self.medium.layers()[self.disc.layer_of_cell(j)].rock.pi(v))
            .collect()
    }
}
