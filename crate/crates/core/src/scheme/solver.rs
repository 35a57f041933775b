//! Nonlinear solve of one implicit step.
//!
//! Projected Newton on the clamped residual with a colored finite-difference
//! tridiagonal Jacobian, damped by the affine-invariant natural monotonicity
//! test rather than by the residual norm: the mass mode of the Jacobian is
//! nearly singular (`φδx/δt` against capillary couplings of order `ϕ′/δx`),
//! so good steps often raise `‖R‖` before Newton settles. The Jacobian has a
//! positive diagonal (at least `φδx/δt`) and nonpositive off-diagonals with
//! column sums of the flux part equal to zero, so the Thomas algorithm is
//! stable without pivoting. When Newton needs heavy damping (typically a front
//! entering dry cells, where `f ≈ c·u²` makes the linearization useless from
//! below), nonlinear Gauss–Seidel takes over until the residual has dropped,
//! then Newton resumes. Each cell residual is increasing in its own value, so
//! every cell update is a bracketed scalar root.
//!
//! The tolerance `tol_factor · min δx` can sit below the rounding level of
//! the residual itself on fine grids with stiff capillary terms, where
//! `ϕ(u)/δx` is evaluated and differenced in every cell. The effective
//! tolerance is therefore never below a small multiple of machine epsilon
//! times the largest term entering a cell residual.

use serde::{Deserialize, Serialize};

use crate::exec::Exec;

use super::{Scheme, SchemeError};

/// Knobs of the step solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Convergence when `‖R‖∞ ≤ tol_factor · min δx`.
    pub tol_factor: f64,
    pub max_newton: usize,
    pub max_sweeps: usize,
    /// Gauss–Seidel sweeps between Newton retries in the fallback.
    pub sweeps_per_retry: usize,
    /// Execution of the Jacobian color evaluations. Results are identical
    /// in both modes.
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol_factor: 1e-10,
            max_newton: 60,
            max_sweeps: 20_000,
            sweeps_per_retry: 25,
            exec: Exec::Sequential,
        }
    }
}

/// What the solver did for one step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub newton_iterations: usize,
    pub sweeps: usize,
    pub residual: f64,
}

/// Residual goal once the tolerance is met: Newton keeps going while it
/// still gains, to keep the mass ledger tight.
const POLISH_FACTOR: f64 = 1e-3;
const FD_STEP: f64 = 1e-7;
/// Natural monotonicity test: accept damping `λ` when the simplified Newton
/// correction at the trial point is below `(1 − λ/4)` of the Newton step.
const MONOTONICITY: f64 = 0.25;
const MIN_DAMPING: f64 = 1.0 / 1024.0;
/// Consecutive Newton steps damped below this factor count as a stall.
const DAMPED_STEP: f64 = 0.25;
const DAMPED_LIMIT: usize = 2;
/// Relaxation hands back to Newton once the residual dropped by this factor.
const RELAX_GAIN: f64 = 1e-2;
/// Rounding floor of the residual, in units of `ε ·` (largest term).
const ROUNDOFF_ULPS: f64 = 16.0;

fn inf_norm(r: &[f64]) -> (f64, usize) {
    r.iter()
        .enumerate()
        .fold((0.0, 0), |(m, k), (j, v)| if v.abs() > m { (v.abs(), j) } else { (m, k) })
}

fn sq_norm(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Tridiagonal matrix with rows `sub[i]·x[i−1] + diag[i]·x[i] + sup[i]·x[i+1]`.
struct Tridiagonal {
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
}

impl Tridiagonal {
    fn solve(&self, rhs: &mut [f64]) {
        let mut diag = self.diag.clone();
        thomas(&self.sub, &mut diag, &self.sup, rhs);
    }
}

/// Solves `sub[i]·x[i−1] + diag[i]·x[i] + sup[i]·x[i+1] = rhs[i]` in place.
fn thomas(sub: &[f64], diag: &mut [f64], sup: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    for i in 1..n {
        let w = sub[i] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for i in (0..n - 1).rev() {
        rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / diag[i];
    }
}

struct Newton<'a> {
    scheme: &'a Scheme,
    u_old: &'a [f64],
    ul: f64,
    ur: f64,
}

enum NewtonOutcome {
    Converged,
    Stalled,
}

impl Newton<'_> {
    fn residual(&self, u: &[f64]) -> Result<Vec<f64>, SchemeError> {
        let mut r = vec![0.0; u.len()];
        self.scheme
            .residual_unclamped(u, self.u_old, self.ul, self.ur, &mut r)?;
        Ok(r)
    }

    fn jacobian(
        &self,
        u: &[f64],
        r: &[f64],
        exec: Exec,
    ) -> Result<Tridiagonal, SchemeError> {
        let n = u.len();
        let steps: Vec<f64> = u
            .iter()
            .map(|&v| if v + FD_STEP <= 1.0 { FD_STEP } else { -FD_STEP })
            .collect();
        let colors = exec.map_range(3.min(n), |color| {
            let mut up = u.to_vec();
            for j in (color..n).step_by(3) {
                up[j] += steps[j];
            }
            self.residual(&up)
        });
        let colors: Vec<Vec<f64>> = colors.into_iter().collect::<Result<_, _>>()?;
        let (mut sub, mut diag, mut sup) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for i in 0..n {
            diag[i] = (colors[i % 3][i] - r[i]) / steps[i];
            if i > 0 {
                sub[i] = (colors[(i - 1) % 3][i] - r[i]) / steps[i - 1];
            }
            if i + 1 < n {
                sup[i] = (colors[(i + 1) % 3][i] - r[i]) / steps[i + 1];
            }
        }
        Ok(Tridiagonal { sub, diag, sup })
    }

    /// Runs Newton from `u`; returns with `u`, `r` holding the best iterate.
    fn iterate(
        &self,
        u: &mut Vec<f64>,
        r: &mut Vec<f64>,
        tol: f64,
        budget: usize,
        exec: Exec,
        stats: &mut SolveStats,
    ) -> Result<NewtonOutcome, SchemeError> {
        let mut rn = inf_norm(r).0;
        let mut damped = 0;
        for _ in 0..budget {
            if rn <= tol * POLISH_FACTOR {
                return Ok(NewtonOutcome::Converged);
            }
            let lin = self.jacobian(u, r, exec)?;
            if lin.diag.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
                break;
            }
            let mut delta: Vec<f64> = r.iter().map(|v| -v).collect();
            lin.solve(&mut delta);
            stats.newton_iterations += 1;
            let step_norm = sq_norm(&delta).sqrt();
            let mut lambda = 1.0;
            let mut accepted = None;
            while lambda >= MIN_DAMPING {
                let trial: Vec<f64> = u
                    .iter()
                    .zip(&delta)
                    .map(|(v, d)| (v + lambda * d).clamp(0.0, 1.0))
                    .collect();
                let rt = self.residual(&trial)?;
                if inf_norm(&rt).0 <= tol {
                    accepted = Some((trial, rt));
                    break;
                }
                // simplified Newton correction with the old Jacobian
                let mut bar: Vec<f64> = rt.iter().map(|v| -v).collect();
                lin.solve(&mut bar);
                if sq_norm(&bar).sqrt() <= (1.0 - MONOTONICITY * lambda) * step_norm {
                    accepted = Some((trial, rt));
                    break;
                }
                lambda *= 0.5;
            }
            let Some((trial, rt)) = accepted else {
                break;
            };
            let rt_n = inf_norm(&rt).0;
            damped = if lambda < DAMPED_STEP { damped + 1 } else { 0 };
            if rn <= tol && rt_n > 0.5 * rn {
                // polishing no longer pays off
                if rt_n < rn {
                    *u = trial;
                    *r = rt;
                }
                return Ok(NewtonOutcome::Converged);
            }
            *u = trial;
            *r = rt;
            rn = rt_n;
            if damped >= DAMPED_LIMIT && rn > tol {
                // far from the basin; hand over to relaxation
                return Ok(NewtonOutcome::Stalled);
            }
        }
        Ok(if rn <= tol {
            NewtonOutcome::Converged
        } else {
            NewtonOutcome::Stalled
        })
    }

    /// Magnitude of the largest term in any cell residual at `u`.
    fn term_scale(&self, u: &[f64]) -> f64 {
        let s = self.scheme;
        let disc = s.disc();
        let layers = s.medium().layers();
        let g = s.medium().max_flux_sup();
        (0..u.len())
            .map(|j| {
                let l = disc.layer_of_cell(j);
                let rock = &layers[l].rock;
                let phi = |k: usize| rock.phi(u[k]).abs();
                let mut cap = 2.0 * phi(j);
                if j > 0 {
                    cap += phi(j - 1);
                }
                if j + 1 < u.len() {
                    cap += phi(j + 1);
                }
                s.accumulation(j) * u[j].max(self.u_old[j]) + cap / disc.dx(j) + 2.0 * g
            })
            .fold(0.0, f64::max)
    }

    /// Solves cell `j`'s residual for its own value with the neighbours
    /// frozen: Illinois regula falsi on a bracket, with bisection whenever
    /// the bracket fails to halve.
    fn relax_cell(&self, j: usize, u: &mut [f64], ftol: f64) -> Result<(), SchemeError> {
        let s = self.scheme;
        let eval = |x: f64, u: &mut [f64]| {
            u[j] = x;
            s.cell_residual(j, u, self.u_old, self.ul, self.ur)
        };
        let start = u[j];
        let g = eval(start, u)?;
        if g.abs() <= ftol {
            return Ok(());
        }
        let (mut a, mut fa, mut b, mut fb) = if g < 0.0 {
            let g1 = eval(1.0, u)?;
            if g1 <= 0.0 {
                u[j] = 1.0;
                return Ok(());
            }
            (start, g, 1.0, g1)
        } else {
            let g0 = eval(0.0, u)?;
            if g0 >= 0.0 {
                u[j] = 0.0;
                return Ok(());
            }
            (0.0, g0, start, g)
        };
        let mut last_side = 0i8;
        let mut width = b - a;
        for it in 0..200 {
            let mut x = (a * fb - b * fa) / (fb - fa);
            if it % 3 == 2 && b - a > 0.5 * width {
                x = 0.5 * (a + b);
            }
            if it % 3 == 2 {
                width = b - a;
            }
            if !(x > a && x < b) {
                x = 0.5 * (a + b);
                if !(x > a && x < b) {
                    break;
                }
            }
            let fx = eval(x, u)?;
            if fx.abs() <= ftol {
                return Ok(());
            }
            if fx < 0.0 {
                a = x;
                fa = fx;
                if last_side == -1 {
                    fb *= 0.5;
                }
                last_side = -1;
            } else {
                b = x;
                fb = fx;
                if last_side == 1 {
                    fa *= 0.5;
                }
                last_side = 1;
            }
        }
        let (ga, gb) = (eval(a, u)?.abs(), eval(b, u)?.abs());
        u[j] = if ga <= gb { a } else { b };
        Ok(())
    }

    /// One Gauss–Seidel pass, forward or backward.
    fn sweep(&self, u: &mut [f64], forward: bool, ftol: f64) -> Result<(), SchemeError> {
        let n = u.len();
        for k in 0..n {
            let j = if forward { k } else { n - 1 - k };
            self.relax_cell(j, u, ftol)?;
        }
        Ok(())
    }
}

impl Scheme {
    pub(crate) fn solve_step(
        &self,
        u_old: &[f64],
        step: usize,
    ) -> Result<(Vec<f64>, SolveStats), SchemeError> {
        let (ul, ur) = self.boundary_values(step);
        let nw = Newton {
            scheme: self,
            u_old,
            ul,
            ur,
        };
        let opts = self.options;
        let mut stats = SolveStats::default();
        let mut u = u_old.to_vec();
        let mut r = nw.residual(&u)?;
        // the scale hardly moves within a step; sample it at both ends
        let floor = |u: &[f64]| ROUNDOFF_ULPS * f64::EPSILON * nw.term_scale(u);
        let tol = (opts.tol_factor * self.disc.min_dx()).max(floor(&u));
        let mut outcome = nw.iterate(&mut u, &mut r, tol, opts.max_newton, opts.exec, &mut stats)?;
        while matches!(outcome, NewtonOutcome::Stalled) && stats.sweeps < opts.max_sweeps {
            let target = RELAX_GAIN * inf_norm(&r).0;
            for _ in 0..opts.sweeps_per_retry {
                nw.sweep(&mut u, stats.sweeps % 2 == 0, tol)?;
                stats.sweeps += 1;
                r = nw.residual(&u)?;
                if inf_norm(&r).0 <= target.max(tol) {
                    break;
                }
            }
            outcome = nw.iterate(&mut u, &mut r, tol, opts.max_newton, opts.exec, &mut stats)?;
        }
        let (rn, worst) = inf_norm(&r);
        stats.residual = rn;
        if rn <= tol.max(floor(&u)) {
            Ok((u, stats))
        } else {
            Err(SchemeError::StepFailure {
                step,
                residual: rn,
                worst_cell: worst,
                newton_iterations: stats.newton_iterations,
                sweeps: stats.sweeps,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_solves_tridiagonal() {
        let sub = [0.0, -1.0, -1.0, -1.0];
        let mut diag = [4.0, 4.0, 4.0, 4.0];
        let sup = [-1.0, -1.0, -1.0, 0.0];
        let x = [1.0, -2.0, 0.5, 3.0];
        let mut rhs: Vec<f64> = (0..4)
            .map(|i| {
                let mut v = diag[i] * x[i];
                if i > 0 {
                    v += sub[i] * x[i - 1];
                }
                if i < 3 {
                    v += sup[i] * x[i + 1];
                }
                v
            })
            .collect();
        thomas(&sub, &mut diag, &sup, &mut rhs);
        for (a, b) in rhs.iter().zip(x) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
