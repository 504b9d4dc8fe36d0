//! Forward density solver.
//!
//! Space: finite volumes with exponentially fitted two-point fluxes. On
//! each interior interface the flux is `F = A ftilde + D (f_R - f_L)/dv`
//! with `A = -(I_k[f] + h_k + u_k) + D_k'` evaluated at the interface
//! (`u` averaged from the two adjacent centers), `ftilde = (1 - delta) f_R
//! + delta f_L`, and `delta = 1/lambda - 1/(e^lambda - 1)` for `lambda =
//! dv A / D`. Boundary fluxes vanish, so cell totals telescope and mass is
//! conserved to rounding regardless of the linear-solve tolerance. The
//! fitting makes discrete steady states satisfy `f_R / f_L = e^-lambda`
//! exactly, which keeps them fixed points of the time stepping.
//!
//! Time: a two-stage scheme, explicit in the nonlinear coefficient state
//! and trapezoidal in the linear flux operator, or a one-stage
//! semi-implicit variant for comparisons. Linear stages solve by direct
//! tridiagonal elimination in 1D and diagonally scaled BiCGSTAB in 2D; the
//! stage matrices have unit column sums with nonpositive off-diagonal
//! entries, so elimination needs no pivoting.

use crate::fields::{integrate, ControlTrajectory, ScalarField, Trajectory};
use crate::mesh::{Grid, Point, TimeGrid};
use crate::model::ModelSpec;
use crate::nonlocal::interaction_term;
use crate::fields::VectorField;
use crate::{Error, Result};
use std::sync::Arc;

/// Interface weight `delta(lambda) = 1/lambda - 1/(e^lambda - 1)`,
/// evaluated through `expm1`; a short series takes over near zero where
/// the two reciprocals cancel.
pub fn delta_coefficient(lambda: f64) -> f64 {
    if lambda.abs() < 1e-4 {
        0.5 - lambda / 12.0 + lambda * lambda * lambda / 720.0
    } else {
        1.0 / lambda - 1.0 / lambda.exp_m1()
    }
}

/// `x / (e^x - 1)`, positive everywhere, `1` at zero. The flux
/// linearization `F = q f_R + p f_L` of `A ftilde + D (f_R - f_L)/dv`
/// collapses to `q = (D/dv) B(-lambda)`, `p = -(D/dv) B(lambda)`, which
/// evaluates without the cancellation the delta form hits at large
/// `|lambda|` (strongly advected interfaces).
fn bernoulli_ratio(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x / 2.0 + x * x / 12.0
    } else {
        // overflow of e^x gives x/inf = 0, the correct limit
        x / x.exp_m1()
    }
}

/// Linearized interface fluxes for one coefficient state: on interface `m`
/// between cells `L` and `R` along an axis, `F_m = q_m f_R + p_m f_L`.
pub(crate) struct FluxCoeffs {
    grid: Arc<Grid>,
    /// per axis: coefficient of the left cell, interior interfaces only
    p: Vec<Vec<f64>>,
    /// per axis: coefficient of the right cell
    q: Vec<Vec<f64>>,
}

/// Interface midpoints along `axis`, interior only, ordered to match
/// [`FluxCoeffs`] storage: axis 0 as `i + (n1-1) j`, axis 1 as `i + n1 j`.
fn interface_points(grid: &Grid, axis: usize) -> Vec<Point> {
    let n1 = grid.count(0);
    let n2 = if grid.dim() == 2 { grid.count(1) } else { 1 };
    let mut pts = Vec::new();
    if axis == 0 {
        for j in 0..n2 {
            let y = if grid.dim() == 2 { grid.center(1, j) } else { 0.0 };
            for i in 1..n1 {
                pts.push([grid.domain().lo(0) + grid.step(0) * i as f64, y]);
            }
        }
    } else {
        for j in 1..n2 {
            let y = grid.domain().lo(1) + grid.step(1) * j as f64;
            for i in 0..n1 {
                pts.push([grid.center(0, i), y]);
            }
        }
    }
    pts
}

/// Builds the interface coefficients for the state `(f, u)`; the nonlocal
/// drift is integrated against `f` and evaluated at interface midpoints.
pub(crate) fn build_flux_coeffs(
    model: &ModelSpec,
    f: &ScalarField,
    u: &VectorField,
) -> Result<FluxCoeffs> {
    let grid = f.grid().clone();
    let d = grid.dim();
    let mut p = Vec::with_capacity(d);
    let mut q = Vec::with_capacity(d);
    for axis in 0..d {
        let pts = interface_points(&grid, axis);
        let inter = interaction_term(model, axis, f, &pts);
        let dv = grid.step(axis);
        let uk = u.component(axis).values();
        let n1 = grid.count(0);
        let mut pa = Vec::with_capacity(pts.len());
        let mut qa = Vec::with_capacity(pts.len());
        for (m, pt) in pts.iter().enumerate() {
            // linear indices of the two adjacent cells
            let (cl, cr) = if axis == 0 {
                let nf = n1 - 1;
                let (i, j) = (m % nf, m / nf);
                (grid.linear(i, j), grid.linear(i + 1, j))
            } else {
                let (i, j) = (m % n1, m / n1);
                (grid.linear(i, j), grid.linear(i, j + 1))
            };
            let u_avg = 0.5 * (uk[cl] + uk[cr]);
            let dcoef = model.diffusion(axis, pt);
            if !(dcoef > 0.0) {
                return Err(Error::DegenerateDiffusion(format!(
                    "axis {axis} at ({}, {}): D = {dcoef}",
                    pt[0], pt[1]
                )));
            }
            let a = -(inter[m] + model.local_drift(axis, pt)) - u_avg
                + model.diffusion_deriv(axis, pt);
            let lambda = dv * a / dcoef;
            pa.push(-(dcoef / dv) * bernoulli_ratio(lambda));
            qa.push((dcoef / dv) * bernoulli_ratio(-lambda));
        }
        p.push(pa);
        q.push(qa);
    }
    Ok(FluxCoeffs { grid, p, q })
}

impl FluxCoeffs {
    /// `L f`: net flux divergence per cell, `sum_axes (F_right - F_left)/dv`.
    pub(crate) fn apply(&self, f: &[f64]) -> Vec<f64> {
        let grid = &self.grid;
        let n1 = grid.count(0);
        let n2 = if grid.dim() == 2 { grid.count(1) } else { 1 };
        let mut out = vec![0.0; f.len()];
        // axis 0: interfaces i+1/2 stored at i + (n1-1) j
        let dv0 = grid.step(0);
        let nf0 = n1 - 1;
        for j in 0..n2 {
            for i in 0..n1 {
                let c = grid.linear(i, j);
                let mut div = 0.0;
                if i + 1 < n1 {
                    let m = i + nf0 * j;
                    div += self.q[0][m] * f[c + 1] + self.p[0][m] * f[c];
                }
                if i > 0 {
                    let m = (i - 1) + nf0 * j;
                    div -= self.q[0][m] * f[c] + self.p[0][m] * f[c - 1];
                }
                out[c] += div / dv0;
            }
        }
        if grid.dim() == 2 {
            let dv1 = grid.step(1);
            for j in 0..n2 {
                for i in 0..n1 {
                    let c = grid.linear(i, j);
                    let mut div = 0.0;
                    if j + 1 < n2 {
                        let m = i + n1 * j;
                        div += self.q[1][m] * f[c + n1] + self.p[1][m] * f[c];
                    }
                    if j > 0 {
                        let m = i + n1 * (j - 1);
                        div -= self.q[1][m] * f[c] + self.p[1][m] * f[c - n1];
                    }
                    out[c] += div / dv1;
                }
            }
        }
        out
    }

    /// Diagonal of `I - theta L`.
    fn stage_diagonal(&self, theta: f64) -> Vec<f64> {
        let grid = &self.grid;
        let n1 = grid.count(0);
        let n2 = if grid.dim() == 2 { grid.count(1) } else { 1 };
        let mut diag = vec![1.0; grid.num_cells()];
        let dv0 = grid.step(0);
        let nf0 = n1 - 1;
        for j in 0..n2 {
            for i in 0..n1 {
                let c = grid.linear(i, j);
                let mut l = 0.0;
                if i + 1 < n1 {
                    l += self.p[0][i + nf0 * j];
                }
                if i > 0 {
                    l -= self.q[0][(i - 1) + nf0 * j];
                }
                diag[c] -= theta * l / dv0;
            }
        }
        if grid.dim() == 2 {
            let dv1 = grid.step(1);
            for j in 0..n2 {
                for i in 0..n1 {
                    let c = grid.linear(i, j);
                    let mut l = 0.0;
                    if j + 1 < n2 {
                        l += self.p[1][i + n1 * j];
                    }
                    if j > 0 {
                        l -= self.q[1][i + n1 * (j - 1)];
                    }
                    diag[c] -= theta * l / dv1;
                }
            }
        }
        diag
    }

    /// Solves `(I - theta L) x = rhs`.
    pub(crate) fn solve_stage(&self, theta: f64, rhs: &[f64]) -> Result<Vec<f64>> {
        if self.grid.dim() == 1 {
            self.solve_tridiagonal(theta, rhs)
        } else {
            self.solve_krylov(theta, rhs)
        }
    }

    fn solve_tridiagonal(&self, theta: f64, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = rhs.len();
        let dv = self.grid.step(0);
        let r = theta / dv;
        // sub[i] couples to cell i-1, sup[i] to cell i+1
        let mut diag = self.stage_diagonal(theta);
        let sub: Vec<f64> = (0..n)
            .map(|i| if i > 0 { r * self.p[0][i - 1] } else { 0.0 })
            .collect();
        let sup: Vec<f64> = (0..n)
            .map(|i| if i + 1 < n { -r * self.q[0][i] } else { 0.0 })
            .collect();
        let mut x = rhs.to_vec();
        // forward elimination; pivots stay positive for these matrices
        for i in 1..n {
            let piv = diag[i - 1];
            if !(piv.abs() > 1e-300) {
                return Err(Error::LinearSolve(format!("zero pivot at row {i}")));
            }
            let w = sub[i] / piv;
            diag[i] -= w * sup[i - 1];
            x[i] -= w * x[i - 1];
        }
        let last = diag[n - 1];
        if !(last.abs() > 1e-300) {
            return Err(Error::LinearSolve("zero pivot at last row".into()));
        }
        x[n - 1] /= last;
        for i in (0..n - 1).rev() {
            x[i] = (x[i] - sup[i] * x[i + 1]) / diag[i];
        }
        Ok(x)
    }

    /// Diagonally scaled BiCGSTAB, matrix-free, relative residual 1e-12.
    fn solve_krylov(&self, theta: f64, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = rhs.len();
        let diag = self.stage_diagonal(theta);
        let apply = |x: &[f64]| -> Vec<f64> {
            let lx = self.apply(x);
            (0..n).map(|c| (x[c] - theta * lx[c]) / diag[c]).collect()
        };
        let b: Vec<f64> = (0..n).map(|c| rhs[c] / diag[c]).collect();
        let nb = norm2(&b);
        if nb == 0.0 {
            return Ok(vec![0.0; n]);
        }
        let tol = 0.5e-12 * nb;
        let mut x = b.clone();
        let ax = apply(&x);
        let mut r: Vec<f64> = (0..n).map(|c| b[c] - ax[c]).collect();
        let rhat = r.clone();
        let mut rho = 1.0;
        let mut alpha = 1.0;
        let mut omega = 1.0;
        let mut v = vec![0.0; n];
        let mut pvec = vec![0.0; n];
        let max_iter = 500;
        let mut converged = norm2(&r) <= tol;
        let mut it = 0;
        while !converged && it < max_iter {
            it += 1;
            let rho1 = dot(&rhat, &r);
            if rho1.abs() < 1e-290 {
                break;
            }
            let beta = (rho1 / rho) * (alpha / omega);
            for c in 0..n {
                pvec[c] = r[c] + beta * (pvec[c] - omega * v[c]);
            }
            v = apply(&pvec);
            alpha = rho1 / dot(&rhat, &v);
            let s: Vec<f64> = (0..n).map(|c| r[c] - alpha * v[c]).collect();
            if norm2(&s) <= tol {
                for c in 0..n {
                    x[c] += alpha * pvec[c];
                }
                break;
            }
            let t = apply(&s);
            let tt = dot(&t, &t);
            if tt == 0.0 {
                break;
            }
            omega = dot(&t, &s) / tt;
            for c in 0..n {
                x[c] += alpha * pvec[c] + omega * s[c];
            }
            r = (0..n).map(|c| s[c] - omega * t[c]).collect();
            rho = rho1;
            converged = norm2(&r) <= tol;
        }
        // verify the true residual against the unscaled system
        let lx = self.apply(&x);
        let mut rr = 0.0;
        let mut bb = 0.0;
        for c in 0..n {
            let res = rhs[c] - (x[c] - theta * lx[c]);
            rr += res * res;
            bb += rhs[c] * rhs[c];
        }
        if rr.sqrt() > 1e-12 * bb.sqrt().max(1e-300) {
            return Err(Error::LinearSolve(format!(
                "stage solve stalled: relative residual {:.3e} after {it} iterations",
                rr.sqrt() / bb.sqrt().max(1e-300)
            )));
        }
        Ok(x)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// One step of the two-stage scheme: coefficients at `(f^n, u^n)` drive an
/// explicit slope, a predictor state refreshes the coefficients at
/// `u^{n+1}`, a trapezoidal stage solve closes the step, and the update
/// applies both slopes in flux form so the cell totals telescope.
fn step_second_order(
    model: &ModelSpec,
    f: &ScalarField,
    u_now: &VectorField,
    u_next: &VectorField,
    dt: f64,
) -> Result<ScalarField> {
    let grid = f.grid().clone();
    let coeffs1 = build_flux_coeffs(model, f, u_now)?;
    let s1 = coeffs1.apply(f.values());

    let mut predictor = f.values().to_vec();
    for (c, v) in predictor.iter_mut().enumerate() {
        *v += dt * s1[c];
    }
    let predictor = ScalarField::new(grid.clone(), predictor)?;
    let coeffs2 = build_flux_coeffs(model, &predictor, u_next)?;

    let rhs: Vec<f64> = f
        .values()
        .iter()
        .zip(&s1)
        .map(|(fv, sv)| fv + 0.5 * dt * sv)
        .collect();
    let stage = coeffs2.solve_stage(0.5 * dt, &rhs)?;
    let s2 = coeffs2.apply(&stage);

    let next: Vec<f64> = (0..s1.len())
        .map(|c| f.values()[c] + 0.5 * dt * (s1[c] + s2[c]))
        .collect();
    ScalarField::new(grid, next)
}

/// One semi-implicit step: coefficients frozen at `(f^n, u^n)`, flux
/// operator taken implicitly, update applied in flux form.
fn step_first_order(
    model: &ModelSpec,
    f: &ScalarField,
    u_now: &VectorField,
    dt: f64,
) -> Result<ScalarField> {
    let grid = f.grid().clone();
    let coeffs = build_flux_coeffs(model, f, u_now)?;
    let stage = coeffs.solve_stage(dt, f.values())?;
    let s = coeffs.apply(&stage);
    let next: Vec<f64> = (0..s.len())
        .map(|c| f.values()[c] + dt * s[c])
        .collect();
    ScalarField::new(grid, next)
}

/// Advances one time step at the requested scheme order.
pub fn step(
    model: &ModelSpec,
    f: &ScalarField,
    u_now: &VectorField,
    u_next: &VectorField,
    dt: f64,
    order: u32,
) -> Result<ScalarField> {
    match order {
        1 => step_first_order(model, f, u_now, dt),
        2 => step_second_order(model, f, u_now, u_next, dt),
        _ => Err(Error::Config(format!("unsupported scheme order {order}"))),
    }
}

/// Density trajectory plus the invariants it is judged by.
pub struct ForwardRun {
    pub trajectory: Trajectory,
    /// Most negative cell value over all time nodes.
    pub f_min: f64,
    /// Largest deviation of the grid mass from one over all time nodes.
    pub mass_err: f64,
}

/// Marches `f0` over the whole time grid under the control trajectory.
pub fn solve_forward(
    model: &ModelSpec,
    time: &TimeGrid,
    f0: &ScalarField,
    u: &ControlTrajectory,
    order: u32,
) -> Result<ForwardRun> {
    if u.entries.len() != time.num_nodes() {
        return Err(Error::MeshMismatch(format!(
            "control has {} nodes, time grid has {}",
            u.entries.len(),
            time.num_nodes()
        )));
    }
    let mut entries = Vec::with_capacity(time.num_nodes());
    let mut f_min = f0.min();
    let mut mass_err = (integrate(f0) - 1.0).abs();
    entries.push(f0.clone());
    for n in 0..time.steps {
        let next = step(
            model,
            &entries[n],
            &u.entries[n],
            &u.entries[n + 1],
            time.dt,
            order,
        )?;
        if !next.is_finite() {
            return Err(Error::NonFinite(format!("density after step {}", n + 1)));
        }
        f_min = f_min.min(next.min());
        mass_err = mass_err.max((integrate(&next) - 1.0).abs());
        entries.push(next);
    }
    Ok(ForwardRun {
        trajectory: Trajectory::new(*time, entries)?,
        f_min,
        mass_err,
    })
}

/// Steady-state march outcome.
pub struct StationaryRun {
    pub f: ScalarField,
    pub steps: usize,
    /// Final `sup |f^{n+1} - f^n| / dt`.
    pub residual: f64,
}

/// Runs the uncontrolled dynamics until the per-time change stalls:
/// `sup |f^{n+1} - f^n| / dt <= tol`, capped at `max_steps`.
pub fn stationary_state(
    model: &ModelSpec,
    f0: &ScalarField,
    dt: f64,
    max_steps: usize,
    tol: f64,
    order: u32,
) -> Result<StationaryRun> {
    let grid = f0.grid().clone();
    let u = VectorField::zero(grid);
    let mut f = f0.clone();
    let mut residual = f64::INFINITY;
    for n in 0..max_steps {
        let next = step(model, &f, &u, &u, dt, order)?;
        if !next.is_finite() {
            return Err(Error::NonFinite(format!("density after step {}", n + 1)));
        }
        residual = next.sup_distance(&f) / dt;
        f = next;
        if residual <= tol {
            return Ok(StationaryRun {
                f,
                steps: n + 1,
                residual,
            });
        }
    }
    Ok(StationaryRun {
        f,
        steps: max_steps,
        residual,
    })
}
