//! Backward value solver.
//!
//! The adjoint equation is integrated backward in time along stochastic
//! characteristics: for each cell center `v` the scheme averages the later
//! value surface over quadrature feet `y = v + drift + sqrt(2 dt D(v)) e`,
//! where the offsets `e` take components in `{0, +-sqrt(3)}` with tensor
//! weights `(2/3, 1/6, 1/6)` (a three-point match of the Gaussian moments
//! through order five). The drift part uses the trapezoidal implicit
//! relation `y = v + (dt/2)(G^n(v) + G^{n+1}(y))`, resolved by an explicit
//! predictor plus a configurable number of corrector sweeps; `G^{n+1}` is
//! interpolated at iterates clamped into the box. Feet that leave the
//! domain re-enter through the zero-flux boundary: each escaped component
//! is placed `cbar sqrt(dt)` inside the violated wall.
//!
//! The running reward enters trapezoidally as well: the later level's
//! reaction is interpolated at the feet and the current level's reaction,
//! which depends on the unknown value through the nonlocal coupling, is
//! resolved by a sup-norm fixed point. The solver keeps a rolling cache of
//! the later level's drift and reaction so each level is assembled once.

use crate::fields::{
    discrete_gradient, ControlTrajectory, ScalarField, Trajectory, VectorField,
};
use crate::interp::interp_eval;
use crate::mesh::{Domain, Point, TimeGrid};
use crate::model::{ModelSpec, SchemeSpec, SlFixedPoint};
use crate::nonlocal::{adjoint_coupling, drift_field};
use crate::{Error, Result};

/// Offsets and weights of the Gaussian quadrature, one entry per foot.
fn quadrature(dim: usize) -> (Vec<Point>, Vec<f64>) {
    let s = 3.0f64.sqrt();
    let nodes = [0.0, s, -s];
    let weights = [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0];
    if dim == 1 {
        (
            nodes.iter().map(|&e| [e, 0.0]).collect(),
            weights.to_vec(),
        )
    } else {
        let mut pts = Vec::with_capacity(9);
        let mut w = Vec::with_capacity(9);
        for (i, &ex) in nodes.iter().enumerate() {
            for (j, &ey) in nodes.iter().enumerate() {
                pts.push([ex, ey]);
                w.push(weights[i] * weights[j]);
            }
        }
        (pts, w)
    }
}

fn clamp_point(domain: &Domain, y: &Point) -> Point {
    let mut out = *y;
    for k in 0..domain.dim() {
        out[k] = out[k].clamp(domain.lo(k), domain.hi(k));
    }
    out
}

/// Zero-flux re-entry: escaped components are moved `margin` inside the
/// wall they crossed; interior components are untouched.
pub fn reflect_point(domain: &Domain, margin: f64, y: &Point) -> Point {
    let mut out = *y;
    for k in 0..domain.dim() {
        if out[k] < domain.lo(k) {
            out[k] = domain.lo(k) + margin;
        } else if out[k] > domain.hi(k) {
            out[k] = domain.hi(k) - margin;
        }
    }
    out
}

/// Value-independent part of the reaction: `(1/2)(sum_k s_k (v_k -
/// vbar_k)^2 + gamma |u(v)|^2)`.
fn reaction_static(model: &ModelSpec, u: &VectorField) -> ScalarField {
    let grid = u.grid().clone();
    let mut vals = Vec::with_capacity(grid.num_cells());
    for c in 0..grid.num_cells() {
        let p = grid.point(c);
        let mut uu = 0.0;
        for k in 0..grid.dim() {
            let uk = u.component(k).values()[c];
            uu += uk * uk;
        }
        vals.push(0.5 * (model.tracking_density(&p) + model.gamma * uu));
    }
    ScalarField::new(grid, vals).expect("values built per cell")
}

/// Value-coupled part of the reaction: `sum_k Q_k[f, d_k psi]`.
fn reaction_coupling(model: &ModelSpec, f: &ScalarField, psi: &ScalarField) -> Result<ScalarField> {
    let grad = discrete_gradient(psi)?;
    let mut total = ScalarField::constant(f.grid().clone(), 0.0);
    for k in 0..f.grid().dim() {
        let q = adjoint_coupling(model, k, f, grad.component(k));
        total.axpy(1.0, &q);
    }
    Ok(total)
}

/// Full reaction `R[f, psi, u]` at cell centers.
pub(crate) fn reaction(
    model: &ModelSpec,
    f: &ScalarField,
    psi: &ScalarField,
    u: &VectorField,
) -> Result<ScalarField> {
    let mut r = reaction_static(model, u);
    r.axpy(1.0, &reaction_coupling(model, f, psi)?);
    Ok(r)
}

/// Quadrature average of the later level interpolated at the reflected
/// characteristic feet: `sum_l w_l (I[psi](y~_l) + c_r I[r](y~_l))`.
/// `g_now` enters the foot relation explicitly, `g_next` implicitly.
#[allow(clippy::too_many_arguments)]
fn foot_average(
    model: &ModelSpec,
    dt: f64,
    margin: f64,
    rule: &SlFixedPoint,
    second_order: bool,
    g_now: Option<&VectorField>,
    g_next: &VectorField,
    psi_next: &ScalarField,
    r_next: &ScalarField,
    r_weight: f64,
) -> Result<Vec<f64>> {
    let grid = psi_next.grid().clone();
    let d = grid.dim();
    let domain = grid.domain();
    let (offsets, weights) = quadrature(d);
    let mut base = vec![0.0; grid.num_cells()];
    for c in 0..grid.num_cells() {
        let v = grid.point(c);
        let mut gn = [0.0, 0.0];
        for k in 0..d {
            gn[k] = match g_now {
                Some(g) => g.component(k).values()[c],
                None => g_next.component(k).values()[c],
            };
        }
        let mut noise_scale = [0.0, 0.0];
        for k in 0..d {
            noise_scale[k] = (2.0 * dt * model.diffusion(k, &v)).sqrt();
        }
        let mut acc = 0.0;
        for (l, e) in offsets.iter().enumerate() {
            let mut y: Point = [0.0, 0.0];
            for k in 0..d {
                y[k] = v[k] + dt * gn[k] + noise_scale[k] * e[k];
            }
            if second_order {
                // trapezoidal foot: y = v + (dt/2)(G^n(v) + G^{n+1}(y))
                let sweeps = match rule {
                    SlFixedPoint::Corrections { count } => *count,
                    SlFixedPoint::Tolerance { max_iter, .. } => *max_iter,
                };
                for _ in 0..sweeps {
                    let yc = clamp_point(domain, &y);
                    let mut ynew: Point = [0.0, 0.0];
                    let mut moved: f64 = 0.0;
                    for k in 0..d {
                        let gi = interp_eval(g_next.component(k), &yc)?;
                        ynew[k] = v[k] + 0.5 * dt * (gn[k] + gi) + noise_scale[k] * e[k];
                        moved = moved.max((ynew[k] - y[k]).abs());
                    }
                    y = ynew;
                    if let SlFixedPoint::Tolerance { tol, .. } = rule {
                        if moved <= *tol {
                            break;
                        }
                    }
                }
            }
            let yt = reflect_point(domain, margin, &y);
            let mut term = interp_eval(psi_next, &yt)?;
            if r_weight != 0.0 {
                term += r_weight * interp_eval(r_next, &yt)?;
            }
            acc += weights[l] * term;
        }
        base[c] = acc;
    }
    Ok(base)
}

/// One trapezoidal backward step; returns the new value surface and the
/// reaction it was closed with (which the next level reuses).
#[allow(clippy::too_many_arguments)]
fn sl_step_second(
    model: &ModelSpec,
    dt: f64,
    margin: f64,
    rule: &SlFixedPoint,
    f_now: &ScalarField,
    u_now: &VectorField,
    g_now: &VectorField,
    g_next: &VectorField,
    psi_next: &ScalarField,
    r_next: &ScalarField,
) -> Result<(ScalarField, ScalarField)> {
    let grid = psi_next.grid().clone();
    let base = foot_average(
        model,
        dt,
        margin,
        rule,
        true,
        Some(g_now),
        g_next,
        psi_next,
        r_next,
        0.5 * dt,
    )?;
    let stat = reaction_static(model, u_now);
    let mut psi = psi_next.clone();
    for _ in 0..50 {
        let mut r = stat.clone();
        r.axpy(1.0, &reaction_coupling(model, f_now, &psi)?);
        let vals: Vec<f64> = base
            .iter()
            .zip(r.values())
            .map(|(b, rv)| b + 0.5 * dt * rv)
            .collect();
        let next = ScalarField::new(grid.clone(), vals)?;
        let inc = next.sup_distance(&psi);
        psi = next;
        if inc < 1e-12 {
            return Ok((psi, r));
        }
    }
    Err(Error::FixedPoint(
        "reaction closure exceeded 50 sweeps".into(),
    ))
}

/// One explicit backward step: feet from the later drift at the centers,
/// reaction taken wholly from the later level.
fn sl_step_first(
    model: &ModelSpec,
    dt: f64,
    margin: f64,
    g_next: &VectorField,
    psi_next: &ScalarField,
    r_next: &ScalarField,
) -> Result<ScalarField> {
    let grid = psi_next.grid().clone();
    let rule = SlFixedPoint::Corrections { count: 0 };
    let base = foot_average(
        model, dt, margin, &rule, false, None, g_next, psi_next, r_next, 0.0,
    )?;
    let vals: Vec<f64> = base
        .iter()
        .zip(r_next.values())
        .map(|(b, rv)| b + dt * rv)
        .collect();
    ScalarField::new(grid, vals)
}

/// Value trajectory plus the advection diagnostic.
pub struct BackwardRun {
    pub psi: Trajectory,
    /// Sup over time levels and cells of `|-G_k + D_k'|`, for checking the
    /// advective time-step bound after the fact.
    pub kappa: f64,
}

fn speed_sup(model: &ModelSpec, g: &VectorField) -> f64 {
    let grid = g.grid();
    let mut m: f64 = 0.0;
    for k in 0..grid.dim() {
        let gk = g.component(k).values();
        for c in 0..grid.num_cells() {
            let p = grid.point(c);
            m = m.max((-gk[c] + model.diffusion_deriv(k, &p)).abs());
        }
    }
    m
}

/// Integrates the value equation backward from a zero terminal surface
/// over the whole time grid, given the density and control trajectories.
pub fn solve_backward(
    model: &ModelSpec,
    time: &TimeGrid,
    f: &Trajectory,
    u: &ControlTrajectory,
    scheme: &SchemeSpec,
) -> Result<BackwardRun> {
    let nodes = time.num_nodes();
    if f.entries.len() != nodes || u.entries.len() != nodes {
        return Err(Error::MeshMismatch(format!(
            "backward solve needs {nodes} density and control nodes, got {} and {}",
            f.entries.len(),
            u.entries.len()
        )));
    }
    let grid = f.entries[0].grid().clone();
    let margin = scheme.reflection_cbar * time.dt.sqrt();
    for k in 0..grid.dim() {
        let half = 0.5 * (grid.domain().hi(k) - grid.domain().lo(k));
        if margin > half {
            return Err(Error::ReflectionTooWide(margin, half));
        }
    }
    let nt = time.steps;
    let mut psis = vec![ScalarField::constant(grid.clone(), 0.0); nodes];
    let mut g_next = drift_field(model, &f.entries[nt], &u.entries[nt]);
    let mut kappa = speed_sup(model, &g_next);
    let mut r_next = reaction(model, &f.entries[nt], &psis[nt], &u.entries[nt])?;
    for n in (0..nt).rev() {
        let g_now = drift_field(model, &f.entries[n], &u.entries[n]);
        kappa = kappa.max(speed_sup(model, &g_now));
        let (psi_n, r_n) = match scheme.order {
            1 => {
                let psi_n = sl_step_first(
                    model,
                    time.dt,
                    margin,
                    &g_next,
                    &psis[n + 1],
                    &r_next,
                )?;
                let r_n = reaction(model, &f.entries[n], &psi_n, &u.entries[n])?;
                (psi_n, r_n)
            }
            _ => sl_step_second(
                model,
                time.dt,
                margin,
                &scheme.sl_fixed_point,
                &f.entries[n],
                &u.entries[n],
                &g_now,
                &g_next,
                &psis[n + 1],
                &r_next,
            )?,
        };
        if !psi_n.is_finite() {
            return Err(Error::NonFinite(format!("value surface at node {n}")));
        }
        psis[n] = psi_n;
        r_next = r_n;
        g_next = g_now;
    }
    Ok(BackwardRun {
        psi: Trajectory::new(*time, psis)?,
        kappa,
    })
}
