//! Quadrature of the pairwise interaction integrals.
//!
//! The drift carries `I_k[f](p) = int P_k(p, v*) (v*_k - p_k) f(v*) dv*`
//! and the adjoint reaction carries the argument-swapped
//! `Q_k[f, g](p) = int P_k(v*, p) (p_k - v*_k) f(v*) g(v*) dv*`.
//! Both reduce to midpoint sums over cell centers. Structure is exploited
//! per kernel family: the zero kernel short-circuits, the constant kernel
//! collapses to two moments, and the contact kernel's indicator window is
//! resolved with per-row prefix sums so each evaluation point costs one
//! pass over contact levels instead of one pass over all cells.

use crate::fields::{ScalarField, VectorField};
use crate::mesh::{Grid, Point};
use crate::model::{KernelShape, KernelSpec, ModelSpec};

/// Which argument slot of `P_k` the evaluation point occupies.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Orient {
    /// `sum_c P(p, v_c) (v_{c,k} - p_k) q_c dV` (drift orientation).
    PointFirst,
    /// `sum_c P(v_c, p) (p_k - v_{c,k}) q_c dV` (adjoint orientation).
    PointSecond,
}

fn direct_quadrature(
    model: &ModelSpec,
    k: usize,
    grid: &Grid,
    q: &[f64],
    pts: &[Point],
    orient: Orient,
) -> Vec<f64> {
    let dvol = grid.cell_volume();
    let centers: Vec<Point> = (0..grid.num_cells()).map(|c| grid.point(c)).collect();
    pts.iter()
        .map(|p| {
            let mut s = 0.0;
            for (c, qc) in q.iter().enumerate() {
                if *qc == 0.0 {
                    continue;
                }
                let vc = &centers[c];
                s += match orient {
                    Orient::PointFirst => model.kernel_eval(k, p, vc) * (vc[k] - p[k]) * qc,
                    Orient::PointSecond => model.kernel_eval(k, vc, p) * (p[k] - vc[k]) * qc,
                };
            }
            s * dvol
        })
        .collect()
}

/// Contact-kernel path. The kernel acts on axis 0 of a 2D grid with weight
/// `w = b_2/(a_2 + b_2)` for arguments `(a, b)` and window `|a_1 - b_1| <=
/// delta w`. For a fixed evaluation point and contact row the weight is
/// constant, so the row's windowed sums come from prefix sums of `q` and
/// `v_1 q`. Window edges found arithmetically are corrected with the exact
/// kernel predicate so ties land exactly as in the direct path.
fn contacts_windowed(
    grid: &Grid,
    delta: f64,
    q: &[f64],
    pts: &[Point],
    orient: Orient,
) -> Vec<f64> {
    let n1 = grid.count(0);
    let n2 = grid.count(1);
    let c1 = grid.centers(0);
    let dv1 = grid.step(0);
    let dvol = grid.cell_volume();

    // prefix[j][i] pairs: (sum q, sum v1 q) over the first i cells of row j
    let mut p0 = vec![0.0; (n1 + 1) * n2];
    let mut p1 = vec![0.0; (n1 + 1) * n2];
    for j in 0..n2 {
        let row = j * (n1 + 1);
        for i in 0..n1 {
            let qc = q[grid.linear(i, j)];
            p0[row + i + 1] = p0[row + i] + qc;
            p1[row + i + 1] = p1[row + i] + c1[i] * qc;
        }
    }

    pts.iter()
        .map(|p| {
            let mut s = 0.0;
            for j in 0..n2 {
                let c2 = grid.center(1, j);
                let w = match orient {
                    Orient::PointFirst => c2 / (p[1] + c2),
                    Orient::PointSecond => p[1] / (c2 + p[1]),
                };
                let dw = delta * w;
                // candidate window from arithmetic, then exact fixup
                let last = n1 as isize - 1;
                let mut lo = (((p[0] - dw) - c1[0]) / dv1).floor() as isize;
                let mut hi = (((p[0] + dw) - c1[0]) / dv1).ceil() as isize;
                lo = lo.clamp(0, last);
                hi = hi.clamp(0, last);
                while lo > 0 && (p[0] - c1[lo as usize - 1]).abs() <= dw {
                    lo -= 1;
                }
                while hi < last && (p[0] - c1[hi as usize + 1]).abs() <= dw {
                    hi += 1;
                }
                while lo <= hi && (p[0] - c1[lo as usize]).abs() > dw {
                    lo += 1;
                }
                while hi >= lo && (p[0] - c1[hi as usize]).abs() > dw {
                    hi -= 1;
                }
                if hi < lo {
                    continue;
                }
                let row = j * (n1 + 1);
                let s0 = p0[row + hi as usize + 1] - p0[row + lo as usize];
                let s1 = p1[row + hi as usize + 1] - p1[row + lo as usize];
                s += match orient {
                    Orient::PointFirst => w * (s1 - p[0] * s0),
                    Orient::PointSecond => w * (p[0] * s0 - s1),
                };
            }
            s * dvol
        })
        .collect()
}

fn evaluate(
    model: &ModelSpec,
    k: usize,
    grid: &Grid,
    q: &[f64],
    pts: &[Point],
    orient: Orient,
) -> Vec<f64> {
    match model.kernel_shape(k) {
        KernelShape::Zero => vec![0.0; pts.len()],
        KernelShape::ConstantOne => {
            let dvol = grid.cell_volume();
            let mut m0 = 0.0;
            let mut m1 = 0.0;
            for (c, qc) in q.iter().enumerate() {
                m0 += qc;
                m1 += grid.point(c)[k] * qc;
            }
            m0 *= dvol;
            m1 *= dvol;
            match orient {
                Orient::PointFirst => pts.iter().map(|p| m1 - p[k] * m0).collect(),
                Orient::PointSecond => pts.iter().map(|p| p[k] * m0 - m1).collect(),
            }
        }
        KernelShape::General => {
            if let KernelSpec::Contacts { delta } = model.kernels[k] {
                contacts_windowed(grid, delta, q, pts, orient)
            } else {
                direct_quadrature(model, k, grid, q, pts, orient)
            }
        }
    }
}

/// `I_k[f]` at the given points.
pub fn interaction_term(
    model: &ModelSpec,
    k: usize,
    f: &ScalarField,
    pts: &[Point],
) -> Vec<f64> {
    evaluate(model, k, f.grid(), f.values(), pts, Orient::PointFirst)
}

/// `Q_k[f, g]` at every cell center; `g` is the `k`-th adjoint gradient
/// component on the same grid.
pub fn adjoint_coupling(
    model: &ModelSpec,
    k: usize,
    f: &ScalarField,
    g: &ScalarField,
) -> ScalarField {
    let grid = f.grid().clone();
    let q: Vec<f64> = f
        .values()
        .iter()
        .zip(g.values())
        .map(|(a, b)| a * b)
        .collect();
    let pts: Vec<Point> = (0..grid.num_cells()).map(|c| grid.point(c)).collect();
    let vals = evaluate(model, k, &grid, &q, &pts, Orient::PointSecond);
    ScalarField::new(grid, vals).expect("values built per cell")
}

/// Full drift `G_k = I_k[f] + h_k + u_k` at cell centers.
pub fn drift_field(model: &ModelSpec, f: &ScalarField, u: &VectorField) -> VectorField {
    let grid = f.grid().clone();
    let pts: Vec<Point> = (0..grid.num_cells()).map(|c| grid.point(c)).collect();
    let mut comps = Vec::with_capacity(grid.dim());
    for k in 0..grid.dim() {
        let mut vals = interaction_term(model, k, f, &pts);
        let uk = u.component(k).values();
        for (c, v) in vals.iter_mut().enumerate() {
            *v += model.local_drift(k, &pts[c]) + uk[c];
        }
        comps.push(ScalarField::new(grid.clone(), vals).expect("values built per cell"));
    }
    VectorField::new(comps).expect("components share the grid")
}

/// Sup over cells and axes of the advection speed `|-G_k + D_k'|`; feeds
/// the time-step diagnostics.
pub fn advection_sup(model: &ModelSpec, f: &ScalarField, u: &VectorField) -> f64 {
    let g = drift_field(model, f, u);
    let grid = f.grid();
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
