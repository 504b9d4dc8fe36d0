//! Grid functions, control fields and time trajectories, with the small
//! calculus the solvers need: midpoint integrals, relative error norms,
//! one-sided/central difference gradients and space-time inner products.
//!
//! All reductions run in a fixed sequential order so repeated runs of the
//! same configuration are bit-identical.

use crate::mesh::{Grid, TimeGrid};
use crate::{Error, Result};
use std::io::Write;
use std::sync::Arc;

/// Scalar values at cell centers, row-major (`i + N_1 * j`).
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.num_cells() {
            return Err(Error::MeshMismatch(format!(
                "{} values for {} cells",
                values.len(),
                grid.num_cells()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Self {
        let n = grid.num_cells();
        Self {
            grid,
            values: vec![c; n],
        }
    }

    /// Evaluates `f` at every cell center.
    pub fn from_fn<F: FnMut(&[f64; 2]) -> f64>(grid: Arc<Grid>, mut f: F) -> Self {
        let values = (0..grid.num_cells()).map(|c| f(&grid.point(c))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Largest absolute difference against `other`.
    pub fn sup_distance(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `self + c * other`, elementwise.
    pub fn axpy(&mut self, c: f64, other: &ScalarField) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
    }

    pub fn scale(&mut self, c: f64) {
        for a in self.values.iter_mut() {
            *a *= c;
        }
    }
}

/// One scalar component per axis, on a shared grid.
#[derive(Clone, Debug)]
pub struct VectorField {
    components: Vec<ScalarField>,
}

impl VectorField {
    pub fn new(components: Vec<ScalarField>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::MeshMismatch("vector field with no components".into()));
        }
        let g = components[0].grid().clone();
        if components.len() != g.dim() {
            return Err(Error::MeshMismatch(format!(
                "{} components on a {}-dimensional grid",
                components.len(),
                g.dim()
            )));
        }
        for c in &components[1..] {
            if !c.grid().same_mesh(&g) {
                return Err(Error::MeshMismatch("components on different grids".into()));
            }
        }
        Ok(Self { components })
    }

    pub fn zero(grid: Arc<Grid>) -> Self {
        let d = grid.dim();
        Self {
            components: (0..d)
                .map(|_| ScalarField::constant(grid.clone(), 0.0))
                .collect(),
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.components[0].grid()
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, k: usize) -> &ScalarField {
        &self.components[k]
    }

    pub fn component_mut(&mut self, k: usize) -> &mut ScalarField {
        &mut self.components[k]
    }

    pub fn axpy(&mut self, c: f64, other: &VectorField) {
        for (a, b) in self.components.iter_mut().zip(&other.components) {
            a.axpy(c, b);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(|c| c.is_finite())
    }

    /// Largest pointwise Euclidean norm over all cells.
    pub fn sup_norm(&self) -> f64 {
        let n = self.grid().num_cells();
        let mut m: f64 = 0.0;
        for c in 0..n {
            let s: f64 = self
                .components
                .iter()
                .map(|f| f.values()[c] * f.values()[c])
                .sum();
            m = m.max(s.sqrt());
        }
        m
    }

    /// Rescales cells where the pointwise Euclidean norm exceeds `bound`.
    pub fn clip_sup(&mut self, bound: f64) {
        let n = self.grid().num_cells();
        for c in 0..n {
            let s: f64 = self
                .components
                .iter()
                .map(|f| f.values()[c] * f.values()[c])
                .sum();
            let norm = s.sqrt();
            if norm > bound {
                let scale = bound / norm;
                for f in self.components.iter_mut() {
                    f.values_mut()[c] *= scale;
                }
            }
        }
    }
}

/// States indexed by time node `0..=steps`.
#[derive(Clone, Debug)]
pub struct TimeSeries<F> {
    pub time: TimeGrid,
    pub entries: Vec<F>,
}

pub type Trajectory = TimeSeries<ScalarField>;
pub type ControlTrajectory = TimeSeries<VectorField>;

impl<F> TimeSeries<F> {
    pub fn new(time: TimeGrid, entries: Vec<F>) -> Result<Self> {
        if entries.len() != time.num_nodes() {
            return Err(Error::MeshMismatch(format!(
                "{} states for {} time nodes",
                entries.len(),
                time.num_nodes()
            )));
        }
        Ok(Self { time, entries })
    }
}

impl<F: Clone> TimeSeries<F> {
    /// The same state at every node.
    pub fn constant(time: TimeGrid, state: F) -> Self {
        let entries = vec![state; time.num_nodes()];
        Self { time, entries }
    }
}

impl ControlTrajectory {
    pub fn zero(time: TimeGrid, grid: Arc<Grid>) -> Self {
        Self::constant(time, VectorField::zero(grid))
    }

    pub fn axpy(&mut self, c: f64, other: &ControlTrajectory) {
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            a.axpy(c, b);
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.entries.iter().map(|u| u.sup_norm()).fold(0.0, f64::max)
    }

    pub fn clip_sup(&mut self, bound: f64) {
        for u in self.entries.iter_mut() {
            u.clip_sup(bound);
        }
    }
}

/// Midpoint-rule integral `sum f_c * dV`.
pub fn integrate(f: &ScalarField) -> f64 {
    let dv = f.grid().cell_volume();
    let mut s = 0.0;
    for v in f.values() {
        s += v;
    }
    s * dv
}

/// Relative discrete error norms `(E2, Einf)` of `h` against `href`.
///
/// `E2 = ||h - href||_2 / ||href||_2` and likewise in the sup norm, with
/// plain vector norms (the uniform quadrature weight cancels). A zero
/// reference norm makes the corresponding entry the plain error norm.
pub fn error_metrics(h: &ScalarField, href: &ScalarField) -> Result<(f64, f64)> {
    if !h.grid().same_mesh(href.grid()) {
        return Err(Error::MeshMismatch("error_metrics on different grids".into()));
    }
    let mut d2 = 0.0;
    let mut r2 = 0.0;
    let mut di = 0.0f64;
    let mut ri = 0.0f64;
    for (a, b) in h.values().iter().zip(href.values()) {
        let e = a - b;
        d2 += e * e;
        r2 += b * b;
        di = di.max(e.abs());
        ri = ri.max(b.abs());
    }
    let e2 = if r2 > 0.0 {
        (d2 / r2).sqrt()
    } else {
        d2.sqrt()
    };
    let einf = if ri > 0.0 { di / ri } else { di };
    Ok((e2, einf))
}

/// Central differences in the interior, second-order one-sided stencils
/// `(-3 f_0 + 4 f_1 - f_2)/(2 dv)` (mirrored on the right) at boundary
/// cells. Exact on quadratics; needs at least 3 cells per axis.
pub fn discrete_gradient(f: &ScalarField) -> Result<VectorField> {
    let grid = f.grid().clone();
    let d = grid.dim();
    for k in 0..d {
        if grid.count(k) < 3 {
            return Err(Error::InvalidGrid(format!(
                "gradient needs at least 3 cells along axis {k}"
            )));
        }
    }
    let n1 = grid.count(0);
    let n2 = if d == 2 { grid.count(1) } else { 1 };
    let v = f.values();
    let mut comps = Vec::with_capacity(d);
    for k in 0..d {
        let dv = grid.step(k);
        let (nk, stride) = if k == 0 { (n1, 1) } else { (n2, n1) };
        let mut out = vec![0.0; v.len()];
        let lines = v.len() / nk;
        for line in 0..lines {
            // base index of this 1D line through the grid
            let base = if k == 0 {
                line * n1
            } else {
                line // j varies along the line, i = line
            };
            let at = |i: usize| v[base + i * stride];
            for i in 0..nk {
                let g = if i == 0 {
                    (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * dv)
                } else if i == nk - 1 {
                    (3.0 * at(nk - 1) - 4.0 * at(nk - 2) + at(nk - 3)) / (2.0 * dv)
                } else {
                    (at(i + 1) - at(i - 1)) / (2.0 * dv)
                };
                out[base + i * stride] = g;
            }
        }
        comps.push(ScalarField::new(grid.clone(), out)?);
    }
    VectorField::new(comps)
}

/// Space-time inner product of two control trajectories: trapezoidal in
/// time (half weights at the first and last node), midpoint in space,
/// summed over components.
pub fn inner_product_spacetime(a: &ControlTrajectory, b: &ControlTrajectory) -> Result<f64> {
    if a.time != b.time {
        return Err(Error::MeshMismatch("trajectories on different time grids".into()));
    }
    if !a.entries[0].grid().same_mesh(b.entries[0].grid()) {
        return Err(Error::MeshMismatch("trajectories on different grids".into()));
    }
    let dvol = a.entries[0].grid().cell_volume();
    let nt = a.time.steps;
    let mut total = 0.0;
    for n in 0..=nt {
        let w = if n == 0 || n == nt { 0.5 } else { 1.0 };
        let (ua, ub) = (&a.entries[n], &b.entries[n]);
        let mut s = 0.0;
        for k in 0..ua.dim() {
            for (x, y) in ua.component(k).values().iter().zip(ub.component(k).values()) {
                s += x * y;
            }
        }
        total += w * s;
    }
    Ok(total * dvol * a.time.dt)
}

pub fn norm_spacetime(a: &ControlTrajectory) -> Result<f64> {
    Ok(inner_product_spacetime(a, a)?.sqrt())
}

/// Writes `v,value` (1D) or `v1,v2,value` (2D) rows with 17 significant
/// digits, one row per cell in linear index order.
pub fn write_csv<W: Write>(f: &ScalarField, w: &mut W) -> Result<()> {
    let grid = f.grid();
    if grid.dim() == 1 {
        writeln!(w, "v,value")?;
        for (c, val) in f.values().iter().enumerate() {
            writeln!(w, "{:.16e},{:.16e}", grid.center(0, c), val)?;
        }
    } else {
        writeln!(w, "v1,v2,value")?;
        for (c, val) in f.values().iter().enumerate() {
            let p = grid.point(c);
            writeln!(w, "{:.16e},{:.16e},{:.16e}", p[0], p[1], val)?;
        }
    }
    Ok(())
}
