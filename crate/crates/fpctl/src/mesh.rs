//! Cell-centered tensor grids on boxes, plus the uniform time grid.
//!
//! Axis `k` of a `d`-dimensional box `[a_1,b_1] x ... x [a_d,b_d]` is cut
//! into `N_k` uniform cells of width `dv_k = (b_k - a_k)/N_k` with centers
//! `v_{k,i} = a_k + dv_k (i + 1/2)`. Cells are addressed row-major: linear
//! index `i + N_1 * j`, first axis fastest. Only `d = 1` and `d = 2` are
//! supported.

use crate::{Error, Result};

/// Spatial point. One-dimensional problems use component 0 and keep
/// component 1 at zero.
pub type Point = [f64; 2];

/// Closed box domain in one or two dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    bounds: Vec<[f64; 2]>,
}

impl Domain {
    pub fn new(bounds: Vec<[f64; 2]>) -> Result<Self> {
        if bounds.is_empty() || bounds.len() > 2 {
            return Err(Error::InvalidGrid(format!(
                "domain must be 1- or 2-dimensional, got {}",
                bounds.len()
            )));
        }
        for (k, b) in bounds.iter().enumerate() {
            if !b[0].is_finite() || !b[1].is_finite() || b[0] >= b[1] {
                return Err(Error::InvalidGrid(format!(
                    "axis {}: need finite a < b, got [{}, {}]",
                    k, b[0], b[1]
                )));
            }
        }
        Ok(Self { bounds })
    }

    pub fn line(a: f64, b: f64) -> Result<Self> {
        Self::new(vec![[a, b]])
    }

    pub fn rectangle(a1: f64, b1: f64, a2: f64, b2: f64) -> Result<Self> {
        Self::new(vec![[a1, b1], [a2, b2]])
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn lo(&self, k: usize) -> f64 {
        self.bounds[k][0]
    }

    pub fn hi(&self, k: usize) -> f64 {
        self.bounds[k][1]
    }

    /// Whether `p` lies in the closed box (first `dim` components checked).
    pub fn contains(&self, p: &Point) -> bool {
        (0..self.dim()).all(|k| p[k] >= self.lo(k) && p[k] <= self.hi(k))
    }
}

/// Uniform cell-centered grid over a [`Domain`].
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    domain: Domain,
    counts: Vec<usize>,
    steps: Vec<f64>,
    centers: Vec<Vec<f64>>,
}

/// Builds the tensor grid with `counts[k]` cells along axis `k`.
pub fn build_grid(domain: &Domain, counts: &[usize]) -> Result<Grid> {
    if counts.len() != domain.dim() {
        return Err(Error::InvalidGrid(format!(
            "got {} cell counts for a {}-dimensional domain",
            counts.len(),
            domain.dim()
        )));
    }
    if counts.iter().any(|&n| n == 0) {
        return Err(Error::InvalidGrid("cell count must be positive".into()));
    }
    let mut steps = Vec::with_capacity(counts.len());
    let mut centers = Vec::with_capacity(counts.len());
    for k in 0..domain.dim() {
        let dv = (domain.hi(k) - domain.lo(k)) / counts[k] as f64;
        steps.push(dv);
        centers.push(
            (0..counts[k])
                .map(|i| domain.lo(k) + dv * (i as f64 + 0.5))
                .collect(),
        );
    }
    Ok(Grid {
        domain: domain.clone(),
        counts: counts.to_vec(),
        steps,
        centers,
    })
}

impl Grid {
    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn count(&self, k: usize) -> usize {
        self.counts[k]
    }

    pub fn step(&self, k: usize) -> f64 {
        self.steps[k]
    }

    pub fn min_step(&self) -> f64 {
        self.steps.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn num_cells(&self) -> usize {
        self.counts.iter().product()
    }

    /// Volume of one cell (all cells share it).
    pub fn cell_volume(&self) -> f64 {
        self.steps.iter().product()
    }

    pub fn center(&self, k: usize, i: usize) -> f64 {
        self.centers[k][i]
    }

    pub fn centers(&self, k: usize) -> &[f64] {
        &self.centers[k]
    }

    /// Linear index of cell `(i, j)`; `j` is ignored in 1D.
    pub fn linear(&self, i: usize, j: usize) -> usize {
        if self.dim() == 1 {
            i
        } else {
            i + self.counts[0] * j
        }
    }

    /// Inverse of [`Grid::linear`].
    pub fn split(&self, idx: usize) -> (usize, usize) {
        if self.dim() == 1 {
            (idx, 0)
        } else {
            (idx % self.counts[0], idx / self.counts[0])
        }
    }

    /// Coordinates of the center of cell `idx`.
    pub fn point(&self, idx: usize) -> Point {
        let (i, j) = self.split(idx);
        if self.dim() == 1 {
            [self.centers[0][i], 0.0]
        } else {
            [self.centers[0][i], self.centers[1][j]]
        }
    }

    /// Structural equality of the mesh (domain, counts, steps).
    pub fn same_mesh(&self, other: &Grid) -> bool {
        self == other
    }
}

/// Uniform time grid `t^n = n dt`, `n = 0..=steps`, covering `[0, horizon]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub horizon: f64,
    pub dt: f64,
    pub steps: usize,
}

impl TimeGrid {
    /// `steps = ceil(horizon/dt)`, guarded against ties landing one step
    /// high when `horizon/dt` is an integer up to rounding.
    pub fn new(horizon: f64, dt: f64) -> Result<Self> {
        if !(horizon > 0.0) || !(dt > 0.0) || !horizon.is_finite() || !dt.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "need horizon > 0 and dt > 0, got horizon={horizon}, dt={dt}"
            )));
        }
        let raw = horizon / dt;
        let steps = (raw * (1.0 - 1e-12)).ceil() as usize;
        let steps = steps.max(1);
        Ok(Self { horizon, dt, steps })
    }

    pub fn node(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    pub fn num_nodes(&self) -> usize {
        self.steps + 1
    }
}

/// Advective time-step bound `safety * dv1 dv2 / (kappa (dv1 + dv2))`
/// (in 1D `safety * dv / kappa`). `kappa` is twice the sup of the advection
/// speed `|-G + grad D|`; `kappa = 0` means no restriction and yields
/// `+inf`.
pub fn suggest_dt(grid: &Grid, kappa: f64, safety: f64) -> f64 {
    if kappa <= 0.0 {
        return f64::INFINITY;
    }
    match grid.dim() {
        1 => safety * grid.step(0) / kappa,
        _ => {
            let (d1, d2) = (grid.step(0), grid.step(1));
            safety * d1 * d2 / (kappa * (d1 + d2))
        }
    }
}

/// Heuristic ratio `(max D)^(1/3) dt / (T^(2/3) dv^(2/3))` relating the
/// time step to the interpolation error of the semi-Lagrangian sweep;
/// callers warn when it exceeds their threshold (0.5 by default).
pub fn sl_compatibility_ratio(grid: &Grid, time: &TimeGrid, d_max: f64) -> f64 {
    let dv = grid.min_step();
    d_max.cbrt() * time.dt / (time.horizon.powf(2.0 / 3.0) * dv.powf(2.0 / 3.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centers_quarter_grid() {
        let g = build_grid(&Domain::line(-1.0, 1.0).unwrap(), &[4]).unwrap();
        let want = [-0.75, -0.25, 0.25, 0.75];
        for (i, w) in want.iter().enumerate() {
            assert!((g.center(0, i) - w).abs() < 1e-15, "center {i}");
        }
        assert_eq!(g.num_cells(), 4);
        assert!((g.cell_volume() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn centers_two_cells_wide_interval() {
        let g = build_grid(&Domain::line(1.0, 40.0).unwrap(), &[2]).unwrap();
        assert!((g.center(0, 0) - 10.75).abs() < 1e-12);
        assert!((g.center(0, 1) - 30.25).abs() < 1e-12);
        assert!((g.step(0) - 19.5).abs() < 1e-12);
    }

    #[test]
    fn tensor_grid_2d() {
        let d = Domain::rectangle(-1.0, 1.0, -1.0, 1.0).unwrap();
        let g = build_grid(&d, &[2, 2]).unwrap();
        assert_eq!(g.num_cells(), 4);
        let pts: Vec<Point> = (0..4).map(|i| g.point(i)).collect();
        assert_eq!(pts[0], [-0.5, -0.5]);
        assert_eq!(pts[1], [0.5, -0.5]); // first axis fastest
        assert_eq!(pts[2], [-0.5, 0.5]);
        assert_eq!(pts[3], [0.5, 0.5]);
    }

    #[test]
    fn linear_index_round_trip() {
        let d = Domain::rectangle(0.0, 1.0, 0.0, 2.0).unwrap();
        let g = build_grid(&d, &[5, 7]).unwrap();
        for idx in 0..g.num_cells() {
            let (i, j) = g.split(idx);
            assert_eq!(g.linear(i, j), idx);
        }
    }

    #[test]
    fn rejects_bad_domains_and_counts() {
        assert!(Domain::line(1.0, 1.0).is_err());
        assert!(Domain::line(2.0, 1.0).is_err());
        assert!(Domain::new(vec![]).is_err());
        assert!(Domain::new(vec![[0.0, 1.0], [0.0, 1.0], [0.0, 1.0]]).is_err());
        let d = Domain::line(0.0, 1.0).unwrap();
        assert!(build_grid(&d, &[0]).is_err());
        assert!(build_grid(&d, &[4, 4]).is_err());
    }

    #[test]
    fn time_grid_counts_and_overshoot() {
        let tg = TimeGrid::new(1.0, 0.25).unwrap();
        assert_eq!(tg.steps, 4);
        assert!((tg.node(4) - 1.0).abs() < 1e-12);
        // non-divisible dt overshoots by less than one step
        let tg = TimeGrid::new(1.0, 0.3).unwrap();
        assert_eq!(tg.steps, 4);
        assert!(tg.node(tg.steps) >= tg.horizon - 1e-9);
        // dt = dx/10 with dx = 2/128: horizon 4 needs exactly 2560 steps
        let tg = TimeGrid::new(4.0, 2.0 / 128.0 / 10.0).unwrap();
        assert_eq!(tg.steps, 2560);
        assert!(TimeGrid::new(0.0, 0.1).is_err());
        assert!(TimeGrid::new(1.0, -0.1).is_err());
    }

    #[test]
    fn dt_suggestions() {
        let d2 = Domain::rectangle(0.0, 1.0, 0.0, 1.0).unwrap();
        let g2 = build_grid(&d2, &[10, 10]).unwrap();
        assert!((suggest_dt(&g2, 1.0, 1.0) - 0.05).abs() < 1e-15);
        let g1 = build_grid(&Domain::line(0.0, 1.0).unwrap(), &[10]).unwrap();
        assert!((suggest_dt(&g1, 2.0, 0.9) - 0.045).abs() < 1e-15);
        assert_eq!(suggest_dt(&g1, 0.0, 1.0), f64::INFINITY);
        // halving both steps in 2D halves the bound
        let g2f = build_grid(&d2, &[20, 20]).unwrap();
        let ratio = suggest_dt(&g2, 1.3, 1.0) / suggest_dt(&g2f, 1.3, 1.0);
        assert!((ratio - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sl_ratio_value() {
        let g = build_grid(&Domain::line(0.0, 1.0).unwrap(), &[100]).unwrap();
        let tg = TimeGrid::new(1.0, 0.01).unwrap();
        let r = sl_compatibility_ratio(&g, &tg, 0.01);
        assert!((r - 0.01_f64.powf(2.0 / 3.0)).abs() < 1e-12);
        assert!((r - 4.64e-2).abs() < 2e-4);
    }

    #[test]
    fn center_spacing_is_uniform_to_rounding() {
        let g = build_grid(&Domain::line(-3.0, 7.0).unwrap(), &[137]).unwrap();
        let dv = g.step(0);
        // gap rounding scales with the center magnitudes, not with dv
        for i in 0..136 {
            let gap = g.center(0, i + 1) - g.center(0, i);
            let scale = g.center(0, i + 1).abs().max(g.center(0, i).abs()).max(1.0);
            assert!((gap - dv).abs() <= 4.0 * f64::EPSILON * scale, "gap {i}");
        }
        // symmetric domain gives symmetric centers
        let gs = build_grid(&Domain::line(-1.0, 1.0).unwrap(), &[64]).unwrap();
        for i in 0..64 {
            assert!((gs.center(0, i) + gs.center(0, 63 - i)).abs() < 1e-15);
        }
    }
}
