//! Local tensor-product cubic Lagrange interpolation on cell centers.
//!
//! Along each axis the four nearest centers form the stencil, positioned so
//! the query sits between the second and third node; near the boundary the
//! stencil clamps inward and the formula turns one-sided. The composite
//! interpolant reproduces polynomials of degree <= 3 per axis exactly and
//! converges at fourth order for smooth data. Queries must lie in the
//! closed domain: the half-cell strip between the extreme centers and the
//! wall is reached by the clamped (extrapolating) stencil, anything beyond
//! is an error.

use crate::fields::ScalarField;
use crate::mesh::{Grid, Point};
use crate::{Error, Result};

/// Stencil base index and the four Lagrange weights along one axis.
/// The weights reproduce polynomial moments up to degree 3 exactly.
pub fn axis_stencil(grid: &Grid, k: usize, x: f64) -> (usize, [f64; 4]) {
    let n = grid.count(k);
    let t = (x - grid.domain().lo(k)) / grid.step(k) - 0.5;
    let mut i0 = t.floor() as isize - 1;
    if i0 < 0 {
        i0 = 0;
    }
    let max = n as isize - 4;
    if i0 > max {
        i0 = max;
    }
    let s = t - i0 as f64;
    // Lagrange basis on nodes {0,1,2,3} evaluated at s
    let w = [
        -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0,
        s * (s - 2.0) * (s - 3.0) / 2.0,
        -s * (s - 1.0) * (s - 3.0) / 2.0,
        s * (s - 1.0) * (s - 2.0) / 6.0,
    ];
    (i0 as usize, w)
}

fn check_domain(grid: &Grid, p: &Point) -> Result<()> {
    for k in 0..grid.dim() {
        if p[k] < grid.domain().lo(k) || p[k] > grid.domain().hi(k) || !p[k].is_finite() {
            return Err(Error::OutOfDomain(p[0], p[1]));
        }
        if grid.count(k) < 4 {
            return Err(Error::InvalidGrid(format!(
                "interpolation needs at least 4 cells along axis {k}"
            )));
        }
    }
    Ok(())
}

/// Interpolates `f` at one point of the closed domain.
pub fn interp_eval(f: &ScalarField, p: &Point) -> Result<f64> {
    let grid = f.grid();
    check_domain(grid, p)?;
    let v = f.values();
    if grid.dim() == 1 {
        let (i0, w) = axis_stencil(grid, 0, p[0]);
        Ok(w[0] * v[i0] + w[1] * v[i0 + 1] + w[2] * v[i0 + 2] + w[3] * v[i0 + 3])
    } else {
        let (i0, wx) = axis_stencil(grid, 0, p[0]);
        let (j0, wy) = axis_stencil(grid, 1, p[1]);
        let n1 = grid.count(0);
        let mut acc = 0.0;
        for b in 0..4 {
            let row = (j0 + b) * n1 + i0;
            let s = wx[0] * v[row] + wx[1] * v[row + 1] + wx[2] * v[row + 2] + wx[3] * v[row + 3];
            acc += wy[b] * s;
        }
        Ok(acc)
    }
}

/// Interpolates `f` at each query point; empty input yields empty output.
pub fn interp_eval_many(f: &ScalarField, points: &[Point]) -> Result<Vec<f64>> {
    points.iter().map(|p| interp_eval(f, p)).collect()
}
