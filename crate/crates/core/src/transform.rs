//! c-transforms over tabulated costs.
//!
//! `f^c(y_j) = max_i { c(x_i, y_j) - f(x_i) }` and the double transform
//! `f^cc = (f^c)^c` taken back through the same table. Suprema run over grid
//! points only, so every result is an exact finite reduction; the
//! discretization error against the continuum is `O(h * Lip)`.
//!
//! All maximizations break ties toward the lowest index, on both the
//! brute-force path and the linear-time Fenchel path, so the two can be
//! compared bit for bit.

use serde::Serialize;

use crate::cost::CostMatrix;
use crate::error::{Error, Result};
use crate::grid::{same_grid, sup_norm_diff, Grid, GridFunction};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransformResult {
    pub values: GridFunction,
    /// For each output point, the lowest index of the input grid attaining
    /// the maximum.
    pub argmax: Vec<usize>,
}

/// `f^c(y_j) = max_i { c(x_i, y_j) - f(x_i) }`, skipping `+inf` values of `f`.
pub fn c_transform(f: &GridFunction, cost: &CostMatrix) -> Result<TransformResult> {
    same_grid(f.grid(), cost.grid_i())?;
    let m = cost.cols();
    let mut best = vec![f64::NEG_INFINITY; m];
    let mut argmax = vec![usize::MAX; m];
    for (i, &fi) in f.values().iter().enumerate() {
        if fi == f64::INFINITY {
            continue;
        }
        let row = cost.row(i);
        for j in 0..m {
            let v = row[j] - fi;
            if v > best[j] {
                best[j] = v;
                argmax[j] = i;
            }
        }
    }
    if argmax.contains(&usize::MAX) {
        return Err(Error::Improper);
    }
    Ok(TransformResult {
        values: GridFunction::new(*cost.grid_j(), best)?,
        argmax,
    })
}

/// The transform with the roles of the variables swapped:
/// `g^c(x_i) = max_j { c(x_i, y_j) - g(y_j) }` for `g` on the `J` grid.
pub fn c_transform_dual(g: &GridFunction, cost: &CostMatrix) -> Result<TransformResult> {
    same_grid(g.grid(), cost.grid_j())?;
    let n = cost.rows();
    let mut values = Vec::with_capacity(n);
    let mut argmax = Vec::with_capacity(n);
    for i in 0..n {
        let row = cost.row(i);
        let mut best = f64::NEG_INFINITY;
        let mut arg = usize::MAX;
        for (j, &gj) in g.values().iter().enumerate() {
            if gj == f64::INFINITY {
                continue;
            }
            let v = row[j] - gj;
            if v > best {
                best = v;
                arg = j;
            }
        }
        if arg == usize::MAX {
            return Err(Error::Improper);
        }
        values.push(best);
        argmax.push(arg);
    }
    Ok(TransformResult {
        values: GridFunction::new(*cost.grid_i(), values)?,
        argmax,
    })
}

/// `f^cc = (f^c)^c`, the largest c-convex function below `f` at grid
/// resolution. `argmax` indexes the `J` grid.
pub fn double_c_transform(f: &GridFunction, cost: &CostMatrix) -> Result<TransformResult> {
    let fc = c_transform(f, cost)?;
    c_transform_dual(&fc.values, cost)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvexityVerdict {
    pub holds: bool,
    /// `max |f - f^cc|`
    pub deviation: f64,
    pub tol: f64,
}

/// `1e-7 (1 + |f|_inf) + 4 h L`, with `L` the largest absolute first
/// difference quotient of `f`.
pub fn default_convexity_tol(f: &GridFunction) -> f64 {
    1e-7 * (1.0 + f.sup_abs()) + 4.0 * f.grid().step() * f.lipschitz_estimate()
}

/// Tests `f = f^cc` in the sup norm. `tol` defaults to
/// [`default_convexity_tol`].
pub fn is_c_convex(f: &GridFunction, cost: &CostMatrix, tol: Option<f64>) -> Result<ConvexityVerdict> {
    f.require_finite()?;
    let fcc = double_c_transform(f, cost)?;
    let deviation = sup_norm_diff(f, &fcc.values)?;
    let tol = tol.unwrap_or_else(|| default_convexity_tol(f));
    Ok(ConvexityVerdict {
        holds: deviation <= tol,
        deviation,
        tol,
    })
}

/// The involution `(f, c) -> (-f, -c)`. `f` is c-concave for `c` exactly
/// when `-f` is (-c)-convex, so concave-mode queries go through here.
pub fn to_concave_problem(f: &GridFunction, cost: &CostMatrix) -> Result<(GridFunction, CostMatrix)> {
    f.require_finite()?;
    Ok((f.map(|v| -v)?, cost.negated()))
}

/// c-concavity (`f = inf_y { c(x, y) - g(y) }` for some `g`), decided through
/// [`to_concave_problem`].
pub fn is_c_concave(f: &GridFunction, cost: &CostMatrix, tol: Option<f64>) -> Result<ConvexityVerdict> {
    let (neg_f, neg_c) = to_concave_problem(f, cost)?;
    is_c_convex(&neg_f, &neg_c, tol)
}

/// Fenchel conjugate `f*(y_j) = max_i { x_i y_j - f(x_i) }`: the c-transform
/// for `c(x, y) = x y`, in `O(n + m)` after the grids are laid out.
///
/// Only vertices of the lower convex hull of `(x_i, f_i)` can maximize, and
/// the lowest maximizing index is nondecreasing in `y`, so one forward
/// pointer sweep over the hull serves every `y` in increasing order.
/// Values are computed with the same expression `x_i * y_j - f_i` as the
/// tabulated path, and ties resolve to the lowest index, so the output
/// matches [`c_transform`] with a bilinear table exactly.
pub fn fenchel_conjugate_fast(f: &GridFunction, grid_j: &Grid) -> Result<TransformResult> {
    let grid_i = f.grid();
    let xs = grid_i.points();
    let fv = f.values();

    let hull = lower_hull(&xs, fv);
    if hull.is_empty() {
        return Err(Error::Improper);
    }

    let value = |k: usize, y: f64| -> f64 {
        let i = hull[k];
        xs[i] * y - fv[i]
    };

    let m = grid_j.len();
    let mut values = Vec::with_capacity(m);
    let mut argmax = Vec::with_capacity(m);
    let mut start = 0usize;
    for j in 0..m {
        let y = grid_j.point(j);
        let mut best_k = start;
        let mut best = value(start, y);
        // Scan forward past near-ties so rounding-level dips between
        // nearly collinear hull points cannot end the sweep early.
        let slack = 1e-12 * (1.0 + best.abs());
        let mut k = start + 1;
        while k < hull.len() {
            let v = value(k, y);
            if v > best {
                best = v;
                best_k = k;
            } else if v < best - slack {
                break;
            }
            k += 1;
        }
        values.push(best);
        argmax.push(hull[best_k]);
        start = best_k;
    }
    Ok(TransformResult {
        values: GridFunction::new(*grid_j, values)?,
        argmax,
    })
}

/// Indices of the lower convex hull of the finite points `(x_i, f_i)`, in
/// increasing `x`. Collinear and rounding-level near-collinear points are
/// kept.
fn lower_hull(xs: &[f64], fv: &[f64]) -> Vec<usize> {
    let mut hull: Vec<usize> = Vec::new();
    for (i, &fi) in fv.iter().enumerate() {
        if !fi.is_finite() {
            continue;
        }
        while hull.len() >= 2 {
            let o = hull[hull.len() - 2];
            let a = hull[hull.len() - 1];
            let (dxa, dfa) = (xs[a] - xs[o], fv[a] - fv[o]);
            let (dxb, dfb) = (xs[i] - xs[o], fi - fv[o]);
            let lhs = dxa * dfb;
            let rhs = dfa * dxb;
            // `a` lies strictly above the chord from `o` to `i`.
            if lhs - rhs < -1e-13 * (lhs.abs() + rhs.abs()) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    hull
}
