//! Jensen-type gap bounds for c-convex functions.
//!
//! For `y` in `∂_c f(b)` the f-side gap `Σ p_i f(x_i) - f(b)` dominates the
//! cost-side gap `Σ p_i c(x_i, y) - c(b, y)`. Every report carries both
//! sides, their difference and whether the hypothesis on `y` was verified.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::cost::{check_structure, CostMatrix, CostSpec, StructureProperty};
use crate::error::{Error, Result};
use crate::grid::{quadrature, same_grid, DiscreteMeasure, Grid, GridFunction, QuadratureRule};
use crate::verdict::{Sweep, Verdict, Witness};

pub type Evaluator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A function on `I` with its samples on the grid, an optional exact
/// evaluator for off-grid points, the cost and the `J` grid searched for
/// witnesses.
#[derive(Clone)]
pub struct JensenProblem {
    f: GridFunction,
    exact: Option<Evaluator>,
    cost: CostSpec,
    grid_j: Grid,
}

impl fmt::Debug for JensenProblem {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("JensenProblem")
            .field("f", &self.f)
            .field("exact", &self.exact.is_some())
            .field("cost", &self.cost)
            .field("grid_j", &self.grid_j)
            .finish()
    }
}

impl JensenProblem {
    /// Off-grid values come from linear interpolation.
    pub fn tabulated(f: GridFunction, cost: CostSpec, grid_j: Grid) -> Result<Self> {
        f.require_finite()?;
        Ok(Self {
            f,
            exact: None,
            cost,
            grid_j,
        })
    }

    pub fn analytic<F>(grid_i: Grid, f: F, cost: CostSpec, grid_j: Grid) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let samples = GridFunction::sample(grid_i, &f)?;
        samples.require_finite()?;
        Ok(Self {
            f: samples,
            exact: Some(Arc::new(f)),
            cost,
            grid_j,
        })
    }

    pub fn f(&self) -> &GridFunction {
        &self.f
    }

    pub fn cost(&self) -> &CostSpec {
        &self.cost
    }

    pub fn grid_j(&self) -> &Grid {
        &self.grid_j
    }

    /// `f(x)` and whether it was interpolated.
    pub fn eval(&self, x: f64) -> Result<(f64, bool)> {
        let grid = self.f.grid();
        if !grid.interval().contains(x) {
            return Err(Error::OutOfInterval {
                x,
                lo: grid.lo(),
                hi: grid.hi(),
            });
        }
        match &self.exact {
            Some(e) => Ok((e(x), false)),
            None => self.f.interpolate(x),
        }
    }

    /// Tolerance added when any value was interpolated: `2 L h`.
    pub fn interpolation_allowance(&self) -> f64 {
        2.0 * self.f.lipschitz_estimate() * self.f.grid().step()
    }

    /// `min_x [(f(x) - f(x0)) - (c(x, y) - c(x0, y))]` over the grid.
    pub fn membership_slack(&self, x0: f64, y: f64) -> Result<f64> {
        let (f0, _) = self.eval(x0)?;
        let c0 = self.cost.evaluate(x0, y)?;
        let grid = self.f.grid();
        let mut best = f64::INFINITY;
        for i in 0..grid.len() {
            let s = (self.f.value(i) - f0) - (self.cost.evaluate(grid.point(i), y)? - c0);
            best = best.min(s);
        }
        Ok(best)
    }

    /// The `J` grid point with the largest membership slack at `x0`.
    pub fn best_witness(&self, x0: f64) -> Result<(f64, f64)> {
        let mut best = (self.grid_j.point(0), f64::NEG_INFINITY);
        for j in 0..self.grid_j.len() {
            let y = self.grid_j.point(j);
            let s = self.membership_slack(x0, y)?;
            if s > best.1 {
                best = (y, s);
            }
        }
        Ok(best)
    }

    fn resolve_witness(&self, x0: f64, y: Option<f64>, tol: f64, warnings: &mut Vec<String>) -> Result<(f64, bool)> {
        match y {
            Some(y) => {
                let s = self.membership_slack(x0, y)?;
                let ok = s >= -tol;
                if !ok {
                    warnings.push(format!("y = {y} is not in the c-subdifferential at {x0} (slack {s:e})"));
                }
                Ok((y, ok))
            }
            None => {
                let (y, s) = self.best_witness(x0)?;
                if s < -tol {
                    return Err(Error::NoAdmissibleWitness { x: x0 });
                }
                Ok((y, true))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JensenReport {
    /// The f-side gap.
    pub lhs: f64,
    /// The cost-side gap.
    pub rhs: f64,
    pub slack: f64,
    pub y_witness: f64,
    pub holds: bool,
    pub hypothesis_verified: bool,
    /// Barycenter or reference point where the witness is anchored.
    pub point: f64,
    pub interpolated: bool,
    pub tol: f64,
    pub warnings: Vec<String>,
}

impl JensenReport {
    fn new(lhs: f64, rhs: f64, y: f64, verified: bool, point: f64, interpolated: bool, tol: f64, warnings: Vec<String>) -> Self {
        let slack = lhs - rhs;
        Self {
            lhs,
            rhs,
            slack,
            y_witness: y,
            holds: slack >= -tol,
            hypothesis_verified: verified,
            point,
            interpolated,
            tol,
            warnings,
        }
    }
}

/// `Σ p_i f(x_i) - f(b)` against `Σ p_i c(x_i, y) - c(b, y)` with `b` the
/// barycenter of `mu`. Without `y` the best witness on the `J` grid is used.
pub fn discrete_jensen_gap(p: &JensenProblem, mu: &DiscreteMeasure, y: Option<f64>, tol: f64) -> Result<JensenReport> {
    let interval = p.f.grid().interval();
    mu.check_within(&interval)?;
    let b = mu.barycenter();
    let mut warnings = Vec::new();
    if b <= interval.lo() || b >= interval.hi() {
        warnings.push(format!("barycenter {b} is an endpoint of the interval"));
    }
    let (fb, mut interpolated) = p.eval(b)?;
    let mut ef = 0.0;
    for a in mu.atoms() {
        let (v, interp) = p.eval(a.x)?;
        interpolated |= interp;
        ef += a.p * v;
    }
    let tol = if interpolated { tol + p.interpolation_allowance() } else { tol };
    let (y, verified) = p.resolve_witness(b, y, tol, &mut warnings)?;
    let lhs = ef - fb;
    let rhs = mu.try_expectation(|x| p.cost.evaluate(x, y))? - p.cost.evaluate(b, y)?;
    Ok(JensenReport::new(lhs, rhs, y, verified, b, interpolated, tol, warnings))
}

/// The two-point equal-weight case on `{a, b}`.
pub fn midpoint_bound(p: &JensenProblem, a: f64, b: f64, y: Option<f64>, tol: f64) -> Result<JensenReport> {
    discrete_jensen_gap(p, &DiscreteMeasure::new([(a, 0.5), (b, 0.5)])?, y, tol)
}

/// Midpoint concavity of `g(x) = c(x, y) - f(x)` on `{a, b}`.
pub fn support_concavity_check(p: &JensenProblem, a: f64, b: f64, y: Option<f64>, tol: f64) -> Result<Verdict> {
    const ID: &str = "support_concavity";
    let m = 0.5 * a + 0.5 * b;
    let (fa, ia) = p.eval(a)?;
    let (fb, ib) = p.eval(b)?;
    let (fm, im) = p.eval(m)?;
    let tol = if ia || ib || im { tol + p.interpolation_allowance() } else { tol };
    let mut warnings = Vec::new();
    let (y, verified) = p.resolve_witness(m, y, tol, &mut warnings)?;
    if !verified {
        return Ok(Verdict::hypothesis_failed(ID, tol, warnings.join("; ")));
    }
    let g = |x: f64, fx: f64| -> Result<f64> { Ok(p.cost.evaluate(x, y)? - fx) };
    let violation = 0.5 * (g(a, fa)? + g(b, fb)?) - g(m, fm)?;
    let mut sweep = Sweep::new(ID, tol);
    sweep.observe(violation, || Witness::new(vec![], None, vec![a, b, m, y]));
    Ok(sweep.finish(""))
}

/// `∫f - f(ξ)(b - a)` against `∫[c(x, y) - c(ξ, y)] dx` by quadrature on the
/// grid. `ξ` defaults to the interval midpoint and is snapped to the nearest
/// grid point.
pub fn integral_jensen_bound(
    p: &JensenProblem,
    xi: Option<f64>,
    y: Option<f64>,
    rule: QuadratureRule,
    tol: f64,
) -> Result<JensenReport> {
    let grid = *p.f.grid();
    let interval = grid.interval();
    let xi = xi.unwrap_or_else(|| interval.midpoint());
    if !interval.contains(xi) {
        return Err(Error::OutOfInterval {
            x: xi,
            lo: interval.lo(),
            hi: interval.hi(),
        });
    }
    let k = grid.nearest_index(xi);
    let mut warnings = Vec::new();
    if grid.point(k) != xi {
        warnings.push(format!("xi = {xi} snapped to grid point {}", grid.point(k)));
    }
    let xi = grid.point(k);
    let len = interval.length();
    let tol = tol * (1.0 + len);
    let (y, verified) = p.resolve_witness(xi, y, tol, &mut warnings)?;
    let lhs = quadrature(&p.f, rule)? - p.f.value(k) * len;
    let cxi = p.cost.evaluate(xi, y)?;
    let mut diffs = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        diffs.push(p.cost.evaluate(grid.point(i), y)? - cxi);
    }
    let rhs = quadrature(&GridFunction::new(grid, diffs)?, rule)?;
    Ok(JensenReport::new(lhs, rhs, y, verified, xi, false, tol, warnings))
}

/// The discrete form for a measure whose barycenter must be interior.
pub fn weighted_integral_bound(p: &JensenProblem, mu: &DiscreteMeasure, y: Option<f64>, tol: f64) -> Result<JensenReport> {
    let interval = p.f.grid().interval();
    let b = mu.barycenter();
    if b <= interval.lo() || b >= interval.hi() {
        return Err(Error::BarycenterAtEndpoint {
            barycenter: b,
            lo: interval.lo(),
            hi: interval.hi(),
        });
    }
    discrete_jensen_gap(p, mu, y, tol)
}

/// For a 1-affine cost: checks `∫c(x, y) dx = c(m, y)(b - a)` for every `y`
/// on the grid and the classical `f(m) <= mean(f)`, `m` the midpoint.
pub fn classical_reduction_check(f: &GridFunction, cost: &CostMatrix, rule: QuadratureRule, tol: f64) -> Result<Verdict> {
    const ID: &str = "classical_reduction";
    same_grid(f.grid(), cost.grid_i())?;
    let affine = check_structure(cost, StructureProperty::OneAffine, None)?;
    if !affine.holds {
        return Err(Error::NotOneAffine {
            violation: affine.max_violation,
        });
    }
    let grid = *f.grid();
    let interval = grid.interval();
    let (len, m) = (interval.length(), interval.midpoint());
    let n = grid.len();
    // For affine-in-x columns the midpoint value is exact from the two
    // middle entries when n is even.
    let mid = |col: &[f64]| if n % 2 == 1 { col[n / 2] } else { 0.5 * (col[n / 2 - 1] + col[n / 2]) };
    let mut sweep = Sweep::new(ID, tol);
    for j in 0..cost.cols() {
        let col = cost.column(j);
        let integral = quadrature(&GridFunction::new(grid, col.clone())?, rule)?;
        let d = (integral - mid(&col) * len).abs();
        sweep.observe(d, || Witness::new(vec![j], None, vec![cost.grid_j().point(j)]));
    }
    let (fm, interpolated) = f.interpolate(m)?;
    let allowance = if interpolated { 2.0 * f.lipschitz_estimate() * grid.step() } else { 0.0 };
    let mean = quadrature(f, rule)? / len;
    sweep.observe_with_tol(fm - mean, tol + allowance, || Witness::new(vec![], None, vec![m, fm, mean]));
    Ok(sweep.finish(""))
}
