//! Global and local c-subdifferentials on grids.
//!
//! Membership of `y_j` in the set at `x0` is decided by the slack
//!
//! ```text
//! slack(x0, y) = min_x [ (f(x) - f(x0)) - (c(x, y) - c(x0, y)) ]
//! ```
//!
//! with `y` a member when `slack >= -tol`. The minimum runs over the whole
//! grid for the global set and over the window `|x - x0| < eps` for the
//! local one. Sets are sorted index lists and may be non-contiguous.

use serde::Serialize;

use crate::cost::{CostMatrix, CostSpec};
use crate::error::{Error, Result};
use crate::grid::{same_grid, Grid, GridFunction};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubdifferentialSet {
    pub x0_index: usize,
    /// Member indices into the `J` grid, ascending.
    pub y_indices: Vec<usize>,
    /// Slack of each member, parallel to `y_indices`.
    pub slacks: Vec<f64>,
    pub tol: f64,
}

impl SubdifferentialSet {
    pub fn is_empty(&self) -> bool {
        self.y_indices.is_empty()
    }

    pub fn len(&self) -> usize {
        self.y_indices.len()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.y_indices.binary_search(&j).is_ok()
    }

    /// Members with no index gap between them.
    pub fn is_contiguous(&self) -> bool {
        self.y_indices.windows(2).all(|w| w[1] == w[0] + 1)
    }

    pub fn intersection(&self, other: &SubdifferentialSet) -> Vec<usize> {
        self.y_indices.iter().copied().filter(|&j| other.contains(j)).collect()
    }

    fn from_slacks(x0_index: usize, slacks: impl IntoIterator<Item = f64>, tol: f64) -> Self {
        let mut y_indices = Vec::new();
        let mut kept = Vec::new();
        for (j, s) in slacks.into_iter().enumerate() {
            if s >= -tol {
                y_indices.push(j);
                kept.push(s);
            }
        }
        Self {
            x0_index,
            y_indices,
            slacks: kept,
            tol,
        }
    }
}

fn check_inputs(f: &GridFunction, cost: &CostMatrix, x0: usize) -> Result<()> {
    same_grid(f.grid(), cost.grid_i())?;
    if x0 >= f.len() {
        return Err(Error::IndexOutOfRange { index: x0, n: f.len() });
    }
    if !f.value(x0).is_finite() {
        return Err(Error::InfiniteValue { index: x0 });
    }
    Ok(())
}

/// Slack of every `y_j` at `x0`, with the minimum restricted to the grid
/// indices in `xs`. `+inf` values of `f` impose no constraint.
fn slacks_over(f: &GridFunction, cost: &CostMatrix, x0: usize, xs: impl Iterator<Item = usize>) -> Vec<f64> {
    let m = cost.cols();
    let f0 = f.value(x0);
    let base = cost.row(x0);
    let mut out = vec![f64::INFINITY; m];
    for x in xs {
        let fx = f.value(x);
        if !fx.is_finite() {
            continue;
        }
        let df = fx - f0;
        let row = cost.row(x);
        for j in 0..m {
            let s = df - (row[j] - base[j]);
            if s < out[j] {
                out[j] = s;
            }
        }
    }
    out
}

/// Slack of the single pair `(x_{x0}, y_j)`, by the same sweep as
/// [`SlackTable`] restricted to one column.
pub fn membership_slack(f: &GridFunction, cost: &CostMatrix, x0_index: usize, j: usize) -> Result<f64> {
    check_inputs(f, cost, x0_index)?;
    if j >= cost.cols() {
        return Err(Error::IndexOutOfRange { index: j, n: cost.cols() });
    }
    let (f0, b) = (f.value(x0_index), cost.get(x0_index, j));
    let mut out = f64::INFINITY;
    for x in 0..cost.rows() {
        let fx = f.value(x);
        if fx.is_finite() {
            out = out.min((fx - f0) - (cost.get(x, j) - b));
        }
    }
    Ok(out)
}

/// `∂_c f(x0)` by a direct sweep of the defining inequality over every
/// `(x, y)` grid pair.
pub fn c_subdifferential(f: &GridFunction, cost: &CostMatrix, x0_index: usize, tol: f64) -> Result<SubdifferentialSet> {
    check_inputs(f, cost, x0_index)?;
    let slacks = slacks_over(f, cost, x0_index, 0..f.len());
    Ok(SubdifferentialSet::from_slacks(x0_index, slacks, tol))
}

/// `∂_c f(x0)` through the conjugate criterion: `y` is a member when
/// `f^c(y) - c(x0, y) + f(x0) <= tol`. `fc` must be `c_transform(f)`.
pub fn c_subdifferential_from_conjugate(
    f: &GridFunction,
    fc: &GridFunction,
    cost: &CostMatrix,
    x0_index: usize,
    tol: f64,
) -> Result<SubdifferentialSet> {
    check_inputs(f, cost, x0_index)?;
    same_grid(fc.grid(), cost.grid_j())?;
    let f0 = f.value(x0_index);
    let base = cost.row(x0_index);
    let slacks = (0..cost.cols()).map(|j| -(fc.value(j) - base[j] + f0));
    Ok(SubdifferentialSet::from_slacks(x0_index, slacks, tol))
}

/// Every slack `slack(x_i, y_j)` of a function, computed once by the
/// defining sweep so membership queries at any tolerance are lookups.
#[derive(Debug, Clone)]
pub struct SlackTable {
    rows: usize,
    cols: usize,
    slack: Vec<f64>,
}

impl SlackTable {
    pub fn compute(f: &GridFunction, cost: &CostMatrix) -> Result<Self> {
        same_grid(f.grid(), cost.grid_i())?;
        let (n, m) = (cost.rows(), cost.cols());
        let mut slack = Vec::with_capacity(n * m);
        for i in 0..n {
            if f.value(i).is_finite() {
                slack.extend(slacks_over(f, cost, i, 0..n));
            } else {
                slack.extend(std::iter::repeat(f64::NEG_INFINITY).take(m));
            }
        }
        Ok(Self { rows: n, cols: m, slack })
    }

    #[inline]
    pub fn slack(&self, i: usize, j: usize) -> f64 {
        self.slack[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.slack[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn set(&self, i: usize, tol: f64) -> SubdifferentialSet {
        SubdifferentialSet::from_slacks(i, self.row(i).iter().copied(), tol)
    }

    /// Largest slack at `x_i` over all `y`; the set is nonempty iff this is
    /// at least `-tol`.
    pub fn best(&self, i: usize) -> (usize, f64) {
        self.row(i)
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (j, &s)| if s > acc.1 { (j, s) } else { acc })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SubdifferentialMap {
    pub sets: Vec<SubdifferentialSet>,
    /// `dom[i]` is true when the set at `x_i` is nonempty.
    pub dom: Vec<bool>,
    pub tol: f64,
}

impl SubdifferentialMap {
    /// True when every interior grid point lies in the effective domain.
    pub fn covers_interior(&self) -> bool {
        let n = self.dom.len();
        (1..n.saturating_sub(1)).all(|i| self.dom[i])
    }

    /// Sparse `(x_index, y_index, slack)` triples in index order.
    pub fn triples(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.sets
            .iter()
            .flat_map(|s| s.y_indices.iter().zip(&s.slacks).map(move |(&j, &sl)| (s.x0_index, j, sl)))
    }
}

/// `∂_c f(x_i)` at every grid point together with the effective-domain mask.
/// Points where `f = +inf` get an empty set.
pub fn subdifferential_map(f: &GridFunction, cost: &CostMatrix, tol: f64) -> Result<SubdifferentialMap> {
    let table = SlackTable::compute(f, cost)?;
    let sets: Vec<_> = (0..f.len())
        .map(|i| {
            if f.value(i).is_finite() {
                table.set(i, tol)
            } else {
                SubdifferentialSet {
                    x0_index: i,
                    y_indices: Vec::new(),
                    slacks: Vec::new(),
                    tol,
                }
            }
        })
        .collect();
    let dom = sets.iter().map(|s| !s.is_empty()).collect();
    Ok(SubdifferentialMap { sets, dom, tol })
}

/// Lower and upper ends `(min y, max y)` of a nonempty set.
pub fn lateral_c_derivatives(set: &SubdifferentialSet, grid_j: &Grid) -> Result<(f64, f64)> {
    match (set.y_indices.first(), set.y_indices.last()) {
        (Some(&lo), Some(&hi)) => Ok((grid_j.point(lo), grid_j.point(hi))),
        _ => Err(Error::EmptySet),
    }
}

/// The curve `x -> f(x0) + c(x, y) - c(x0, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupportCurve {
    pub x0: f64,
    pub y: f64,
    pub f0: f64,
}

impl SupportCurve {
    pub fn eval(&self, cost: &CostSpec, x: f64) -> Result<f64> {
        Ok(self.f0 + (cost.evaluate(x, self.y)? - cost.evaluate(self.x0, self.y)?))
    }
}

/// Upper envelope `max_t { f(t) + c(x, y(t)) - c(t, y(t)) }` of the support
/// curves picked by `selection`, over interior `t` with a selection.
///
/// Every selected `y(t)` must lie in `∂_c f(t)` at `tol`. Entries for the
/// two endpoints are ignored.
pub fn envelope_reconstruct(
    f: &GridFunction,
    cost: &CostMatrix,
    selection: &[Option<usize>],
    tol: f64,
) -> Result<GridFunction> {
    same_grid(f.grid(), cost.grid_i())?;
    let n = f.len();
    if selection.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: selection.len(),
        });
    }
    let mut chosen = Vec::new();
    for (t, sel) in selection.iter().enumerate() {
        let Some(j) = *sel else { continue };
        if !f.grid().is_interior(t) {
            continue;
        }
        if j >= cost.cols() {
            return Err(Error::IndexOutOfRange { index: j, n: cost.cols() });
        }
        check_inputs(f, cost, t)?;
        let slack = slacks_over(f, cost, t, 0..n)[j];
        if slack < -tol {
            return Err(Error::InvalidSelection {
                t_index: t,
                y_index: j,
                slack,
            });
        }
        chosen.push((t, j));
    }
    if chosen.is_empty() {
        return Err(Error::EmptySelection);
    }
    let values = (0..n)
        .map(|x| {
            chosen
                .iter()
                .map(|&(t, j)| f.value(t) + (cost.get(x, j) - cost.get(t, j)))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    GridFunction::new(*f.grid(), values)
}

/// Neighborhood `U_eps = { x : |x - x0| < eps }` of a grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalWindow {
    pub x0_index: usize,
    pub epsilon: f64,
}

impl LocalWindow {
    pub fn new(grid: &Grid, x0_index: usize, epsilon: f64) -> Result<Self> {
        if x0_index >= grid.len() {
            return Err(Error::IndexOutOfRange {
                index: x0_index,
                n: grid.len(),
            });
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::EmptyWindow { x0_index, epsilon });
        }
        Ok(Self { x0_index, epsilon })
    }

    /// Inclusive index range of grid points strictly within `epsilon` of
    /// `x0`. Points at distance exactly `epsilon` are excluded.
    pub fn range(&self, grid: &Grid) -> std::ops::RangeInclusive<usize> {
        let x0 = grid.point(self.x0_index);
        let inside = |i: usize| (grid.point(i) - x0).abs() < self.epsilon;
        let mut lo = self.x0_index;
        while lo > 0 && inside(lo - 1) {
            lo -= 1;
        }
        let mut hi = self.x0_index;
        while hi + 1 < grid.len() && inside(hi + 1) {
            hi += 1;
        }
        lo..=hi
    }
}

/// `∂_c^l f(x0)`: the defining inequality only on the window.
pub fn local_c_subdifferential(
    f: &GridFunction,
    cost: &CostMatrix,
    window: &LocalWindow,
    tol: f64,
) -> Result<SubdifferentialSet> {
    check_inputs(f, cost, window.x0_index)?;
    let slacks = slacks_over(f, cost, window.x0_index, window.range(f.grid()));
    Ok(SubdifferentialSet::from_slacks(window.x0_index, slacks, tol))
}

/// Local sets for a list of window radii at the same point.
pub fn local_support_sweep(
    f: &GridFunction,
    cost: &CostMatrix,
    x0_index: usize,
    epsilons: &[f64],
    tol: f64,
) -> Result<Vec<(f64, SubdifferentialSet)>> {
    epsilons
        .iter()
        .map(|&eps| {
            let w = LocalWindow::new(f.grid(), x0_index, eps)?;
            Ok((eps, local_c_subdifferential(f, cost, &w, tol)?))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalBiconjugate {
    pub value: f64,
    /// The local set at `x0` was empty, so the outer supremum ran over
    /// every `y` of the `J` grid instead.
    pub support_empty: bool,
}

/// `f_l^cc(x0) = sup_{y in ∂_c^l f(x0)} inf_{z in U_eps} { f(z) + c(x0, y) - c(z, y) }`.
///
/// When the local set is empty the supremum is taken over all of `J` and
/// the result is flagged.
pub fn local_double_conjugate(
    f: &GridFunction,
    cost: &CostMatrix,
    window: &LocalWindow,
    tol: f64,
) -> Result<LocalBiconjugate> {
    let set = local_c_subdifferential(f, cost, window, tol)?;
    let x0 = window.x0_index;
    let range = window.range(f.grid());
    let inner = |j: usize| -> f64 {
        let c0 = cost.get(x0, j);
        range
            .clone()
            .filter(|&z| f.value(z).is_finite())
            .map(|z| f.value(z) + (c0 - cost.get(z, j)))
            .fold(f64::INFINITY, f64::min)
    };
    let support_empty = set.is_empty();
    let value = if support_empty {
        (0..cost.cols()).map(inner).fold(f64::NEG_INFINITY, f64::max)
    } else {
        set.y_indices.iter().map(|&j| inner(j)).fold(f64::NEG_INFINITY, f64::max)
    };
    Ok(LocalBiconjugate { value, support_empty })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::{c_transform, double_c_transform};
    use proptest::prelude::*;

    fn sym(n: usize) -> Grid {
        Grid::uniform(-1.0, 1.0, n).unwrap()
    }

    fn bilinear(n: usize) -> CostMatrix {
        CostMatrix::tabulate(&CostSpec::Bilinear, sym(n), sym(n)).unwrap()
    }

    /// Oracle: the defining inequality checked pointwise from analytic
    /// expressions, one `(x, y)` pair at a time.
    fn member_by_definition<F: Fn(f64) -> f64>(f: F, spec: &CostSpec, g: &Grid, x0: f64, y: f64, tol: f64) -> bool {
        (0..g.len()).all(|i| {
            let x = g.point(i);
            f(x) - f(x0) - (spec.evaluate(x, y).unwrap() - spec.evaluate(x0, y).unwrap()) >= -tol
        })
    }

    #[test]
    fn single_slack_matches_table() {
        let g = Grid::uniform(-1.0, 1.0, 17).unwrap();
        let c = CostMatrix::tabulate(&CostSpec::neg_quadratic(1.0).unwrap(), g, g).unwrap();
        let f = GridFunction::sample(g, |x| (2.0 * x).sin() + x * x).unwrap();
        let t = SlackTable::compute(&f, &c).unwrap();
        for i in 0..17 {
            for j in 0..17 {
                assert_eq!(membership_slack(&f, &c, i, j).unwrap().to_bits(), t.slack(i, j).to_bits());
            }
        }
        assert!(membership_slack(&f, &c, 0, 17).is_err());
    }

    #[test]
    fn abs_at_zero_is_full_interval() {
        let n = 21;
        let g = sym(n);
        let f = GridFunction::sample(g, f64::abs).unwrap();
        let s = c_subdifferential(&f, &bilinear(n), 10, 1e-12).unwrap();
        assert_eq!(s.y_indices, (0..n).collect::<Vec<_>>());
        for j in 0..n {
            assert!(member_by_definition(f64::abs, &CostSpec::Bilinear, &g, 0.0, g.point(j), 1e-12));
        }
        assert_eq!(lateral_c_derivatives(&s, &g).unwrap(), (-1.0, 1.0));
    }

    #[test]
    fn cost_slice_contains_its_own_y() {
        let g = Grid::uniform(0.0, 0.5, 17).unwrap();
        for spec in [CostSpec::Bilinear, CostSpec::neg_quadratic(2.0).unwrap(), CostSpec::Reflector] {
            let c = CostMatrix::tabulate(&spec, g, g).unwrap();
            for j in 0..17 {
                let f = GridFunction::new(g, c.column(j)).unwrap();
                for x0 in 0..17 {
                    let s = c_subdifferential(&f, &c, x0, 0.0).unwrap();
                    assert!(s.contains(j));
                }
            }
        }
    }

    #[test]
    fn parabola_at_zero_is_one_step_wide() {
        // Oracle: on a grid the subgradients of x^2 at 0 are the slopes
        // between the one-sided difference quotients, [-h, h].
        let n = 41;
        let g = sym(n);
        let f = GridFunction::sample(g, |x| x * x).unwrap();
        let s = c_subdifferential(&f, &bilinear(n), 20, 1e-9).unwrap();
        assert!(s.contains(20));
        let h = g.step();
        for &j in &s.y_indices {
            assert!(g.point(j).abs() <= h + 1e-12);
            assert!(member_by_definition(|x| x * x, &CostSpec::Bilinear, &g, 0.0, g.point(j), 1e-9));
        }
        for j in 0..n {
            if !s.contains(j) {
                assert!(!member_by_definition(|x| x * x, &CostSpec::Bilinear, &g, 0.0, g.point(j), 1e-9));
            }
        }
    }

    #[test]
    fn conjugate_criterion_agrees_with_sweep() {
        let n = 33;
        let g = sym(n);
        let cost = bilinear(n);
        let f = GridFunction::sample(g, |x| (3.0 * x).sin() + x * x).unwrap();
        let fc = c_transform(&f, &cost).unwrap().values;
        for x0 in 0..n {
            let a = c_subdifferential(&f, &cost, x0, 1e-9).unwrap();
            let b = c_subdifferential_from_conjugate(&f, &fc, &cost, x0, 1e-9).unwrap();
            assert_eq!(a.y_indices, b.y_indices);
            for (sa, sb) in a.slacks.iter().zip(&b.slacks) {
                assert!((sa - sb).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn domains() {
        let n = 33;
        let g = sym(n);
        let cost = bilinear(n);
        let f = GridFunction::sample(g, |x| -x * x).unwrap();
        let map = subdifferential_map(&f, &cost, 1e-9).unwrap();
        let dom: Vec<usize> = (0..n).filter(|&i| map.dom[i]).collect();
        assert_eq!(dom, vec![0, n - 1]);

        let f = GridFunction::sample(g, |x| (5.0 * x).cos()).unwrap();
        let fcc = double_c_transform(&f, &cost).unwrap().values;
        let map = subdifferential_map(&fcc, &cost, 1e-9).unwrap();
        assert!(map.covers_interior());

        // Affine with a slope on the J grid: that slope is a member everywhere.
        let f = GridFunction::sample(g, |x| 0.375 * x - 0.1).unwrap();
        let map = subdifferential_map(&f, &cost, 1e-9).unwrap();
        let j = g.exact_index(0.375).unwrap();
        for s in &map.sets {
            assert!(s.contains(j));
        }
    }

    #[test]
    fn lateral_derivatives() {
        let g = sym(41);
        let f = GridFunction::sample(g, |x| x * x).unwrap();
        let s = c_subdifferential(&f, &bilinear(41), g.nearest_index(0.5), 1e-9).unwrap();
        let (lo, hi) = lateral_c_derivatives(&s, &g).unwrap();
        assert!((lo - 1.0).abs() <= g.step() + 1e-12);
        assert!((hi - 1.0).abs() <= g.step() + 1e-12);

        let single = SubdifferentialSet {
            x0_index: 0,
            y_indices: vec![3],
            slacks: vec![0.0],
            tol: 0.0,
        };
        let (lo, hi) = lateral_c_derivatives(&single, &g).unwrap();
        assert_eq!(lo, hi);
        let empty = SubdifferentialSet {
            y_indices: vec![],
            slacks: vec![],
            ..single
        };
        assert!(matches!(lateral_c_derivatives(&empty, &g), Err(Error::EmptySet)));
    }

    #[test]
    fn support_curves() {
        let c = SupportCurve { x0: 0.3, y: -0.7, f0: 1.25 };
        assert_eq!(c.eval(&CostSpec::Reflector, 0.3).unwrap(), 1.25);
        let line = SupportCurve { x0: 0.0, y: 1.0, f0: 0.0 };
        for x in [-1.0, -0.5, 0.25, 1.0] {
            assert_eq!(line.eval(&CostSpec::Bilinear, x).unwrap(), x);
        }
        let nq = CostSpec::neg_quadratic(1.0).unwrap();
        let para = SupportCurve { x0: 0.0, y: 0.0, f0: 0.0 };
        for x in [-1.0, -0.5, 0.25, 1.0] {
            assert_eq!(para.eval(&nq, x).unwrap(), -x * x);
        }
        let bad = SupportCurve { x0: 0.0, y: 2.0, f0: 0.0 };
        assert!(bad.eval(&CostSpec::Reflector, 0.5).is_err());
    }

    #[test]
    fn envelope_of_abs() {
        let n = 21;
        let g = sym(n);
        let f = GridFunction::sample(g, f64::abs).unwrap();
        let sel: Vec<Option<usize>> = (0..n)
            .map(|t| {
                let x = g.point(t);
                Some(g.nearest_index(if x == 0.0 { 0.0 } else { x.signum() }))
            })
            .collect();
        let env = envelope_reconstruct(&f, &bilinear(n), &sel, 1e-12).unwrap();
        for i in 0..n {
            assert!((env.value(i) - f.value(i)).abs() <= 1e-15);
        }
    }

    #[test]
    fn envelope_of_parabola() {
        // Support slopes 2t live on J = [-2, 2] with twice the step of I.
        let gi = sym(65);
        let gj = Grid::uniform(-2.0, 2.0, 65).unwrap();
        let cost = CostMatrix::tabulate(&CostSpec::Bilinear, gi, gj).unwrap();
        let f = GridFunction::sample(gi, |x| x * x).unwrap();
        let sel: Vec<Option<usize>> = (0..65).map(|t| Some(gj.nearest_index(2.0 * gi.point(t)))).collect();
        let env = envelope_reconstruct(&f, &cost, &sel, 1e-12).unwrap();
        let h = gi.step();
        for i in 0..65 {
            assert!((env.value(i) - f.value(i)).abs() <= 2.0 * h * h);
        }

        // A single support curve bounds f from below.
        let mut one = vec![None; 65];
        one[20] = sel[20];
        let env = envelope_reconstruct(&f, &cost, &one, 1e-12).unwrap();
        for i in 0..65 {
            assert!(env.value(i) <= f.value(i) + 1e-12);
        }
    }

    #[test]
    fn envelope_rejects_bad_selection() {
        let n = 11;
        let g = sym(n);
        let f = GridFunction::sample(g, f64::abs).unwrap();
        let mut sel = vec![None; n];
        sel[7] = Some(g.nearest_index(-1.0));
        assert!(matches!(
            envelope_reconstruct(&f, &bilinear(n), &sel, 1e-12),
            Err(Error::InvalidSelection { t_index: 7, .. })
        ));
        assert!(matches!(
            envelope_reconstruct(&f, &bilinear(n), &vec![None; n], 1e-12),
            Err(Error::EmptySelection)
        ));
    }

    #[test]
    fn windows() {
        let g = sym(9); // step 0.25
        let w = LocalWindow::new(&g, 4, 0.5).unwrap();
        // Points at distance exactly 0.5 are excluded.
        assert_eq!(w.range(&g), 3..=5);
        let w = LocalWindow::new(&g, 0, 10.0).unwrap();
        assert_eq!(w.range(&g), 0..=8);
        let w = LocalWindow::new(&g, 4, 0.1).unwrap();
        assert_eq!(w.range(&g), 4..=4);
        assert!(LocalWindow::new(&g, 4, 0.0).is_err());
        assert!(LocalWindow::new(&g, 9, 0.5).is_err());
    }

    #[test]
    fn local_sets() {
        let n = 41;
        let g = sym(n);
        let cost = bilinear(n);
        let neg_abs = GridFunction::sample(g, |x| -x.abs()).unwrap();

        let x0 = g.nearest_index(0.5);
        let w = LocalWindow::new(&g, x0, 0.25).unwrap();
        let s = local_c_subdifferential(&neg_abs, &cost, &w, 1e-12).unwrap();
        assert!(s.contains(g.nearest_index(-1.0)));

        let w = LocalWindow::new(&g, 20, 0.25).unwrap();
        assert!(local_c_subdifferential(&neg_abs, &cost, &w, 1e-12).unwrap().is_empty());
        let w = LocalWindow::new(&g, 20, 10.0).unwrap();
        assert!(local_c_subdifferential(&neg_abs, &cost, &w, 1e-12).unwrap().is_empty());

        let f = GridFunction::sample(g, |x| (2.0 * x).sin()).unwrap();
        for x0 in 0..n {
            let w = LocalWindow::new(&g, x0, 2.5).unwrap();
            assert_eq!(
                local_c_subdifferential(&f, &cost, &w, 1e-9).unwrap(),
                c_subdifferential(&f, &cost, x0, 1e-9).unwrap()
            );
        }
    }

    #[test]
    fn local_biconjugates() {
        let n = 41;
        let g = sym(n);
        let cost = bilinear(n);
        let neg_abs = GridFunction::sample(g, |x| -x.abs()).unwrap();
        let x0 = g.nearest_index(0.5);
        let w = LocalWindow::new(&g, x0, 0.25).unwrap();
        let b = local_double_conjugate(&neg_abs, &cost, &w, 1e-12).unwrap();
        assert!(!b.support_empty);
        assert!((b.value + 0.5).abs() <= 1e-12);

        // Convex and c-convex: the global support line is also local.
        let sq = GridFunction::sample(g, |x| 0.5 * x * x).unwrap();
        for x0 in 1..n - 1 {
            let w = LocalWindow::new(&g, x0, 0.3).unwrap();
            let b = local_double_conjugate(&sq, &cost, &w, 1e-9).unwrap();
            assert!(!b.support_empty);
            assert!((b.value - sq.value(x0)).abs() <= 1e-9);
        }

        // Oracle for -x^2 at 0 with eps = 0.5: brute-force sup over y of
        // inf over the open window.
        let neg_sq = GridFunction::sample(g, |x| -x * x).unwrap();
        let w = LocalWindow::new(&g, 20, 0.5).unwrap();
        let b = local_double_conjugate(&neg_sq, &cost, &w, 1e-9).unwrap();
        assert!(b.support_empty);
        let oracle = (0..n)
            .map(|j| {
                let y = g.point(j);
                (0..n)
                    .map(|k| g.point(k))
                    .filter(|z| z.abs() < 0.5)
                    .map(|z| -z * z - z * y)
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((b.value - oracle).abs() <= 1e-12);
        assert!(b.value < 0.0);
        assert!(b.value < -0.1);
    }

    #[test]
    fn local_contains_convex_subgradients() {
        let n = 81;
        let g = sym(n);
        let cost = bilinear(n);
        let f = GridFunction::sample(g, |x| (x - 0.2).abs() + 0.5 * x * x).unwrap();
        let h = g.step();
        for x0 in 1..n - 1 {
            let left = (f.value(x0) - f.value(x0 - 1)) / h;
            let right = (f.value(x0 + 1) - f.value(x0)) / h;
            let w = LocalWindow::new(&g, x0, 0.2).unwrap();
            let s = local_c_subdifferential(&f, &cost, &w, 1e-9).unwrap();
            for j in 0..n {
                let y = g.point(j);
                if y >= left + 1e-9 && y <= right - 1e-9 {
                    assert!(s.contains(j), "x0 {x0} y {y} in [{left}, {right}]");
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn set_relations(v in prop::collection::vec(-1.0..1.0_f64, 25), x0 in 0usize..25, e1 in 0.05..2.0_f64, e2 in 0.05..2.0_f64) {
            let g = sym(25);
            let f = GridFunction::new(g, v).unwrap();
            let cost = CostMatrix::tabulate(&CostSpec::neg_quadratic(1.0).unwrap(), g, g).unwrap();
            let global = c_subdifferential(&f, &cost, x0, 1e-9).unwrap();
            let (small, large) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
            let ls = local_c_subdifferential(&f, &cost, &LocalWindow::new(&g, x0, small).unwrap(), 1e-9).unwrap();
            let ll = local_c_subdifferential(&f, &cost, &LocalWindow::new(&g, x0, large).unwrap(), 1e-9).unwrap();
            for &j in &global.y_indices {
                prop_assert!(ll.contains(j));
            }
            for &j in &ll.y_indices {
                prop_assert!(ls.contains(j));
            }
        }

        #[test]
        fn partial_envelopes_lie_below(v in prop::collection::vec(-1.0..1.0_f64, 21), mask in prop::collection::vec(any::<bool>(), 21)) {
            let g = sym(21);
            let cost = bilinear(21);
            let f = double_c_transform(&GridFunction::new(g, v).unwrap(), &cost).unwrap().values;
            let map = subdifferential_map(&f, &cost, 1e-9).unwrap();
            let sel: Vec<Option<usize>> = (0..21)
                .map(|t| if mask[t] { map.sets[t].y_indices.first().copied() } else { None })
                .collect();
            prop_assume!(sel[1..20].iter().any(Option::is_some));
            let env = envelope_reconstruct(&f, &cost, &sel, 1e-9).unwrap();
            for i in 0..21 {
                prop_assert!(env.value(i) <= f.value(i) + 1e-9);
            }
            let full: Vec<Option<usize>> = (0..21).map(|t| map.sets[t].y_indices.first().copied()).collect();
            let env = envelope_reconstruct(&f, &cost, &full, 1e-9).unwrap();
            for i in 0..21 {
                prop_assert!((env.value(i) - f.value(i)).abs() <= 1e-9 + 2.0 * g.step() * f.lipschitz_estimate());
            }
        }
    }
}
