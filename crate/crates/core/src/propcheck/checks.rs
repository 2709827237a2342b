//! One function per structural statement. Each verifies its hypotheses
//! first and reports `HypothesisFailed` without evaluating the conclusion
//! when one fails.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cost::{check_structure, CostMatrix, StructureProperty};
use crate::error::{Error, Result};
use crate::grid::{same_grid, GridFunction};
use crate::subdiff::{local_c_subdifferential, local_double_conjugate, membership_slack, LocalWindow, SlackTable};
use crate::transform::is_c_convex;
use crate::verdict::{Sweep, Verdict, Witness};

/// Which index pairs a sweep visits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairPlan {
    Exhaustive,
    /// `count` pairs drawn with replacement; exhaustive when `count` covers
    /// every pair.
    Sampled { count: usize, seed: u64 },
}

impl PairPlan {
    /// Pairs from `range`: `u < v` when unordered, every `u != v` otherwise.
    pub fn pairs(&self, range: Range<usize>, ordered: bool) -> Vec<(usize, usize)> {
        let k = range.len();
        let total = if ordered { k * k.saturating_sub(1) } else { k * k.saturating_sub(1) / 2 };
        match *self {
            PairPlan::Sampled { count, seed } if count < total => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut out = Vec::with_capacity(count);
                while out.len() < count {
                    let u = rng.gen_range(range.clone());
                    let v = rng.gen_range(range.clone());
                    if u == v {
                        continue;
                    }
                    out.push(if ordered { (u, v) } else { (u.min(v), u.max(v)) });
                }
                out
            }
            _ => {
                let mut out = Vec::with_capacity(total);
                for u in range.clone() {
                    for v in range.clone() {
                        if (ordered && u != v) || (!ordered && u < v) {
                            out.push((u, v));
                        }
                    }
                }
                out
            }
        }
    }
}

#[derive(Default)]
struct Hypotheses(Vec<String>);

impl Hypotheses {
    fn structure(&mut self, cost: &CostMatrix, property: StructureProperty) -> Result<()> {
        let v = check_structure(cost, property, None)?;
        if !v.holds {
            self.0.push(format!("cost is not {property} (max violation {:e})", v.max_violation));
        }
        Ok(())
    }

    fn convex(&mut self, f: &GridFunction) {
        if !f.is_finite() {
            self.0.push("f takes the value +inf".into());
            return;
        }
        let tol = 1e-9 * (1.0 + f.sup_abs());
        let worst = f.second_differences().into_iter().fold(0.0_f64, |a, d| a.min(d));
        if worst < -tol {
            self.0.push(format!("f is not convex (second difference {worst:e})"));
        }
    }

    fn c_convex(&mut self, f: &GridFunction, cost: &CostMatrix) -> Result<()> {
        let v = is_c_convex(f, cost, None)?;
        if !v.holds {
            self.0.push(format!("f is not c-convex (|f - f^cc| = {:e})", v.deviation));
        }
        Ok(())
    }

    fn verdict(self, id: &str, tol: f64) -> Option<Verdict> {
        (!self.0.is_empty()).then(|| Verdict::hypothesis_failed(id, tol, self.0.join("; ")))
    }
}

fn members(row: &[f64], tol: f64) -> impl Iterator<Item = usize> + '_ {
    row.iter().enumerate().filter(move |(_, &s)| s >= -tol).map(|(j, _)| j)
}

fn intersection(a: &[f64], b: &[f64], tol: f64) -> Vec<usize> {
    (0..a.len()).filter(|&j| a[j] >= -tol && b[j] >= -tol).collect()
}

/// Positive part of the largest convexity defect of `f` plus that of the
/// concavity of `c` in `x`.
fn concavity_defect(f: &GridFunction, cost: &CostMatrix) -> f64 {
    let df = f.second_differences().into_iter().fold(0.0_f64, |a, d| a.max(-d));
    let mut dc = 0.0_f64;
    for i in 1..cost.rows() - 1 {
        for j in 0..cost.cols() {
            dc = dc.max(cost.get(i - 1, j) - 2.0 * cost.get(i, j) + cost.get(i + 1, j));
        }
    }
    df + dc
}

fn check_lambdas(lambdas: &[f64]) -> Result<()> {
    match lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        Some(l) => Err(Error::InvalidParameter(format!("lambda {l} outside [0, 1]"))),
        None => Ok(()),
    }
}

/// Every `y` in `∂_c f(x) ∩ ∂_c g(x)` lies in `∂_c((1-λ)f + λg)(x)`.
pub fn check_mixture(f: &GridFunction, g: &GridFunction, cost: &CostMatrix, lambdas: &[f64], tol: f64) -> Result<Verdict> {
    const ID: &str = "mixture";
    same_grid(f.grid(), g.grid())?;
    check_lambdas(lambdas)?;
    let (tf, tg) = (SlackTable::compute(f, cost)?, SlackTable::compute(g, cost)?);
    let rounding = 1e-12 * (1.0 + f.sup_abs() + g.sup_abs() + cost.sup_abs());
    let mut sweep = Sweep::new(ID, tol + rounding);
    let gj = cost.grid_j();
    for &lambda in lambdas {
        let mix = if lambda == 0.0 {
            f.clone()
        } else if lambda == 1.0 {
            g.clone()
        } else {
            f.zip_with(g, |a, b| {
                if a.is_finite() && b.is_finite() {
                    (1.0 - lambda) * a + lambda * b
                } else {
                    f64::INFINITY
                }
            })?
        };
        let tm = SlackTable::compute(&mix, cost)?;
        for i in 0..f.len() {
            for j in intersection(tf.row(i), tg.row(i), tol) {
                sweep.observe(-tm.slack(i, j), || {
                    Witness::new(vec![i, j], Some(lambda), vec![f.grid().point(i), gj.point(j)])
                });
            }
        }
    }
    Ok(sweep.finish(""))
}

/// With `X = {f < g}`: if `u ∈ X` and `∂_c g(u) ∩ ∂_c f(v)` is nonempty then
/// `v ∈ X`. Quantitatively `g(v) - f(v) >= g(u) - f(u) - 2 tol`; `u`
/// qualifies when its gap exceeds `3 tol`.
pub fn check_order_propagation(f: &GridFunction, g: &GridFunction, cost: &CostMatrix, plan: PairPlan, tol: f64) -> Result<Verdict> {
    const ID: &str = "order_propagation";
    same_grid(f.grid(), g.grid())?;
    f.require_finite()?;
    g.require_finite()?;
    let (tf, tg) = (SlackTable::compute(f, cost)?, SlackTable::compute(g, cost)?);
    let gap: Vec<f64> = (0..f.len()).map(|i| g.value(i) - f.value(i)).collect();
    let mut sweep = Sweep::new(ID, tol);
    let grid = f.grid();
    for (u, v) in plan.pairs(0..f.len(), true) {
        if gap[u] <= 3.0 * tol {
            continue;
        }
        let (ru, rv) = (tg.row(u), tf.row(v));
        let Some(j) = (0..ru.len()).find(|&j| ru[j] >= -tol && rv[j] >= -tol) else {
            continue;
        };
        sweep.observe(gap[u] - 2.0 * tol - gap[v], || {
            Witness::new(vec![u, v, j], None, vec![grid.point(u), grid.point(v), cost.grid_j().point(j)])
        });
    }
    Ok(sweep.finish(""))
}

/// For 2-affine costs every set is a contiguous index range, and two
/// distinct interior points share at most one `y` up to a grid step.
pub fn check_subdiff_convexity(f: &GridFunction, cost: &CostMatrix, plan: PairPlan, tol: f64) -> Result<Verdict> {
    const ID: &str = "subdiff_convexity";
    let mut hyp = Hypotheses::default();
    hyp.structure(cost, StructureProperty::TwoAffine)?;
    if let Some(v) = hyp.verdict(ID, tol) {
        return Ok(v);
    }
    let t = SlackTable::compute(f, cost)?;
    let gj = cost.grid_j();
    let grid = f.grid();
    let mut sweep = Sweep::new(ID, tol);
    for i in 0..f.len() {
        let row = t.row(i);
        let mut m = members(row, tol);
        let Some(first) = m.next() else { continue };
        let last = m.last().unwrap_or(first);
        for j in first..=last {
            sweep.observe(-row[j], || Witness::new(vec![i, j], None, vec![grid.point(i), gj.point(j)]));
        }
    }
    let n = f.len();
    for (u, v) in plan.pairs(1..n - 1, false) {
        let common = intersection(t.row(u), t.row(v), tol);
        if let (Some(&lo), Some(&hi)) = (common.first(), common.last()) {
            let diameter = gj.point(hi) - gj.point(lo);
            sweep.observe(diameter - gj.step(), || {
                Witness::new(vec![u, v, lo, hi], None, vec![grid.point(u), grid.point(v), gj.point(lo), gj.point(hi)])
            });
        }
    }
    Ok(sweep.finish(""))
}

/// Mixed subgradients lie in the set at the mixed point:
/// `(1-λ)a + λb ∈ ∂_c f((1-λ)x₁ + λx₂)` for `a ∈ ∂_c f(x₁)`, `b ∈ ∂_c f(x₂)`.
/// Both mixtures are snapped to the grid and the tolerance grows by
/// `(L_f + L_cx) δx + 2 L_cy δy`.
pub fn check_set_valued_convexity(
    f: &GridFunction,
    cost: &CostMatrix,
    lambdas: &[f64],
    plan: PairPlan,
    tol: f64,
) -> Result<Verdict> {
    const ID: &str = "set_valued_convexity";
    const NOTE: &str = "joint concavity segment-tested";
    check_lambdas(lambdas)?;
    let mut hyp = Hypotheses::default();
    hyp.structure(cost, StructureProperty::TwoAffine)?;
    hyp.structure(cost, StructureProperty::JointlyConcave)?;
    hyp.convex(f);
    hyp.c_convex(f, cost)?;
    if let Some(mut v) = hyp.verdict(ID, tol) {
        v.notes = format!("{}; {NOTE}", v.notes);
        return Ok(v);
    }
    let t = SlackTable::compute(f, cost)?;
    let (gi, gj) = (f.grid(), cost.grid_j());
    let (lf, lcx, lcy) = (f.lipschitz_estimate(), cost.lipschitz_x(), cost.lipschitz_y());
    let samples = |i: usize| -> Vec<usize> {
        let m: Vec<usize> = members(t.row(i), tol).collect();
        let mut s = match m.len() {
            0 => vec![],
            _ => vec![m[0], m[m.len() / 2], m[m.len() - 1]],
        };
        s.dedup();
        s
    };
    let n = f.len();
    let mut pairs: Vec<(usize, usize)> = (0..n).map(|i| (i, i)).collect();
    pairs.extend(plan.pairs(0..n, false));
    let mut sweep = Sweep::new(ID, tol);
    for (u, v) in pairs {
        let (sa, sb) = (samples(u), samples(v));
        if sa.is_empty() || sb.is_empty() {
            continue;
        }
        for &lambda in lambdas {
            let xm = (1.0 - lambda) * gi.point(u) + lambda * gi.point(v);
            let k = gi.nearest_index(xm);
            let dx = (gi.point(k) - xm).abs();
            for &a in &sa {
                for &b in &sb {
                    let ym = (1.0 - lambda) * gj.point(a) + lambda * gj.point(b);
                    let l = gj.nearest_index(ym);
                    let dy = (gj.point(l) - ym).abs();
                    let allowed = tol + (lf + lcx) * dx + 2.0 * lcy * dy;
                    sweep.observe_with_tol(-t.slack(k, l), allowed, || {
                        Witness::new(vec![u, v, a, b, k, l], Some(lambda), vec![gi.point(u), gi.point(v), xm, ym])
                    });
                }
            }
        }
    }
    Ok(sweep.finish(NOTE))
}

/// For 1-concave costs and convex, c-convex `f`:
/// `∂_c f(x₁) ∩ ∂_c f(x₂) ⊂ ∂_c f((1-λ)x₁ + λx₂)`.
pub fn check_intersection_inclusion(
    f: &GridFunction,
    cost: &CostMatrix,
    lambdas: &[f64],
    plan: PairPlan,
    tol: f64,
) -> Result<Verdict> {
    const ID: &str = "intersection_inclusion";
    check_lambdas(lambdas)?;
    let mut hyp = Hypotheses::default();
    hyp.structure(cost, StructureProperty::OneConcave)?;
    hyp.convex(f);
    hyp.c_convex(f, cost)?;
    if let Some(v) = hyp.verdict(ID, tol) {
        return Ok(v);
    }
    let t = SlackTable::compute(f, cost)?;
    let (gi, gj) = (f.grid(), cost.grid_j());
    let lip = f.lipschitz_estimate() + cost.lipschitz_x();
    let defect = concavity_defect(f, cost);
    let mut sweep = Sweep::new(ID, tol);
    for (u, v) in plan.pairs(1..f.len() - 1, false) {
        let common = intersection(t.row(u), t.row(v), tol);
        if common.is_empty() {
            continue;
        }
        let steps = (v - u) as f64;
        for &lambda in lambdas {
            let xm = (1.0 - lambda) * gi.point(u) + lambda * gi.point(v);
            let k = gi.nearest_index(xm);
            let allowed = tol + lip * (gi.point(k) - xm).abs() + defect * steps * steps / 8.0;
            for &j in &common {
                sweep.observe_with_tol(-t.slack(k, j), allowed, || {
                    Witness::new(vec![u, v, k, j], Some(lambda), vec![gi.point(u), gi.point(v), xm, gj.point(j)])
                });
            }
        }
    }
    Ok(sweep.finish(""))
}

/// For 1-concave costs and convex `f`: if `∂_c f(x₁) ∩ ∂_c f(x₂)` is
/// nonempty then every grid point of `[x₁, x₂]` has a nonempty set.
pub fn check_domain_interval(f: &GridFunction, cost: &CostMatrix, plan: PairPlan, tol: f64) -> Result<Verdict> {
    const ID: &str = "domain_interval";
    let mut hyp = Hypotheses::default();
    hyp.structure(cost, StructureProperty::OneConcave)?;
    hyp.convex(f);
    if let Some(v) = hyp.verdict(ID, tol) {
        return Ok(v);
    }
    let t = SlackTable::compute(f, cost)?;
    let gi = f.grid();
    let defect = concavity_defect(f, cost);
    let best: Vec<f64> = (0..f.len()).map(|i| t.best(i).1).collect();
    let mut sweep = Sweep::new(ID, tol);
    for (u, v) in plan.pairs(0..f.len(), false) {
        if intersection(t.row(u), t.row(v), tol).is_empty() {
            continue;
        }
        let steps = (v - u) as f64;
        let allowed = tol + defect * steps * steps / 8.0;
        for k in u..=v {
            sweep.observe_with_tol(-best[k], allowed, || {
                Witness::new(vec![u, v, k], None, vec![gi.point(u), gi.point(v), gi.point(k)])
            });
        }
    }
    Ok(sweep.finish(""))
}

/// At interior `x` with `y ∈ ∂_c f(x)`: `|∂c/∂x(x, y) - f'(x)| <= C h`, with
/// `f'` from central differences and
/// `C = (M2_f + M3_f h + M2_c)/2 + M3_f h/6 + tol/h²` from grid estimates of
/// the second and third derivatives. The `M3_f h` term covers the gap
/// between the grid maximum of `f''` and its maximum between grid points.
pub fn check_grad_inclusion(f: &GridFunction, cost: &CostMatrix, tol: f64) -> Result<Verdict> {
    const ID: &str = "grad_inclusion";
    let spec = cost.spec().ok_or(Error::NoCostSpec)?;
    if !spec.has_partial_x() {
        return Err(Error::NotAnalytic(spec.family().into()));
    }
    same_grid(f.grid(), cost.grid_i())?;
    f.require_finite()?;
    let n = f.len();
    if n < 4 {
        return Err(Error::GridTooSmall {
            property: ID.into(),
            points: n,
        });
    }
    let (gi, gj) = (f.grid(), cost.grid_j());
    let h = gi.step();
    let v = f.values();
    let m2f = f.second_differences().iter().fold(0.0_f64, |a, d| a.max(d.abs())) / (h * h);
    let m3f = v
        .windows(4)
        .fold(0.0_f64, |a, w| a.max((w[3] - 3.0 * w[2] + 3.0 * w[1] - w[0]).abs()))
        / (h * h * h);
    let m2c = cost.max_abs_second_difference_x() / (h * h);
    let c = (m2f + m3f * h + m2c) / 2.0 + m3f * h / 6.0 + tol / (h * h);
    let bound = c * h;
    let t = SlackTable::compute(f, cost)?;
    let mut sweep = Sweep::new(ID, bound);
    for i in 1..n - 1 {
        let fprime = (v[i + 1] - v[i - 1]) / (2.0 * h);
        for j in members(t.row(i), tol) {
            let (x, y) = (gi.point(i), gj.point(j));
            let d = (spec.partial_x(x, y)? - fprime).abs();
            sweep.observe(d, || Witness::new(vec![i, j], None, vec![x, y]));
        }
    }
    Ok(sweep.finish(format!("C = {c:e}, h = {h:e}")))
}

/// Each cost slice `c(·, y_j)` has `y_j` in its set at every grid point with
/// slack exactly zero.
pub fn check_cost_self_subdiff(cost: &CostMatrix) -> Result<Verdict> {
    const ID: &str = "cost_self_subdiff";
    let (n, m) = (cost.rows(), cost.cols());
    let mut sweep = Sweep::new(ID, 0.0);
    for j in 0..m {
        let slice = GridFunction::new(*cost.grid_i(), cost.column(j))?;
        for i in 0..n {
            let slack = membership_slack(&slice, cost, i, j)?;
            sweep.observe(slack.abs(), || {
                Witness::new(vec![i, j], None, vec![cost.grid_i().point(i), cost.grid_j().point(j)])
            });
        }
    }
    Ok(sweep.finish(""))
}

/// A local support curve exists at `α` iff `|f(α) - f_l^cc(α)| <= tol`.
pub fn check_local_support_iff(f: &GridFunction, cost: &CostMatrix, alpha_index: usize, epsilon: f64, tol: f64) -> Result<Verdict> {
    const ID: &str = "local_support_iff";
    let grid = f.grid();
    if alpha_index >= grid.len() || !grid.is_interior(alpha_index) {
        return Err(Error::InvalidParameter(format!("alpha index {alpha_index} is not an interior grid point")));
    }
    let window = LocalWindow::new(grid, alpha_index, epsilon)?;
    let set = local_c_subdifferential(f, cost, &window, tol)?;
    let biconj = local_double_conjugate(f, cost, &window, tol)?;
    let diff = f.value(alpha_index) - biconj.value;
    let supported = !set.is_empty();
    let equal = diff.abs() <= tol;
    let mut sweep = Sweep::new(ID, tol);
    let witness = || Witness::new(vec![alpha_index], None, vec![grid.point(alpha_index), epsilon, biconj.value]);
    if supported != equal {
        sweep.fail(diff.abs(), witness());
    } else if supported {
        sweep.observe(diff.abs(), witness);
    } else {
        sweep.observe(0.0, witness);
    }
    let notes = if supported {
        format!("local support with {} members; f_l^cc(alpha) = f(alpha)", set.len())
    } else {
        format!("no local support; f(alpha) - f_l^cc(alpha) = {diff:e}")
    };
    Ok(sweep.finish(notes))
}
