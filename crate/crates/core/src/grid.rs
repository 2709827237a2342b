//! Intervals, uniform grids, extended-real grid functions, quadrature and
//! discrete probability measures.
//!
//! Extended values are plain `f64` with `f64::INFINITY` as the `+inf`
//! sentinel. `-inf` and NaN are rejected at construction, so every
//! [`GridFunction`] is a proper function on its grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A bounded interval `[lo, hi]` with finite `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::DegenerateInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Midpoint `(lo + hi) / 2`.
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Uniform sampling `x_i = lo + i*h`, `h = (hi - lo)/(n - 1)`, of an interval.
///
/// The last point is pinned to `hi` so both endpoints are exact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    interval: Interval,
    n: usize,
    step: f64,
}

impl Grid {
    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self> {
        let interval = Interval::new(lo, hi)?;
        Self::on(interval, n)
    }

    pub fn on(interval: Interval, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooFewPoints(n));
        }
        let step = (interval.hi - interval.lo) / (n - 1) as f64;
        Ok(Self { interval, n, step })
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn lo(&self) -> f64 {
        self.interval.lo
    }

    pub fn hi(&self) -> f64 {
        self.interval.hi
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    #[inline]
    pub fn point(&self, i: usize) -> f64 {
        debug_assert!(i < self.n);
        if i + 1 == self.n {
            self.interval.hi
        } else {
            self.interval.lo + i as f64 * self.step
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    pub fn is_interior(&self, i: usize) -> bool {
        i > 0 && i + 1 < self.n
    }

    /// Index of the grid point nearest to `x`; ties go to the lower index.
    /// Points outside the interval snap to the nearest endpoint.
    pub fn nearest_index(&self, x: f64) -> usize {
        if x <= self.lo() {
            return 0;
        }
        if x >= self.hi() {
            return self.n - 1;
        }
        let t = (x - self.lo()) / self.step;
        let below = (t.floor() as usize).min(self.n - 1);
        let above = (below + 1).min(self.n - 1);
        if (x - self.point(below)).abs() <= (self.point(above) - x).abs() {
            below
        } else {
            above
        }
    }

    /// Index `i` with `point(i) == x` exactly, if there is one.
    pub fn exact_index(&self, x: f64) -> Option<usize> {
        let i = self.nearest_index(x);
        (self.point(i) == x).then_some(i)
    }
}

/// Values of a proper extended-real function at every point of a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    /// Wraps `values`, checking length, rejecting NaN and `-inf`, and
    /// requiring at least one finite value.
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        for (index, &v) in values.iter().enumerate() {
            if v.is_nan() {
                return Err(Error::NanValue { index });
            }
            if v == f64::NEG_INFINITY {
                return Err(Error::NegativeInfinity { index });
            }
        }
        if !values.iter().any(|v| v.is_finite()) {
            return Err(Error::Improper);
        }
        Ok(Self { grid, values })
    }

    /// Evaluates `f` at every grid point, without smoothing.
    pub fn sample<F>(grid: Grid, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64,
    {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn require_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(Error::InfiniteValue { index }),
            None => Ok(()),
        }
    }

    /// Largest absolute finite value.
    pub fn sup_abs(&self) -> f64 {
        self.values
            .iter()
            .filter(|v| v.is_finite())
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// Largest absolute first difference quotient over pairs of adjacent
    /// finite values.
    pub fn lipschitz_estimate(&self) -> f64 {
        let h = self.grid.step();
        self.values
            .windows(2)
            .filter(|w| w[0].is_finite() && w[1].is_finite())
            .fold(0.0_f64, |acc, w| acc.max(((w[1] - w[0]) / h).abs()))
    }

    /// Second differences `f[i-1] - 2 f[i] + f[i+1]` at interior points.
    pub fn second_differences(&self) -> Vec<f64> {
        self.values
            .windows(3)
            .map(|w| w[0] - 2.0 * w[1] + w[2])
            .collect()
    }

    /// Pointwise map; the result must still be a proper function.
    pub fn map<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64,
    {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination of two functions on the same grid.
    pub fn zip_with<F>(&self, other: &GridFunction, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64,
    {
        same_grid(&self.grid, &other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::new(self.grid, values)
    }

    /// Piecewise-linear interpolation. Returns the value and whether `x`
    /// fell strictly between grid points.
    pub fn interpolate(&self, x: f64) -> Result<(f64, bool)> {
        let grid = &self.grid;
        if !grid.interval().contains(x) {
            return Err(Error::OutOfInterval {
                x,
                lo: grid.lo(),
                hi: grid.hi(),
            });
        }
        if let Some(i) = grid.exact_index(x) {
            return Ok((self.values[i], false));
        }
        let t = (x - grid.lo()) / grid.step();
        let i = (t.floor() as usize).min(grid.len() - 2);
        let (x0, x1) = (grid.point(i), grid.point(i + 1));
        let (v0, v1) = (self.values[i], self.values[i + 1]);
        if v0.is_infinite() || v1.is_infinite() {
            return Ok((f64::INFINITY, true));
        }
        let w = (x - x0) / (x1 - x0);
        Ok((v0 + w * (v1 - v0), true))
    }
}

pub(crate) fn same_grid(a: &Grid, b: &Grid) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!(
            "[{}, {}] with {} points vs [{}, {}] with {} points",
            a.lo(),
            a.hi(),
            a.len(),
            b.lo(),
            b.hi(),
            b.len()
        )))
    }
}

/// `max_i |f_i - g_i|` for two finite functions on the same grid.
pub fn sup_norm_diff(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    same_grid(f.grid(), g.grid())?;
    f.require_finite()?;
    g.require_finite()?;
    Ok(f.values
        .iter()
        .zip(&g.values)
        .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureRule {
    #[default]
    Trapezoid,
    /// Composite midpoint over panels `[x_{2k}, x_{2k+2}]`, sampled at the
    /// odd-indexed points. Needs an odd number of grid points.
    Midpoint,
}

/// Composite quadrature over the uniform grid, summed left to right.
pub fn quadrature(f: &GridFunction, rule: QuadratureRule) -> Result<f64> {
    f.require_finite()?;
    let grid = f.grid();
    let h = grid.step();
    let v = f.values();
    let n = v.len();
    match rule {
        QuadratureRule::Trapezoid => {
            let mut acc = 0.5 * v[0];
            for &vi in &v[1..n - 1] {
                acc += vi;
            }
            acc += 0.5 * v[n - 1];
            Ok(h * acc)
        }
        QuadratureRule::Midpoint => {
            if n % 2 == 0 {
                return Err(Error::MidpointNeedsOddPoints(n));
            }
            let mut acc = 0.0;
            for &vi in v.iter().skip(1).step_by(2) {
                acc += vi;
            }
            Ok(2.0 * h * acc)
        }
    }
}

/// One atom `(x, p)` of a discrete probability measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub x: f64,
    pub p: f64,
}

/// A finitely supported probability measure `sum p_i delta_{x_i}`.
///
/// Atoms are stored sorted by position, so derived quantities do not
/// depend on the order they were supplied in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteMeasure {
    atoms: Vec<Atom>,
}

pub const MEASURE_MASS_TOL: f64 = 1e-12;

impl DiscreteMeasure {
    pub fn new(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut atoms: Vec<Atom> = atoms.into_iter().map(|(x, p)| Atom { x, p }).collect();
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        for a in &atoms {
            if !a.x.is_finite() {
                return Err(Error::InvalidMeasure(format!("atom position {} is not finite", a.x)));
            }
            if !(a.p.is_finite() && a.p > 0.0) {
                return Err(Error::InvalidMeasure(format!("weight {} is not positive", a.p)));
            }
        }
        let mass: f64 = atoms.iter().map(|a| a.p).sum();
        if (mass - 1.0).abs() > MEASURE_MASS_TOL {
            return Err(Error::InvalidMeasure(format!("weights sum to {mass}, not 1")));
        }
        atoms.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.p.total_cmp(&b.p)));
        Ok(Self { atoms })
    }

    /// Point mass at `x`.
    pub fn dirac(x: f64) -> Result<Self> {
        Self::new([(x, 1.0)])
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Fails unless every atom lies in `interval`.
    pub fn check_within(&self, interval: &Interval) -> Result<()> {
        match self.atoms.iter().find(|a| !interval.contains(a.x)) {
            Some(a) => Err(Error::OutOfInterval {
                x: a.x,
                lo: interval.lo(),
                hi: interval.hi(),
            }),
            None => Ok(()),
        }
    }

    /// `sum p_i x_i`.
    pub fn barycenter(&self) -> f64 {
        self.atoms.iter().fold(0.0, |acc, a| acc + a.p * a.x)
    }

    /// `sum p_i g(x_i)`, summed in atom order.
    pub fn expectation<F>(&self, mut g: F) -> f64
    where
        F: FnMut(f64) -> f64,
    {
        self.atoms.iter().fold(0.0, |acc, a| acc + a.p * g(a.x))
    }

    pub fn try_expectation<F>(&self, mut g: F) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let mut acc = 0.0;
        for a in &self.atoms {
            acc += a.p * g(a.x)?;
        }
        Ok(acc)
    }
}
