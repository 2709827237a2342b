use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cost::{CostMatrix, CostSpec};
use crate::error::{Error, Result};
use crate::grid::{DiscreteMeasure, Grid, GridFunction};
use crate::transform::double_c_transform;

const PWL_KNOTS: usize = 8;
const FOURIER_MODES: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    /// Linear interpolation of 8 equally spaced knots with values in
    /// `[-amp, amp]`.
    RandomPiecewiseLinear,
    /// `amp * Σ_{k=1..6} (a_k cos kπt + b_k sin kπt) / k²` on the rescaled
    /// interval.
    RandomSmoothFourier,
    /// `f^cc` of a random piecewise-linear function.
    CconvexifiedRandom,
}

impl Generator {
    pub fn token(self) -> &'static str {
        match self {
            Self::RandomPiecewiseLinear => "random_piecewise_linear",
            Self::RandomSmoothFourier => "random_smooth_fourier",
            Self::CconvexifiedRandom => "cconvexified_random",
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Self::RandomPiecewiseLinear, Self::RandomSmoothFourier, Self::CconvexifiedRandom]
            .into_iter()
            .find(|g| g.token() == s)
            .ok_or_else(|| Error::Parse(format!("unknown generator '{s}'")))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InstanceConfig {
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub interval_i: [f64; 2],
    pub interval_j: [f64; 2],
    pub cost: CostSpec,
    pub generator: Generator,
    pub amplitude: f64,
}

impl InstanceConfig {
    pub fn new(seed: u64, cost: CostSpec, generator: Generator) -> Self {
        Self {
            seed,
            n: 129,
            m: 129,
            interval_i: [-1.0, 1.0],
            interval_j: [-1.0, 1.0],
            cost,
            generator,
            amplitude: 1.0,
        }
    }

    pub fn grids(&self) -> Result<(Grid, Grid)> {
        Ok((
            Grid::uniform(self.interval_i[0], self.interval_i[1], self.n)?,
            Grid::uniform(self.interval_j[0], self.interval_j[1], self.m)?,
        ))
    }
}

/// Deterministic in `cfg`: the same config always yields bit-identical
/// output.
pub fn generate_instance(cfg: &InstanceConfig) -> Result<(GridFunction, CostMatrix)> {
    if !(cfg.amplitude.is_finite() && cfg.amplitude >= 0.0) {
        return Err(Error::InvalidParameter(format!("amplitude {} must be finite and >= 0", cfg.amplitude)));
    }
    let (gi, gj) = cfg.grids()?;
    let cost = CostMatrix::tabulate(&cfg.cost, gi, gj)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let f = match cfg.generator {
        Generator::RandomPiecewiseLinear => random_piecewise_linear(&mut rng, gi, cfg.amplitude)?,
        Generator::RandomSmoothFourier => random_smooth_fourier(&mut rng, gi, cfg.amplitude)?,
        Generator::CconvexifiedRandom => {
            let f = random_piecewise_linear(&mut rng, gi, cfg.amplitude)?;
            double_c_transform(&f, &cost)?.values
        }
    };
    Ok((f, cost))
}

pub fn random_piecewise_linear<R: Rng>(rng: &mut R, grid: Grid, amplitude: f64) -> Result<GridFunction> {
    let knots: Vec<f64> = (0..PWL_KNOTS).map(|_| amplitude * rng.gen_range(-1.0..=1.0)).collect();
    let (lo, len) = (grid.lo(), grid.interval().length());
    let segments = (PWL_KNOTS - 1) as f64;
    GridFunction::sample(grid, |x| {
        let t = ((x - lo) / len * segments).clamp(0.0, segments);
        let k = (t.floor() as usize).min(PWL_KNOTS - 2);
        let w = t - k as f64;
        knots[k] + w * (knots[k + 1] - knots[k])
    })
}

pub fn random_smooth_fourier<R: Rng>(rng: &mut R, grid: Grid, amplitude: f64) -> Result<GridFunction> {
    let coeffs: Vec<(f64, f64)> = (0..FOURIER_MODES)
        .map(|_| (rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)))
        .collect();
    let (lo, len) = (grid.lo(), grid.interval().length());
    GridFunction::sample(grid, |x| {
        let t = (x - lo) / len;
        let s: f64 = coeffs
            .iter()
            .enumerate()
            .map(|(k, &(a, b))| {
                let k = (k + 1) as f64;
                (a * (k * PI * t).cos() + b * (k * PI * t).sin()) / (k * k)
            })
            .sum();
        amplitude * s
    })
}

/// Maximum of four random lines, plus `x²/4` half of the time. Slopes are
/// multiples of 1/8 in `[-1.5, 1.5]` so linear pieces have their slope on
/// dyadic `J` grids.
pub fn random_convex<R: Rng>(rng: &mut R, grid: Grid) -> Result<GridFunction> {
    let lines: Vec<(f64, f64)> = (0..4)
        .map(|_| (rng.gen_range(-12..=12) as f64 / 8.0, rng.gen_range(-4..=4) as f64 / 8.0))
        .collect();
    let curvature = if rng.gen_bool(0.5) { 0.25 } else { 0.0 };
    GridFunction::sample(grid, |x| {
        let hull = lines.iter().map(|&(s, c)| s * x + c).fold(f64::NEG_INFINITY, f64::max);
        hull + curvature * x * x
    })
}

/// A measure of `atoms` distinct grid points with weights `k / 2^depth`,
/// redrawn until the barycenter is exactly a grid point.
pub fn dyadic_grid_measure<R: Rng>(rng: &mut R, grid: &Grid, atoms: usize, depth: u32) -> Result<DiscreteMeasure> {
    let units = 1usize << depth;
    if atoms == 0 || atoms > units || atoms > grid.len() {
        return Err(Error::InvalidParameter(format!(
            "cannot place {atoms} atoms with weights in units of 2^-{depth} on {} points",
            grid.len()
        )));
    }
    let scale = units as f64;
    for _ in 0..10_000 {
        let mut cuts = rand::seq::index::sample(rng, units - 1, atoms - 1).into_vec();
        cuts.iter_mut().for_each(|c| *c += 1);
        cuts.sort_unstable();
        let mut weights = Vec::with_capacity(atoms);
        let mut prev = 0;
        for &c in cuts.iter().chain(std::iter::once(&units)) {
            weights.push((c - prev) as f64 / scale);
            prev = c;
        }
        let points = rand::seq::index::sample(rng, grid.len(), atoms).into_vec();
        let mu = DiscreteMeasure::new(points.iter().map(|&i| grid.point(i)).zip(weights))?;
        if grid.exact_index(mu.barycenter()).is_some() {
            return Ok(mu);
        }
    }
    Err(Error::InvalidParameter("no measure with an on-grid barycenter found".into()))
}
