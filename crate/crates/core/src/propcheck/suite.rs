use std::collections::BTreeMap;
use std::thread;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::checks::*;
use super::instance::{generate_instance, random_convex, random_piecewise_linear, random_smooth_fourier, Generator, InstanceConfig};
use crate::cost::{CostMatrix, CostSpec, TranslationKernel};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::transform::double_c_transform;
use crate::verdict::{Status, Verdict};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Points on `I`; `J` grids are sized to keep the same step.
    pub n: usize,
    pub tol: f64,
    /// Pairs sampled per pair sweep.
    pub pairs: usize,
    pub exhaustive: bool,
    /// Swap in instances that break the hypotheses of the checks that need
    /// convex or c-convex `f`.
    pub falsify: bool,
    pub lambdas: Vec<f64>,
    /// Random instances per check and cost family.
    pub instances: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            n: 129,
            tol: 1e-9,
            pairs: 10_000,
            exhaustive: false,
            falsify: false,
            lambdas: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            instances: 3,
        }
    }
}

impl SuiteConfig {
    fn validate(&self) -> Result<()> {
        if self.n < 5 {
            return Err(Error::InvalidParameter(format!("suite needs n >= 5, got {}", self.n)));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be positive, got {}", self.tol)));
        }
        if let Some(l) = self.lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
            return Err(Error::InvalidParameter(format!("lambda {l} outside [0, 1]")));
        }
        Ok(())
    }

    fn plan(&self, tag: u64) -> PairPlan {
        if self.exhaustive {
            PairPlan::Exhaustive
        } else {
            PairPlan::Sampled {
                count: self.pairs,
                seed: self.derive(tag),
            }
        }
    }

    fn derive(&self, tag: u64) -> u64 {
        self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(tag)
    }
}

/// Hex SHA-256 of the JSON-serialized config.
pub fn config_hash(cfg: &SuiteConfig) -> String {
    crate::io::content_hash(&serde_json::to_vec(cfg).expect("config serializes"))
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub config: SuiteConfig,
    pub config_hash: String,
    pub verdicts: Vec<Verdict>,
}

impl SuiteReport {
    /// No conclusion failed on an instance whose hypotheses held.
    pub fn passed(&self) -> bool {
        !self.verdicts.iter().any(Verdict::is_failure)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One line per check, in first-appearance order.
    pub fn summary(&self) -> String {
        let mut order: Vec<&str> = Vec::new();
        let mut groups: BTreeMap<&str, Vec<&Verdict>> = BTreeMap::new();
        for v in &self.verdicts {
            if !groups.contains_key(v.check_id.as_str()) {
                order.push(&v.check_id);
            }
            groups.entry(&v.check_id).or_default().push(v);
        }
        let mut out = String::new();
        for id in order {
            let vs = &groups[id];
            let count = |s: Status| vs.iter().filter(|v| v.status == s).count();
            let worst = vs.iter().map(|v| v.max_violation / v.tol.max(f64::MIN_POSITIVE)).fold(0.0_f64, f64::max);
            let ok = vs.iter().all(|v| !v.is_failure());
            out.push_str(&format!(
                "{:<24} {} holds={} vacuous={} hypothesis_failed={} violated={} worst_violation/tol={:e}\n",
                id,
                if ok { "PASS" } else { "FAIL" },
                count(Status::Holds),
                count(Status::Vacuous),
                count(Status::HypothesisFailed),
                count(Status::Violated),
                worst
            ));
        }
        let failed = self.verdicts.iter().filter(|v| v.is_failure()).count();
        out.push_str(&format!("{} verdicts, {} failed, config {}\n", self.verdicts.len(), failed, &self.config_hash[..16]));
        out
    }
}

type Job<'a> = Box<dyn FnOnce() -> Result<Vec<Verdict>> + Send + 'a>;

/// Runs every check over its seeded instance family. Checks run on separate
/// threads; verdicts are collected in a fixed order.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    cfg.validate()?;
    let jobs: Vec<Job> = vec![
        Box::new(|| mixture(cfg)),
        Box::new(|| order_propagation(cfg)),
        Box::new(|| subdiff_convexity(cfg)),
        Box::new(|| set_valued_convexity(cfg)),
        Box::new(|| intersection_inclusion(cfg)),
        Box::new(|| domain_interval(cfg)),
        Box::new(|| grad_inclusion(cfg)),
        Box::new(|| cost_self_subdiff(cfg)),
        Box::new(|| local_support_iff(cfg)),
    ];
    let results: Vec<Result<Vec<Verdict>>> = thread::scope(|s| {
        let handles: Vec<_> = jobs.into_iter().map(|job| s.spawn(job)).collect();
        handles.into_iter().map(|h| h.join().expect("check thread panicked")).collect()
    });
    let mut verdicts = Vec::new();
    for r in results {
        verdicts.extend(r?);
    }
    Ok(SuiteReport {
        config: cfg.clone(),
        config_hash: config_hash(cfg),
        verdicts,
    })
}

fn sym(n: usize) -> Result<Grid> {
    Grid::uniform(-1.0, 1.0, n)
}

/// `[-w, w]` with the step of a symmetric `n`-point grid on `[-1, 1]`.
fn wide(n: usize, w: usize) -> Result<Grid> {
    Grid::uniform(-(w as f64), w as f64, w * (n - 1) + 1)
}

fn instance(cfg: &SuiteConfig, tag: u64, spec: CostSpec, m_width: usize) -> Result<(GridFunction, CostMatrix)> {
    let ic = InstanceConfig {
        n: cfg.n,
        m: m_width * (cfg.n - 1) + 1,
        interval_j: [-(m_width as f64), m_width as f64],
        ..InstanceConfig::new(cfg.derive(tag), spec, Generator::CconvexifiedRandom)
    };
    generate_instance(&ic)
}

fn nq() -> CostSpec {
    CostSpec::neg_quadratic(1.0).expect("positive scale")
}

fn mixture(cfg: &SuiteConfig) -> Result<Vec<Verdict>> {
    let mut out = Vec::new();
    let (f, c) = instance(cfg, 100, CostSpec::Bilinear, 1)?;
    out.push(check_mixture(&f, &f, &c, &cfg.lambdas, cfg.tol)?.with_instance("bilinear/f=g"));
    for k in 0..cfg.instances as u64 {
        for (name, spec, w) in [("bilinear", CostSpec::Bilinear, 1), ("neg_quadratic", nq(), 2)] {
            let (f, c) = instance(cfg, 110 + 2 * k, spec.clone(), w)?;
            let (g, _) = instance(cfg, 111 + 2 * k, spec, w)?;
            out.push(check_mixture(&f, &g, &c, &cfg.lambdas, cfg.tol)?.with_instance(format!("{name}/random_pair#{k}")));
        }
    }
    Ok(out)
}

fn order_propagation(cfg: &SuiteConfig) -> Result<Vec<Verdict>> {
    let mut out = Vec::new();
    let (g, c) = instance(cfg, 200, CostSpec::Bilinear, 1)?;
    let f = g.map(|v| v - 1.0)?;
    out.push(check_order_propagation(&f, &g, &c, cfg.plan(200), cfg.tol)?.with_instance("bilinear/f=g-1"));
    out.push(check_order_propagation(&g, &g, &c, cfg.plan(201), cfg.tol)?.with_instance("bilinear/f=g"));
    for k in 0..cfg.instances as u64 {
        for (name, spec, w) in [("bilinear", CostSpec::Bilinear, 1), ("neg_quadratic", nq(), 2)] {
            let (f, c) = instance(cfg, 210 + 2 * k, spec.clone(), w)?;
            let (g, _) = instance(cfg, 211 + 2 * k, spec, w)?;
            let v = check_order_propagation(&f, &g, &c, cfg.plan(210 + k), cfg.tol)?;
            out.push(v.with_instance(format!("{name}/random_pair#{k}")));
        }
    }
    Ok(out)
}

fn subdiff_convexity(cfg: &SuiteConfig) -> Result<Vec<Verdict>> {
    let mut out = Vec::new();
    let g = sym(cfg.n)?;
    let bil = CostMatrix::tabulate(&CostSpec::Bilinear, g, g)?;
    let abs = GridFunction::sample(g, f64::abs)?;
    out.push(check_subdiff_convexity(&abs, &bil, cfg.plan(300), cfg.tol)?.with_instance("bilinear/abs"));
    let two_affine = CostMatrix::from_fn("sin(x)*y+x^2", g, g, |x, y| x.sin() * y + x * x)?;
    for k in 0..cfg.instances as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.derive(310 + k));
        let base = random_piecewise_linear(&mut rng, g, 1.0)?;
        let f = double_c_transform(&base, &two_affine)?.values;
        out.push(check_subdiff_convexity(&f, &two_affine, cfg.plan(310 + k), cfg.tol)?.with_instance(format!("sin(x)*y+x^2/random#{k}")));
        let (f, c) = instance(cfg, 320 + k, CostSpec::Bilinear, 1)?;
        out.push(check_subdiff_convexity(&f, &c, cfg.plan(320 + k), cfg.tol)?.with_instance(format!("bilinear/random#{k}")));
    }
    Ok(out)
}

/// Costs that are 2-affine and jointly concave on a grid are
/// `κ y + a x + b`, whose c-convex functions are `a x + b + K`.
fn set_valued_convexity(cfg: &SuiteConfig) -> Result<Vec<Verdict>> {
    let mut out = Vec::new();
    let g = sym(cfg.n)?;
    for k in 0..cfg.instances as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.derive(400 + k));
        let (kappa, a, b, shift): (f64, f64, f64, f64) = (
            rng.gen_range(-1.0..=1.0),
            rng.gen_range(-1.0..=1.0),
            rng.gen_range(-1.0..=1.0),
            rng.gen_range(-1.0..=1.0),
        );
        let c = CostMatrix::from_fn("kappa*y+a*x+b", g, g, |x, y| kappa * y + a * x + b)?;
        let f = if cfg.falsify {
            GridFunction::sample(g, |x| -x * x)?
        } else {
            GridFunction::sample(g, |x| a * x + b + shift)?
        };
        let label = if cfg.falsify { "falsified" } else { "degenerate" };
        let v = check_set_valued_convexity(&f, &c, &cfg.lambdas, cfg.plan(400 + k), cfg.tol)?;
        out.push(v.with_instance(format!("kappa*y+a*x+b/{label}#{k}")));
    }
    Ok(out)
}

fn convex_family(cfg: &SuiteConfig, tag: u64) -> Result<Vec<(String, GridFunction)>> {
    let g = sym(cfg.n)?;
    if cfg.falsify {
        return Ok(vec![
            ("neg_parabola".into(), GridFunction::sample(g, |x| -x * x)?),
            ("neg_abs".into(), GridFunction::sample(g, |x| -x.abs())?),
        ]);
    }
    let mut out = vec![
        ("parabola".to_string(), GridFunction::sample(g, |x| x * x)?),
        ("abs".to_string(), GridFunction::sample(g, f64::abs)?),
    ];
    for k in 0..cfg.instances as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.derive(tag + k));
        out.push((format!("random_convex#{k}"), random_convex(&mut rng, g)?));
    }
    Ok(out)
}

fn nq_cost(cfg: &SuiteConfig) -> Result<CostMatrix> {
    CostMatrix::tabulate(&nq(), sym(cfg.n)?, wide(cfg.n, 2)?)
}

/// Neg-quadratic sets of convex functions only meet between grid
/// neighbours; the bilinear family adds pairs that are far apart.
fn one_concave_costs(cfg: &SuiteConfig) -> Result<[(&'static str, CostMatrix); 2]> {
    Ok([
        ("neg_quadratic", nq_cost(cfg)?),
        ("bilinear", CostMatrix::tabulate(&CostSpec::Bilinear, sym(cfg.n)?, wide(cfg.n, 2)?)?),
    ])
}

fn intersection_inclusion(cfg: &SuiteConfig) -> Result<Vec<Verdict>> {
    let mut out = Vec::new();
    for (cname, c) in one_concave_costs(cfg)? {
        for (k, (name, f)) in convex_family(cfg, 500)?.into_iter().enumerate() {
            let v = check_intersection_inclusion(&f, &c, &cfg.lambdas, cfg.plan(510 + k as u64), cfg.tol)?;
            out.push(v.with_instance(format!("{cname}/{name}")));
        }
    }
    Ok(out)
}

fn domain_interval(cfg: &SuiteConfig) -> Result<Vec<Verdict>> {
    let mut out = Vec::new();
    for (cname, c) in one_concave_costs(cfg)? {
        for (k, (name, f)) in convex_family(cfg, 500)?.into_iter().enumerate() {
            let v = check_domain_interval(&f, &c, cfg.plan(610 + k as u64), cfg.tol)?;
            out.push(v.with_instance(format!("{cname}/{name}")));
        }
    }
    Ok(out)
}

fn grad_inclusion(cfg: &SuiteConfig) -> Result<Vec<Verdict>> {
    let mut out = Vec::new();
    let g = sym(cfg.n)?;
    let bil = CostMatrix::tabulate(&CostSpec::Bilinear, g, wide(cfg.n, 3)?)?;
    let sq = GridFunction::sample(g, |x| x * x)?;
    out.push(check_grad_inclusion(&sq, &bil, cfg.tol)?.with_instance("bilinear/parabola"));
    for k in 0..cfg.instances as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.derive(700 + k));
        let wiggle = random_smooth_fourier(&mut rng, g, 0.05)?;
        let f = wiggle.zip_with(&sq, |a, b| a + b)?;
        out.push(check_grad_inclusion(&f, &bil, cfg.tol)?.with_instance(format!("bilinear/parabola+fourier#{k}")));
    }
    let slice = GridFunction::new(g, bil.column(bil.cols() * 2 / 3))?;
    out.push(check_grad_inclusion(&slice, &bil, cfg.tol)?.with_instance("bilinear/cost_slice"));
    let nqc = nq_cost(cfg)?;
    out.push(check_grad_inclusion(&sq, &nqc, cfg.tol)?.with_instance("neg_quadratic/parabola"));
    let r = Grid::uniform(0.0, 0.4, cfg.n)?;
    let refl = CostMatrix::tabulate(&CostSpec::Reflector, r, r)?;
    let slice = GridFunction::new(r, refl.column(cfg.n / 2))?;
    out.push(check_grad_inclusion(&slice, &refl, cfg.tol)?.with_instance("reflector/cost_slice"));
    Ok(out)
}

fn cost_self_subdiff(cfg: &SuiteConfig) -> Result<Vec<Verdict>> {
    let g = sym(cfg.n)?;
    let r = Grid::uniform(0.0, 0.5, cfg.n)?;
    let costs = [
        (CostSpec::Bilinear, g),
        (nq(), g),
        (CostSpec::Reflector, r),
        (CostSpec::one_affine(vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 1.0])?, g),
        (CostSpec::Translation(TranslationKernel::Cos), g),
    ];
    costs
        .into_iter()
        .map(|(spec, grid)| {
            let c = CostMatrix::tabulate(&spec, grid, grid)?;
            Ok(check_cost_self_subdiff(&c)?.with_instance(spec.to_string()))
        })
        .collect()
}

fn local_support_iff(cfg: &SuiteConfig) -> Result<Vec<Verdict>> {
    let mut out = Vec::new();
    let g = sym(cfg.n)?;
    let bil = CostMatrix::tabulate(&CostSpec::Bilinear, g, g)?;
    let neg_abs = GridFunction::sample(g, |x| -x.abs())?;
    for alpha in [0.5, 0.0] {
        let a = g.nearest_index(alpha);
        let v = check_local_support_iff(&neg_abs, &bil, a, 0.25, cfg.tol)?;
        out.push(v.with_instance(format!("bilinear/neg_abs/alpha={}", g.point(a))));
    }
    for k in 0..cfg.instances as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.derive(900 + k));
        let a = rng.gen_range(1..cfg.n - 1);
        let f = random_piecewise_linear(&mut rng, g, 1.0)?;
        let v = check_local_support_iff(&f, &bil, a, 0.25, cfg.tol)?;
        out.push(v.with_instance(format!("bilinear/random_piecewise_linear#{k}/alpha={}", g.point(a))));
        let (f, c) = instance(cfg, 910 + k, nq(), 2)?;
        let v = check_local_support_iff(&f, &c, a, 0.25, cfg.tol)?;
        out.push(v.with_instance(format!("neg_quadratic/cconvexified_random#{k}/alpha={}", g.point(a))));
    }
    Ok(out)
}
