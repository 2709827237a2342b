//! One PASS/FAIL line per acceptance criterion. Exits nonzero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use cconvex::jensen::{discrete_jensen_gap, integral_jensen_bound, midpoint_bound, weighted_integral_bound, JensenProblem, JensenReport};
use cconvex::propcheck::{dyadic_grid_measure, generate_instance, run_suite, Generator, InstanceConfig, SuiteConfig};
use cconvex::verdict::Status;
use cconvex::{
    c_transform, double_c_transform, fenchel_conjugate_fast, is_c_convex, sup_norm_diff, CostMatrix, CostSpec, Grid, GridFunction,
    QuadratureRule,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, budget_s: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < budget_s, || format!("took {elapsed:.2?}, budget {budget_s} s"))
}

fn conjugate_correctness() -> Outcome {
    let start = Instant::now();
    let g = Grid::uniform(-1.0, 1.0, 513).map_err(|e| e.to_string())?;
    let c = CostMatrix::tabulate(&CostSpec::Bilinear, g, g).map_err(|e| e.to_string())?;
    let f = GridFunction::sample(g, |x| x * x / 2.0).map_err(|e| e.to_string())?;
    let fc = c_transform(&f, &c).map_err(|e| e.to_string())?.values;
    let exact = GridFunction::sample(g, |y| y * y / 2.0).map_err(|e| e.to_string())?;
    let err = sup_norm_diff(&fc, &exact).map_err(|e| e.to_string())?;
    ensure(err <= 1e-3, || format!("|f^c - y^2/2| = {err:e} > 1e-3"))?;

    let g = Grid::uniform(-1.0, 1.0, 8193).map_err(|e| e.to_string())?;
    let c = CostMatrix::tabulate(&CostSpec::Bilinear, g, g).map_err(|e| e.to_string())?;
    let f = GridFunction::sample(g, |x| x * x / 2.0).map_err(|e| e.to_string())?;
    let brute = c_transform(&f, &c).map_err(|e| e.to_string())?.values;
    let fast = fenchel_conjugate_fast(&f, &g).map_err(|e| e.to_string())?.values;
    let gap = sup_norm_diff(&brute, &fast).map_err(|e| e.to_string())?;
    ensure(gap <= 1e-12, || format!("fast vs brute at n = 8193: {gap:e} > 1e-12"))?;
    let elapsed = start.elapsed();
    within(elapsed, 5.0)?;
    Ok(format!("n=513 error {err:e}, n=8193 fast/brute gap {gap:e}, {elapsed:.2?}"))
}

/// The 200 seeded instances shared by criteria 2 and 3.
fn envelope_instances() -> Result<Vec<(GridFunction, CostMatrix)>, String> {
    (0..200u64)
        .map(|seed| {
            let cost = if seed % 2 == 0 {
                CostSpec::Bilinear
            } else {
                CostSpec::neg_quadratic(1.0).map_err(|e| e.to_string())?
            };
            let generator = if seed % 4 < 2 {
                Generator::RandomPiecewiseLinear
            } else {
                Generator::RandomSmoothFourier
            };
            generate_instance(&InstanceConfig::new(seed, cost, generator)).map_err(|e| e.to_string())
        })
        .collect()
}

fn biconjugate_envelope() -> Outcome {
    let start = Instant::now();
    let g = Grid::uniform(-1.0, 1.0, 1025).map_err(|e| e.to_string())?;
    let c = CostMatrix::tabulate(&CostSpec::Bilinear, g, g).map_err(|e| e.to_string())?;
    let f = GridFunction::sample(g, |x| -x * x).map_err(|e| e.to_string())?;
    let fcc = double_c_transform(&f, &c).map_err(|e| e.to_string())?.values;
    let dev = fcc.values().iter().fold(0.0_f64, |m, v| m.max((v + 1.0).abs()));
    let bound = 4.0 * g.step();
    ensure(dev <= bound, || format!("|f^cc + 1| = {dev:e} > 4h = {bound:e}"))?;

    let mut worst = f64::NEG_INFINITY;
    for (k, (f, c)) in envelope_instances()?.iter().enumerate() {
        let fcc = double_c_transform(f, c).map_err(|e| e.to_string())?.values;
        let excess = fcc.values().iter().zip(f.values()).fold(f64::NEG_INFINITY, |m, (a, b)| m.max(a - b));
        worst = worst.max(excess);
        ensure(excess <= 1e-9, || format!("instance {k}: f^cc exceeds f by {excess:e}"))?;
    }
    let elapsed = start.elapsed();
    within(elapsed, 10.0)?;
    Ok(format!("|f^cc + 1| = {dev:e} <= {bound:e}, max(f^cc - f) = {worst:e} over 200 instances, {elapsed:.2?}"))
}

fn convexity_criterion() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0_f64;
    for (k, (f, c)) in envelope_instances()?.iter().enumerate() {
        let fcc = double_c_transform(f, c).map_err(|e| e.to_string())?.values;
        let again = double_c_transform(&fcc, c).map_err(|e| e.to_string())?.values;
        let drift = sup_norm_diff(&fcc, &again).map_err(|e| e.to_string())?;
        worst = worst.max(drift);
        ensure(drift <= 1e-9, || format!("instance {k}: (f^cc)^cc drifts by {drift:e}"))?;
        let v = is_c_convex(&fcc, c, None).map_err(|e| e.to_string())?;
        ensure(v.holds, || format!("instance {k}: f^cc not c-convex (deviation {:e}, tol {:e})", v.deviation, v.tol))?;
    }
    Ok(format!("max idempotence drift {worst:e}, is_c_convex(f^cc) on 200/200, {:.2?}", start.elapsed()))
}

fn jensen_suite() -> Outcome {
    let start = Instant::now();
    let gi = Grid::uniform(0.0, 1.0, 65).map_err(|e| e.to_string())?;
    let gj = Grid::uniform(-1.0, 1.0, 129).map_err(|e| e.to_string())?;
    let costs = [
        CostSpec::Bilinear,
        CostSpec::neg_quadratic(1.0).map_err(|e| e.to_string())?,
        CostSpec::one_affine(vec![0.0, 1.0, 0.5], vec![0.0, 0.0, 1.0]).map_err(|e| e.to_string())?,
    ];
    let tol = 1e-9;
    let mut min_slack = f64::INFINITY;
    let mut max_affine_rhs = 0.0_f64;
    let mut reports = 0usize;
    for seed in 0..1000u64 {
        let spec = costs[(seed % 3) as usize].clone();
        let cfg = InstanceConfig {
            n: gi.len(),
            m: gj.len(),
            interval_i: [gi.lo(), gi.hi()],
            interval_j: [gj.lo(), gj.hi()],
            ..InstanceConfig::new(seed, spec.clone(), Generator::CconvexifiedRandom)
        };
        let (f, _) = generate_instance(&cfg).map_err(|e| e.to_string())?;
        let p = JensenProblem::tabulated(f, spec.clone(), gj).map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED);
        let atoms = rng.gen_range(1..=5);
        let mu = dyadic_grid_measure(&mut rng, &gi, atoms, 4).map_err(|e| e.to_string())?;
        // same parity, so the midpoint is a grid point
        let i = rng.gen_range(0..gi.len());
        let j = i % 2 + 2 * rng.gen_range(0..=(gi.len() - 1 - i % 2) / 2);
        let mut batch: Vec<(&str, JensenReport)> = vec![
            ("discrete", discrete_jensen_gap(&p, &mu, None, tol).map_err(|e| format!("seed {seed}: {e}"))?),
            ("midpoint", midpoint_bound(&p, gi.point(i), gi.point(j), None, tol).map_err(|e| format!("seed {seed}: {e}"))?),
        ];
        let b = mu.barycenter();
        if b > gi.lo() && b < gi.hi() {
            batch.push(("weighted", weighted_integral_bound(&p, &mu, None, tol).map_err(|e| format!("seed {seed}: {e}"))?));
        }
        for (form, r) in batch {
            reports += 1;
            ensure(r.hypothesis_verified, || format!("seed {seed} {form}: witness not in the c-subdifferential"))?;
            ensure(!r.interpolated, || format!("seed {seed} {form}: barycenter off the grid"))?;
            min_slack = min_slack.min(r.slack);
            ensure(r.slack >= -1e-9, || format!("seed {seed} {form}: slack {:e}", r.slack))?;
            if matches!(spec, CostSpec::OneAffine { .. }) {
                max_affine_rhs = max_affine_rhs.max(r.rhs.abs());
                ensure(r.rhs.abs() <= 1e-12, || format!("seed {seed} {form}: 1-affine rhs {:e}", r.rhs))?;
            }
        }
    }

    let g = Grid::uniform(0.0, 1.0, 1001).map_err(|e| e.to_string())?;
    let gj = Grid::uniform(-2.0, 2.0, 1001).map_err(|e| e.to_string())?;
    let p = JensenProblem::analytic(g, |x| x * x, CostSpec::Bilinear, gj).map_err(|e| e.to_string())?;
    let r = integral_jensen_bound(&p, Some(0.5), None, QuadratureRule::Trapezoid, tol).map_err(|e| e.to_string())?;
    let lhs_err = (r.lhs - 1.0 / 12.0).abs();
    ensure(lhs_err <= 1e-6 && r.rhs.abs() <= 1e-6, || format!("integral form: lhs {} rhs {}", r.lhs, r.rhs))?;
    let elapsed = start.elapsed();
    within(elapsed, 20.0)?;
    Ok(format!(
        "{reports} reports, min slack {min_slack:e}, max 1-affine |rhs| {max_affine_rhs:e}, integral lhs error {lhs_err:e}, {elapsed:.2?}"
    ))
}

fn proposition_suite() -> Outcome {
    let start = Instant::now();
    let report = run_suite(&SuiteConfig::default()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let failed: Vec<String> = report.verdicts.iter().filter(|v| v.is_failure()).map(|v| v.summary_line()).collect();
    ensure(failed.is_empty(), || failed.join("\n"))?;
    for id in [
        "mixture",
        "order_propagation",
        "subdiff_convexity",
        "intersection_inclusion",
        "domain_interval",
        "grad_inclusion",
        "cost_self_subdiff",
        "local_support_iff",
    ] {
        ensure(report.verdicts.iter().any(|v| v.check_id == id && v.status == Status::Holds), || {
            format!("{id} never held on a non-vacuous instance")
        })?;
    }
    let branch = |alpha: &str| {
        report
            .verdicts
            .iter()
            .find(|v| v.instance == format!("bilinear/neg_abs/alpha={alpha}"))
            .map(|v| (v.status, v.notes.clone()))
    };
    match (branch("0.5"), branch("0")) {
        (Some((Status::Holds, yes)), Some((Status::Holds, no))) if yes.starts_with("local support") && no.starts_with("no local support") => {}
        other => return Err(format!("local support branches on -|x|: {other:?}")),
    }
    let self_subdiff_exact = report.verdicts.iter().filter(|v| v.check_id == "cost_self_subdiff").all(|v| v.max_violation == 0.0);
    ensure(self_subdiff_exact, || "cost_self_subdiff slack not identically 0".into())?;
    within(elapsed, 60.0)?;
    Ok(format!("{} verdicts, 0 failed, {elapsed:.2?}", report.verdicts.len()))
}

fn reproducibility() -> Outcome {
    let cfg = SuiteConfig::default();
    let a = run_suite(&cfg).map_err(|e| e.to_string())?.to_json();
    let b = run_suite(&cfg).map_err(|e| e.to_string())?.to_json();
    ensure(a == b, || "suite JSON differs between runs".into())?;
    Ok(format!("{} bytes identical", a.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 6] = [
        ("conjugate correctness", conjugate_correctness),
        ("biconjugate envelope", biconjugate_envelope),
        ("c-convexity criterion", convexity_criterion),
        ("jensen suite", jensen_suite),
        ("proposition suite", proposition_suite),
        ("reproducibility", reproducibility),
    ];
    let mut ok = true;
    for (k, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", k + 1),
            Err(why) => {
                ok = false;
                println!("criterion {} {name}: FAIL ({why})", k + 1);
            }
        }
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
