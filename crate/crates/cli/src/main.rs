mod catalog;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use cconvex::io::{self as cio, content_hash};
use cconvex::jensen::{discrete_jensen_gap, integral_jensen_bound, midpoint_bound, weighted_integral_bound, JensenProblem, JensenReport};
use cconvex::propcheck::{generate_instance, run_suite, Generator, InstanceConfig, SuiteConfig};
use cconvex::subdiff::subdifferential_map;
use cconvex::transform::{default_convexity_tol, ConvexityVerdict, TransformResult};
use cconvex::{c_transform, double_c_transform, is_c_convex, CostMatrix, CostSpec, DiscreteMeasure, Grid, GridFunction, QuadratureRule};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use catalog::CatalogFn;

/// Convexity relative to a cost function on bounded intervals.
#[derive(Parser)]
#[command(name = "cconvex", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute f^c and f^cc and test whether f is c-convex.
    Transform(TransformArgs),
    /// Tabulate the c-subdifferential of f at every grid point.
    Subdiff(SubdiffArgs),
    /// Evaluate a Jensen-type gap bound.
    Jensen(JensenArgs),
    /// Run the proposition suite; exits 1 if any conclusion fails.
    Suite(SuiteArgs),
    /// Write a seeded random instance as a function CSV.
    Gen(GenArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Format {
    Csv,
    Json,
}

fn parse_pair(s: &str) -> std::result::Result<[f64; 2], String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected a,b, got {s:?}"))?;
    let p = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    Ok([p(a)?, p(b)?])
}

#[derive(Args, Debug, Serialize)]
struct InstanceArgs {
    /// Domain I of f as a,b.
    #[arg(long, default_value = "-1,1", value_parser = parse_pair, allow_hyphen_values = true)]
    interval_i: [f64; 2],
    /// Domain J of the conjugate variable as a,b.
    #[arg(long, default_value = "-1,1", value_parser = parse_pair, allow_hyphen_values = true)]
    interval_j: [f64; 2],
    /// Grid points on I.
    #[arg(long, default_value_t = 129)]
    n: usize,
    /// Grid points on J; defaults to n.
    #[arg(long)]
    m: Option<usize>,
    /// Cost family token (bilinear, neg_quadratic[:s], reflector,
    /// one_affine:a..;b.., translation:<kernel>) or csv:PATH.
    #[arg(long, default_value = "bilinear")]
    cost: String,
    /// Catalog function name or csv:PATH.
    #[arg(long, default_value = "parabola")]
    f: String,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
struct OutputArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug, Serialize)]
struct TransformArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Serialize)]
struct SubdiffArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Form {
    Discrete,
    Midpoint,
    Integral,
    Weighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Rule {
    Trapezoid,
    Midpoint,
}

#[derive(Args, Debug, Serialize)]
struct JensenArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, value_enum, default_value_t = Form::Discrete)]
    form: Form,
    /// Atoms as x:p,x:p,.. or csv:PATH (discrete and weighted forms).
    #[arg(long, allow_hyphen_values = true)]
    measure: Option<String>,
    /// Endpoints a,b for the midpoint form.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    points: Option<[f64; 2]>,
    /// Evaluation point for the integral form; defaults to the midpoint of I.
    #[arg(long, allow_hyphen_values = true)]
    xi: Option<f64>,
    /// Witness y; by default the best member of the c-subdifferential on J.
    #[arg(long, allow_hyphen_values = true)]
    y: Option<f64>,
    #[arg(long, value_enum, default_value_t = Rule::Trapezoid)]
    rule: Rule,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct SuiteArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 129)]
    n: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Pairs sampled per pair sweep.
    #[arg(long, default_value_t = 10_000)]
    pairs: usize,
    /// Random instances per check and cost family.
    #[arg(long, default_value_t = 3)]
    instances: usize,
    /// Sweep all pairs instead of sampling.
    #[arg(long)]
    exhaustive: bool,
    /// Swap in instances that violate the hypotheses.
    #[arg(long)]
    falsify: bool,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug, Serialize)]
struct GenArgs {
    #[arg(long, default_value = "-1,1", value_parser = parse_pair, allow_hyphen_values = true)]
    interval_i: [f64; 2],
    #[arg(long, default_value = "-1,1", value_parser = parse_pair, allow_hyphen_values = true)]
    interval_j: [f64; 2],
    #[arg(long, default_value_t = 129)]
    n: usize,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value = "bilinear")]
    cost: String,
    /// random_piecewise_linear, random_smooth_fourier or cconvexified_random.
    #[arg(long, default_value = "cconvexified_random")]
    generator: String,
    #[arg(long, default_value_t = 1.0)]
    amplitude: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

enum Source {
    Catalog(CatalogFn),
    Csv(GridFunction),
}

struct Instance {
    f: GridFunction,
    cost: CostMatrix,
}

fn grid_size(name: &str, v: usize) -> Result<usize> {
    if v < 2 {
        bail!("--{name} must be at least 2, got {v}");
    }
    Ok(v)
}

fn check_tol(tol: Option<f64>) -> Result<()> {
    if let Some(t) = tol {
        if !(t.is_finite() && t > 0.0) {
            bail!("--tol must be positive, got {t}");
        }
    }
    Ok(())
}

impl InstanceArgs {
    fn source(&self) -> Result<Source> {
        Ok(match self.f.strip_prefix("csv:") {
            Some(path) => Source::Csv(cio::read_function_file(Path::new(path)).with_context(|| format!("reading {path}"))?),
            None => Source::Catalog(catalog::lookup(&self.f)?),
        })
    }

    fn build(&self) -> Result<Instance> {
        check_tol(self.tol)?;
        let source = self.source()?;
        let cost = match self.cost.strip_prefix("csv:") {
            Some(path) => cio::read_cost_file(Path::new(path)).with_context(|| format!("reading {path}"))?,
            None => {
                let spec: CostSpec = self.cost.parse()?;
                let gi = match &source {
                    Source::Csv(f) => *f.grid(),
                    Source::Catalog(_) => Grid::uniform(self.interval_i[0], self.interval_i[1], grid_size("n", self.n)?)?,
                };
                let m = grid_size("m", self.m.unwrap_or(gi.len()))?;
                let gj = Grid::uniform(self.interval_j[0], self.interval_j[1], m)?;
                CostMatrix::tabulate(&spec, gi, gj)?
            }
        };
        let f = match &source {
            Source::Csv(f) => {
                if f.grid() != cost.grid_i() {
                    bail!("the grid of --f does not match the x grid of the cost");
                }
                f.clone()
            }
            Source::Catalog(c) => {
                c.check_domain(&cost.grid_i().interval())?;
                GridFunction::sample(*cost.grid_i(), &*c.eval)?
            }
        };
        Ok(Instance { f, cost })
    }

    fn analytic_cost(&self) -> Result<CostSpec> {
        if self.cost.starts_with("csv:") {
            bail!("this command needs an analytic cost family, not a tabulated one");
        }
        Ok(self.cost.parse()?)
    }
}

fn grid_json(g: &Grid) -> serde_json::Value {
    json!({ "lo": g.lo(), "hi": g.hi(), "n": g.len(), "step": g.step() })
}

fn hash_of<T: Serialize>(cfg: &T) -> String {
    content_hash(&serde_json::to_vec(cfg).expect("config serializes"))
}

fn write_out(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

fn pretty(v: &serde_json::Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    s.into_bytes()
}

/// `path` with its extension replaced by `suffix`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn transform_json(t: &TransformResult, source: &Grid) -> serde_json::Value {
    json!({
        "point": t.values.grid().points(),
        "value": t.values.values(),
        "argmax_point": t.argmax.iter().map(|&k| source.point(k)).collect::<Vec<_>>(),
    })
}

fn run_transform(args: &TransformArgs) -> Result<ExitCode> {
    let inst = args.instance.build()?;
    let fc = c_transform(&inst.f, &inst.cost)?;
    let fcc = double_c_transform(&inst.f, &inst.cost)?;
    let verdict: Option<ConvexityVerdict> = if inst.f.is_finite() {
        Some(is_c_convex(&inst.f, &inst.cost, args.instance.tol)?)
    } else {
        None
    };
    let (gi, gj) = (inst.cost.grid_i(), inst.cost.grid_j());
    let verdict_json = json!({
        "c_convex": verdict,
        "default_tol": inst.f.is_finite().then(|| default_convexity_tol(&inst.f)),
    });
    match args.output.format {
        Format::Json => {
            let report = json!({
                "command": "transform",
                "config": args,
                "config_hash": hash_of(args),
                "grid_i": grid_json(gi),
                "grid_j": grid_json(gj),
                "cost": inst.cost.label(),
                "fc": transform_json(&fc, gi),
                "fcc": transform_json(&fcc, gj),
                "verdict": verdict_json,
            });
            write_out(args.output.out.as_deref(), &pretty(&report))?;
        }
        Format::Csv => {
            let mut buf = Vec::new();
            cio::write_transform_csv(&mut buf, &fc, gi)?;
            write_out(args.output.out.as_deref(), &buf)?;
            match &args.output.out {
                Some(p) => {
                    let mut buf = Vec::new();
                    cio::write_transform_csv(&mut buf, &fcc, gj)?;
                    write_out(Some(&sibling(p, ".cc.csv")), &buf)?;
                    write_out(Some(&sibling(p, ".verdict.json")), &pretty(&verdict_json))?;
                }
                None => eprintln!("{verdict_json}"),
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run_subdiff(args: &SubdiffArgs) -> Result<ExitCode> {
    let inst = args.instance.build()?;
    let tol = args.instance.tol.unwrap_or(1e-9);
    let map = subdifferential_map(&inst.f, &inst.cost, tol)?;
    match args.output.format {
        Format::Csv => {
            let mut buf = Vec::new();
            cio::write_subdiff_csv(&mut buf, &map)?;
            write_out(args.output.out.as_deref(), &buf)?;
        }
        Format::Json => {
            let (gi, gj) = (inst.cost.grid_i(), inst.cost.grid_j());
            let sets: Vec<_> = map
                .sets
                .iter()
                .zip(&map.dom)
                .map(|(s, &dom)| {
                    json!({
                        "x_index": s.x0_index,
                        "x": gi.point(s.x0_index),
                        "in_domain": dom,
                        "y_indices": s.y_indices,
                        "y": s.y_indices.iter().map(|&j| gj.point(j)).collect::<Vec<_>>(),
                        "slacks": s.slacks,
                    })
                })
                .collect();
            let report = json!({
                "command": "subdiff",
                "config": args,
                "config_hash": hash_of(args),
                "grid_i": grid_json(gi),
                "grid_j": grid_json(gj),
                "tol": tol,
                "covers_interior": map.covers_interior(),
                "sets": sets,
            });
            write_out(args.output.out.as_deref(), &pretty(&report))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn measure(arg: Option<&str>) -> Result<DiscreteMeasure> {
    let s = arg.context("this form needs --measure")?;
    Ok(match s.strip_prefix("csv:") {
        Some(path) => {
            let file = fs::File::open(path).with_context(|| format!("reading {path}"))?;
            cio::read_measure_csv(file).with_context(|| format!("reading {path}"))?
        }
        None => cio::parse_measure(s)?,
    })
}

fn run_jensen(args: &JensenArgs) -> Result<ExitCode> {
    let ia = &args.instance;
    check_tol(ia.tol)?;
    let spec = ia.analytic_cost()?;
    let tol = ia.tol.unwrap_or(1e-9);
    let problem = match ia.source()? {
        Source::Csv(f) => {
            let m = grid_size("m", ia.m.unwrap_or(f.len()))?;
            JensenProblem::tabulated(f, spec, Grid::uniform(ia.interval_j[0], ia.interval_j[1], m)?)?
        }
        Source::Catalog(c) => {
            let gi = Grid::uniform(ia.interval_i[0], ia.interval_i[1], grid_size("n", ia.n)?)?;
            c.check_domain(&gi.interval())?;
            let gj = Grid::uniform(ia.interval_j[0], ia.interval_j[1], grid_size("m", ia.m.unwrap_or(ia.n))?)?;
            let eval = c.eval.clone();
            JensenProblem::analytic(gi, move |x| eval(x), spec, gj)?
        }
    };
    let rule = match args.rule {
        Rule::Trapezoid => QuadratureRule::Trapezoid,
        Rule::Midpoint => QuadratureRule::Midpoint,
    };
    let report: JensenReport = match args.form {
        Form::Discrete => discrete_jensen_gap(&problem, &measure(args.measure.as_deref())?, args.y, tol)?,
        Form::Weighted => weighted_integral_bound(&problem, &measure(args.measure.as_deref())?, args.y, tol)?,
        Form::Midpoint => {
            let [a, b] = args.points.context("the midpoint form needs --points a,b")?;
            midpoint_bound(&problem, a, b, args.y, tol)?
        }
        Form::Integral => integral_jensen_bound(&problem, args.xi, args.y, rule, tol)?,
    };
    match args.output.format {
        Format::Json => {
            let out = json!({
                "command": "jensen",
                "config": args,
                "config_hash": hash_of(args),
                "grid_i": grid_json(problem.f().grid()),
                "grid_j": grid_json(problem.grid_j()),
                "report": report,
            });
            write_out(args.output.out.as_deref(), &pretty(&out))?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["lhs", "rhs", "slack", "y_witness", "holds", "hypothesis_verified", "point", "interpolated", "tol", "warnings"])?;
            w.write_record([
                report.lhs.to_string(),
                report.rhs.to_string(),
                report.slack.to_string(),
                report.y_witness.to_string(),
                report.holds.to_string(),
                report.hypothesis_verified.to_string(),
                report.point.to_string(),
                report.interpolated.to_string(),
                report.tol.to_string(),
                report.warnings.join("; "),
            ])?;
            write_out(args.output.out.as_deref(), &w.into_inner()?)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run_suite_cmd(args: &SuiteArgs) -> Result<ExitCode> {
    let cfg = SuiteConfig {
        seed: args.seed,
        n: args.n,
        tol: args.tol,
        pairs: args.pairs,
        exhaustive: args.exhaustive,
        falsify: args.falsify,
        instances: args.instances,
        ..SuiteConfig::default()
    };
    let report = run_suite(&cfg)?;
    let bytes = match args.format {
        Format::Json => report.to_json().into_bytes(),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["check_id", "instance", "status", "holds", "max_violation", "tol", "notes"])?;
            for v in &report.verdicts {
                w.write_record([
                    v.check_id.clone(),
                    v.instance.clone(),
                    v.status.token().to_string(),
                    v.holds.to_string(),
                    v.max_violation.to_string(),
                    v.tol.to_string(),
                    v.notes.clone(),
                ])?;
            }
            w.into_inner()?
        }
    };
    write_out(args.out.as_deref(), &bytes)?;
    let summary = report.summary();
    if args.out.is_some() {
        print!("{summary}");
    } else {
        eprint!("{summary}");
    }
    Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn run_gen(args: &GenArgs) -> Result<ExitCode> {
    let cost: CostSpec = args.cost.parse()?;
    let generator: Generator = args.generator.parse()?;
    let cfg = InstanceConfig {
        seed: args.seed,
        n: grid_size("n", args.n)?,
        m: grid_size("m", args.m.unwrap_or(args.n))?,
        interval_i: args.interval_i,
        interval_j: args.interval_j,
        cost,
        generator,
        amplitude: args.amplitude,
    };
    let (f, _) = generate_instance(&cfg)?;
    match args.output.format {
        Format::Csv => {
            let mut buf = Vec::new();
            cio::write_function_csv(&mut buf, &f)?;
            write_out(args.output.out.as_deref(), &buf)?;
        }
        Format::Json => {
            let out = json!({
                "command": "gen",
                "config": args,
                "config_hash": hash_of(args),
                "grid_i": grid_json(f.grid()),
                "x": f.grid().points(),
                "value": f.values(),
            });
            write_out(args.output.out.as_deref(), &pretty(&out))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Transform(a) => run_transform(a),
        Command::Subdiff(a) => run_subdiff(a),
        Command::Jensen(a) => run_jensen(a),
        Command::Suite(a) => run_suite_cmd(a),
        Command::Gen(a) => run_gen(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
