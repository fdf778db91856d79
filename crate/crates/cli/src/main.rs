//! `circeq solve|oracle|verify`: run the equilibrium pipelines from a JSON config.
//!
//! Exit status is 0 when verification passes, 1 on a numerical or verification
//! failure and 2 on a usage or config error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use circeq::io::{self, FieldSpec, OracleDocument, ProfileDocument, ReportDocument};
use circeq::oracle::{extrapolated_energy, minimize_energy, OracleOptions, SUPPORT_THRESHOLD};
use circeq::support::SolveOptions;
use circeq::verify::{full_report, verify_support, PipelineOptions, Tolerances, CHECK_GRID};
use circeq::{ArcSet, Error, ExternalField};

#[derive(Parser)]
#[command(name = "circeq", version, about = "Weighted equilibrium measures on the unit circle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the support and density, then verify every identity.
    Solve(Common),
    /// Run only the discrete energy minimizer.
    Oracle(Common),
    /// Recompute all residuals for a stored solution.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Solution JSON written by `solve`.
        #[arg(long)]
        solution: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Grid size, a power of two.
    #[arg(long)]
    grid: Option<usize>,
    /// Endpoint-solve tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Initial arcs as "a1,b1;a2,b2".
    #[arg(long)]
    arcs: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemConfig {
    field: FieldSpec,
    #[serde(default)]
    solver: SolverConfig,
    #[serde(default)]
    output: OutputConfig,
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SolverConfig {
    grid: usize,
    oracle_grid: usize,
    tol: f64,
    max_iter: usize,
    oracle_max_iter: usize,
    oracle_tol: f64,
    /// Upper bound on the number of arcs.
    arcs: Option<usize>,
    initial: Option<Vec<[f64; 2]>>,
    support_threshold: f64,
    extrapolate: bool,
    tolerances: Tolerances,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let solve = SolveOptions::default();
        let oracle = OracleOptions::default();
        SolverConfig {
            grid: CHECK_GRID,
            oracle_grid: 4096,
            tol: solve.tol,
            max_iter: solve.max_iter,
            oracle_max_iter: oracle.max_iter,
            oracle_tol: oracle.tol,
            arcs: None,
            initial: None,
            support_threshold: SUPPORT_THRESHOLD,
            extrapolate: true,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct OutputConfig {
    solution: String,
    density: String,
    profile: String,
    report: String,
    measure: String,
    oracle: String,
    verify: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            solution: "solution.json".into(),
            density: "density.csv".into(),
            profile: "density.json".into(),
            report: "report.json".into(),
            measure: "measure.csv".into(),
            oracle: "oracle.json".into(),
            verify: "verify.json".into(),
        }
    }
}

enum Failure {
    Usage(String),
    Numeric(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Numeric(_) => 1,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn numeric(e: Error) -> Failure {
    Failure::Numeric(e.to_string())
}

struct Problem {
    field: ExternalField,
    solver: SolverConfig,
    output: OutputConfig,
    out: PathBuf,
}

fn parse_arcs(text: &str) -> Result<Vec<[f64; 2]>, Failure> {
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|pair| {
            let v: Vec<f64> = pair
                .split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|_| usage(format!("bad angle in --arcs: {x:?}"))))
                .collect::<Result<_, _>>()?;
            match v[..] {
                [a, b] => Ok([a, b]),
                _ => Err(usage(format!("--arcs entries need two angles, got {pair:?}"))),
            }
        })
        .collect()
}

fn check_grid(name: &str, n: usize) -> Result<(), Failure> {
    if n < 64 || !n.is_power_of_two() {
        return Err(usage(format!("{name} must be a power of two of at least 64, got {n}")));
    }
    Ok(())
}

fn load(common: &Common) -> Result<Problem, Failure> {
    let text = fs::read_to_string(&common.config).map_err(|e| usage(format!("{}: {e}", common.config.display())))?;
    let config: ProblemConfig = serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", common.config.display())))?;
    let field = config.field.build().map_err(usage)?;
    let mut solver = config.solver;
    if let Some(n) = common.grid {
        solver.grid = n;
        solver.oracle_grid = n;
    }
    if let Some(t) = common.tol {
        solver.tol = t;
    }
    if let Some(a) = &common.arcs {
        solver.initial = Some(parse_arcs(a)?);
    }
    check_grid("grid", solver.grid)?;
    check_grid("oracle_grid", solver.oracle_grid)?;
    let positive = [solver.tol, solver.oracle_tol, solver.support_threshold];
    if positive.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(usage("tolerances must be positive and finite"));
    }
    solver.tolerances.validate().map_err(usage)?;
    if solver.max_iter == 0 || solver.oracle_max_iter == 0 || solver.arcs == Some(0) {
        return Err(usage("iteration and arc counts must be positive"));
    }
    if let Some(initial) = &solver.initial {
        to_arcs(initial).map_err(usage)?;
    }
    fs::create_dir_all(&common.out).map_err(|e| usage(format!("{}: {e}", common.out.display())))?;
    Ok(Problem { field, solver, output: config.output, out: common.out.clone() })
}

fn to_arcs(pairs: &[[f64; 2]]) -> circeq::Result<ArcSet> {
    ArcSet::new(&pairs.iter().map(|p| (p[0], p[1])).collect::<Vec<_>>())
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), Failure> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| numeric(Error::Parse(format!("{}: {e}", path.display()))))
}

fn json<T: serde::Serialize>(value: &T) -> Result<String, Failure> {
    io::to_json(value).map_err(numeric)
}

fn oracle_options(s: &SolverConfig) -> OracleOptions {
    OracleOptions { max_iter: s.oracle_max_iter, tol: s.oracle_tol, ..OracleOptions::default() }
}

fn summarize(doc: &ReportDocument) {
    let s = &doc.solution;
    if s.full_circle {
        println!("support: full circle");
    } else {
        for a in &s.arcs {
            println!("arc: [{:.12}, {:.12}]", a[0], a[1]);
        }
    }
    println!("F_w = {:.15e}, V_w = {:.15e}, capacity = {:.15e}", s.robin, s.energy, s.capacity);
    let r = &doc.residuals;
    println!(
        "frostman equality {:.3e}, inequality {:.3e}, mass {:.3e}, conjugate {:.3e}, imag {:.3e}",
        r.frostman_equality_sup, r.frostman_inequality_violation, r.mass_gap, r.conjugate_identity_sup, r.imag_part_sup
    );
    if let Some(d) = r.density_square_identity_sup {
        println!("density square identity {d:.3e}");
    }
    if doc.pass {
        println!("pass");
    } else {
        println!("fail: {}", r.failed.join(", "));
    }
}

fn solve(p: Problem) -> Result<bool, Failure> {
    let s = &p.solver;
    let options = PipelineOptions {
        grid: s.grid,
        oracle_grid: s.oracle_grid,
        oracle: oracle_options(s),
        solve: SolveOptions { tol: s.tol, max_iter: s.max_iter, ..SolveOptions::default() },
        initial: s.initial.as_deref().map(to_arcs).transpose().map_err(usage)?,
        arc_count: s.arcs,
        support_threshold: s.support_threshold,
        tolerances: s.tolerances,
    };
    let (solution, report) = full_report(&p.field, &options).map_err(numeric)?;
    let doc = ReportDocument::of(&solution, &report);
    write(&p.out, &p.output.solution, &json(&doc)?)?;
    write(&p.out, &p.output.report, &json(&report)?)?;
    write(&p.out, &p.output.density, &io::profile_csv(&solution.profile, p.solver.grid))?;
    write(&p.out, &p.output.profile, &json(&ProfileDocument::of(&solution.profile))?)?;
    summarize(&doc);
    Ok(doc.pass)
}

fn oracle(p: Problem) -> Result<bool, Failure> {
    let s = &p.solver;
    let options = oracle_options(s);
    let run = minimize_energy(&p.field, s.oracle_grid, &options).map_err(numeric)?;
    let extrapolation = if s.extrapolate {
        Some(extrapolated_energy(&p.field, s.oracle_grid, &options).map_err(numeric)?)
    } else {
        None
    };
    let doc = OracleDocument::of(&run, s.support_threshold, extrapolation).map_err(numeric)?;
    write(&p.out, &p.output.measure, &io::measure_csv(&run.measure))?;
    write(&p.out, &p.output.oracle, &json(&doc)?)?;
    println!("N = {}, V_w = {:.15e}, F_w = {:.15e}, frostman gap {:.3e}", doc.grid, doc.energy, doc.robin, doc.frostman_gap);
    if let Some(e) = &doc.extrapolation {
        println!("extrapolated V_w = {:.15e}", e.extrapolated);
    }
    Ok(true)
}

fn verify(p: Problem, solution: &Path) -> Result<bool, Failure> {
    let text = fs::read_to_string(solution).map_err(|e| usage(format!("{}: {e}", solution.display())))?;
    let stored: ReportDocument = serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", solution.display())))?;
    let support = stored.solution.support().map_err(usage)?;
    let (solution, report) = verify_support(&p.field, &support, &p.solver.tolerances, p.solver.grid).map_err(numeric)?;
    let mut doc = ReportDocument::of(&solution, &report);
    doc.solution.solve = stored.solution.solve;
    write(&p.out, &p.output.verify, &json(&doc)?)?;
    summarize(&doc);
    Ok(doc.pass)
}

fn run(cli: Cli) -> Result<bool, Failure> {
    match cli.command {
        Command::Solve(c) => solve(load(&c)?),
        Command::Oracle(c) => oracle(load(&c)?),
        Command::Verify { common, solution } => {
            let p = load(&common)?;
            verify(p, &solution)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            match &f {
                Failure::Usage(m) => eprintln!("error: {m}"),
                Failure::Numeric(m) => eprintln!("failed: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
