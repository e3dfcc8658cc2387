//! `gridswitch` command-line front end.
//!
//! Exit codes: 0 success or feasible, 1 infeasible verdict, 2 input error,
//! 3 resource guard exceeded.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use gridswitch_core::objective::DEFAULT_EXPONENT;
use gridswitch_core::quadratize::default_reduction_weight;
use gridswitch_core::solver::BRUTE_FORCE_LIMIT;
use gridswitch_core::{
    anneal_hubo, anneal_qubo, brute_force_min, build_objective, export_qubo, quadratize,
    AnnealSchedule, Assignment, Component, FeasibilityReport, Grid, Mode, PenaltyParams,
    SolveResult, SolverError, Validator,
};
use serde::Serialize;

pub const EXIT_OK: u8 = 0;
pub const EXIT_INFEASIBLE: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_GUARD: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "gridswitch",
    version,
    about = "Grid switch reconfiguration as binary optimization"
)]
pub struct Cli {
    /// Worker threads for annealing restarts and enumeration (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the objective polynomials (and optionally the QUBO form).
    Build(BuildArgs),
    /// Minimize the objective.
    Solve(SolveArgs),
    /// Check one switch configuration.
    Validate(ValidateArgs),
    /// List every feasible configuration by loss.
    Enumerate(EnumerateArgs),
}

#[derive(Debug, Args)]
pub struct PenaltyArgs {
    /// Penalty constant; defaults to 1e6 times the loss upper bound.
    #[arg(long = "c-penalty")]
    pub c_penalty: Option<f64>,
    /// Even exponent of the limit penalties.
    #[arg(long = "L", default_value_t = DEFAULT_EXPONENT)]
    pub exponent_l: u32,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub grid: PathBuf,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    /// Also write model.qubo and model.aux.json.
    #[arg(long)]
    pub quadratize: bool,
    /// Reduction weight; defaults to 2 * sum |coeff| + 1.
    #[arg(long)]
    pub m: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Brute,
    SaHubo,
    SaQubo,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub grid: PathBuf,
    #[arg(long, value_enum)]
    pub method: MethodArg,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    #[arg(long)]
    pub m: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2000)]
    pub sweeps: usize,
    #[arg(long, default_value_t = 100)]
    pub restarts: usize,
    /// Initial temperature, in units of the largest single-flip change.
    #[arg(long, default_value_t = 10.0)]
    pub t0: f64,
    /// Final temperature.
    #[arg(long, default_value_t = 0.01)]
    pub t1: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Physical,
    Paper,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Physical => Mode::Physical,
            ModeArg::Paper => Mode::Paper,
        }
    }
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub grid: PathBuf,
    /// Switch states in variable order, e.g. 0100111.
    #[arg(long)]
    pub bits: String,
    /// Verdict mode; without it both reports are printed and the physical one decides.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
}

#[derive(Debug, Args)]
pub struct EnumerateArgs {
    #[arg(long)]
    pub grid: PathBuf,
    #[arg(long, value_enum)]
    pub mode: ModeArg,
    #[arg(long)]
    pub out: PathBuf,
    /// Add a column with the objective value.
    #[arg(long)]
    pub with_total: bool,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
}

#[derive(Debug)]
pub enum Failure {
    Input(anyhow::Error),
    Guard(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Input(_) => EXIT_INPUT,
            Failure::Guard(_) => EXIT_GUARD,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Input(e) | Failure::Guard(e) => e,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

fn guard_or_input(e: SolverError) -> Failure {
    match e {
        SolverError::TooManyVariables { .. } => Failure::Guard(e.into()),
        other => Failure::Input(other.into()),
    }
}

/// Runs a parsed command, writing human-readable output to `out`.
pub fn run(cli: &Cli, out: &mut String) -> Result<u8, Failure> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers)
        .build()
        .map_err(|e| anyhow!("--workers: {e}"))?;
    pool.install(|| match &cli.command {
        Command::Build(a) => cmd_build(a, out),
        Command::Solve(a) => cmd_solve(a, out),
        Command::Validate(a) => cmd_validate(a, out),
        Command::Enumerate(a) => cmd_enumerate(a, out),
    })
}

fn load_grid(path: &Path) -> anyhow::Result<Grid> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("--grid: cannot read {}", path.display()))?;
    Grid::parse(&text).with_context(|| format!("--grid {}", path.display()))
}

fn params(grid: &Grid, p: &PenaltyArgs) -> anyhow::Result<PenaltyParams> {
    let c = p
        .c_penalty
        .unwrap_or_else(|| PenaltyParams::default_for(grid).c_penalty);
    PenaltyParams::new(c, p.exponent_l).map_err(|e| anyhow!("--c-penalty/--L: {e}"))
}

fn reduction_weight(p: &gridswitch_core::Poly, m: Option<f64>) -> anyhow::Result<f64> {
    match m {
        Some(m) if !(m > 0.0) || !m.is_finite() => {
            Err(anyhow!("--m: reduction weight must be > 0, got {m}"))
        }
        Some(m) => Ok(m),
        None => Ok(default_reduction_weight(p)),
    }
}

fn write_file(path: &Path, contents: &str) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn create_dir(path: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(path).with_context(|| format!("--out: cannot create {}", path.display()))
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn compact<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string(value).expect("serializable");
    s.push('\n');
    s
}

fn legend(grid: &Grid) -> String {
    let mut s = String::new();
    for (v, (a, b)) in grid.variable_order() {
        let _ = writeln!(s, "bit {}: q{}_{} (switch {}-{})", v.0, a.0, b.0, a.0, b.0);
    }
    s
}

fn cmd_build(a: &BuildArgs, out: &mut String) -> Result<u8, Failure> {
    let grid = load_grid(&a.grid)?;
    let params = params(&grid, &a.penalty)?;
    let bundle = build_objective(&grid, params);
    create_dir(&a.out)?;
    for c in Component::ALL {
        write_file(
            &a.out.join(format!("hubo_{}.json", c.name())),
            &compact(&bundle.document(c)),
        )?;
    }
    if a.quadratize {
        let m = reduction_weight(&bundle.total, a.m)?;
        let model = quadratize(&bundle.total, grid.n_vars(), m).map_err(|e| anyhow!("--m: {e}"))?;
        write_file(&a.out.join("model.qubo"), &export_qubo(&model))?;
        write_file(&a.out.join("model.aux.json"), &compact(&model.sidecar()))?;
        let _ = writeln!(
            out,
            "qubo: {} variables ({} auxiliary)",
            model.n_vars,
            model.n_aux()
        );
    }
    let _ = write!(out, "{}", legend(&grid));
    let _ = writeln!(
        out,
        "total: {} terms, degree {}",
        bundle.total.len(),
        bundle.total.degree()
    );
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct Verdicts {
    physical: bool,
    paper: bool,
}

#[derive(Serialize)]
struct SolveReport<'a> {
    method: gridswitch_core::Method,
    seed: u64,
    schedule: Option<&'a AnnealSchedule>,
    c_penalty: f64,
    #[serde(rename = "L")]
    exponent_l: u32,
    reduction_weight: Option<f64>,
    variables: Vec<String>,
    best_bits: String,
    best_value: f64,
    per_restart_values: &'a [f64],
    #[serde(skip_serializing_if = "Option::is_none")]
    per_restart_consistent: Option<&'a [bool]>,
    evaluations: u64,
    feasible: Verdicts,
    elapsed_seconds: f64,
}

fn cmd_solve(a: &SolveArgs, out: &mut String) -> Result<u8, Failure> {
    let grid = load_grid(&a.grid)?;
    let params = params(&grid, &a.penalty)?;
    let schedule = AnnealSchedule {
        initial_temperature: a.t0,
        final_temperature: a.t1,
        sweeps: a.sweeps,
        restarts: a.restarts,
        seed: a.seed,
    };
    if a.method != MethodArg::Brute {
        schedule
            .validate()
            .map_err(|e| anyhow!("--t0/--t1/--sweeps/--restarts: {e}"))?;
    }
    let n = grid.n_vars();
    if a.method == MethodArg::Brute && n > BRUTE_FORCE_LIMIT {
        return Err(guard_or_input(SolverError::TooManyVariables {
            n,
            limit: BRUTE_FORCE_LIMIT,
        }));
    }
    let objective = build_objective(&grid, params).total;
    let mut weight = None;
    let result: SolveResult = match a.method {
        MethodArg::Brute => brute_force_min(&objective, n).map_err(guard_or_input)?,
        MethodArg::SaHubo => anneal_hubo(&objective, n, &schedule).map_err(guard_or_input)?,
        MethodArg::SaQubo => {
            let m = reduction_weight(&objective, a.m)?;
            weight = Some(m);
            let model = quadratize(&objective, n, m).map_err(|e| anyhow!("--m: {e}"))?;
            anneal_qubo(&model, &objective, &schedule).map_err(guard_or_input)?
        }
    };

    let validator = Validator::new(&grid);
    let check = |mode| {
        validator
            .check(&result.best_assignment, mode)
            .expect("solver returns a full assignment")
            .feasible
    };
    let verdicts = Verdicts {
        physical: check(Mode::Physical),
        paper: check(Mode::Paper),
    };
    let bits = result.best_assignment.to_bit_string();
    let report = SolveReport {
        method: result.method,
        seed: a.seed,
        schedule: (a.method != MethodArg::Brute).then_some(&schedule),
        c_penalty: params.c_penalty,
        exponent_l: params.exponent_l,
        reduction_weight: weight,
        variables: grid.variable_labels(),
        best_bits: bits.clone(),
        best_value: result.best_value,
        per_restart_values: &result.per_restart_values,
        per_restart_consistent: result.per_restart_consistent.as_deref(),
        evaluations: result.evaluations,
        feasible: verdicts,
        elapsed_seconds: result.elapsed,
    };
    create_dir(&a.out)?;
    write_file(&a.out.join("solve_report.json"), &pretty(&report))?;

    let verdict = |ok: bool| if ok { "feasible" } else { "infeasible" };
    let _ = write!(out, "{}", legend(&grid));
    let _ = writeln!(
        out,
        "best {} value {} physical: {} paper: {}",
        if bits.is_empty() { "-" } else { &bits },
        result.best_value,
        verdict(report.feasible.physical),
        verdict(report.feasible.paper)
    );
    if a.method != MethodArg::Brute {
        let hits = result
            .per_restart_values
            .iter()
            .filter(|&&v| v == result.best_value)
            .count();
        let _ = writeln!(
            out,
            "restarts reaching best: {hits}/{}",
            result.per_restart_values.len()
        );
    }
    Ok(EXIT_OK)
}

fn parse_bits(grid: &Grid, bits: &str) -> anyhow::Result<Assignment> {
    let a = Assignment::from_bit_string(bits).map_err(|e| anyhow!("--bits: {e}"))?;
    if a.len() != grid.n_vars() {
        return Err(anyhow!(
            "--bits: expected {} switch states, got {}",
            grid.n_vars(),
            a.len()
        ));
    }
    Ok(a)
}

fn describe(r: &FeasibilityReport) -> String {
    let mut s = format!(
        "{:?} mode: {}\n",
        r.mode,
        if r.feasible { "feasible" } else { "infeasible" }
    )
    .to_lowercase();
    for v in &r.violations {
        let code = serde_json::to_value(v.code).expect("serializable");
        let blocks: Vec<String> = v.blocks.iter().map(|b| b.0.to_string()).collect();
        let _ = write!(
            s,
            "  {} blocks [{}]",
            code.as_str().unwrap_or_default(),
            blocks.join(",")
        );
        if let Some(m) = &v.monomial {
            let _ = write!(s, " {m}");
        }
        if let (Some(value), Some(limit)) = (v.value, v.limit) {
            let _ = write!(s, " value {value} limit {limit}");
        }
        s.push('\n');
    }
    s
}

fn cmd_validate(a: &ValidateArgs, out: &mut String) -> Result<u8, Failure> {
    let grid = load_grid(&a.grid)?;
    let assignment = parse_bits(&grid, &a.bits)?;
    let validator = Validator::new(&grid);
    let check = |mode: Mode| validator.check(&assignment, mode).expect("length checked");
    let modes: Vec<Mode> = match a.mode {
        Some(m) => vec![m.into()],
        None => vec![Mode::Physical, Mode::Paper],
    };
    let reports: Vec<FeasibilityReport> = modes.iter().map(|&m| check(m)).collect();
    for r in &reports {
        let _ = write!(out, "{}", describe(r));
    }
    let _ = write!(out, "{}", pretty(&reports));
    let decisive = &reports[0];
    Ok(if decisive.feasible {
        EXIT_OK
    } else {
        EXIT_INFEASIBLE
    })
}

fn cmd_enumerate(a: &EnumerateArgs, out: &mut String) -> Result<u8, Failure> {
    let grid = load_grid(&a.grid)?;
    let total = if a.with_total {
        Some(build_objective(&grid, params(&grid, &a.penalty)?).total)
    } else {
        None
    };
    let rows = Validator::new(&grid)
        .enumerate_feasible(a.mode.into())
        .map_err(guard_or_input)?;
    let mut csv = String::from(if total.is_some() {
        "bits,loss,p_total\n"
    } else {
        "bits,loss\n"
    });
    for (assignment, loss) in &rows {
        let _ = write!(csv, "{},{}", assignment.to_bit_string(), loss);
        if let Some(p) = &total {
            let _ = write!(csv, ",{}", p.eval(assignment).expect("full assignment"));
        }
        csv.push('\n');
    }
    write_file(&a.out, &csv)?;
    let _ = writeln!(
        out,
        "scanned {} configurations, {} feasible",
        1u64 << grid.n_vars(),
        rows.len()
    );
    if rows.is_empty() {
        eprintln!("warning: no feasible configuration");
    }
    Ok(EXIT_OK)
}
