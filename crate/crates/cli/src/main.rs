//! `planset`: plan generation, diverse plan sets and trade-off plan sets
//! from the command line.
//!
//! Exit codes: 0 success, 1 failure, 2 usage or unreadable input,
//! 3 fewer plans than requested (INCOMPLETE).

mod bench;
mod eval;
mod load;
mod output;
mod settings;

use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use planset::exact::{to_f64, to_json_number};
use planset::genset::{GenError, PlanSetResult, Status};
use planset::search::{solve, EvaluationContext};

use bench::{BenchArgs, Method};
use eval::EvalArgs;
use load::TaskFiles;
use output::{csv_bytes, Format, OutputOpts, PlanRow};
use settings::Tuning;

/// Marks an error as the caller's fault (exit 2).
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

#[derive(Parser)]
#[command(name = "planset", version, about = "Diverse and trade-off plan sets for STRIPS planning tasks")]
struct Cli {
    /// More log output; repeat for debug.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find one plan.
    Solve {
        #[command(flatten)]
        task: TaskFiles,
        /// Minimise w·makespan + (1−w)·cost instead of cost.
        #[arg(long)]
        w: Option<f64>,
        #[command(flatten)]
        tuning: Tuning,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// k plans at pairwise distance at least d.
    Diverse {
        #[command(flatten)]
        task: TaskFiles,
        /// Independent seeded searches without the distance constraint.
        #[arg(long)]
        baseline: bool,
        #[command(flatten)]
        tuning: Tuning,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Plan set for an unknown time/cost trade-off, scored by ICP.
    Icpgen {
        #[command(flatten)]
        task: TaskFiles,
        #[arg(long, value_enum, default_value = "hybrid")]
        method: TradeoffMethod,
        #[command(flatten)]
        tuning: Tuning,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Metrics for existing plans or (time, cost) points.
    Eval(EvalArgs),
    /// Run a method × distribution × seed grid over a corpus.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TradeoffMethod {
    Sampling,
    Sequential,
    Hybrid,
}

enum Outcome {
    Done,
    Incomplete,
}

fn plan_rows(result: &PlanSetResult, problem: &planset::GroundProblem) -> anyhow::Result<Vec<u8>> {
    let steps: Vec<String> = result.plans.iter().map(|p| p.step_names(problem).join(" ")).collect();
    let rows: Vec<PlanRow> = result
        .points
        .iter()
        .zip(&steps)
        .enumerate()
        .map(|(index, (pt, s))| PlanRow { index, time: to_f64(&pt.time), cost: to_f64(&pt.cost), steps: s })
        .collect();
    csv_bytes(&rows)
}

fn emit_set(result: &PlanSetResult, problem: &planset::GroundProblem, output: &OutputOpts) -> anyhow::Result<Outcome> {
    match output.format_or(Format::Json) {
        Format::Json => output.emit_json(&result.to_json(problem))?,
        Format::Csv => output.emit(&plan_rows(result, problem)?)?,
    }
    Ok(match result.status {
        Status::Complete => Outcome::Done,
        Status::Incomplete => {
            log::warn!("only {} of the requested plans were found", result.len());
            Outcome::Incomplete
        }
    })
}

fn gen_error(e: GenError) -> anyhow::Error {
    match e {
        GenError::InvalidConfig(msg) => Usage(msg).into(),
        other => other.into(),
    }
}

fn cmd_solve(task: &TaskFiles, w: Option<f64>, tuning: &Tuning, output: &OutputOpts) -> anyhow::Result<Outcome> {
    let problem = task.load()?;
    let cfg = tuning.resolve()?;
    let search = planset::search::SearchConfig { objective_w: w.or(cfg.search.objective_w), ..cfg.search.clone() };
    search.validate().map_err(|e| Usage(e.to_string()))?;
    let started = Instant::now();
    let out = solve(&problem, &EvaluationContext::plain(), &search)?;
    let steps = out.plan.step_names(&problem);
    match output.format_or(Format::Json) {
        Format::Json => output.emit_json(&serde_json::json!({
            "problem": problem.name,
            "method": "solve",
            "status": Status::Complete,
            "seed": search.seed,
            "plans": [{
                "steps": steps,
                "time": to_json_number(&out.point.time),
                "cost": to_json_number(&out.point.cost),
            }],
            "stats": { "nodes": out.nodes },
            "timing": { "wall_seconds": started.elapsed().as_secs_f64() },
        }))?,
        Format::Csv => {
            let joined = steps.join(" ");
            let row = PlanRow { index: 0, time: to_f64(&out.point.time), cost: to_f64(&out.point.cost), steps: &joined };
            output.emit(&csv_bytes(&[row])?)?
        }
    }
    Ok(Outcome::Done)
}

fn cmd_diverse(task: &TaskFiles, baseline: bool, tuning: &Tuning, output: &OutputOpts) -> anyhow::Result<Outcome> {
    let problem = task.load()?;
    let cfg = tuning.resolve()?;
    let method = if baseline { Method::Baseline } else { Method::Diverse };
    let result = method.run(&problem, &cfg).map_err(gen_error)?;
    emit_set(&result, &problem, output)
}

fn cmd_icpgen(task: &TaskFiles, method: TradeoffMethod, tuning: &Tuning, output: &OutputOpts) -> anyhow::Result<Outcome> {
    let problem = task.load()?;
    let cfg = tuning.resolve()?;
    let method = match method {
        TradeoffMethod::Sampling => Method::Sampling,
        TradeoffMethod::Sequential => Method::Sequential,
        TradeoffMethod::Hybrid => Method::Hybrid,
    };
    let result = method.run(&problem, &cfg).map_err(gen_error)?;
    emit_set(&result, &problem, output)
}

fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    match &cli.command {
        Command::Solve { task, w, tuning, output } => cmd_solve(task, *w, tuning, output),
        Command::Diverse { task, baseline, tuning, output } => cmd_diverse(task, *baseline, tuning, output),
        Command::Icpgen { task, method, tuning, output } => cmd_icpgen(task, *method, tuning, output),
        Command::Eval(args) => eval::run(args).map(|_| Outcome::Done),
        Command::Bench(args) => bench::run(args).map(|_| Outcome::Done),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    match run(&cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Incomplete) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if e.downcast_ref::<Usage>().is_some() { 2 } else { 1 })
        }
    }
}
