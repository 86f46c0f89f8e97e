//! `bench`: method × distribution × seed grid over a corpus directory.
//!
//! Corpus layout: one directory per domain holding `domain.pddl`, an
//! optional `domain.durations.json`, and problem files named `p*.pddl`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use clap::{Args, ValueEnum};
use planset::exact::to_f64;
use planset::genset::{
    generate_diverse, generate_hybrid, generate_icp_sequential, generate_random_baseline, generate_sampling, GenConfig,
    PlanSetResult, Status,
};
use planset::report::{lch_contribution, median, stddev, BenchRow};
use planset::{GroundProblem, WeightDistribution};
use rayon::prelude::*;

use crate::load::load_task;
use crate::output::{csv_bytes, Format, OutputOpts};
use crate::settings::Tuning;
use crate::Usage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Sampling,
    Sequential,
    Hybrid,
    Diverse,
    Baseline,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Sampling => "sampling",
            Method::Sequential => "icp-sequential",
            Method::Hybrid => "hybrid",
            Method::Diverse => "diverse",
            Method::Baseline => "baseline",
        }
    }

    pub fn run(self, problem: &GroundProblem, cfg: &GenConfig) -> Result<PlanSetResult, planset::genset::GenError> {
        match self {
            Method::Sampling => generate_sampling(problem, cfg),
            Method::Sequential => generate_icp_sequential(problem, cfg, None),
            Method::Hybrid => generate_hybrid(problem, cfg),
            Method::Diverse => generate_diverse(problem, cfg),
            Method::Baseline => generate_random_baseline(problem, cfg),
        }
    }
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    pub corpus: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "sampling,hybrid")]
    pub methods: Vec<Method>,
    #[arg(long, value_delimiter = ',', default_value = "uniform")]
    pub dists: Vec<WeightDistribution>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub seeds: Vec<u64>,
    #[command(flatten)]
    pub tuning: Tuning,
    #[command(flatten)]
    pub output: OutputOpts,
}

struct Task {
    domain: String,
    problem: String,
    ground: GroundProblem,
}

fn discover(root: &Path) -> anyhow::Result<Vec<Task>> {
    let listing = std::fs::read_dir(root).map_err(|e| Usage(format!("cannot read corpus {}: {e}", root.display())))?;
    let mut dirs: Vec<PathBuf> = listing.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.join("domain.pddl").is_file()).collect();
    dirs.sort();
    let mut tasks = Vec::new();
    for dir in dirs {
        let domain_file = dir.join("domain.pddl");
        let mut problems: Vec<PathBuf> = std::fs::read_dir(&dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
                name.starts_with('p') && name.ends_with(".pddl")
            })
            .collect();
        problems.sort();
        for p in problems {
            tasks.push(Task {
                domain: dir.file_name().unwrap_or_default().to_string_lossy().into_owned(),
                problem: p.file_stem().unwrap_or_default().to_string_lossy().into_owned(),
                ground: load_task(&domain_file, &p, None).with_context(|| format!("loading {}", p.display()))?,
            });
        }
    }
    if tasks.is_empty() {
        return Err(Usage(format!("no domain directories with problems under {}", root.display())).into());
    }
    Ok(tasks)
}

fn row_for(task: &Task, method: Method, dist: WeightDistribution, seed: u64, cfg: &GenConfig) -> (BenchRow, Vec<planset::TimeCostPoint>) {
    let cfg = GenConfig { dist, seed, search: planset::search::SearchConfig { seed, ..cfg.search.clone() }, ..cfg.clone() };
    let started = Instant::now();
    let outcome = method.run(&task.ground, &cfg);
    let runtime_s = started.elapsed().as_secs_f64();
    let mut row = BenchRow {
        domain: task.domain.clone(),
        problem: task.problem.clone(),
        method: method.name().into(),
        distribution: dist.to_string(),
        seed,
        status: "failed".into(),
        plans: 0,
        icp: None,
        zeta_min: None,
        zeta_avg: None,
        zeta_max: None,
        makespan_median: None,
        makespan_stddev: None,
        cost_median: None,
        cost_stddev: None,
        lch_contribution: None,
        runtime_s,
    };
    let Ok(result) = outcome else {
        log::warn!("{}/{} {} seed {seed}: no plan", task.domain, task.problem, method.name());
        return (row, Vec::new());
    };
    let times: Vec<f64> = result.points.iter().map(|p| to_f64(&p.time)).collect();
    let costs: Vec<f64> = result.points.iter().map(|p| to_f64(&p.cost)).collect();
    let zeta = result.metrics.zeta.get(cfg.metric.name()).copied();
    row.status = match result.status {
        Status::Complete => "complete",
        Status::Incomplete => "incomplete",
    }
    .into();
    row.plans = result.len();
    row.icp = Some(result.metrics.icp);
    row.zeta_min = zeta.and_then(|z| z.min);
    row.zeta_avg = zeta.and_then(|z| z.avg);
    row.zeta_max = zeta.and_then(|z| z.max);
    row.makespan_median = median(&times);
    row.makespan_stddev = stddev(&times);
    row.cost_median = median(&costs);
    row.cost_stddev = stddev(&costs);
    (row, result.points)
}

pub fn run(args: &BenchArgs) -> anyhow::Result<()> {
    let base = args.tuning.resolve()?;
    let tasks = discover(&args.corpus)?;
    let mut cells = Vec::new();
    for (t, _) in tasks.iter().enumerate() {
        for &dist in &args.dists {
            for &seed in &args.seeds {
                for &method in &args.methods {
                    cells.push((t, dist, seed, method));
                }
            }
        }
    }
    let results: Vec<(BenchRow, Vec<planset::TimeCostPoint>)> =
        cells.par_iter().map(|&(t, dist, seed, method)| row_for(&tasks[t], method, dist, seed, &base)).collect();

    // Methods of one (problem, distribution, seed) group are adjacent.
    let per_group = args.methods.len();
    let mut rows = Vec::with_capacity(results.len());
    for group in results.chunks(per_group) {
        let sets: Vec<_> = group.iter().map(|(_, pts)| pts.clone()).collect();
        let shares = lch_contribution(&sets);
        for ((row, pts), share) in group.iter().zip(shares) {
            let mut row = row.clone();
            row.lch_contribution = (!pts.is_empty()).then_some(share);
            rows.push(row);
        }
    }
    if args.output.format_or(Format::Csv) == Format::Json {
        return args.output.emit_json(&serde_json::to_value(&rows)?);
    }
    args.output.emit(&csv_bytes(&rows)?)
}
