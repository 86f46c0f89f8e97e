//! `eval`: set metrics for existing plans or bare (time, cost) points.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::Args;
use planset::exact::{from_json_number, to_f64, to_json_number};
use planset::genset::{SetMetrics, ZetaStats};
use planset::icp::{breakpoints_f64, lower_convex_hull};
use planset::pddl::{read_plan_set_file, PlanFileEntry};
use planset::report::{median, stddev};
use planset::{DistanceMetric, PlanFeatures, TimeCostPoint, WeightDistribution};
use serde::Serialize;

use crate::load::{load_task, read};
use crate::output::{csv_bytes, Format, OutputOpts};
use crate::Usage;

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Plan files: a single plan `{steps}` or a set `{plans: [...]}`.
    pub plans: Vec<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub domain: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub problem: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub durations: Option<PathBuf>,
    /// JSON list of points, as `[[time, cost], ...]` or `[{"time", "cost"}, ...]`.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["plans", "domain", "problem"])]
    pub points: Option<PathBuf>,
    #[arg(long, default_value = "uniform")]
    pub dist: WeightDistribution,
    /// Restrict the distance report to one metric.
    #[arg(long)]
    pub metric: Option<DistanceMetric>,
    #[command(flatten)]
    pub output: OutputOpts,
}

#[derive(Debug, Serialize)]
struct Summary {
    median: Option<f64>,
    stddev: Option<f64>,
}

#[derive(Debug, Serialize)]
struct EvalReport {
    plans: usize,
    points: Vec<serde_json::Value>,
    zeta: BTreeMap<&'static str, ZetaStats>,
    pareto: Vec<usize>,
    hull: Vec<usize>,
    breakpoints: Vec<f64>,
    distribution: WeightDistribution,
    icp: Option<f64>,
    makespan: Summary,
    cost: Summary,
}

#[derive(Serialize)]
struct PointRow {
    index: usize,
    time: f64,
    cost: f64,
    pareto: bool,
    hull: bool,
}

fn parse_point(v: &serde_json::Value) -> Option<TimeCostPoint> {
    let (t, c) = match v {
        serde_json::Value::Array(a) if a.len() == 2 => (&a[0], &a[1]),
        serde_json::Value::Object(o) => (o.get("time")?, o.get("cost")?),
        _ => return None,
    };
    Some(TimeCostPoint { time: from_json_number(t.as_number()?)?, cost: from_json_number(c.as_number()?)? })
}

fn read_points(path: &Path) -> anyhow::Result<Vec<TimeCostPoint>> {
    let v: serde_json::Value = serde_json::from_str(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    let list = match &v {
        serde_json::Value::Object(o) => o.get("points").unwrap_or(&v),
        _ => &v,
    };
    let items = list.as_array().with_context(|| format!("{}: expected a list of points", path.display()))?;
    items
        .iter()
        .enumerate()
        .map(|(i, p)| parse_point(p).with_context(|| format!("{}: point {i} is not a (time, cost) pair", path.display())))
        .collect()
}

fn read_entries(path: &Path) -> anyhow::Result<Vec<PlanFileEntry>> {
    let text = read(path)?;
    if let Ok(set) = read_plan_set_file(&text) {
        return Ok(set.plans);
    }
    let single = planset::pddl::read_plan_file(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(vec![single.entry])
}

pub fn run(args: &EvalArgs) -> anyhow::Result<()> {
    let (points, features) = match &args.points {
        Some(path) => (read_points(path)?, None),
        None => {
            let (Some(domain), Some(problem)) = (&args.domain, &args.problem) else {
                return Err(Usage("eval needs --points, or --domain and --problem with plan files".into()).into());
            };
            if args.plans.is_empty() {
                return Err(Usage("no plan files given".into()).into());
            }
            let task = load_task(domain, problem, args.durations.as_deref())?;
            let mut points = Vec::new();
            let mut features = Vec::new();
            for path in &args.plans {
                for (i, entry) in read_entries(path)?.iter().enumerate() {
                    let (plan, point) =
                        entry.resolve(&task).with_context(|| format!("{} plan {i} is invalid", path.display()))?;
                    features.push(PlanFeatures::extract(&task, &plan)?);
                    points.push(point);
                }
            }
            (points, Some(features))
        }
    };
    if points.is_empty() {
        bail!("nothing to evaluate");
    }
    let metrics = SetMetrics::from_features(features.as_deref().unwrap_or(&[]), &points, &args.dist);
    let mut zeta = metrics.zeta.clone();
    if let Some(m) = args.metric {
        zeta.retain(|name, _| *name == m.name());
    }
    let times: Vec<f64> = points.iter().map(|p| to_f64(&p.time)).collect();
    let costs: Vec<f64> = points.iter().map(|p| to_f64(&p.cost)).collect();

    if args.output.format_or(Format::Json) == Format::Csv {
        let rows: Vec<PointRow> = (0..points.len())
            .map(|i| PointRow {
                index: i,
                time: times[i],
                cost: costs[i],
                pareto: metrics.pareto.contains(&i),
                hull: metrics.hull.contains(&i),
            })
            .collect();
        return args.output.emit(&csv_bytes(&rows)?);
    }
    let report = EvalReport {
        plans: features.as_ref().map_or(0, Vec::len),
        points: points
            .iter()
            .map(|p| serde_json::json!({ "time": to_json_number(&p.time), "cost": to_json_number(&p.cost) }))
            .collect(),
        zeta,
        pareto: metrics.pareto.clone(),
        hull: metrics.hull.clone(),
        breakpoints: breakpoints_f64(&lower_convex_hull(&points)),
        distribution: args.dist,
        icp: metrics.icp.is_finite().then_some(metrics.icp),
        makespan: Summary { median: median(&times), stddev: stddev(&times) },
        cost: Summary { median: median(&costs), stddev: stddev(&costs) },
    };
    args.output.emit_json(&serde_json::to_value(report)?)
}
