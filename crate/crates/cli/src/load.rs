use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use planset::pddl::{load_durations, parse_domain, parse_problem};
use planset::GroundProblem;

use crate::Usage;

#[derive(Debug, Clone, Args)]
pub struct TaskFiles {
    pub domain: PathBuf,
    pub problem: PathBuf,
    /// Durations sidecar; defaults to `<domain-stem>.durations.json` beside the domain.
    #[arg(long, value_name = "FILE")]
    pub durations: Option<PathBuf>,
}

pub fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).map_err(|e| Usage(format!("cannot read {}: {e}", path.display())).into())
}

pub fn sidecar_for(domain: &Path) -> PathBuf {
    let stem = domain.file_stem().and_then(|s| s.to_str()).unwrap_or("domain");
    domain.with_file_name(format!("{stem}.durations.json"))
}

impl TaskFiles {
    pub fn load(&self) -> anyhow::Result<GroundProblem> {
        load_task(&self.domain, &self.problem, self.durations.as_deref())
    }
}

pub fn load_task(domain: &Path, problem: &Path, durations: Option<&Path>) -> anyhow::Result<GroundProblem> {
    let domain_text = read(domain)?;
    let problem_text = read(problem)?;
    let d = parse_domain(&domain_text).with_context(|| format!("in {}", domain.display()))?;
    let p = parse_problem(&problem_text, &d).with_context(|| format!("in {}", problem.display()))?;
    let sidecar = match durations {
        Some(path) => Some((read(path)?, path.to_path_buf())),
        None => {
            let guess = sidecar_for(domain);
            guess.is_file().then(|| read(&guess).map(|t| (t, guess))).transpose()?
        }
    };
    match sidecar {
        Some((text, path)) => {
            log::info!("durations from {}", path.display());
            Ok(load_durations(p, &text).with_context(|| format!("in {}", path.display()))?.problem)
        }
        None => Ok(p),
    }
}
