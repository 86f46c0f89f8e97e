use std::fs;
use std::path::{Path, PathBuf};

use planset::genset::{generate_diverse, generate_hybrid, generate_random_baseline, GenConfig, Status};
use planset::pddl::{load_durations, parse_domain, parse_problem};
use planset::plan::simulate;
use planset::search::{solve, EvaluationContext, SearchConfig};
use planset::{DistanceMetric, GroundProblem};

fn corpus() -> Vec<(String, GroundProblem)> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/corpus");
    let mut out = Vec::new();
    let mut domains: Vec<PathBuf> = fs::read_dir(&root).unwrap().map(|e| e.unwrap().path()).collect();
    domains.sort();
    for dir in domains {
        let domain = parse_domain(&fs::read_to_string(dir.join("domain.pddl")).unwrap()).unwrap();
        let sidecar = fs::read_to_string(dir.join("domain.durations.json")).unwrap();
        let mut problems: Vec<PathBuf> = fs::read_dir(&dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.file_name().unwrap().to_str().unwrap().starts_with('p'))
            .collect();
        problems.sort();
        for p in problems {
            let ground = parse_problem(&fs::read_to_string(&p).unwrap(), &domain).unwrap();
            let loaded = load_durations(ground, &sidecar).unwrap();
            assert!(loaded.unknown.is_empty());
            out.push((format!("{}/{}", dir.file_name().unwrap().to_str().unwrap(), p.file_stem().unwrap().to_str().unwrap()), loaded.problem));
        }
    }
    out
}

#[test]
fn corpus_has_three_domains_of_three_problems() {
    let c = corpus();
    assert_eq!(c.len(), 9);
}

#[test]
fn every_corpus_problem_is_solved() {
    for (name, p) in corpus() {
        let t = std::time::Instant::now();
        let out = solve(&p, &EvaluationContext::plain(), &SearchConfig::default()).unwrap_or_else(|e| panic!("{name}: {e}"));
        simulate(&p, &out.plan).unwrap();
        eprintln!("{name}: {} actions, {} steps, point {}, {} nodes, {:?}", p.actions.len(), out.plan.len(), out.point, out.nodes, t.elapsed());
    }
}

#[test]
fn generators_run_on_the_corpus() {
    for (name, p) in corpus() {
        let t = std::time::Instant::now();
        let cfg = GenConfig { k: 4, d: 0.2, metric: DistanceMetric::Action, seed: 1, ..GenConfig::default() };
        let greedy = generate_diverse(&p, &cfg).unwrap();
        let base = generate_random_baseline(&p, &cfg).unwrap();
        let hybrid = generate_hybrid(&p, &GenConfig { k: 6, k0: 3, ..cfg.clone() }).unwrap();
        for plan in greedy.plans.iter().chain(&base.plans).chain(&hybrid.plans) {
            simulate(&p, plan).unwrap();
        }
        if greedy.status == Status::Complete {
            assert!(greedy.metrics.zeta_min(DistanceMetric::Action) >= 0.2);
        }
        assert!(hybrid.metrics.icp <= hybrid.phase1_icp.unwrap());
        eprintln!(
            "{name}: greedy {} plans zeta {:.3}, baseline {} plans zeta {:.3}, hybrid {} plans icp {:.3} <= {:.3}, {:?}",
            greedy.len(),
            greedy.metrics.zeta_min(DistanceMetric::Action),
            base.len(),
            base.metrics.zeta_min(DistanceMetric::Action),
            hybrid.len(),
            hybrid.metrics.icp,
            hybrid.phase1_icp.unwrap(),
            t.elapsed()
        );
    }
}

