use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name).to_str().unwrap().to_string()
}

fn planset(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_planset")).args(args).output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

#[test]
fn missing_input_and_bad_flags_exit_2() {
    let out = planset(&["solve", "/no/such/domain.pddl", &fixture("seven-points-problem.pddl")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/no/such/domain.pddl"));
    assert_eq!(planset(&["diverse", "--metric", "bogus"]).status.code(), Some(2));
    let out = planset(&["diverse", &fixture("two-route-domain.pddl"), &fixture("two-route-problem.pddl"), "--d", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_problem_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let problem = dir.path().join("p.pddl");
    std::fs::write(&problem, "(define (problem stuck) (:domain two-route) (:init (start)) (:goal (and)))").unwrap();
    let out = planset(&["solve", &fixture("two-route-domain.pddl"), problem.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn trade_off_weight_moves_the_solve_result() {
    let (d, p) = (fixture("logistics3-domain.pddl"), fixture("logistics3-problem.pddl"));
    let fast = json(&planset(&["solve", &d, &p, "--w", "1"]));
    let cheap = json(&planset(&["solve", &d, &p, "--w", "0"]));
    let t = |v: &serde_json::Value| v["plans"][0]["time"].as_f64().unwrap();
    let c = |v: &serde_json::Value| v["plans"][0]["cost"].as_f64().unwrap();
    assert!(t(&fast) <= t(&cheap));
    assert!(c(&cheap) <= c(&fast));
}

#[test]
fn eval_of_seven_points_reports_the_hull() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("pts.json");
    std::fs::write(&pts, r#"[[4,25],[6,22],[7,15],[8,20],[10,12],[11,14],[12,5]]"#).unwrap();
    let v = json(&planset(&["eval", "--points", pts.to_str().unwrap()]));
    assert!((v["icp"].as_f64().unwrap() - 7.32).abs() < 0.005);
    assert_eq!(v["hull"], serde_json::json!([0, 2, 6]));
    assert!(v["zeta"]["action"]["min"].is_null());
}

#[test]
fn eval_of_plan_files() {
    let dir = tempfile::tempdir().unwrap();
    let (d, p) = (fixture("seven-points-domain.pddl"), fixture("seven-points-problem.pddl"));
    let one = dir.path().join("one.json");
    std::fs::write(&one, r#"{"steps": ["(p3)"], "time": 7, "cost": 15}"#).unwrap();
    let one = one.to_str().unwrap();

    let single = json(&planset(&["eval", "--domain", &d, "--problem", &p, one]));
    assert!(single["zeta"]["clink"]["min"].is_null());
    assert_eq!(single["icp"].as_f64(), Some(11.0));

    let twice = json(&planset(&["eval", "--domain", &d, "--problem", &p, one, one]));
    for m in ["action", "clink", "state-pad", "state-hold"] {
        assert_eq!(twice["zeta"][m]["min"].as_f64(), Some(0.0), "{m}");
    }

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"steps": ["(prep-a)", "(finish-b)"]}"#).unwrap();
    let (d, p) = (fixture("two-route-domain.pddl"), fixture("two-route-problem.pddl"));
    let out = planset(&["eval", "--domain", &d, "--problem", &p, bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("step 1"), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn generator_output_feeds_back_into_eval() {
    let dir = tempfile::tempdir().unwrap();
    let set = dir.path().join("set.json");
    let (d, p) = (fixture("seven-points-domain.pddl"), fixture("seven-points-problem.pddl"));
    let out = planset(&["icpgen", &d, &p, "--method", "sequential", "--k", "4", "--out", set.to_str().unwrap()]);
    assert!(out.status.success());
    let generated: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&set).unwrap()).unwrap();
    let evaluated = json(&planset(&["eval", "--domain", &d, "--problem", &p, set.to_str().unwrap()]));
    assert_eq!(generated["metrics"]["icp"], evaluated["icp"]);
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "k = 1\nd = 0.5\n").unwrap();
    let (d, p) = (fixture("two-route-domain.pddl"), fixture("two-route-problem.pddl"));
    let from_file = json(&planset(&["diverse", &d, &p, "--config", cfg.to_str().unwrap()]));
    assert_eq!(from_file["plans"].as_array().unwrap().len(), 1);
    let overridden = json(&planset(&["diverse", &d, &p, "--config", cfg.to_str().unwrap(), "--k", "2"]));
    assert_eq!(overridden["plans"].as_array().unwrap().len(), 2);
}

#[test]
fn bench_writes_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let blocks = dir.path().join("blocks");
    std::fs::create_dir(&blocks).unwrap();
    for f in ["domain.pddl", "domain.durations.json", "p01.pddl"] {
        std::fs::copy(fixture(&format!("corpus/blocks/{f}")), blocks.join(f)).unwrap();
    }
    let out = planset(&["bench", dir.path().to_str().unwrap(), "--methods", "sampling,hybrid", "--dists", "uniform,tri:0.8", "--seeds", "1,2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "domain,problem,method,distribution,seed,status,plans,icp,zeta_min,zeta_avg,zeta_max,makespan_median,makespan_stddev,cost_median,cost_stddev,lch_contribution,runtime_s"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r.starts_with("blocks,p01,")));
}
