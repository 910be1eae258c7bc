use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(rel)
}

fn ftt(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ftt"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn ok(args: &[&str], out: &Path) -> String {
    let run = ftt(args, out);
    assert!(run.status.success(), "{args:?}: {}", String::from_utf8_lossy(&run.stderr));
    String::from_utf8(run.stdout).unwrap()
}

fn table(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let header = reader.headers().unwrap().iter().map(String::from).collect();
    let rows = reader
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_slice(&fs::read(dir.join("run_manifest.json")).unwrap()).unwrap()
}

fn parse(cell: &str) -> f64 {
    cell.parse().unwrap()
}

#[test]
fn example_prints_golden_vectors_and_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(&["example"], dir.path());
    assert_eq!(
        stdout,
        "f_P=(4000,1000,2000,600,1400)\nf_L=(5000,7600,1400)\nt_P=(33,33,18,18,10)\nt_OD=(33,33,18,12.4)\n"
    );
    let m = manifest(dir.path());
    assert_eq!(m["subcommand"], "example");
    assert_eq!(m["seed"], 0);
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(m["outputs"][0]["file"], "worked_example.csv");
    let (header, rows) = table(&dir.path().join("worked_example.csv"));
    assert_eq!(header, ["quantity", "index", "value"]);
    assert!(rows.contains(&vec!["t_OD".into(), "4".into(), "12.4".into()]));
}

#[test]
fn validate_accepts_the_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let net = fixture("small");
    let stdout = ok(&["validate", "--network", net.to_str().unwrap()], dir.path());
    assert!(stdout.starts_with("valid: 4 nodes, 5 links, 2 OD pairs"));
    let summary: Value = serde_json::from_slice(&fs::read(dir.path().join("network_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["total_demand"], 4.0);
    assert_eq!(manifest(dir.path())["subcommand"], "validate");
}

#[test]
fn errors_are_one_json_line() {
    let dir = tempfile::tempdir().unwrap();
    let missing = ftt(&["validate", "--network", "/nonexistent"], dir.path());
    assert!(!missing.status.success());
    let stderr = String::from_utf8(missing.stderr).unwrap();
    assert_eq!(stderr.trim_end().lines().count(), 1, "{stderr}");
    let err: Value = serde_json::from_str(stderr.trim_end()).unwrap();
    assert_eq!(err["error"], "config");
    assert!(err["message"].as_str().unwrap().contains("does not exist"));

    let usage = ftt(&["assign", "--method", "newton"], dir.path());
    assert_eq!(usage.status.code(), Some(2));
    let err: Value = serde_json::from_str(String::from_utf8(usage.stderr).unwrap().trim_end()).unwrap();
    assert_eq!(err["error"], "usage");

    let bad_tensor = dir.path().join("bad.json");
    fs::write(&bad_tensor, r#"{"axis_names":["a"],"shape":[3],"data":[1,2]}"#).unwrap();
    let run = ftt(&["decompose", "--input", bad_tensor.to_str().unwrap()], dir.path());
    assert_eq!(run.status.code(), Some(1));
    let err: Value = serde_json::from_str(String::from_utf8(run.stderr).unwrap().trim_end()).unwrap();
    assert_eq!(err["error"], "parse");
}

#[test]
fn assign_writes_consistent_tables() {
    let dir = tempfile::tempdir().unwrap();
    let net = fixture("small");
    ok(&["assign", "--network", net.to_str().unwrap(), "--gap", "1e-9"], dir.path());

    let (header, links) = table(&dir.path().join("link_performance.csv"));
    assert_eq!(header, ["link_id", "flow", "travel_time"]);
    assert_eq!(links.len(), 5);
    let (header, paths) = table(&dir.path().join("path_flow.csv"));
    assert_eq!(header, ["path_id", "o_zone_id", "d_zone_id", "flow", "travel_time"]);
    let (header, ods) = table(&dir.path().join("od_time.csv"));
    assert_eq!(header, ["o_zone_id", "d_zone_id", "demand", "avg_time"]);
    let (header, trace) = table(&dir.path().join("convergence.csv"));
    assert_eq!(header, ["iteration", "gap", "objective"]);
    assert!(parse(&trace.last().unwrap()[1]) <= 1e-9);

    // Demand is met per OD and every used path costs the OD's average time.
    for od in &ods {
        let members: Vec<&Vec<String>> = paths.iter().filter(|p| p[1] == od[0] && p[2] == od[1]).collect();
        let total: f64 = members.iter().map(|p| parse(&p[3])).sum();
        assert!((total - parse(&od[2])).abs() <= 1e-9);
        for p in members.iter().filter(|p| parse(&p[3]) > 1e-6) {
            assert!((parse(&p[4]) - parse(&od[3])).abs() <= 1e-6);
        }
    }
    // Link 1 carries the flow of the paths through it (1→2→...).
    let total_flow: f64 = links.iter().map(|l| parse(&l[1])).sum();
    assert!(total_flow > 0.0);
}

#[test]
fn frank_wolfe_and_gradient_projection_agree_through_the_cli() {
    let net = fixture("small");
    let gp = tempfile::tempdir().unwrap();
    let fw = tempfile::tempdir().unwrap();
    ok(&["assign", "--network", net.to_str().unwrap(), "--gap", "1e-9"], gp.path());
    ok(
        &["assign", "--network", net.to_str().unwrap(), "--method", "fw", "--gap", "1e-5", "--max-iter", "200000"],
        fw.path(),
    );
    let (_, a) = table(&gp.path().join("link_performance.csv"));
    let (_, b) = table(&fw.path().join("link_performance.csv"));
    for (x, y) in a.iter().zip(&b) {
        assert!((parse(&x[1]) - parse(&y[1])).abs() <= 1e-3);
    }
    let (_, fw_paths) = table(&fw.path().join("path_flow.csv"));
    assert!(fw_paths.is_empty());
}

#[test]
fn system_optimum_costs_no_more_than_equilibrium() {
    let net = fixture("small");
    let total = |objective: &str| {
        let dir = tempfile::tempdir().unwrap();
        ok(
            &["assign", "--network", net.to_str().unwrap(), "--objective", objective, "--gap", "1e-9"],
            dir.path(),
        );
        let (_, links) = table(&dir.path().join("link_performance.csv"));
        links.iter().map(|l| parse(&l[1]) * parse(&l[2])).sum::<f64>()
    };
    assert!(total("so") <= total("ue") + 1e-9);
}

#[test]
fn sensitivity_is_labelled_and_symmetric() {
    let dir = tempfile::tempdir().unwrap();
    let net = fixture("small");
    ok(&["sensitivity", "--network", net.to_str().unwrap()], dir.path());
    let (header, rows) = table(&dir.path().join("od_sensitivity.csv"));
    assert_eq!(header, ["od", "1-4", "2-4"]);
    assert_eq!(rows[0][0], "1-4");
    assert_eq!(rows[0][2], rows[1][1]);
    assert!(parse(&rows[0][1]) > 0.0 && parse(&rows[1][2]) > 0.0);
}

#[test]
fn rotate_with_zero_participation_has_no_improvement() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["rotate", "--p-grid", "0", "--beta-grid", "1:4:1"], dir.path());
    let (header, rows) = table(&dir.path().join("rotation_outcome.csv"));
    assert_eq!(
        header,
        ["p", "beta", "t_part", "t_nonpart", "system_cost", "delta", "delta_approx", "poa"]
    );
    assert_eq!(rows.len(), 4);
    for row in &rows {
        assert_eq!(row[5], "0");
    }
    assert_eq!(rows[0][7], "1.333333333333");
}

#[test]
fn rotate_grid_and_schedule() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["rotate"], dir.path());
    let (_, rows) = table(&dir.path().join("rotation_outcome.csv"));
    assert_eq!(rows.len(), 4 * 21);
    assert!(rows.iter().all(|r| parse(&r[0]) == 0.0 || parse(&r[5]) > 0.0));
    assert!(dir.path().join("rotation_cube.csv").is_file());

    let sched = tempfile::tempdir().unwrap();
    let schedule = fixture("schedule.csv");
    ok(&["rotate", "--schedule", schedule.to_str().unwrap(), "--beta-grid", "1"], sched.path());
    let (_, rows) = table(&sched.path().join("rotation_outcome.csv"));
    // Same as the alternating schedule at p = 0.5, β = 1.
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "0.5");
    assert!((parse(&rows[0][4]) - (0.25 + 0.75f64.powi(2))).abs() <= 1e-12);
}

#[test]
fn admm_passenger_vehicle_toy() {
    let dir = tempfile::tempdir().unwrap();
    let instance = fixture("passenger_vehicle.json");
    let stdout = ok(&["admm", "--instance", instance.to_str().unwrap(), "--rho", "1.0", "--tol", "1e-6"], dir.path());
    assert!(stdout.starts_with("converged=true"));
    let (header, trace) = table(&dir.path().join("admm_trace.csv"));
    assert_eq!(header, ["iteration", "primal_res", "dual_res", "obj1", "obj2"]);
    let last = trace.last().unwrap();
    assert!(parse(&last[1]) <= 1e-6 && parse(&last[2]) <= 1e-6);
    let (_, solution) = table(&dir.path().join("admm_solution.csv"));
    let vehicle = solution.iter().find(|r| r[0] == "vehicle_link_flow").unwrap();
    assert!((parse(&vehicle[2]) - 2.0).abs() <= 1e-3);
}

#[test]
fn decompose_cp_and_tucker() {
    let input = fixture("tensor.json");
    let cp = tempfile::tempdir().unwrap();
    let stdout = ok(
        &["decompose", "--input", input.to_str().unwrap(), "--rank", "2", "--seed", "1"],
        cp.path(),
    );
    assert!(stdout.starts_with("method=cp rank=2"));
    let (header, weights) = table(&cp.path().join("weights.csv"));
    assert_eq!(header, ["component", "weight"]);
    assert_eq!(weights.len(), 2);
    for (mode, (axis, extent)) in [("origin", 4), ("day", 3), ("hour", 5)].iter().enumerate() {
        let (header, rows) = table(&cp.path().join(format!("factors_{mode}.csv")));
        assert_eq!(header, [*axis, "component_1", "component_2"]);
        assert_eq!(rows.len(), *extent);
    }
    let (_, fits) = table(&cp.path().join("fit_history.csv"));
    assert!(parse(&fits.last().unwrap()[1]) >= 1.0 - 1e-6);

    let tucker = tempfile::tempdir().unwrap();
    let stdout = ok(
        &["decompose", "--input", input.to_str().unwrap(), "--method", "tucker", "--rank", "4,3,5"],
        tucker.path(),
    );
    assert!(stdout.ends_with("fit=1\n"), "{stdout}");
    assert!(tucker.path().join("core.json").is_file());
}

#[test]
fn config_file_paths_are_relative_to_the_file_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    fs::create_dir(&data).unwrap();
    for name in ["node.csv", "link.csv", "demand.csv"] {
        fs::copy(fixture("small").join(name), data.join(name)).unwrap();
    }
    let config = dir.path().join("scenario.json");
    fs::write(&config, r#"{"network": {"dir": "data"}, "seed": 5, "solver": {"gap": 1e-6}}"#).unwrap();
    let out = dir.path().join("out");
    ok(&["--config", config.to_str().unwrap(), "assign"], &out);
    let m = manifest(&out);
    assert_eq!(m["seed"], 5);
    assert_eq!(m["config"]["solver"]["gap"], 1e-6);

    let out2 = dir.path().join("out2");
    ok(&["--config", config.to_str().unwrap(), "--seed", "9", "assign", "--gap", "1e-8"], &out2);
    let m2 = manifest(&out2);
    assert_eq!(m2["seed"], 9);
    assert_eq!(m2["config"]["solver"]["gap"], 1e-8);
    assert_ne!(m["config_hash"], m2["config_hash"]);

    fs::write(&config, r#"{"netwrok": {}}"#).unwrap();
    let run = ftt(&["--config", config.to_str().unwrap(), "example"], &out);
    assert!(!run.status.success());
}

#[test]
fn log_level_variable_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let net = fixture("small");
    let run = Command::new(env!("CARGO_BIN_EXE_ftt"))
        .env("FTT_LOG_LEVEL", "info")
        .args(["validate", "--network", net.to_str().unwrap(), "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(run.status.success());
    assert!(String::from_utf8_lossy(&run.stderr).contains("loaded 4 nodes"));
    let quiet = Command::new(env!("CARGO_BIN_EXE_ftt"))
        .env("FTT_LOG_LEVEL", "error")
        .args(["validate", "--network", net.to_str().unwrap(), "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(quiet.stderr.is_empty());
}
