use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sparsevb"))
}

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn ok_json(cmd: &mut Command) -> Value {
    let out = run(cmd);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn fit_identity_selects_first_coordinate() {
    let dir = tempfile::tempdir().unwrap();
    let x = write(dir.path(), "x.csv", "x1,x2\n1,0\n0,1\n");
    let y = write(dir.path(), "y.csv", "y\n5\n0\n");
    let v = ok_json(bin().args(["fit", "--x"]).arg(&x).arg("--y").arg(&y));
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["selected"], serde_json::json!([1]));
    assert_eq!(v["config"]["b0"], 2.0);
    assert!(v["converged"].as_bool().unwrap());
    assert!(v.get("elbo_trace").is_none());
    assert!(v["timing"]["wall_time_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn known_sigma_one_is_the_default() {
    let dir = tempfile::tempdir().unwrap();
    let x = write(dir.path(), "x.csv", "1,0.5\n0.2,1\n-1,0.3\n0.4,-0.7\n");
    let y = write(dir.path(), "y.csv", "3\n0.1\n-2.9\n1.5\n");
    let fit = |extra: &[&str]| {
        let mut v = ok_json(bin().args(["fit", "--track-elbo", "--x"]).arg(&x).arg("--y").arg(&y).args(extra));
        v.as_object_mut().unwrap().remove("timing");
        v
    };
    let a = fit(&[]);
    let b = fit(&["--known-sigma", "1"]);
    assert_eq!(a, b);
    let trace = a["elbo_trace"].as_array().unwrap();
    assert_eq!(trace.len() as u64, a["sweeps"].as_u64().unwrap());
}

#[test]
fn fit_normalize_appends_intercept() {
    let dir = tempfile::tempdir().unwrap();
    let x = write(dir.path(), "x.csv", "1,5\n2,3\n3,4\n4,1\n5,2\n");
    let y = write(dir.path(), "y.csv", "2\n4\n6\n8\n10\n");
    let v = ok_json(bin().args(["fit", "--normalize", "--x"]).arg(&x).arg("--y").arg(&y));
    assert_eq!(v["p"], 3);
    assert_eq!(v["mu"].as_array().unwrap().len(), 3);
}

#[test]
fn fit_input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let x = write(dir.path(), "x.csv", "1,2\n3\n");
    let y = write(dir.path(), "y.csv", "1\n2\n");
    let out = run(bin().args(["fit", "--x"]).arg(&x).arg("--y").arg(&y));
    assert_eq!(out.status.code(), Some(2));

    let x = write(dir.path(), "x2.csv", "1,2\n3,4\n5,6\n");
    let out = run(bin().args(["fit", "--x"]).arg(&x).arg("--y").arg(&y));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rows"));

    let out = run(bin().args(["fit", "--x"]).arg(dir.path().join("missing.csv")).arg("--y").arg(&y));
    assert_eq!(out.status.code(), Some(2));

    let x = write(dir.path(), "x3.csv", "1,0\n0,1\n");
    let out = run(bin().args(["fit", "--engine", "gauss-oracle", "--x"]).arg(&x).arg("--y").arg(&y));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fit_writes_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let x = write(dir.path(), "x.csv", "1,0\n0,1\n");
    let y = write(dir.path(), "y.csv", "5\n0\n");
    let out = dir.path().join("fit.json");
    let o = run(bin().args(["fit", "--engine", "qmf", "--x"]).arg(&x).arg("--y").arg(&y).arg("--out").arg(&out));
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(v["config"]["engine"], "qmf");
    assert_eq!(v["gamma"], serde_json::json!([1.0, 0.0]));
}

#[test]
fn simulate_single_replicate_has_zero_sd() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = run(bin()
        .args(["simulate", "--replicates", "1", "--scenario"])
        .arg(scenarios().join("order_begin.json"))
        .arg("--out-dir")
        .arg(&out));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    let r = &v["report"];
    assert_eq!(r["replicates_completed"], 1);
    for k in ["l2_sd", "fdr_sd", "tpr_sd", "runtime_sd_s"] {
        assert_eq!(r[k], 0.0, "{k}");
    }
    let csv = std::fs::read_to_string(out.join("replicates.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "replicate,l2,fdr,tpr,runtime_s,sweeps,converged");
    assert_eq!(lines.len(), 2);
    let l2: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(l2, r["l2_mean"].as_f64().unwrap());
}

#[test]
fn simulate_reports_schema_path() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"n":10,"p":10,"s":2,"design":{"iid_gaussian":{"tau":"one"}},"signal_amp":{"const":1.0},
            "placement":"begin","noise":"student_t3","known_variance":true,"replicates":1,"seed":0}"#,
    );
    let o = run(bin().args(["simulate", "--scenario"]).arg(&bad).arg("--out-dir").arg(dir.path()));
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("design.iid_gaussian.tau"), "{err}");

    let bad = write(
        dir.path(),
        "bad2.json",
        r#"{"n":10,"p":10,"s":20,"design":"identity","signal_amp":{"const":1.0},
            "placement":"begin","noise":"student_t3","known_variance":true,"replicates":1,"seed":0}"#,
    );
    let o = run(bin().args(["simulate", "--scenario"]).arg(&bad).arg("--out-dir").arg(dir.path()));
    assert_eq!(o.status.code(), Some(2));
}

fn compare_rows(text: &str) -> Vec<(String, String, String, f64)> {
    text.lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].into(), f[1].into(), f[2].into(), f[3].parse().unwrap())
        })
        .collect()
}

fn mean_of(rows: &[(String, String, String, f64)], method: &str, order: &str, metric: &str) -> f64 {
    rows.iter()
        .find(|r| r.0 == method && r.1 == order && r.2 == metric)
        .unwrap_or_else(|| panic!("{method} {order} {metric}"))
        .3
}

#[test]
fn compare_orders_prioritized_wins_on_random_placement() {
    let o = run(bin()
        .args(["compare", "--orders", "prioritized,lex,random", "--replicates", "10", "--scenario"])
        .arg(scenarios().join("order_random.json")));
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("method,order,metric,mean,sd\n"));
    let rows = compare_rows(&text);
    assert_eq!(rows.len(), 9);
    let pri = mean_of(&rows, "laplace", "prioritized", "l2");
    assert!(pri < mean_of(&rows, "laplace", "lex", "l2"));
    assert!(pri < mean_of(&rows, "laplace", "random", "l2"));
}

#[test]
fn compare_engines_laplace_beats_gaussian_slab() {
    let o = run(bin()
        .args(["compare", "--engines", "laplace,gauss", "--replicates", "5", "--scenario"])
        .arg(scenarios().join("slabs_identity.json")));
    assert!(o.status.success());
    let rows = compare_rows(&String::from_utf8(o.stdout).unwrap());
    let lap = mean_of(&rows, "laplace", "prioritized", "l2");
    let gau = mean_of(&rows, "gauss", "prioritized", "l2");
    assert!(lap < 0.5 * gau, "{lap} vs {gau}");
}

#[test]
fn compare_single_cell_matches_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let scen = scenarios().join("noise_uniform.json");
    let o = run(bin().args(["compare", "--replicates", "3", "--scenario"]).arg(&scen));
    let rows = compare_rows(&String::from_utf8(o.stdout).unwrap());
    run(bin()
        .args(["simulate", "--replicates", "3", "--scenario"])
        .arg(&scen)
        .arg("--out-dir")
        .arg(dir.path()));
    let v: Value = serde_json::from_slice(&std::fs::read(dir.path().join("summary.json")).unwrap()).unwrap();
    for metric in ["l2", "fdr", "tpr"] {
        let want = v["report"][format!("{metric}_mean")].as_f64().unwrap();
        assert_eq!(mean_of(&rows, "laplace", "prioritized", metric), want);
    }
}

#[test]
fn diagnose_identity_and_duplicates() {
    let dir = tempfile::tempdir().unwrap();
    let id = write(dir.path(), "id.csv", "1,0,0,0\n0,1,0,0\n0,0,1,0\n0,0,0,1\n");
    let v = ok_json(bin().args(["diagnose", "--x"]).arg(&id));
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["mc"], 0.0);
    assert_eq!(v["lemma_d1_verified"], true);
    let phi: Vec<f64> = v["phi_tilde"].as_array().unwrap().iter().map(|t| t["value"].as_f64().unwrap()).collect();
    assert_eq!(phi, vec![1.0, 1.0, 1.0]);

    let dup = write(dir.path(), "dup.csv", "1,1,0\n2,2,1\n0,0,3\n1,1,1\n");
    let v = ok_json(bin().args(["diagnose", "--s-max", "2", "--x"]).arg(&dup));
    assert!(v["phi_tilde"][1]["value"].as_f64().unwrap().abs() < 1e-7);
    assert!(!v["flags"].as_array().unwrap().is_empty());
}

#[test]
fn diagnose_cap_is_an_input_error_with_hint() {
    let dir = tempfile::tempdir().unwrap();
    let rows: Vec<String> = (0..8).map(|i| (0..8).map(|j| ((i * 7 + j * 3) % 5).to_string()).collect::<Vec<_>>().join(",")).collect();
    let x = write(dir.path(), "x.csv", &rows.join("\n"));
    let o = run(bin().args(["diagnose", "--s-max", "3", "--max-subsets", "10", "--x"]).arg(&x));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--max-subsets"));
}

#[test]
fn thread_cap_env_is_validated() {
    let o = run(bin()
        .env("SPARSEVB_THREADS", "lots")
        .args(["diagnose", "--x", "nothing.csv"]));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("SPARSEVB_THREADS"));
}
