use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn toda(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_toda"))
        .args(args)
        .env_remove("TODA_TOL_OVERRIDE")
        .output()
        .expect("run toda")
}

fn toda_env(args: &[&str], key: &str, val: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_toda")).args(args).env(key, val).output().expect("run toda")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("bad JSON ({e}): {}", stdout(o)))
}

/// Writes a matrix document with real entries given row by row.
fn write_real(dir: &TempDir, name: &str, rows: &[&[f64]]) -> PathBuf {
    let n = rows.len();
    let entries: Vec<Value> = rows.iter().flat_map(|r| r.iter().map(|&x| serde_json::json!([x, 0.0]))).collect();
    write_doc(dir, name, &serde_json::json!({"n": n, "entries": entries}))
}

fn write_doc(dir: &TempDir, name: &str, v: &Value) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Row-major complex entries of a matrix document.
fn entries(v: &Value) -> Vec<(f64, f64)> {
    v["entries"].as_array().unwrap().iter().map(|e| (e[0].as_f64().unwrap(), e[1].as_f64().unwrap())).collect()
}

fn max_dist(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x.0 - y.0).hypot(x.1 - y.1)).fold(0.0, f64::max)
}

#[test]
fn qr_of_identity() {
    let dir = TempDir::new().unwrap();
    let id = write_real(&dir, "id.json", &[&[1.0, 0.0], &[0.0, 1.0]]);
    let o = toda(&["factor", "qr", "--input", s(&id)]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["residual"].as_f64(), Some(0.0));
    assert_eq!(v["roles_hold"], Value::Bool(true));
    let ident = [(1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (1.0, 0.0)];
    assert_eq!(max_dist(&entries(&v["factors"]["k"]), &ident), 0.0);
    assert_eq!(max_dist(&entries(&v["factors"]["u"]), &ident), 0.0);
}

#[test]
fn ldu_of_swap_fails_at_first_minor() {
    let dir = TempDir::new().unwrap();
    let p = write_real(&dir, "swap.json", &[&[0.0, 1.0], &[1.0, 0.0]]);
    let o = toda(&["factor", "ldu", "--input", s(&p)]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("MinorVanishes(1)"));
}

#[test]
fn cell_predicates() {
    let dir = TempDir::new().unwrap();
    // κ of [[1,0],[1,1]]: the normalized first column and its rotation.
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let k = write_real(&dir, "k.json", &[&[r, -r], &[r, r]]);
    let v = json(&toda(&["factor", "cellC", "--input", s(&k)]));
    assert_eq!(v["member"], Value::Bool(true));
    let swap = write_real(&dir, "swap.json", &[&[0.0, 1.0], &[1.0, 0.0]]);
    let v = json(&toda(&["factor", "cellC", "--input", s(&swap)]));
    assert_eq!(v["member"], Value::Bool(false));
    // ν of [[1,0],[1,1]] is the R factor [[√2, 1/√2],[0, 1/√2]].
    let u = write_real(&dir, "u.json", &[&[2f64.sqrt(), r], &[0.0, r]]);
    let v = json(&toda(&["factor", "cellD", "--input", s(&u)]));
    assert_eq!(v["member"], Value::Bool(true));
    let v = json(&toda(&["factor", "minors", "--input", s(&u)]));
    let m: Vec<f64> = v["minors"].as_array().unwrap().iter().map(|z| z[0].as_f64().unwrap()).collect();
    assert!((m[0] - 2f64.sqrt()).abs() < 1e-15 && (m[1] - 1.0).abs() < 1e-15);
}

#[test]
fn chart_from_sl2_gives_swap() {
    let dir = TempDir::new().unwrap();
    let zero = serde_json::json!({"n": 2, "entries": [[0, 0], [0, 0], [0, 0], [0, 0]]});
    let z = serde_json::json!({"n": 2, "entries": [[0, 0], [0, 0], [2, 0], [0, 0]]});
    let p = write_doc(&dir, "pt.json", &serde_json::json!({"y": zero, "z": z}));
    let o = toda(&["chart", "from", "--input", s(&p), "--lambda", "1,-1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let got = entries(&json(&o));
    assert!(max_dist(&got, &[(0.0, 0.0), (1.0, 0.0), (1.0, 0.0), (0.0, 0.0)]) < 1e-14);
}

#[test]
fn chart_to_center_is_origin_and_round_trips() {
    let dir = TempDir::new().unwrap();
    let lam = write_real(&dir, "lam.json", &[&[2.0, 0.0, 0.0], &[0.0, -0.5, 0.0], &[0.0, 0.0, -1.5]]);
    let v = json(&toda(&["chart", "to", "--input", s(&lam), "--lambda", "2,-0.5,-1.5"]));
    assert_eq!(max_dist(&entries(&v["y"]), &[(0.0, 0.0); 9]), 0.0);
    assert_eq!(max_dist(&entries(&v["z"]), &[(0.0, 0.0); 9]), 0.0);

    let x = write_real(&dir, "x.json", &[&[0.3, 1.0, -0.2], &[0.7, -0.1, 0.4], &[0.5, 0.9, -0.2]]);
    let pt = dir.path().join("pt.json");
    let o = toda(&["chart", "to", "--input", s(&x), "--auto-center", "--out", s(&pt)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc: Value = serde_json::from_str(&fs::read_to_string(&pt).unwrap()).unwrap();
    assert!(doc["atlas"]["index"].is_u64() && doc["atlas"]["size"] == 6);
    let back = json(&toda(&["chart", "from", "--input", s(&pt)]));
    let want = entries(&serde_json::from_str(&fs::read_to_string(&x).unwrap()).unwrap());
    assert!(max_dist(&entries(&back), &want) < 1e-12);
}

/// `a + b j` as the 2×2 block `[[a, b], [−b̄, ā]]`.
fn quaternion_matrix(q: &[[(f64, f64, f64, f64); 2]; 2]) -> Value {
    let mut m = vec![vec![(0.0, 0.0); 4]; 4];
    for (i, row) in q.iter().enumerate() {
        for (j, &(a_re, a_im, b_re, b_im)) in row.iter().enumerate() {
            m[2 * i][2 * j] = (a_re, a_im);
            m[2 * i][2 * j + 1] = (b_re, b_im);
            m[2 * i + 1][2 * j] = (-b_re, b_im);
            m[2 * i + 1][2 * j + 1] = (a_re, -a_im);
        }
    }
    let entries: Vec<Value> = m.iter().flatten().map(|&(re, im)| serde_json::json!([re, im])).collect();
    serde_json::json!({"n": 4, "entries": entries})
}

#[test]
fn slh_chart_carries_z_im_and_round_trips() {
    let dir = TempDir::new().unwrap();
    let x = quaternion_matrix(&[
        [(0.8, 1.1, 0.3, -0.2), (0.5, 0.1, -0.4, 0.6)],
        [(-0.3, 0.7, 0.2, 0.9), (-0.8, -0.4, 0.1, 0.3)],
    ]);
    let xp = write_doc(&dir, "x.json", &x);
    let pt = dir.path().join("pt.json");
    let o = toda(&["chart", "to", "--input", s(&xp), "--form", "slh", "--auto-center", "--out", s(&pt)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc: Value = serde_json::from_str(&fs::read_to_string(&pt).unwrap()).unwrap();
    assert_eq!(doc["z_im"].as_array().unwrap().len(), 2);
    assert_eq!(doc["atlas"]["size"], 8);
    let back = json(&toda(&["chart", "from", "--form", "slh", "--input", s(&pt)]));
    assert!(max_dist(&entries(&back), &entries(&x)) < 1e-12);
}

#[test]
fn flow_all_on_swap_agrees_and_writes_files() {
    let dir = TempDir::new().unwrap();
    let p = write_real(&dir, "swap.json", &[&[0.0, 1.0], &[1.0, 0.0]]);
    let prefix = dir.path().join("run");
    let o = toda(&["flow", "--input", s(&p), "--method", "all", "--t0", "0", "--t1", "2", "--steps", "40", "--out", s(&prefix)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rep = json(&o);
    assert!(rep["max_pairwise"].as_f64().unwrap() < 1e-8);
    assert_eq!(rep["confined"], Value::Bool(true));
    for m in ["rk", "symes", "chart"] {
        let csv = fs::read_to_string(dir.path().join(format!("run.{m}.csv"))).unwrap();
        let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
        let labels: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(labels.len(), 1 + 2 * 4 + 1);
        assert_eq!(labels[1..5], ["re(X_11)", "im(X_11)", "re(X_12)", "im(X_12)"]);
        assert_eq!(*labels.last().unwrap(), "drift");
        let times: Vec<f64> = lines.map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
        assert_eq!(times.len(), 41);
        assert!(times.windows(2).all(|w| w[1] > w[0]));
        assert!(csv.contains(&format!("# method: {m}")));
    }
    assert!(dir.path().join("run.report.json").exists());
}

#[test]
fn flow_hierarchy_x_squared() {
    let dir = TempDir::new().unwrap();
    let p = write_real(&dir, "swap.json", &[&[0.0, 1.0], &[1.0, 0.0]]);
    let o = toda(&["flow", "--input", s(&p), "--method", "all", "--t1", "2", "--poly", "0,0,1"]);
    assert_eq!(code(&o), 0);
    assert!(json(&o)["max_pairwise"].as_f64().unwrap() < 1e-8);
}

#[test]
fn diagonal_start_is_stationary() {
    let dir = TempDir::new().unwrap();
    let p = write_real(&dir, "d.json", &[&[1.0, 0.0], &[0.0, -1.0]]);
    for m in ["rk", "symes", "chart"] {
        let o = toda(&["flow", "--input", s(&p), "--method", m, "--steps", "5", "--lambda", "1,-1"]);
        assert_eq!(code(&o), 0, "{m}: {}", String::from_utf8_lossy(&o.stderr));
        let text = stdout(&o);
        let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
        assert_eq!(rows.len(), 6);
        for r in &rows {
            let cols: Vec<f64> = r.split(',').map(|c| c.parse().unwrap()).collect();
            assert!((cols[1] - 1.0).abs() < 1e-14 && (cols[7] + 1.0).abs() < 1e-14, "{m}: {r}");
            assert!(cols[3].abs() < 1e-14 && cols[5].abs() < 1e-14);
        }
    }
}

#[test]
fn comparison_threshold_sets_exit_code() {
    let dir = TempDir::new().unwrap();
    let p = write_real(&dir, "swap.json", &[&[0.0, 1.0], &[1.0, 0.0]]);
    let args = ["flow", "--input", s(&p), "--method", "all", "--t1", "2"];
    let o = toda(&[&args[..], &["--tol", "1e-20"]].concat());
    assert_eq!(code(&o), 1);
    assert_eq!(json(&o)["pass"], Value::Bool(false));
    assert_eq!(code(&toda_env(&args, "TODA_TOL_OVERRIDE", "1e-20")), 1);
    assert_eq!(code(&toda_env(&args, "TODA_TOL_OVERRIDE", "1e-6")), 0);
    assert_eq!(code(&toda_env(&args, "TODA_TOL_OVERRIDE", "abc")), 2);
}

#[test]
fn input_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"n\": 2, \"entries\": [[1, 0]]}").unwrap();
    assert_eq!(code(&toda(&["factor", "qr", "--input", s(&bad)])), 2);
    assert_eq!(code(&toda(&["factor", "qr", "--input", "/nonexistent/x.json"])), 2);
    let p = write_real(&dir, "swap.json", &[&[0.0, 1.0], &[1.0, 0.0]]);
    assert_eq!(code(&toda(&["chart", "to", "--input", s(&p), "--lambda", "1,oops"])), 2);
    assert_eq!(code(&toda(&["chart", "to", "--input", s(&p), "--lambda", "1,1"])), 2);
    assert_eq!(code(&toda(&["flow", "--input", s(&p), "--method", "nope"])), 2);
    assert_eq!(code(&toda(&["verify", "core", "--n", "5..3"])), 2);
    assert_eq!(code(&toda(&[])), 2);
}

#[test]
fn verify_is_deterministic_and_passes() {
    let a = toda(&["verify", "core", "--seed", "42"]);
    let b = toda(&["verify", "core", "--seed", "42"]);
    assert_eq!(code(&a), 0, "{}", stdout(&a));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).lines().filter(|l| !l.ends_with("failed")).all(|l| l.starts_with("PASS")));
    let so5 = toda(&["verify", "so5", "--trials", "5"]);
    assert_eq!(code(&so5), 0, "{}", stdout(&so5));
    assert!(stdout(&so5).contains("so5/spectrum"));
}

#[test]
fn verify_flow_small() {
    let o = toda(&["verify", "flow", "--n", "2..3", "--trials", "5", "--seed", "3"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn examples_pass() {
    let dir = TempDir::new().unwrap();
    let o = toda(&["example", "sl2", "--lambda", "1+i"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let csv = dir.path().join("so5.csv");
    let o = toda(&["example", "so5", "--seed", "1", "--out", s(&csv)]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let text = fs::read_to_string(&csv).unwrap();
    let label = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(label.split(',').count(), 1 + 2 * 25 + 1);
}
