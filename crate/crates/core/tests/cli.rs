//! End-to-end checks of the command-line interface: deterministic
//! generation, the documented exit codes, and the file formats.

use std::path::PathBuf;
use std::process::{Command, Output};

fn greensec(args: &[&str], dir: &std::path::Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_greensec"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary should run")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("greensec-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_counterexample(dir: &std::path::Path) -> PathBuf {
    let path = dir.join("counterexample.json");
    std::fs::write(
        &path,
        r#"{
  "targets": [
    {"rd": 1.0, "pd": -1e-8, "ra": 1.0, "pa": -1.0},
    {"rd": 2.0, "pd": -1e-8, "ra": 1.0, "pa": -1.0}
  ],
  "informants": ["u1", "u2"],
  "attackers": [
    {"id": "v1", "p": 1.0},
    {"id": "v2", "p": 1.0},
    {"id": "v3", "p": 1.0}
  ],
  "edges": [
    {"u": "u1", "v": "v2", "w": 1.0},
    {"u": "u2", "v": "v3", "w": 1.0}
  ],
  "r": 1,
  "k": 2,
  "lambda": 0.0
}"#,
    )
    .unwrap();
    path
}

#[test]
fn gen_is_byte_identical_under_a_fixed_seed() {
    let dir = temp_dir("gen");
    let args = [
        "gen", "--nx", "6", "--ny", "8", "--n", "6", "--r", "3", "--k", "4", "--seed", "7",
    ];
    let first = greensec(&args, &dir);
    let second = greensec(&args, &dir);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    // Capped generation respects the requested attack mass.
    let capped = greensec(
        &[
            "gen",
            "--nx",
            "4",
            "--ny",
            "16",
            "--n",
            "5",
            "--r",
            "2",
            "--k",
            "2",
            "--seed",
            "3",
            "--sum-pv-cap",
            "3",
        ],
        &dir,
    );
    let parsed: serde_json::Value = serde_json::from_str(&stdout(&capped)).unwrap();
    let total: f64 = parsed["attackers"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a["p"].as_f64().unwrap())
        .sum();
    assert!(total <= 3.0 + 1e-9);
}

#[test]
fn eval_reproduces_the_recruitment_counterexample() {
    let dir = temp_dir("eval");
    let instance = write_counterexample(&dir);
    let out = greensec(
        &[
            "eval",
            "--instance",
            instance.to_str().unwrap(),
            "--u",
            "u1,u2",
            "--method",
            "exact",
        ],
        &dir,
    );
    assert!(out.status.success());
    let text = stdout(&out);
    let value: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("value: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((value - 3.375).abs() < 1e-6, "value {value}");
}

#[test]
fn strong_intensity_mismatch_exits_with_validation_code() {
    let dir = temp_dir("sisi");
    let instance = write_counterexample(&dir);
    // Weaken one edge: the strong-intensity evaluator must refuse.
    let text = std::fs::read_to_string(&instance)
        .unwrap()
        .replace(r#""w": 1.0}"#, r#""w": 0.5}"#);
    std::fs::write(&instance, text).unwrap();
    let out = greensec(
        &[
            "eval",
            "--instance",
            instance.to_str().unwrap(),
            "--u",
            "u1,u2",
            "--method",
            "sisi",
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn invalid_instance_exits_with_validation_code() {
    let dir = temp_dir("invalid");
    let path = dir.join("broken.json");
    let text = std::fs::read_to_string(write_counterexample(&dir))
        .unwrap()
        .replace(r#""rd": 1.0"#, r#""rd": -1.0"#);
    std::fs::write(&path, text).unwrap();
    let out = greensec(&["eval", "--instance", path.to_str().unwrap()], &dir);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn fixedpoint_exit_codes_track_convergence() {
    let dir = temp_dir("fp");
    // An iteration budget too small to drown the oscillation transient.
    let out = greensec(
        &[
            "fixedpoint",
            "--x0",
            "0.5,0.5",
            "--tip",
            "1,0",
            "--tip",
            "0,1",
            "--w",
            "0.5",
            "--ra",
            "0.6,0.8",
            "--pa",
            "-0.8,-0.6",
            "--lambda",
            "3.0",
            "--damping",
            "1.0",
            "--max-iter",
            "3",
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(2));
    // Damping restores convergence and the success code.
    let out = greensec(
        &[
            "fixedpoint",
            "--x0",
            "0.5,0.5",
            "--tip",
            "1,0",
            "--tip",
            "0,1",
            "--w",
            "0.5",
            "--ra",
            "0.6,0.8",
            "--pa",
            "-0.8,-0.6",
            "--lambda",
            "3.0",
            "--damping",
            "0.5",
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn levelk_emits_the_oscillation_trace() {
    let dir = temp_dir("levelk");
    let csv = dir.join("trace.csv");
    let out = greensec(
        &[
            "levelk",
            "--x0",
            "0.5,0.5",
            "--tip",
            "1,0",
            "--tip",
            "0,1",
            "--w",
            "0.5",
            "--ra",
            "0.6,0.8",
            "--pa",
            "-0.8,-0.6",
            "--lambda",
            "3.0",
            "--csv",
            csv.to_str().unwrap(),
        ],
        &dir,
    );
    assert!(out.status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("level,q1,q2,residual"));
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert!(rows.len() > 10);
    // Alternating rows near the two cycle branches.
    let q1_last: f64 = rows[rows.len() - 1]
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    let q1_prev: f64 = rows[rows.len() - 2]
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!((q1_last - q1_prev).abs() > 0.2, "rows do not alternate");
}

#[test]
fn pipeline_gen_select_tradeoff_round_trips() {
    let dir = temp_dir("pipeline");
    let instance = dir.join("small.json");
    let gen = greensec(
        &[
            "gen",
            "--nx",
            "3",
            "--ny",
            "3",
            "--n",
            "3",
            "--r",
            "1",
            "--k",
            "2",
            "--seed",
            "5",
            "--out",
            instance.to_str().unwrap(),
        ],
        &dir,
    );
    assert!(gen.status.success());

    let select = greensec(
        &[
            "select",
            "--instance",
            instance.to_str().unwrap(),
            "--method",
            "gsa",
            "--evaluator",
            "exact",
        ],
        &dir,
    );
    assert!(select.status.success());
    assert!(stdout(&select).contains("value:"));

    let tradeoff = greensec(
        &[
            "tradeoff",
            "--instance",
            instance.to_str().unwrap(),
            "--budget",
            "5",
        ],
        &dir,
    );
    assert!(tradeoff.status.success());
    assert!(stdout(&tradeoff).starts_with("recruited,resources,value"));
}

#[test]
fn qri_and_bilevel_run_on_single_attacker_instances() {
    let dir = temp_dir("single");
    let instance = dir.join("single.json");
    let gen = greensec(
        &[
            "gen",
            "--nx",
            "3",
            "--ny",
            "1",
            "--n",
            "3",
            "--r",
            "1",
            "--k",
            "2",
            "--seed",
            "9",
            "--out",
            instance.to_str().unwrap(),
        ],
        &dir,
    );
    assert!(gen.status.success());

    let qri_out = greensec(
        &[
            "qri",
            "--instance",
            instance.to_str().unwrap(),
            "--k-list",
            "0,2",
        ],
        &dir,
    );
    assert!(qri_out.status.success());
    let lines: Vec<String> = stdout(&qri_out).lines().map(String::from).collect();
    assert_eq!(lines.len(), 3);
    let value_at = |line: &str| -> f64 { line.split(',').nth(3).unwrap().parse().unwrap() };
    assert!(value_at(&lines[2]) >= value_at(&lines[1]) - 1e-6);

    let bilevel_out = greensec(
        &[
            "bilevel",
            "--instance",
            instance.to_str().unwrap(),
            "--restarts",
            "3",
        ],
        &dir,
    );
    assert!(bilevel_out.status.success());
    let text = stdout(&bilevel_out);
    let data = text.lines().nth(1).unwrap();
    let bilevel_value: f64 = data.split(',').nth(3).unwrap().parse().unwrap();
    let pair_value: f64 = data.split(',').nth(4).unwrap().parse().unwrap();
    assert!(bilevel_value >= pair_value - 1e-6);
}
