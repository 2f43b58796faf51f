use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::{json, Value};

struct Run {
    code: i32,
    json: Value,
    stderr: String,
}

fn sumsetlab(args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sumsetlab"));
    cmd.args(args).env_remove("SUMSETLAB_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("binary runs");
    let stdout = String::from_utf8(out.stdout).unwrap();
    let json = serde_json::from_str(&stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {stdout}"));
    Run { code: out.status.code().unwrap(), json, stderr: String::from_utf8(out.stderr).unwrap() }
}

fn run(args: &[&str]) -> Run {
    sumsetlab(args, &[])
}

fn schema(name: &str) -> jsonschema::JSONSchema {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas").join(name);
    let value: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::JSONSchema::compile(&value).expect("schema compiles")
}

fn assert_valid(s: &jsonschema::JSONSchema, v: &Value) {
    if let Err(errors) = s.validate(v) {
        let msgs: Vec<String> = errors.map(|e| format!("{e} at {}", e.instance_path)).collect();
        panic!("schema violations: {msgs:?}\n{v}");
    }
}

fn without_timestamp(mut v: Value) -> Value {
    if let Some(m) = v.get_mut("manifest").and_then(Value::as_object_mut) {
        m.remove("timestamp");
    }
    v
}

fn write(dir: &Path, name: &str, v: &Value) -> String {
    let p: PathBuf = dir.join(name);
    std::fs::write(&p, v.to_string()).unwrap();
    p.to_str().unwrap().to_string()
}

fn naive_sumset(a: &[i64], b: &[i64]) -> BTreeSet<i64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x + y)).collect()
}

#[test]
fn longest_ap_example() {
    let r = run(&["oracle", "longest-ap", "--set", "[1,3,5,7]"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.json["report"], json!({"length": 4, "step": 2, "base": 1}));
    assert_eq!(r.json["verified"], json!(true));
    assert!(r.stderr.contains("length 4"));
}

#[test]
fn bounds_example() {
    let r = run(&["bounds", "--alpha", "0.5", "--beta", "0.5", "--N", "1e20", "--c", "1"]);
    assert_eq!(r.code, 0);
    let row = &r.json["report"]["table"]["rows"][0];
    let ln_n = 20.0 * 10f64.ln();
    let want11 = (0.25 * ln_n).sqrt().exp() / ln_n;
    let l = 4f64.ln();
    let want13 = (0.5 * ln_n / (l * l * l)).sqrt().exp() * 0.5 / ln_n;
    assert!((row["thm11"].as_f64().unwrap() - want11).abs() < 1e-12 * want11);
    assert!((row["thm13"].as_f64().unwrap() - want13).abs() < 1e-12 * want13);
    assert_eq!(row["agree"], json!(true));
}

#[test]
fn bounds_beyond_float_range() {
    let r = run(&["bounds", "--alpha", "0.001", "--beta", "0.001", "--N", "1e1000000000000"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.json["report"]["direct_overflows"], json!(1));
    assert_eq!(r.json["report"]["table"]["rows"][0]["thm13_exceeds"], json!(true));
}

#[test]
fn dense_example_with_files() {
    let dir = tempfile::tempdir().unwrap();
    let a: Vec<i64> = (1..=100).filter(|x| x % 3 != 0).collect();
    let b: Vec<i64> = (1..=100).filter(|x| x % 2 == 0).collect();
    let fa = write(dir.path(), "a.json", &json!(a));
    let fb = write(dir.path(), "b.json", &json!(b));
    let r = run(&["find-ap", "dense", "--N", "100", "--A", &fa, "--B", &fb, "--seed", "7"]);
    assert_eq!(r.code, 0, "{}", r.json);
    assert_eq!(r.json["verified"], json!(true));
    let w = &r.json["report"]["result"]["witness"];
    let (base, step, len) = (w["base"].as_i64().unwrap(), w["step"].as_i64().unwrap(), w["length"].as_i64().unwrap());
    let s = naive_sumset(&a, &b);
    assert!((0..len).all(|j| s.contains(&(base + j * step))));
    assert!(len <= r.json["report"]["oracle"]["length"].as_i64().unwrap());
    assert_eq!(r.json["manifest"]["seed"], json!(7));
}

#[test]
fn every_subcommand_matches_the_schema() {
    let s = schema("report.schema.json");
    let dir = tempfile::tempdir().unwrap();
    let ff: Vec<Value> = (0..32u32).map(|i| json!([0, (i >> 4) & 1, (i >> 3) & 1, (i >> 2) & 1, (i >> 1) & 1, i & 1])).collect();
    let ff = write(dir.path(), "ff.json", &json!({"group": "vec:2^6", "support": ff}));
    let spec = write(dir.path(), "spec.json", &json!({"pipeline": "sample", "trials": 3, "group": "zN:31"}));
    let half: String = format!("{:?}", (0..100).step_by(2).collect::<Vec<_>>());
    let low: String = format!("{:?}", (0..46).collect::<Vec<_>>());
    let cases: Vec<Vec<&str>> = vec![
        vec!["fourier", "--group", "zN:12", "--set", "[0,1,5]", "--theta", "0.2"],
        vec!["fourier", "--group", "vec:3^2", "--values", "[1,0,[0,1],2,0,0,0,0,1]", "--direct"],
        vec!["bohr", "--group", "zN:13", "--frequencies", "[1]", "--delta", "1", "--materialize", "--find-ap", "--chang", "tau=0.5"],
        vec!["bohr", "--group", "vec:2^3", "--frequencies", "[[1,0,0]]", "--delta", "1", "--find-ap"],
        vec!["bohr", "--descriptor", r#"{"group":"zN:31","frequencies":[1,30,4],"delta":0.8}"#, "--chang", "tau=0.3"],
        vec!["sample", "--group", "zN:64", "--A", "[0,1,2,3,5,8]", "--B", "[0,2,4]", "--epsilon", "0.3"],
        vec!["sample", "--group", "zN:64", "--A", "[0,1,2,3,5,8]", "--B", "[0,2,4]", "--epsilon", "0.3", "--physical"],
        vec!["sample", "--group", "zN:64", "--A", "[0,1,2,3,5,8]", "--B", "[0,2,4]", "--epsilon", "0.3", "--trials", "20"],
        vec!["embed", "--A", "[1,5,9,30,31]", "--B", "[2,3,7,100]"],
        vec!["find-ap", "doubling", "--A", "[0,1,2,3,4,5,6,7,8,9]", "--B", "[0,2,4,6]"],
        vec!["find-ap", "dense", "--N", "20", "--A", "[1,2,3,5,8,13]", "--B", "[2,4,6,8,10,12,14]"],
        vec!["find-ap", "ff", "--A", &ff, "--B", &ff],
        vec!["find-ap", "ff", "--A", &ff, "--B", &ff, "--variant", "subset", "--codim", "2"],
        vec!["almost-periods", "--group", "zN:101", "--A", &half, "--B", &low, "--epsilon", "0.4", "--oracle"],
        vec!["bogolyubov", "--group", "zN:101", "--A", &low],
        vec!["oracle", "longest-ap", "--group", "zN:13", "--set", "[0,5,10,2]"],
        vec!["oracle", "periods", "--group", "zN:5", "--A", "[0,1]", "--B", "[0,1]", "--epsilon", "0.5"],
        vec!["bounds", "--alpha", "0.5,0.25", "--beta", "0.5", "--N", "1e30", "--doubling", "2:2"],
        vec!["experiment", "--spec", &spec],
        vec!["bohr", "--group", "zN:13", "--delta", "3"],
        vec!["frobnicate"],
    ];
    let mut commands = BTreeSet::new();
    for args in &cases {
        let r = run(args);
        assert_valid(&s, &r.json);
        if let Some(c) = r.json["manifest"]["command"].as_str() {
            commands.insert(c.to_string());
        }
        if r.json.get("error").is_none() {
            assert_eq!(r.code, 0, "{args:?}: {}", r.json);
        }
    }
    assert_eq!(commands.len(), 13, "{commands:?}");
}

#[test]
fn reruns_are_identical_except_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "spec.json",
        &json!({"pipeline": "dense", "trials": 6, "N": 40, "seed": 11}),
    );
    let argsets: Vec<Vec<&str>> = vec![
        vec!["experiment", "--spec", &spec],
        vec!["almost-periods", "--group", "zN:97", "--A", "[0,3,7,12,40,41,60]", "--B", "[1,2,3,50]", "--epsilon", "0.4", "--seed", "5"],
        vec!["find-ap", "doubling", "--A", "[0,1,2,3,5,8,13,21,34]", "--B", "[0,1,2,3,4,5,6]", "--seed", "2"],
    ];
    for args in argsets {
        let first = without_timestamp(run(&args).json);
        let again = without_timestamp(run(&args).json);
        let serial = without_timestamp(sumsetlab(&args, &[("SUMSETLAB_THREADS", "1")]).json);
        assert_eq!(serde_json::to_string(&first).unwrap(), serde_json::to_string(&again).unwrap(), "{args:?}");
        assert_eq!(serde_json::to_string(&first).unwrap(), serde_json::to_string(&serial).unwrap(), "{args:?}");
    }
}

#[test]
fn usage_and_input_errors_exit_one() {
    for args in [
        vec!["frobnicate"],
        vec!["bounds", "--alpha", "0.5"],
        vec!["oracle", "longest-ap", "--set", "[1,2"],
        vec!["oracle", "longest-ap", "--set", "/nonexistent/set.json"],
        vec!["bogolyubov", "--A", "[1,2]"],
        vec!["fourier", "--group", "zN:5", "--set", "[0]", "--constant", "C_p=0"],
        vec!["fourier", "--group", "zN:5", "--set", "[0]", "--constant", "C_typo=1"],
        vec!["bohr", "--group", "zN:12", "--frequencies", "[1]", "--delta", "0.5", "--find-ap"],
    ] {
        let r = run(&args);
        assert_eq!(r.code, 1, "{args:?}: {}", r.json);
        assert_eq!(r.json["error"]["exit_code"], json!(1));
        assert!(r.json["error"]["message"].as_str().is_some_and(|m| !m.is_empty()));
    }
    let r = sumsetlab(&["oracle", "longest-ap", "--set", "[1]"], &[("SUMSETLAB_THREADS", "0")]);
    assert_eq!(r.code, 1);
    assert_eq!(r.json["error"]["kind"], json!("usage"));
}

#[test]
fn verification_failure_exits_two() {
    // one sampled character cannot approximate this convolution to 5%
    let r = run(&[
        "sample", "--group", "zN:64", "--A", "[0,1,2,3,5,8,13]", "--B", "[0,2,4,9]", "--epsilon", "0.05", "--constant",
        "C_sample=0.0001",
    ]);
    assert_eq!(r.code, 2, "{}", r.json);
    assert_eq!(r.json["verified"], json!(false));
    assert_eq!(r.json["report"]["sample"]["k"], json!(1));
}

#[test]
fn constants_files_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "c.json", &json!({"C_sample": 8, "retries": 1}));
    let r = run(&["oracle", "longest-ap", "--set", "[1,2]", "--constants", &file]);
    assert_eq!(r.json["manifest"]["constants"]["C_sample"], json!(8.0));
    assert_eq!(r.json["manifest"]["constants"]["retries"], json!(1));
    assert_eq!(r.json["manifest"]["constants"]["C_p"], json!(1.0));
    let r = run(&["oracle", "longest-ap", "--set", "[1,2]", "--constants", &file, "--constant", "C_sample=2"]);
    assert_eq!(r.json["manifest"]["constants"]["C_sample"], json!(2.0));

    let missing = dir.path().join("missing.json");
    let missing = missing.to_str().unwrap();
    let r = run(&["oracle", "longest-ap", "--set", "[1,2]", "--constants", missing, "--defaults"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.json["manifest"]["constants"]["C_sample"], json!(4.0));
    let r = run(&["oracle", "longest-ap", "--set", "[1,2]", "--constants", missing]);
    assert_eq!(r.code, 1);

    let bad = write(dir.path(), "bad.json", &json!({"C_bohr_radius": -1}));
    let r = run(&["oracle", "longest-ap", "--set", "[1,2]", "--constants", &bad]);
    assert_eq!(r.code, 1);
    assert_eq!(r.json["error"]["kind"], json!("invalid_parameter"));
}

#[test]
fn empty_batch() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "spec.json", &json!({"pipeline": "almost_periods", "group": "zN:199", "trials": 0}));
    let r = run(&["experiment", "--spec", &spec, "--plot", dir.path().join("p.svg").to_str().unwrap()]);
    assert_eq!(r.code, 0);
    let agg = &r.json["report"]["aggregate"];
    assert_eq!(agg["trials"], json!(0));
    assert_eq!(agg["success_rate"], Value::Null);
    assert_eq!(agg["values"], Value::Null);
    assert_eq!(r.json["report"]["trials"], json!([]));
    assert!(!dir.path().join("p.svg").exists());
}

#[test]
fn almost_period_batch_on_199() {
    let dir = tempfile::tempdir().unwrap();
    let spec_value = json!({
        "pipeline": "almost_periods", "trials": 100, "seed": 3, "group": "zN:199",
        "density": 0.5, "p": 2, "epsilon": 0.4, "oracle": true
    });
    assert_valid(&schema("batch_spec.schema.json"), &spec_value);
    let spec = write(dir.path(), "spec.json", &spec_value);
    let plot = dir.path().join("ap.svg");
    let args = ["experiment", "--spec", &spec, "--plot", plot.to_str().unwrap()];
    let r = run(&args);
    assert_eq!(r.code, 0);
    let agg = &r.json["report"]["aggregate"];
    assert_eq!(agg["trials"], json!(100));
    assert!(agg["success_rate"].as_f64().unwrap() >= 0.9);
    assert_eq!(agg["oracle"]["dominated"], json!(true));
    assert_eq!(agg["plot"], json!(plot.to_str().unwrap()));
    let svg = std::fs::read_to_string(&plot).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("</svg>"));
    // per-trial seeds are derived, so trials differ yet reruns agree
    let seeds: BTreeSet<u64> = r.json["report"]["trials"].as_array().unwrap().iter().map(|t| t["seed"].as_u64().unwrap()).collect();
    assert_eq!(seeds.len(), 100);
    let again = run(&args);
    assert_eq!(r.json["report"]["aggregate"], again.json["report"]["aggregate"]);
}

#[test]
fn trials_flag_overrides_spec() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "spec.json", &json!({"pipeline": "bogolyubov", "group": "zN:31", "trials": 50, "density": 0.4}));
    let r = run(&["experiment", "--spec", &spec, "--trials", "4", "--seed", "9"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.json["report"]["aggregate"]["trials"], json!(4));
    assert_eq!(r.json["manifest"]["seed"], json!(9));
    let bad = write(dir.path(), "bad.json", &json!({"pipeline": "bogolyubov", "trials": 2}));
    assert_eq!(run(&["experiment", "--spec", &bad]).code, 1);
    let typo = write(dir.path(), "typo.json", &json!({"pipeline": "dense", "N": 5, "trails": 2}));
    assert_eq!(run(&["experiment", "--spec", &typo]).code, 1);
}

#[test]
fn json_only_silences_stderr() {
    let r = run(&["oracle", "longest-ap", "--set", "[1,3,5]", "--json-only"]);
    assert!(r.stderr.is_empty());
}
