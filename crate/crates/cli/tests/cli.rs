use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_cavatten"));
    c.env_remove("CAVATTEN_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn config(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn field(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| {
            let mut it = l.split_whitespace();
            (it.next() == Some(key)).then(|| it.next().unwrap().parse().unwrap())
        })
        .unwrap_or_else(|| panic!("no `{key}` in\n{text}"))
}

#[test]
fn occupation_at_20_mk() {
    let o = run(&["thermal", "occupation", "--f-ghz", "7.5", "--t-mk", "20"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let n = field(&stdout(&o), "n_bar");
    assert!((1.52e-8..1.53e-8).contains(&n), "{n}");
}

#[test]
fn json_and_text_agree() {
    let args = ["hybridize", "inverse", "--f-minus-ghz", "7.573", "--f-plus-ghz", "7.719", "--p", "0.79"];
    let text = stdout(&run(&args));
    let mut json_args = vec!["--json"];
    json_args.extend(args);
    let json: serde_json::Value = serde_json::from_str(&stdout(&run(&json_args))).unwrap();
    for key in ["f_a0", "f_b0", "detuning", "g"] {
        assert_eq!(field(&text, key), json[key].as_f64().unwrap(), "{key}");
    }
    assert!((json["g"].as_f64().unwrap() - 59.5).abs() < 0.5);
}

#[test]
fn reproduce_table3_passes() {
    let o = run(&["reproduce", "--suite", "table3"]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("[PASS]"));
}

#[test]
fn unknown_suite_is_rejected() {
    let o = run(&["reproduce", "--suite", "nope"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn simulation_requires_seed() {
    let o = run(&["simulate", "injection", "--config", &config("copper.json"), "--n-add", "0,1e-3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("seed"));
}

#[test]
fn seed_from_environment() {
    let o = bin()
        .env("CAVATTEN_SEED", "3")
        .args(["simulate", "trace", "--kind", "t1", "--rate-per-s", "1e4", "--t-max-us", "300", "--shots", "100"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("time_us,population,sigma"));
}

fn injection(dir: &Path) -> Vec<u8> {
    let out = dir.to_string_lossy();
    let cfg = config("copper.json");
    let o = run(&[
        "--seed", "42", "--out", &out, "simulate", "injection", "--config", &cfg, "--n-max", "0.01", "--points", "8",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    std::fs::read(dir.join("sweep.csv")).unwrap()
}

#[test]
fn same_seed_gives_identical_sweep() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(injection(a.path()), injection(b.path()));
}

#[test]
fn sweep_then_extract() {
    let dir = tempfile::tempdir().unwrap();
    injection(dir.path());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 42);
    assert!(manifest["config"]["transmon"].is_object());
    let outputs: Vec<PathBuf> = serde_json::from_value(manifest["outputs"].clone()).unwrap();
    assert!(outputs.iter().all(|p| p.exists()));
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("sweep.json")).unwrap()).unwrap();
    assert_eq!(sidecar["repeats"], 10);

    let csv = dir.path().join("sweep.csv");
    let o = run(&[
        "--seed", "42", "fit", "nth", "--input", &csv.to_string_lossy(), "--kappa-mhz", "8.0", "--chi-mhz", "1.1",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let (lo, hi) = (field(&text, "n_th_ci_low"), field(&text, "n_th_ci_high"));
    assert!(lo <= 2e-4 && 2e-4 <= hi, "[{lo}, {hi}]");
}

#[test]
fn bad_config_reports_path() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    let text = std::fs::read_to_string(config("copper.json")).unwrap().replace("\"kappa_i_mhz\"", "\"kappa_int_mhz\"");
    std::fs::write(&p, text).unwrap();
    let o = run(&["--seed", "1", "simulate", "injection", "--config", &p.to_string_lossy(), "--n-add", "0,1e-3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("readout.kappa_int_mhz"), "{}", stderr(&o));
}

#[test]
fn flat_sweep_is_indeterminate() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("flat.csv");
    let mut csv = String::from("axis,value,t1_us,t1_err,t2e_us,t2e_err,tphi_us\n");
    for (i, t2) in [150.0, 151.0, 149.5, 150.5].iter().enumerate() {
        csv.push_str(&format!("n_add,{},100,1,{t2},1,0\n", i as f64 * 1e-3));
    }
    std::fs::write(&p, csv).unwrap();
    let o = run(&[
        "fit", "nth", "--input", &p.to_string_lossy(), "--kappa-mhz", "8", "--chi-mhz", "1.1", "--bootstrap", "0",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}{}", stdout(&o), stderr(&o));
}

#[test]
fn report_from_input_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("rows.json");
    let cfg = std::fs::read_to_string(config("copper.json")).unwrap();
    std::fs::write(
        &p,
        format!(r#"[{{"label": "Cu", "config": {cfg}, "t1_us": 100, "t1_err_us": 5, "t2e_us": 190, "t2e_err_us": 10}}]"#),
    )
    .unwrap();
    let o = run(&["--json", "report", "--input", &p.to_string_lossy()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let json: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(json["rows"][0]["ratio"], 0.95);
    assert!(json["rows"][0]["n_th_bound"].as_f64().unwrap() > 0.0);
}

#[test]
fn out_of_domain_input_exits_1() {
    let o = run(&["thermal", "temperature", "--f-ghz", "7.5", "--n=-1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error:"));
}

#[test]
fn usage_error_exits_1() {
    assert_eq!(run(&["thermal", "occupation", "--f-ghz", "7.5"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn bootstrap_requires_seed() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    injection(dir.path());
    let o = run(&["fit", "nth", "--input", &csv.to_string_lossy(), "--kappa-mhz", "8", "--chi-mhz", "1.1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("seed"));
}
