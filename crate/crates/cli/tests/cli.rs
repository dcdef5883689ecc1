use serde_json::Value;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn swm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swm"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn swm")
}

fn ok(dir: &Path, args: &[&str]) {
    let o = swm(dir, args);
    assert!(
        o.status.success(),
        "{args:?}: status {:?}\n{}",
        o.status.code(),
        String::from_utf8_lossy(&o.stderr)
    );
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn schema(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas").join(name)
}

fn validate(json: &Path, schema_name: &str) -> Value {
    let schema: Value = serde_json::from_str(&fs::read_to_string(schema(schema_name)).unwrap()).unwrap();
    let doc: Value = serde_json::from_str(&fs::read_to_string(json).unwrap()).unwrap();
    let v = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = v.iter_errors(&doc).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{}: {errors:?}", json.display());
    doc
}

#[test]
fn mfun_ray_has_forty_rows() {
    let d = TempDir::new().unwrap();
    ok(d.path(), &["mfun", "--model", "bessel:l=0", "--zgrid", "ray:pi/2,1,1e4,40"]);
    let r = rows(&d.path().join("mfun.csv"));
    assert_eq!(r[0], ["re_z", "im_z", "re_M", "im_M"]);
    assert_eq!(r.len(), 41);
}

#[test]
fn mfun_below_spectrum_and_gauge() {
    let d = TempDir::new().unwrap();
    ok(d.path(), &["mfun", "--model", "bessel:l=0", "--zgrid", "ray:pi,1,16,5", "--out", "m.csv"]);
    let r = rows(&d.path().join("m.csv"));
    let row = r.iter().find(|r| r[0] == "-4").expect("row for z = -4");
    assert!((row[2].parse::<f64>().unwrap() + 2.0).abs() < 1e-9);

    ok(d.path(), &["mfun", "--model", "bessel:l=0", "--zgrid", "list:-1,0;-3,2", "--gauge", "g=lambda", "--out", "g.csv"]);
    let r = rows(&d.path().join("g.csv"));
    // int_0^inf e^{-s^2} 2 s^2 / (pi (s^2 + 1)) ds by the midpoint rule
    let n = 200_000;
    let h = 12.0 / n as f64;
    let want: f64 = (0..n)
        .map(|k| {
            let s = (k as f64 + 0.5) * h;
            h * 2.0 * s * s * (-s * s).exp() / (PI * (s * s + 1.0))
        })
        .sum();
    let got: f64 = r[1][2].parse().unwrap();
    assert!((got - want).abs() < 1e-6, "{got} vs {want}");
    assert!(r[2][3].parse::<f64>().unwrap() > 0.0);
}

#[test]
fn eig_bessel_l1() {
    let d = TempDir::new().unwrap();
    ok(d.path(), &["eig", "--model", "bessel:l=1", "--c", "1", "--count", "2"]);
    let r = rows(&d.path().join("eig.csv"));
    assert_eq!(r[0], ["j", "mu", "nu"]);
    // first roots of tan x = x
    for (row, x) in r[1..].iter().zip([4.493409457909064f64, 7.725251836937707]) {
        let mu: f64 = row[1].parse().unwrap();
        assert!((mu - x * x).abs() < 1e-6, "{mu}");
    }
}

#[test]
fn measure_density_and_atoms() {
    let d = TempDir::new().unwrap();
    ok(d.path(), &["measure", "--model", "bessel:l=0", "--window", "0,50"]);
    let r = rows(&d.path().join("measure.csv"));
    assert_eq!(r[0], ["lambda", "density"]);
    let row = r.iter().find(|r| r[0] == "4").unwrap();
    assert!((row[1].parse::<f64>().unwrap() - 2.0 / PI).abs() < 1e-3);
    validate(&d.path().join("measure.atoms.json"), "measure_atoms.schema.json");

    ok(d.path(), &["measure", "--model", "soliton:A=1,v1=1", "--window", "-3,3", "--npoints", "61", "--out", "s.csv"]);
    let doc = validate(&d.path().join("s.atoms.json"), "measure_atoms.schema.json");
    let atoms = doc["atoms"].as_array().unwrap();
    assert_eq!(atoms.len(), 1);
    assert!((atoms[0]["lambda"].as_f64().unwrap() + 1.0).abs() < 1e-8);
    assert!((atoms[0]["mass"].as_f64().unwrap() - 8.0).abs() < 1e-6);
}

#[test]
fn config_file_with_overrides() {
    let d = TempDir::new().unwrap();
    fs::write(d.path().join("run.cfg"), "# bessel run\nmodel = bessel:l=1\nzgrid = ray:pi/2,1,10,7\nout = a.csv\n").unwrap();
    ok(d.path(), &["mfun", "--config", "run.cfg"]);
    assert_eq!(rows(&d.path().join("a.csv")).len(), 8);
    ok(d.path(), &["mfun", "--config", "run.cfg", "--zgrid", "ray:pi/2,1,10,3", "--set", "out=b.csv"]);
    assert_eq!(rows(&d.path().join("b.csv")).len(), 4);
}

#[test]
fn exit_codes() {
    let d = TempDir::new().unwrap();
    let code = |args: &[&str]| swm(d.path(), args).status.code();
    assert_eq!(code(&["mfun", "--model", "bessel:l=0"]), Some(2));
    assert_eq!(code(&["mfun", "--model", "airy", "--zgrid", "list:1,1"]), Some(2));
    assert_eq!(code(&["mfun", "--model", "bessel:l=0", "--zgrid", "list:1,1", "--set", "colour=red"]), Some(2));
    assert_eq!(code(&["mfun", "--model", "bessel:l=0", "--zgrid", "ray:1"]), Some(2));
    assert_eq!(code(&["mfun", "--model", "limitcircle:l=1", "--zgrid", "list:1,1"]), Some(4));
    assert_eq!(code(&["nevanlinna", "--model", "bessel:l=0", "--set", "window=0,1e4", "--set", "npoints=4"]), Some(2));
    assert_eq!(code(&["eig", "--model", "expr:-1/x^3", "--l", "0", "--count", "1"]), Some(3));
    let o = swm(d.path(), &["mfun", "--model", "limitcircle:l=1", "--zgrid", "list:1,1"]);
    let msg = String::from_utf8_lossy(&o.stderr);
    assert!(msg.contains("error[weyl]"), "{msg}");
    let o = Command::new(env!("CARGO_BIN_EXE_swm"))
        .args(["eig", "--model", "bessel:l=1"])
        .env("SWM_THREADS", "zero")
        .current_dir(d.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn deterministic_outputs() {
    let d = TempDir::new().unwrap();
    for out in ["n1.json", "n2.json"] {
        ok(d.path(), &["nevanlinna", "--model", "bessel:l=2", "--seed", "4", "--out", out]);
    }
    let a = fs::read(d.path().join("n1.json")).unwrap();
    assert_eq!(a, fs::read(d.path().join("n2.json")).unwrap());
    let doc = validate(&d.path().join("n1.json"), "nevanlinna.schema.json");
    assert_eq!(doc["kappa"], 1);
    assert_eq!(doc["k"], 1);

    let t = TempDir::new().unwrap();
    for (dir, threads) in [(d.path(), "1"), (t.path(), "2")] {
        let o = Command::new(env!("CARGO_BIN_EXE_swm"))
            .args(["measure", "--model", "bessel:l=1", "--window", "0,20", "--npoints", "41"])
            .env("SWM_THREADS", threads)
            .current_dir(dir)
            .output()
            .unwrap();
        assert!(o.status.success());
    }
    assert_eq!(
        fs::read(d.path().join("measure.csv")).unwrap(),
        fs::read(t.path().join("measure.csv")).unwrap()
    );
}

#[test]
fn bm_reports_validate() {
    let d = TempDir::new().unwrap();
    ok(d.path(), &["bm", "--pot0", "expr:2/x^2", "--pot1", "expr:2/x^2+1", "--l", "1", "--out", "shift.json"]);
    let doc = validate(&d.path().join("shift.json"), "bm.schema.json");
    assert_eq!(doc["verdict"], "inconsistent");
    assert!((doc["threshold"].as_f64().unwrap() + 0.8).abs() < 1e-12);
    ok(d.path(), &["bm", "--examples", "--out", "ex.json"]);
    let doc = validate(&d.path().join("ex.json"), "bm_examples.schema.json");
    for case in doc.as_array().unwrap() {
        assert_eq!(case["expected"], case["report"]["verdict"]);
    }
}

#[test]
fn transform_report_validates() {
    let d = TempDir::new().unwrap();
    ok(d.path(), &["transform", "--model", "bessel:l=0", "--f", "indicator:0,1", "--set", "roundtrip=false"]);
    let doc = validate(&d.path().join("transform.json"), "transform.schema.json");
    assert!(doc["round_trip"].is_null());
    assert!((doc["norm_squared"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(doc["parseval_error"].as_f64().unwrap() < 1e-4);
    let o = swm(d.path(), &["transform", "--wmax", "20", "--set", "roundtrip=false", "--out", "low.json"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!d.path().join("low.json").exists());
}

#[test]
fn golden_subset() {
    let d = TempDir::new().unwrap();
    let o = swm(d.path(), &["golden", "--only", "1,4", "--out", "g.json"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 2);
    let doc = validate(&d.path().join("g.json"), "golden.schema.json");
    assert_eq!(doc.as_array().unwrap().len(), 2);
    assert_eq!(swm(d.path(), &["golden", "--only", "13"]).status.code(), Some(2));
}
