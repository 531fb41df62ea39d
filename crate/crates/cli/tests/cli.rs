use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_incidence")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn system(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn compile_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let sys = system(dir.path(), "sys.poly", "x1^2 - 2\n");
    let cfg = dir.path().join("cfg.json");
    let cfg_s = cfg.to_str().unwrap();
    let o = run(&["compile", "--input", &sys, "--char", "7", "--find-witness", "--seed", "1", "--out", cfg_s]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(cfg.exists());
    let o = run(&["verify", "--config", cfg_s]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));

    // a doctored free-variable total fails the audit
    let mut v: serde_json::Value = serde_json::from_slice(&fs::read(&cfg).unwrap()).unwrap();
    let s = v["free_count"].as_u64().unwrap();
    v["free_count"] = (s + 1).into();
    fs::write(&cfg, serde_json::to_vec(&v).unwrap()).unwrap();
    let o = run(&["--json", "verify", "--config", cfg_s]);
    assert_eq!(code(&o), 1);
    let out: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(out["pass"], false);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let sys = system(dir.path(), "sys.poly", "x1^2 - 2\n");
    assert_eq!(code(&run(&["compile", "--input", &sys, "--char", "4", "--witness", "x1=1"])), 2);
    assert_eq!(code(&run(&["compile", "--input", &sys, "--char", "7", "--witness", "x1=2"])), 3);
    assert_eq!(code(&run(&["compile", "--input", &sys, "--char", "7", "--witness", "x2=2"])), 2);
    assert_eq!(code(&run(&["compile", "--input", "/nonexistent/sys.poly", "--char", "7", "--find-witness"])), 2);
    assert_eq!(code(&run(&["oracle", "--gadget", "spline", "--char", "5"])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
    let none = system(dir.path(), "none.poly", "x1^2 - 3\n");
    assert_eq!(code(&run(&["compile", "--input", &none, "--char", "7", "--find-witness"])), 3);
}

#[test]
fn reproducible_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let sys = system(dir.path(), "sys.poly", "x1*x2 - 1\n");
    let mut outs = Vec::new();
    for r in 0..2 {
        let cfg = dir.path().join(format!("c{r}.json"));
        let svg = dir.path().join(format!("c{r}.svg"));
        let o = run(&[
            "compile", "--input", &sys, "--char", "5", "--witness", "x1=2, x2=3", "--seed", "9",
            "--out", cfg.to_str().unwrap(), "--svg", svg.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0);
        outs.push((fs::read(cfg).unwrap(), fs::read(svg).unwrap()));
    }
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn json_modes() {
    let dir = tempfile::tempdir().unwrap();
    let sys = system(dir.path(), "sys.poly", "x1*x2 - 1\n");
    let o = run(&["decompose", "--input", &sys, "--json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["n"], 2);
    assert!(v["equations"].as_array().unwrap().iter().any(|e| e.as_str().unwrap().starts_with("zero")));

    let o = run(&["--json", "oracle", "--gadget", "generic_addition", "--char", "7", "--inputs", "2,3"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["results"][0]["achieved"], serde_json::json!(["5"]));

    let o = run(&["--json", "soundness", "--input", &sys, "--char", "5"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["solutions"], 4);
    assert_eq!(v["realized"], 4);

    let o = run(&["--json", "compile", "--input", &sys, "--char", "2", "--witness", "x1=2"]);
    assert_eq!(code(&o), 2);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["exit"], 2);
}

#[test]
fn render_initial_framing() {
    let dir = tempfile::tempdir().unwrap();
    let sys = system(dir.path(), "empty.poly", "");
    let cfg = dir.path().join("a.json");
    let svg = dir.path().join("a.svg");
    let o = run(&["compile", "--input", &sys, "--out", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let o = run(&["render", "--config", cfg.to_str().unwrap(), "--out", svg.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(svg).unwrap();
    assert!(text.starts_with("<?xml") && text.contains("<circle"));
}
