use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_flatlap"))
}

fn surface(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("surfaces").join(name)
}

fn scratch(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("flatlap-cli-test-{}-{tag}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn validate_torus_reports_no_cones() {
    let out = scratch("validate");
    let o = bin().args(["validate", "--surface"]).arg(surface("torus.surf")).arg("--out").arg(&out).output().unwrap();
    assert!(o.status.success());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("0 cone points, χ=0"), "{stdout}");
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("validate.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["seed"], 42);
    assert!(json["version"].as_str().unwrap().starts_with('v') || !json["version"].as_str().unwrap().is_empty());
}

#[test]
fn converge_is_deterministic() {
    let run = |tag: &str| {
        let out = scratch(tag);
        let o = bin()
            .args(["converge", "--surface"])
            .arg(surface("rectangle_2x1.surf"))
            .args(["--ns", "4,8,16", "--k", "6", "--reference", "rectangle:2,1", "--jobs", "2", "--out"])
            .arg(&out)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        (std::fs::read(out.join("converge.csv")).unwrap(), std::fs::read(out.join("converge.json")).unwrap())
    };
    let (a, ja) = run("det-a");
    let (b, jb) = run("det-b");
    assert_eq!(a, b);
    // sidecars differ only in the output directory echo
    let strip = |j: Vec<u8>| {
        let mut v: serde_json::Value = serde_json::from_slice(&j).unwrap();
        v["config"]["out"] = serde_json::Value::Null;
        v
    };
    assert_eq!(strip(ja), strip(jb));
    let csv = String::from_utf8(a).unwrap();
    assert!(csv.starts_with("n,i,lambda_n,lambda_ref,abs_err,order,flagged\n"));
    let err = |n: &str, i: &str| -> f64 {
        csv.lines().find(|l| l.starts_with(&format!("{n},{i},"))).unwrap().split(',').nth(4).unwrap().parse().unwrap()
    };
    assert!(err("16", "2") < err("8", "2") && err("8", "2") < err("4", "2"));
}

#[test]
fn flow_reports_bound() {
    let out = scratch("flow");
    let o = bin().args(["flow", "--n", "256", "--out"]).arg(&out).output().unwrap();
    assert!(o.status.success());
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("flow.json")).unwrap()).unwrap();
    assert!(json["summary"]["divergence_defect"].as_f64().unwrap() <= 1e-12);
    assert!(json["summary"]["energy"].as_f64().unwrap() <= json["summary"]["energy_bound"].as_f64().unwrap());
}

#[test]
fn exit_codes() {
    let out = scratch("codes");
    let bad = out.join("bad.surf");
    std::fs::write(&bad, "squares: 1\nglue: (0,N) (0,E) translation\n").unwrap();
    let o = bin().args(["validate", "--surface"]).arg(&bad).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let o = bin().args(["validate", "--surface", "/no/such/file.surf", "--out"]).arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(3));
    let o = bin().args(["converge", "--ns", "16,8", "--out"]).arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn remaining_commands_run() {
    let out = scratch("misc");
    let cases: Vec<Vec<String>> = vec![
        vec!["spectrum".into(), "--surface".into(), surface("l_shape.surf").display().to_string(), "--n".into(), "8".into()],
        vec!["eigvec".into(), "--surface".into(), surface("rectangle_1x1.surf").display().to_string(), "--reference".into(), "rectangle:1,1".into(), "--ns".into(), "4,8".into()],
        vec!["interp-check".into(), "--surface".into(), surface("pillowcase.surf").display().to_string(), "--ns".into(), "4".into(), "--count".into(), "3".into()],
        vec!["consistency".into(), "--surface".into(), surface("rectangle_1x1.surf").display().to_string(), "--reference".into(), "rectangle:1,1".into(), "--index".into(), "3".into(), "--ns".into(), "8,16".into()],
        vec!["harnack".into(), "--surface".into(), surface("l_shape.surf").display().to_string(), "--ns".into(), "4,8".into()],
        vec!["green".into(), "--radius".into(), "8".into()],
        vec!["green".into(), "--radius".into(), "3".into(), "--point".into(), "0,0".into()],
        vec!["barrier".into(), "--surface".into(), surface("l_shape.surf").display().to_string(), "--n".into(), "8".into()],
        vec!["crsf-check".into(), "--count".into(), "20".into()],
    ];
    for args in cases {
        let o = bin().args(&args).arg("--out").arg(&out).output().unwrap();
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        let name = &args[0];
        assert!(out.join(format!("{name}.csv")).exists());
        assert!(out.join(format!("{name}.json")).exists());
    }
    let green = std::fs::read_to_string(out.join("green.csv")).unwrap();
    assert!(green.starts_with("a,b,value\n"));
}

#[test]
fn config_file_is_used() {
    let out = scratch("config");
    let conf = out.join("run.toml");
    std::fs::write(&conf, format!("n = 64\nout = {:?}\n", out.display().to_string())).unwrap();
    let o = bin().args(["flow", "--config"]).arg(&conf).output().unwrap();
    assert!(o.status.success());
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("flow.json")).unwrap()).unwrap();
    assert_eq!(json["summary"]["n"], 64);
}
