use overlap_lab::svg::{render_svg, Curve, Style};
use overlap_lab::{execute, Command, ExperimentConfig, Summary};
use proptest::prelude::*;
use std::process::Command as Proc;

fn bin() -> Proc {
    let mut c = Proc::new(env!("CARGO_BIN_EXE_overlap-lab"));
    c.env_remove("OVERLAP_LAB_OUT");
    c
}

#[test]
fn fig2_portrait_has_four_dashed_and_four_solid_paths() {
    let dir = tempfile::tempdir().unwrap();
    let s = execute(Command::Fig2, &ExperimentConfig::default(), dir.path()).unwrap();
    assert!(s.verdict);
    let svg = std::fs::read_to_string(dir.path().join("portrait.svg")).unwrap();
    assert_eq!(svg.matches("<path").count(), 8);
    assert_eq!(svg.matches("stroke-dasharray").count(), 4);
    for i in 1..=4 {
        assert!(s.files.contains(&format!("trajectory_{i}.csv")));
        assert!(s.files.contains(&format!("minima_{i}.csv")));
    }
}

#[test]
fn gaussian_criterion_via_flags() {
    let dir = tempfile::tempdir().unwrap();
    let st = bin()
        .args(["criterion", "--activation", "gaussian", "--w", "1", "--x0", "1", "--out"])
        .arg(dir.path())
        .output()
        .unwrap()
        .status;
    assert_eq!(st.code(), Some(0));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("criterion.json")).unwrap()).unwrap();
    assert!((v["criterion"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert_eq!(v["verdict"], "Nondegenerate");
}

#[test]
fn failed_verification_exits_one_and_keeps_summary() {
    let dir = tempfile::tempdir().unwrap();
    let st = bin()
        .args(["criterion", "--activation", "power", "--q", "2", "--out"])
        .arg(dir.path())
        .output()
        .unwrap()
        .status;
    assert_eq!(st.code(), Some(1));
    let s: Summary = serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert!(!s.verdict);
    assert!(s.checks.iter().any(|c| !c.passed));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(bin().arg("--out").arg(dir.path()).output().unwrap().status.code(), Some(2));
    assert_eq!(bin().args(["two-point", "--out"]).arg(dir.path()).output().unwrap().status.code(), Some(2));
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"command\": \"nope\"}").unwrap();
    assert_eq!(bin().arg("--config").arg(&bad).output().unwrap().status.code(), Some(2));
}

#[test]
fn config_file_and_env_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let from_cfg = dir.path().join("from_cfg");
    std::fs::write(
        &cfg,
        format!(
            r#"{{"command":"recipe-a","theta0":{{"w":[1.0],"a":1.0}},"target":{{"w":[2.0],"a":3.0}},"out_dir":{:?}}}"#,
            from_cfg
        ),
    )
    .unwrap();
    assert_eq!(bin().arg("--config").arg(&cfg).output().unwrap().status.code(), Some(0));
    assert!(from_cfg.join("recipe_a.json").exists());
    let from_env = dir.path().join("from_env");
    let st = bin().arg("--config").arg(&cfg).env("OVERLAP_LAB_OUT", &from_env).output().unwrap().status;
    assert_eq!(st.code(), Some(0));
    assert!(from_env.join("summary.json").exists());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(from_env.join("recipe_a.json")).unwrap()).unwrap();
    assert_eq!(v["sample"]["x"][0].as_f64().unwrap(), 0.25);
}

#[test]
fn negative_numbers_parse() {
    let dir = tempfile::tempdir().unwrap();
    let st = bin()
        .args(["predict-limit", "--activation", "softplus", "--theta0", "-0.4,-1.2", "--sample", "-0.8,-0.5", "--out"])
        .arg(dir.path())
        .output()
        .unwrap()
        .status;
    assert_eq!(st.code(), Some(0));
}

#[test]
fn suite_writes_per_experiment_directories() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig { count: 4, seed: 3, ..Default::default() };
    let s = execute(Command::Suite, &cfg, dir.path()).unwrap();
    assert!(s.verdict, "{:#?}", s.checks.iter().filter(|c| !c.passed).collect::<Vec<_>>());
    for name in overlap_lab::suite::EXPERIMENTS {
        assert!(dir.path().join(name).join("summary.json").exists(), "{name}");
    }
}

proptest! {
    #[test]
    fn svg_is_deterministic_and_framed(pts in prop::collection::vec((-100.0..100.0f64, -100.0..100.0f64), 2..40)) {
        let curves = vec![Curve::new("c", pts.clone(), Style::Dashed)];
        let a = render_svg(&curves, "t").unwrap();
        prop_assert_eq!(&a, &render_svg(&curves, "t").unwrap());
        prop_assert_eq!(a.matches("<path").count(), 1);
        let vb: Vec<f64> = a.split("viewBox=\"").nth(1).unwrap().split('"').next().unwrap()
            .split(' ').map(|t| t.parse().unwrap()).collect();
        for (x, y) in pts {
            prop_assert!(x >= vb[0] && x <= vb[0] + vb[2]);
            prop_assert!(-y >= vb[1] && -y <= vb[1] + vb[3]);
        }
    }
}
