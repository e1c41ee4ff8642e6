use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn khessian(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_khessian"))
        .args(args)
        .env("KHESSIAN_OUTPUT_DIR", out)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn stationary_writes_profile_report_and_manifest() {
    let tmp = TempDir::new().unwrap();
    let o = khessian(
        tmp.path(),
        &[
            "stationary",
            "--n",
            "3",
            "--k",
            "2",
            "--radius",
            "1",
            "--cells",
            "512",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let dir = tmp.path().join("stationary_n3_k2_R1_m512");
    let csv = fs::read_to_string(dir.join("profile.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("r,theta"));
    assert_eq!(lines.count(), 513);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    for key in ["n", "k", "R", "R1", "sup_norm", "residual", "bounds"] {
        assert!(report.get(key).is_some(), "report lacks {key}");
    }
    assert!(report["residual"].as_f64().unwrap() <= 1e-6);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["cells"], 512);
    assert_eq!(manifest["exit_code"], 0);
}

#[test]
fn refinement_quarters_the_residual() {
    let tmp = TempDir::new().unwrap();
    let residual = |cells: &str| {
        let o = khessian(
            tmp.path(),
            &["stationary", "--cells", cells, "--tolerance", "1e-4"],
        );
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let path = tmp
            .path()
            .join(format!("stationary_n3_k2_R1_m{cells}/report.json"));
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
        v["residual"].as_f64().unwrap()
    };
    let ratio = residual("128") / residual("256");
    assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn usage_errors_exit_with_one() {
    let tmp = TempDir::new().unwrap();
    for args in [
        &["stationary", "--k", "1"][..],
        &["barenblatt", "--C", "-1"],
        &["evolve", "--init", "barenblatt:1"],
        &["evolve", "--init", "wobbly"],
        &["stationary", "--n", "2", "--k", "3"],
        &["no-such-command"],
    ] {
        let o = khessian(tmp.path(), args);
        assert_eq!(code(&o), 1, "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn missed_tolerance_exits_with_two() {
    let tmp = TempDir::new().unwrap();
    let o = khessian(
        tmp.path(),
        &["stationary", "--cells", "64", "--tolerance", "1e-12"],
    );
    assert_eq!(code(&o), 2);
    // outputs and manifest are still written
    let manifest = tmp.path().join("stationary_n3_k2_R1_m64/manifest.json");
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(manifest).unwrap()).unwrap();
    assert_eq!(v["exit_code"], 2);
}

#[test]
fn corrupt_config_names_line_and_field() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, "# stationary run\nn = 3\ncells = lots\n").unwrap();
    let o = khessian(tmp.path(), &["stationary", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let err = stderr(&o);
    assert!(err.contains("run.cfg:3") && err.contains("`cells`"), "{err}");

    fs::write(&cfg, "n = 3\nradius: 2\n").unwrap();
    let o = khessian(tmp.path(), &["stationary", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("run.cfg:2"), "{}", stderr(&o));

    fs::write(&cfg, "n = 3\nt_end = 5\n").unwrap();
    let o = khessian(tmp.path(), &["stationary", "--config", cfg.to_str().unwrap()]);
    assert!(stderr(&o).contains("unknown field `t_end`"), "{}", stderr(&o));
}

#[test]
fn flags_override_config_entries() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, "n = 4\nk = 3\ncells = 64\n").unwrap();
    let o = khessian(
        tmp.path(),
        &[
            "stationary",
            "--config",
            cfg.to_str().unwrap(),
            "--cells",
            "96",
            "--tolerance",
            "1e-3",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(tmp.path().join("stationary_n4_k3_R1_m96/profile.csv").exists());
}

#[test]
fn identical_config_gives_identical_bytes() {
    let tmp = TempDir::new().unwrap();
    let args = [
        "evolve",
        "--init",
        "perturbed:0.2",
        "--cells",
        "32",
        "--t-end",
        "5",
    ];
    let o = khessian(tmp.path(), &args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let dir = tmp.path().join("evolve_n3_k2_R1_m32_perturbed-0.2");
    let first = fs::read(dir.join("diagnostics.csv")).unwrap();

    // re-run from the written config rather than the original flags
    let o = khessian(
        tmp.path(),
        &["evolve", "--config", dir.join("config.txt").to_str().unwrap()],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(fs::read(dir.join("diagnostics.csv")).unwrap(), first);
    let header = String::from_utf8(first).unwrap();
    assert!(header.starts_with("t,sup_gap,mass,T_lower,T_upper\n"));
}

#[test]
fn evolve_from_file_data() {
    let tmp = TempDir::new().unwrap();
    let o = khessian(
        tmp.path(),
        &["stationary", "--cells", "32", "--tolerance", "1e-3"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let profile = tmp.path().join("stationary_n3_k2_R1_m32/profile.csv");
    let init = format!("file:{}", profile.display());
    let o = khessian(tmp.path(), &["evolve", "--init", &init, "--t-end", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = khessian(tmp.path(), &["evolve", "--init", &init, "--cells", "64"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn barenblatt_by_mass_reports_round_trip() {
    let tmp = TempDir::new().unwrap();
    let o = khessian(
        tmp.path(),
        &[
            "barenblatt",
            "--mass",
            "5",
            "--quad-points",
            "20000",
            "--samples",
            "11",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let dir = fs::read_dir(tmp.path()).unwrap().next().unwrap().unwrap().path();
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert!((report["M"].as_f64().unwrap() / 5.0 - 1.0).abs() < 1e-12);
    assert!(report["mass_round_trip"].as_f64().unwrap() < 1e-6);
    let csv = fs::read_to_string(dir.join("profile.csv")).unwrap();
    assert!(csv.starts_with("t,r,u\n"));
    assert_eq!(csv.lines().count(), 1 + 3 * 11);
}

#[test]
fn verify_all_fast_passes() {
    let tmp = TempDir::new().unwrap();
    let o = khessian(tmp.path(), &["verify-all", "--fast", "--jobs", "2"]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 0, "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("criterion")).count(), 11);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("verify_fast/manifest.json")).unwrap())
            .unwrap();
    assert!(!manifest["notes"].as_array().unwrap().is_empty());
}
