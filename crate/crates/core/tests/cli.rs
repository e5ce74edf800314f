//! The command-line tool end to end: exit codes, outputs, reproducibility.

use std::path::Path;
use std::process::Command;

fn tool() -> Command {
    Command::new(env!("CARGO_BIN_EXE_biphoton"))
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("run.cfg");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn bands_at_default_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "trunc = 99\nband_k_points = 7\n");
    let out = dir.path().join("o");
    let st = tool()
        .args(["bands", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap()
        .status;
    assert!(st.success());
    let csv = std::fs::read_to_string(out.join("bands.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("K,phi0,band_index,ReE,ImE,P_bound"));
    assert_eq!(lines.count(), 7 * 3 * 99);
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("bands.json")).unwrap()).unwrap();
    let phase = &v["phases"][0];
    assert!(phase["bound_count_max"].as_u64().unwrap() >= 3);
    for b in phase["bands"].as_array().unwrap() {
        let lo = b["re_e_min"].as_f64().unwrap();
        let hi = b["re_e_max"].as_f64().unwrap();
        assert!(lo > 1.0 && hi < 4.0 && lo <= hi);
    }
}

#[test]
fn chern_report_has_integers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "trunc = 30\nn_k = 18\nn_phi = 18\ncurvature = true\n");
    let out = dir.path().join("o");
    let st = tool()
        .args(["chern", "--workers", "2", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap()
        .status;
    assert!(st.success());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("chern.json")).unwrap()).unwrap();
    let links: Vec<i64> = v["bands"]
        .as_array()
        .unwrap()
        .iter()
        .map(|b| b["link_chern"].as_i64().unwrap())
        .collect();
    assert_eq!(links, [-1, 2, -1]);
    assert_eq!(v["bands"][0]["L"].as_u64(), Some(30));
    let curv = std::fs::read_to_string(out.join("curvature.csv")).unwrap();
    assert_eq!(curv.lines().count(), 1 + 3 * 18 * 18);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let good = write_config(dir.path(), "n = 6\n");

    let st = tool().args(["", "--config"]).arg(&good).arg("--out").arg(&out).output().unwrap().status;
    assert_eq!(st.code(), Some(2));
    assert!(!out.exists());

    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "delta = 0.6\n").unwrap();
    let r = tool().args(["finite", "--config"]).arg(&bad).arg("--out").arg(&out).output().unwrap();
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("delta < 0.5 required"));
    assert!(!out.exists());

    let st = tool().args(["finite", "--config", "/nonexistent/cfg"]).output().unwrap().status;
    assert_eq!(st.code(), Some(4));

    // The output path is an existing file, so the directory cannot be created.
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let st = tool().args(["finite", "--config"]).arg(&good).arg("--out").arg(&blocker).output().unwrap().status;
    assert_eq!(st.code(), Some(4));

    // A DOS window that runs past the end of the array is reported as invalid.
    let dos = write_config(dir.path(), "n = 30\ndos_cells = 50\n");
    let st = tool().args(["dos", "--config"]).arg(&dos).arg("--out").arg(&out).output().unwrap().status;
    assert_eq!(st.code(), Some(2));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "n = 8, 10\nphi0 = 0, 2.617993877991494\ngeometry = uniform\n");
    let mut texts = Vec::new();
    for (i, workers) in ["1", "1", "3"].iter().enumerate() {
        let out = dir.path().join(format!("o{i}"));
        let st = tool()
            .args(["finite", "--workers", workers, "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap()
            .status;
        assert!(st.success());
        texts.push((
            std::fs::read(out.join("finite.json")).unwrap(),
            std::fs::read(out.join("finite_N10.csv")).unwrap(),
        ));
    }
    assert_eq!(texts[0], texts[1]);
    assert_eq!(texts[0], texts[2]);
}

#[test]
fn interface_and_critical_phase_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "n = 40\nsolver = dense\n");
    let out = dir.path().join("o");
    let st = tool().args(["interface", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap().status;
    assert!(st.success());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("interface.json")).unwrap()).unwrap();
    let states = v[0]["interface_states"].as_array().unwrap();
    assert_eq!(states[0]["kind"], "best_ansatz");
    for key in ["ReE", "ImE", "Γ", "T", "fidelity_vs_ansatz"] {
        assert!(states[0].get(key).is_some(), "missing {key}");
    }
    assert_eq!(v[0]["N"].as_u64(), Some(40));

    let st = tool().args(["critical-phase", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap().status;
    assert!(st.success());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("critical_phases.json")).unwrap()).unwrap();
    let r = v[0]["critical_phases"][0].as_f64().unwrap();
    assert!((r - 5.0 * std::f64::consts::PI / 6.0).abs() < 1e-10);
}
