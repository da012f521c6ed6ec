//! End-to-end runs of the `hdg-interp` binary.

use std::process::Command;

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hdg-interp"))
}

#[test]
fn sweep_writes_csv_and_exits_zero() {
    let out = std::env::temp_dir().join("hdg_cli_sweep.csv");
    let status = binary()
        .args([
            "sweep",
            "--variant",
            "A",
            "--k",
            "0",
            "--levels",
            "2,4",
            "--dt-policy",
            "h",
            "--problem",
            "chaffee_infante",
            "--t",
            "0.25",
            "--out",
        ])
        .arg(&out)
        .env("HDG_THREADS", "2")
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    std::fs::remove_file(&out).ok();
    assert!(text.starts_with("variant,k,n,h,dt,err_q,"));
    assert_eq!(text.lines().count(), 3);
    assert!(!text.contains('\r'));
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = std::env::temp_dir();
    let cfg = dir.join("hdg_cli_config.txt");
    let out = dir.join("hdg_cli_config_sweep.csv");
    std::fs::write(
        &cfg,
        "# sweep defaults\nvariant = B\nk = 0\nlevels = 2\ndt_policy = h\nT = 0.25\n",
    )
    .unwrap();
    // Override the variant from the command line; take the rest from the file.
    let output = binary()
        .args(["sweep", "--variant", "A", "--config"])
        .arg(&cfg)
        .args(["--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    std::fs::remove_file(&cfg).ok();
    std::fs::remove_file(&out).ok();
    let row = text.lines().nth(1).unwrap();
    assert!(row.starts_with("A,0,2,"), "row: {row}");
}

#[test]
fn invalid_configuration_exits_nonzero() {
    // Variant C with k = 0 is undefined.
    let output = binary()
        .args(["sweep", "--variant", "C", "--k", "0", "--levels", "2"])
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("variant C"), "stderr: {stderr}");
}

#[test]
fn missing_required_flags_exit_nonzero() {
    let output = binary().args(["sweep", "--k", "1"]).output().unwrap();
    assert!(!output.status.success());
}

#[test]
fn mesh_file_flag_runs_single_level() {
    let dir = std::env::temp_dir();
    let mesh_path = dir.join("hdg_cli_mesh.txt");
    hdg_interp::Mesh::uniform_unit_square(2)
        .unwrap()
        .to_file(&mesh_path)
        .unwrap();
    let output = binary()
        .args([
            "sweep",
            "--variant",
            "A",
            "--k",
            "0",
            "--levels",
            "2",
            "--dt-policy",
            "fixed:0.125",
            "--t",
            "0.25",
            "--mesh-file",
        ])
        .arg(&mesh_path)
        .output()
        .unwrap();
    std::fs::remove_file(&mesh_path).ok();
    assert!(output.status.success());
}
