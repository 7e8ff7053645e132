use std::path::Path;
use std::process::{Command, Output};

fn gkdv(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gkdv"))
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .env_remove("GKDV_WORKERS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn print_defaults_is_a_loadable_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = gkdv(dir.path(), &["print-defaults"]);
    assert_eq!(code(&out), 0);
    let cfg = dir.path().join("defaults.toml");
    std::fs::write(&cfg, &out.stdout).unwrap();
    let again = gkdv(
        dir.path(),
        &["identities", "--config", cfg.to_str().unwrap(), "--set", "identities.ps=[2.0]"],
    );
    assert_eq!(code(&again), 0, "{}", String::from_utf8_lossy(&again.stderr));
}

#[test]
fn identities_pass_and_embed_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = gkdv(dir.path(), &["identities", "--set", "identities.ps=[2.0, 3.0]"]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(dir.path().join("identities.csv")).unwrap();
    assert!(text.starts_with("# gkdv identities\n# mollifier:"));
    assert!(text.contains("# ps = [2.0, 3.0]"));
    let rows = text.lines().filter(|l| !l.starts_with('#')).count();
    assert!(rows > 20);
    assert!(!text.contains(",false"));
}

#[test]
fn malformed_config_exits_2_and_names_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[jost]\nlamda_im = 2.0\n").unwrap();
    let out = gkdv(dir.path(), &["jost", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("lamda_im"));

    let out = gkdv(dir.path(), &["evans-scan", "--set", "evans_scan.p=5.0"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn bad_worker_env_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_gkdv"))
        .args(["jost", "--out-dir"])
        .arg(dir.path())
        .env("GKDV_WORKERS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn blowup_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    // A large bump at p = 4.5 with a coarse step runs away.
    let out = gkdv(
        dir.path(),
        &[
            "evolve",
            "--set",
            "evolve.solver.p=4.5",
            "--set",
            "evolve.amplitude=6.0",
            "--set",
            "evolve.solver.dt=0.05",
        ],
    );
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn evolve_outputs_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["evolve", "--set", "evolve.amplitude=0.01", "--set", "evolve.solver.t_end=1.0"];
    assert_eq!(code(&gkdv(a.path(), &args)), 0);
    assert_eq!(code(&gkdv(b.path(), &args)), 0);
    for name in ["trajectory.csv", "final.snap", "final.snap.toml"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name} differs");
    }
    assert_eq!(std::fs::metadata(a.path().join("final.snap")).unwrap().len(), 32 + 8 * 1024);
}

#[test]
fn sequential_and_parallel_scans_agree() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["evans-scan", "--set", "evans_scan.points=24"];
    assert_eq!(code(&gkdv(a.path(), &args)), 0);
    let mut seq = args.to_vec();
    seq.push("--sequential");
    assert_eq!(code(&gkdv(b.path(), &seq)), 0);
    let x = std::fs::read_to_string(a.path().join("evans_scan.csv")).unwrap();
    let y = std::fs::read_to_string(b.path().join("evans_scan.csv")).unwrap();
    assert_eq!(x, y);
}

#[test]
fn jost_reports_wronskian_identity() {
    let dir = tempfile::tempdir().unwrap();
    let out = gkdv(dir.path(), &["jost", "--set", "jost.lambda_im=1.0", "--workers", "2"]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(dir.path().join("jost.csv")).unwrap();
    assert!(text.contains("relative residual"));
    assert!(text.lines().any(|l| l.starts_with("x,re_M1")));
}

#[test]
fn unperturbed_stability_run_stays_on_the_soliton() {
    let dir = tempfile::tempdir().unwrap();
    let out = gkdv(
        dir.path(),
        &[
            "stability-run",
            "--set",
            "stability.delta=0.0",
            "--set",
            "stability.t_end=2.0",
            "--set",
            "stability.half_length=100.0",
            "--set",
            "stability.n=2048",
            "--set",
            "stability.dt=0.005",
        ],
    );
    // Nothing decays when there is nothing to decay, so the verdict is a failure.
    assert_eq!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stderr));
    let summary = std::fs::read_to_string(dir.path().join("summary.toml")).unwrap();
    let body: String = summary.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n");
    let table: toml::Table = toml::from_str(&body).unwrap();
    let tube = table["tube_max"].as_float().unwrap();
    assert!(tube <= 1e-8, "{tube}");
    let c = table["c_full"].as_float().unwrap();
    assert!((c - 1.0).abs() <= 1e-10, "{c}");
    assert!(dir.path().join("modulation.csv").exists());
}
