use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_afdm-scma"))
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run_ok(cmd: &mut Command) -> String {
    let out = cmd.output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn run_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    let text = std::fs::read_to_string(configs().join("uplink_afdm_bpsk.toml"))
        .unwrap()
        .replace("max_trials = 200000", "max_trials = 50")
        .replace("batch_trials = 256", "batch_trials = 25");
    std::fs::write(&cfg, text).unwrap();
    let out = dir.path().join("ber.csv");
    run_ok(bin().arg("run").arg(&cfg).arg("--out").arg(&out).args(["--seed", "5", "--threads", "2"]));
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "ebn0_db,ber,bit_errors,bits,frame_errors,frames");
    assert_eq!(lines.count(), 7);

    // the same seed on stdout reproduces the file
    let again = run_ok(bin().arg("run").arg(&cfg).args(["--seed", "5"]));
    assert_eq!(again, csv);
}

#[test]
fn shipped_configs_load() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let cfg = afdm_scma::harness::ExperimentConfig::from_file(&path);
        assert!(cfg.is_ok(), "{}: {:?}", path.display(), cfg.err());
    }
}

#[test]
fn bound_and_codebook_commands() {
    let bound = run_ok(bin().args(["analyze", "bound"]).arg(configs().join("uplink_afdm_bpsk.toml")));
    assert!(bound.starts_with("ebn0_db,ber_bound\n"));
    assert_eq!(bound.lines().count(), 8);

    let dir = tempfile::tempdir().unwrap();
    let sig = dir.path().join("z.txt");
    run_ok(bin().args(["codebook", "build", "--out"]).arg(&sig));
    let med: f64 = run_ok(bin().args(["codebook", "med"]).arg(&sig)).trim().parse().unwrap();
    assert!((med - 1.06).abs() < 1e-9);
}

#[test]
fn bad_input_fails_cleanly() {
    let out = bin().args(["run", "/nonexistent.toml"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nonexistent"));

    let out = bin()
        .arg("run")
        .arg(configs().join("uplink_afdm_bpsk.toml"))
        .args(["--trace-out", "/tmp/x.csv"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn readme_config_is_valid() {
    let readme = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../README.md")).unwrap();
    let block = readme.split("```toml\n").nth(1).unwrap().split("```").next().unwrap();
    afdm_scma::harness::ExperimentConfig::from_toml(block).unwrap();
}
