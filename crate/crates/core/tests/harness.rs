use afdm_scma::harness::{
    format_sig, run_sweep, union_bound_curve, write_csv, write_mse_trace, ExperimentConfig, HEADER,
};
use afdm_scma::Error;

const BASE: &str = r#"
direction = "uplink"
waveform = "afdm"
receiver = "mpa"
ebn0_grid_db = [10.0]
max_trials = 40
batch_trials = 8
seed = 3

[afdm]
n = 8
n_cpp = 2
k_nu = 0

[scma]
m = 4

[channel]
kind = "uniform"
delays = [0, 1]
"#;

fn cfg(edits: &[(&str, &str)]) -> Result<ExperimentConfig, Error> {
    let mut t = BASE.to_string();
    for (a, b) in edits {
        assert!(t.contains(a), "{a}");
        t = t.replacen(a, b, 1);
    }
    ExperimentConfig::from_toml(&t)
}

fn config_error(edits: &[(&str, &str)]) -> String {
    match cfg(edits) {
        Err(Error::Config(m)) | Err(Error::Parse(m)) => m,
        other => panic!("expected a configuration error, got {other:?}"),
    }
}

#[test]
fn noiseless_channels_are_error_free() {
    // uplink users share one constellation, so a noiseless identity channel
    // is ambiguous there; the downlink rotations keep the codewords apart
    let identity = ("kind = \"uniform\"\ndelays = [0, 1]", "kind = \"identity\"");
    let downlink = ("direction = \"uplink\"", "direction = \"downlink\"");
    let grid = ("ebn0_grid_db = [10.0]", "ebn0_grid_db = [200.0]");
    let variants: Vec<Vec<(&str, &str)>> = vec![
        vec![identity, downlink, grid],
        vec![identity, downlink, grid, ("waveform = \"afdm\"", "waveform = \"ofdm\"")],
        vec![identity, downlink, grid, ("receiver = \"mpa\"", "receiver = \"two_stage\"")],
        vec![downlink, grid],
    ];
    for edits in variants {
        let res = run_sweep(&cfg(&edits).unwrap()).unwrap();
        let p = res.points[0];
        assert_eq!(p.bit_errors, 0, "{edits:?}");
        assert_eq!(p.frames, 40);
        assert_eq!(p.bits, 40 * 2 * 6 * 2);
    }
}

#[test]
fn coded_noiseless_frame() {
    let text = BASE
        .replace("direction = \"uplink\"", "direction = \"downlink\"")
        .replace("receiver = \"mpa\"", "receiver = \"oamp\"")
        .replace("ebn0_grid_db = [10.0]", "ebn0_grid_db = [60.0]")
        .replace("max_trials = 40", "max_trials = 1")
        .replace("n = 8", "n = 32")
        + "\n[code]\nouter_iterations = 6\n";
    let c = ExperimentConfig::from_toml(&text).unwrap();
    let res = run_sweep(&c).unwrap();
    assert_eq!(res.points[0].bit_errors, 0);
    // six users on four resources: a single linear pass cannot separate them
    assert!(res.uncoded[0].bit_errors > 0);
    assert_eq!(res.mse[0].frames, 1);
    assert_eq!(res.mse[0].iterations(), 6);
    assert!(res.mse[0].le(5).0 < 1e-3 && res.mse[0].le(0).0 > 0.1);

    let mut buf = Vec::new();
    write_mse_trace(&c.ebn0_grid_db, &res.mse, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next().unwrap(), "ebn0_db,iteration,le_mse,le_ci,nle_mse,nle_ci");
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn csv_layout() {
    let res = run_sweep(&cfg(&[("ebn0_grid_db = [10.0]", "ebn0_grid_db = [0.0, 5.0]")]).unwrap()).unwrap();
    let mut buf = Vec::new();
    write_csv(&res.points, &mut buf).unwrap();
    let mut rdr = csv::Reader::from_reader(buf.as_slice());
    let header: Vec<String> = rdr.headers().unwrap().iter().map(str::to_string).collect();
    assert_eq!(header, HEADER);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    for (row, p) in rows.iter().zip(&res.points) {
        assert_eq!(row.len(), 6);
        assert_eq!(row[0].parse::<f64>().unwrap(), p.ebn0_db);
        assert_eq!(row[2].parse::<u64>().unwrap(), p.bit_errors);
        let ber: f64 = row[1].parse().unwrap();
        assert!((ber - p.ber).abs() <= 1e-5 * p.ber.max(1e-300));
    }
    assert!(write_csv(&[], Vec::new()).is_err());
    assert_eq!(format_sig(0.000123456, 3), "0.000123");
}

#[test]
fn thread_count_does_not_change_results() {
    let base = cfg(&[("ebn0_grid_db = [10.0]", "ebn0_grid_db = [4.0, 8.0]"), ("max_trials = 40", "max_trials = 200")]).unwrap();
    let runs: Vec<Vec<u8>> = [1, 3, 8]
        .into_iter()
        .map(|t| {
            let mut c = base.clone();
            c.threads = Some(t);
            let mut buf = Vec::new();
            write_csv(&run_sweep(&c).unwrap().points, &mut buf).unwrap();
            buf
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0], runs[2]);
}

#[test]
fn seed_changes_results() {
    let a = run_sweep(&cfg(&[("ebn0_grid_db = [10.0]", "ebn0_grid_db = [2.0]")]).unwrap()).unwrap();
    let b = run_sweep(&cfg(&[("ebn0_grid_db = [10.0]", "ebn0_grid_db = [2.0]"), ("seed = 3", "seed = 4")]).unwrap()).unwrap();
    assert_ne!(a.points[0].bit_errors, b.points[0].bit_errors);
}

#[test]
fn invalid_configs_are_rejected() {
    let cases: Vec<(Vec<(&str, &str)>, &str)> = vec![
        (vec![("ebn0_grid_db = [10.0]", "ebn0_grid_db = []")], "empty"),
        (vec![("n = 8", "n = 10")], "multiple"),
        (vec![("delays = [0, 1]", "delays = [0, 3]")], "prefix"),
        (vec![("receiver = \"mpa\"", "receiver = \"oamp\"")], "[code]"),
        (vec![("receiver = \"mpa\"", "receiver = \"two_stage\"")], "downlink"),
        (vec![("delays = [0, 1]", "delays = []")], "at least one delay"),
        (vec![("waveform = \"afdm\"", "waveform = \"ofdm\""), ("k_nu = 0", "k_nu = 0\nc1 = 0.1")], "ofdm"),
    ];
    for (edits, needle) in cases {
        let msg = config_error(&edits);
        assert!(msg.contains(needle), "{msg:?} lacks {needle:?}");
    }
    // unknown keys are an error rather than silently ignored
    assert!(cfg(&[("seed = 3", "seed = 3\nsede = 4")]).is_err());
}

#[test]
fn config_roundtrips_through_toml() {
    let c = cfg(&[]).unwrap();
    let again = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
    assert_eq!(again.to_toml(), c.to_toml());
}

#[test]
fn bound_decreases_with_snr() {
    let c = cfg(&[("ebn0_grid_db = [10.0]", "ebn0_grid_db = [5.0, 10.0, 15.0]"), ("m = 4", "m = 2")]).unwrap();
    let curve = union_bound_curve(&c, 1e7).unwrap();
    assert_eq!(curve.len(), 3);
    assert!(curve.windows(2).all(|w| w[1].1 < w[0].1));
}
