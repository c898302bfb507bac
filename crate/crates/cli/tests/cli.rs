use std::process::Command;

use qnt_cli::{parse_grid, run_experiment, to_csv, Experiment, ExperimentConfig, CSV_HEADER};

fn qnt() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_qnt"));
    c.env_remove("QNT_SEED");
    c
}

fn small(experiment: Experiment) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(experiment);
    cfg.m_samples = vec![2000];
    cfg.n_samples = vec![2000];
    cfg.trials = 8;
    cfg.seed = 11;
    cfg
}

#[test]
fn grids() {
    assert_eq!(parse_grid("100,200, 300").unwrap(), vec![100, 200, 300]);
    assert_eq!(parse_grid("1000:5000:1000").unwrap(), vec![1000, 2000, 3000, 4000, 5000]);
    assert_eq!(parse_grid("100:20000:100").unwrap().len(), 200);
    assert!(parse_grid("5:1:1").is_err());
    assert!(parse_grid("1:5:0").is_err());
    assert!(parse_grid("a,b").is_err());
}

#[test]
fn invalid_configs_rejected() {
    let mut cfg = small(Experiment::Star);
    cfg.trials = 0;
    assert!(run_experiment(&cfg).is_err());
    let mut cfg = small(Experiment::Star);
    cfg.m_samples.clear();
    assert!(run_experiment(&cfg).is_err());
    let mut cfg = small(Experiment::Star);
    cfg.s = 1.5;
    assert!(run_experiment(&cfg).is_err());
}

#[test]
fn single_trial_single_row() {
    let mut cfg = small(Experiment::Star);
    cfg.trials = 1;
    let rows = run_experiment(&cfg).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows, run_experiment(&cfg).unwrap());
}

#[test]
fn csv_deterministic_and_parallel_independent() {
    for e in [Experiment::Sweep, Experiment::Etch, Experiment::Loss] {
        let mut cfg = small(e);
        cfg.loss.horizon_s = 600.0;
        let a = to_csv(&cfg, &run_experiment(&cfg).unwrap()).unwrap();
        let b = to_csv(&cfg, &run_experiment(&cfg).unwrap()).unwrap();
        assert_eq!(a, b);
        cfg.exec = qnt_core::par::Execution::Sequential;
        let c = to_csv(&cfg, &run_experiment(&cfg).unwrap()).unwrap();
        assert_eq!(a, c);
        let mut lines = a.lines();
        assert!(lines.next().unwrap().starts_with("# config={"));
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        for line in lines {
            assert_eq!(line.split(',').count(), 11, "{line}");
        }
    }
}

#[test]
fn star_mse_tracks_bound() {
    let mut cfg = small(Experiment::Star);
    cfg.m_samples = vec![1000, 10_000];
    cfg.n_samples = vec![1000, 10_000];
    cfg.trials = 100;
    let rows = run_experiment(&cfg).unwrap();
    assert_eq!(rows.len(), 4);
    // more shots on either side lowers both MSE and bound
    assert!(rows[3].mse < rows[1].mse && rows[3].mse < rows[2].mse);
    assert!(rows[1].mse < rows[0].mse && rows[2].mse < rows[0].mse);
    assert!(rows.windows(2).all(|w| w[0].crb.is_finite()));
    assert!((rows[3].crb - 8.071_428_571_428_57e-4).abs() < 1e-12);
}

#[test]
fn etch_covers_every_edge() {
    let rows = run_experiment(&small(Experiment::Etch)).unwrap();
    let etch = rows.iter().filter(|r| r.experiment.starts_with("etch:")).count();
    let bypass = rows.iter().filter(|r| r.experiment.starts_with("bypass:")).count();
    assert_eq!(etch, 19 * 3);
    assert_eq!(bypass, 8);
}

#[test]
fn binary_writes_file_and_uses_env_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("star.csv");
    let status = qnt()
        .args(["star", "--m-samples", "500", "--n-samples", "500,1000", "--trials", "3", "--out"])
        .arg(&out)
        .env("QNT_SEED", "42")
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.lines().next().unwrap().ends_with("seed=42"));
    assert_eq!(text.lines().count(), 4);

    let flag = qnt()
        .args(["star", "--m-samples", "500", "--n-samples", "500,1000", "--trials", "3", "--seed", "42"])
        .output()
        .unwrap();
    let stdout = String::from_utf8(flag.stdout).unwrap();
    // the header differs only in output_path
    assert!(stdout.lines().next().unwrap().ends_with("seed=42"));
    assert!(stdout.lines().skip(1).eq(text.lines().skip(1)));
}

#[test]
fn binary_rejects_bad_topologies() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.topo");
    std::fs::write(&empty, "").unwrap();
    let bad_q = dir.path().join("bad.topo");
    std::fs::write(
        &bad_q,
        "node A monitor\nnode B monitor\nnode C internal\nnode D monitor\n\
         edge P1 A C 1 1 1\nedge P2 B C 1 1 1.5\nedge P3 D C 1 1 1\n",
    )
    .unwrap();
    for path in [&empty, &bad_q] {
        let out = qnt().arg("etch").arg("--topology").arg(path).args(["--trials", "1"]).output().unwrap();
        assert!(!out.status.success());
        assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
    }
}

#[test]
fn binary_etches_custom_topology() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("star.topo");
    std::fs::write(
        &path,
        "# star with a relay on one arm\nnode A monitor\nnode B monitor\nnode D monitor\nnode C internal\nnode R internal\n\
         edge P1 A C 1 0.9 0.9\nedge P2 B C 1 0.8 0.8\nedge P3 D R 1 0.7 0.7\nedge P4 R C 1 0.6 0.6\n",
    )
    .unwrap();
    let out = qnt()
        .arg("etch")
        .arg("--topology")
        .arg(&path)
        .args(["--trials", "2", "--m-samples", "1000", "--n-samples", "1000"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("etch:P3+P4:qz") || text.contains("etch:P4+P3:qz"), "{text}");
}
