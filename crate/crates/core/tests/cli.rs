use std::path::Path;
use std::process::{Command, Output};

use radtrans::run::Manifest;
use radtrans::tables::{BenchmarkTable, Provenance, THIN_TS};

fn rtbench(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rtbench"))
        .args(args)
        .env("RTBENCH_OUT", out)
        .output()
        .unwrap()
}

const QUICK: [&str; 10] = [
    "--set", "N=4", "--set", "K=8", "--set", "rtol=1e-7", "--set", "atol=1e-7", "--set", "M=2",
];

#[test]
fn unknown_preset_fails_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = rtbench(&out, &["solve", "--preset", "thick-square-cv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown preset"));
    assert!(!out.exists());
}

#[test]
fn bad_override_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = rtbench(dir.path(), &["solve", "--preset", "thin-gaussian-su", "--set", "Q=1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solve_writes_every_table_time_and_echoes_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["solve", "--preset", "thin-gaussian-su"];
    args.extend(QUICK);
    let o = rtbench(dir.path(), &args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = Manifest::read(dir.path().join("manifest.json")).unwrap();
    let ts: Vec<f64> = m.runs.iter().map(|r| r.t).collect();
    assert_eq!(ts, THIN_TS);
    assert!(m.runs.iter().all(|r| r.config.max_order == 2));
    assert!(m.overrides.contains(&"M=2".to_string()));
    for f in &m.files {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let phi = BenchmarkTable::read(dir.path().join("thin-gaussian-su_phi.csv"), Provenance::GeneratedSolver).unwrap();
    assert_eq!(phi.ts, THIN_TS);
}

#[test]
fn compare_self_passes_and_perturbed_fails_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let o = rtbench(dir.path(), &["benchmark", "--source", "square"]);
    assert!(o.status.success());
    let path = dir.path().join("s2-square_phi.csv");
    let p = path.to_str().unwrap();

    let same = rtbench(dir.path(), &["compare", "--result", p, "--reference", p]);
    assert_eq!(same.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&same.stdout).contains("1,15,0e0,0e0"));

    let mut t = BenchmarkTable::read(&path, Provenance::GeneratedS2).unwrap();
    let i = t.xs.iter().position(|&x| x == 0.5).unwrap();
    t.values[i][2] = t.values[i][2].map(|v| v + 0.01);
    let bent = dir.path().join("bent.csv");
    t.write_csv(std::fs::File::create(&bent).unwrap()).unwrap();
    let o = rtbench(dir.path(), &["compare", "--result", bent.to_str().unwrap(), "--reference", p]);
    assert_eq!(o.status.code(), Some(1));
    let report = String::from_utf8_lossy(&o.stdout).to_string();
    let row = report.lines().find(|l| l.starts_with("1,")).unwrap();
    assert!(row.ends_with(",0.5,false"), "{row}");
}

#[test]
fn compare_rejects_mismatched_grids() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    std::fs::write(&a, "x,1.0\n0.1,1\n0.2,2\n").unwrap();
    std::fs::write(&b, "x,1.0\n0.1,1\n0.3,2\n").unwrap();
    let o = rtbench(dir.path(), &["compare", "--result", a.to_str().unwrap(), "--reference", b.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("x grids differ"));
}

#[test]
fn benchmark_table_has_error_column_and_causal_zeros() {
    let dir = tempfile::tempdir().unwrap();
    assert!(rtbench(dir.path(), &["benchmark", "--source", "gaussian"]).status.success());
    let text = std::fs::read_to_string(dir.path().join("s2-gaussian_phi.csv")).unwrap();
    assert!(text.lines().next().unwrap().ends_with(",max_error"));
    let t = BenchmarkTable::parse_csv(&text, Provenance::GeneratedS2).unwrap();
    assert!(t.xs.iter().all(|&x| x >= 0.0));
    assert!(t.row_errors.unwrap().iter().all(|&e| e <= 1e-8));

    assert!(rtbench(dir.path(), &["benchmark", "--source", "square"]).status.success());
    let sq = BenchmarkTable::read(dir.path().join("s2-square_phi.csv"), Provenance::GeneratedS2).unwrap();
    // x = 17.78279 lies outside the S2 cone x0 + t / sqrt 3 until t = 100
    assert_eq!(sq.get(17.78279, 10.0), Some(0.0));
    assert!(sq.get(17.78279, 100.0).unwrap() > 0.0);
}

#[test]
fn sweep_single_value_and_fit() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["sweep", "--preset", "thin-gaussian-su", "--M-range", "2"];
    args.extend(&QUICK[..8]);
    let o = rtbench(dir.path(), &args);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout).to_string();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 2);
    assert!(!text.contains("# fit"));

    args[4] = "1..3";
    let o = rtbench(dir.path(), &args);
    let text = String::from_utf8_lossy(&o.stdout).to_string();
    assert!(text.contains("# fit c_M"), "{text}");
    assert!(dir.path().join("thin-gaussian-su_sweep_t1.csv").exists());
}

#[test]
fn gaussian_sweep_tail_decreases() {
    let dir = tempfile::tempdir().unwrap();
    let o = rtbench(
        dir.path(),
        &["sweep", "--preset", "thin-gaussian-su", "--M-range", "2..6", "--set", "K=16", "--set", "N=8"],
    );
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout).to_string();
    let last: Vec<f64> = text
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            let cols: Vec<&str> = l.split(',').collect();
            let m: usize = cols[0].parse().unwrap();
            cols[1 + m].parse().unwrap()
        })
        .collect();
    assert_eq!(last.len(), 5);
    assert!(last.windows(2).all(|w| w[1] < w[0]), "{last:?}");
}

#[test]
fn manifest_replay_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["solve", "--preset", "thin-square-su-s2", "--set", "eval_times=0.31623"];
    args.extend(&QUICK[2..]);
    assert!(rtbench(dir.path(), &args).status.success());
    let again = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("manifest.json");
    let o = rtbench(again.path(), &["solve", "--manifest", manifest.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = Manifest::read(&manifest).unwrap();
    for f in m.files.iter().filter(|f| f.ends_with(".csv")) {
        assert_eq!(
            std::fs::read(dir.path().join(f)).unwrap(),
            std::fs::read(again.path().join(f)).unwrap(),
            "{f}"
        );
    }
}
