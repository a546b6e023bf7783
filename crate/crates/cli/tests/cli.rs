use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn minfilt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_minfilt"))
        .args(args)
        .env_remove("MINFILT_CONFIG")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn golden(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    fs::read_to_string(path).unwrap()
}

fn write(dir: &TempDir, name: &str, contents: &[u8]) -> String {
    let p = dir.path().join(name);
    fs::write(&p, contents).unwrap();
    p.to_str().unwrap().to_string()
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

#[test]
fn convolve_csv() {
    let dir = TempDir::new().unwrap();
    let sig = write(&dir, "s.csv", b"1\n2\n3\n4\n5\n");
    let out = path(&dir, "o.csv");
    let r = minfilt(&["convolve", "--signal", &sig, "--format", "csv", "--taps", "1,1,1", "--out", &out]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    assert_eq!(fs::read_to_string(&out).unwrap(), "6\n9\n12\n");
    let summary = stdout(&r);
    assert!(summary.contains("samples=5"), "{summary}");
    assert!(summary.contains("outputs=3"), "{summary}");
    assert!(summary.contains("multiplications=7"), "{summary}");
}

#[test]
fn naive_and_winograd_files_match() {
    let dir = TempDir::new().unwrap();
    let values: String = (0..101).map(|i| format!("{}\n", (i * 37 % 23) - 11)).collect();
    let sig = write(&dir, "s.csv", values.as_bytes());
    let mut files = Vec::new();
    for mode in ["naive", "winograd"] {
        let out = path(&dir, &format!("{mode}.json"));
        let r = minfilt(&[
            "convolve", "--signal", &sig, "--taps", "3/2,-2,0.25", "--mode", mode, "--out", &out, "--out-format", "json",
        ]);
        assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
        files.push(fs::read(&out).unwrap());
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn convolve_fixed_raw_units() {
    let dir = TempDir::new().unwrap();
    let sig = write(&dir, "s.csv", b"1\n2\n3\n4\n");
    let out = path(&dir, "o.bin");
    let r = minfilt(&[
        "convolve", "--signal", &sig, "--taps", "1,1,1", "--fixed", "16,2", "--out", &out, "--out-format", "raw_i32le",
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    // 6 and 9 in Q13.2 register units.
    let expected: Vec<u8> = [24i32, 36].iter().flat_map(|v| v.to_le_bytes()).collect();
    assert_eq!(fs::read(&out).unwrap(), expected);
}

#[test]
fn convolve_usage_and_runtime_errors() {
    let dir = TempDir::new().unwrap();
    let sig = write(&dir, "s.csv", b"1\n2\n3\n4\n5\n");
    assert_eq!(code(&minfilt(&["convolve", "--taps", "1,1,1"])), 2);
    assert_eq!(code(&minfilt(&["convolve", "--signal", &sig])), 2);
    assert_eq!(code(&minfilt(&["convolve", "--signal", &sig, "--taps", "1,1"])), 2);
    assert_eq!(code(&minfilt(&["convolve", "--signal", &sig, "--taps", "1,1,1", "--mode", "fast"])), 2);
    assert_eq!(
        code(&minfilt(&["convolve", "--signal", &sig, "--taps", "1,1,1", "--backend", "exact", "--fixed", "8,2"])),
        2
    );
    let overflow = minfilt(&["convolve", "--signal", &sig, "--taps", "100,100,100", "--fixed", "8,2,error"]);
    assert_eq!(code(&overflow), 1);
    assert!(String::from_utf8_lossy(&overflow.stderr).contains("overflow"));
    let missing = path(&dir, "missing.csv");
    assert_eq!(code(&minfilt(&["convolve", "--signal", &missing, "--taps", "1,1,1"])), 1);
    let short = write(&dir, "short.json", b"[1,2]");
    let r = minfilt(&["convolve", "--signal", &short, "--format", "json", "--taps", "1,1,1"]);
    assert_eq!(code(&r), 1);
    assert!(String::from_utf8_lossy(&r.stderr).contains("at least 3"));
    let bad = write(&dir, "bad.csv", b"1\n2\nx\n");
    let r = minfilt(&["convolve", "--signal", &bad, "--taps", "1,1,1"]);
    assert_eq!(code(&r), 1);
    assert!(String::from_utf8_lossy(&r.stderr).contains("line 3"));
}

#[test]
fn threads_do_not_change_output() {
    let dir = TempDir::new().unwrap();
    let values: String = (0..999).map(|i| format!("{}\n", (i * 7919 % 211) - 105)).collect();
    let sig = write(&dir, "s.csv", values.as_bytes());
    let one = minfilt(&["convolve", "--signal", &sig, "--taps", "1,-2,3", "--threads", "1"]);
    let four = minfilt(&["convolve", "--signal", &sig, "--taps", "1,-2,3", "--threads", "4"]);
    assert_eq!(code(&one), 0);
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(stdout(&one).lines().count(), 997);
}

#[test]
fn config_file_and_env_var() {
    let dir = TempDir::new().unwrap();
    let sig = write(&dir, "s.csv", b"1\n2\n3\n4\n5\n");
    let out = path(&dir, "o.csv");
    let cfg = format!(
        r#"{{"taps": "1,1,1", "signal": {{"path": {sig:?}, "format": "csv"}}, "outputs": {{"result": {out:?}}}}}"#
    );
    let cfg = write(&dir, "cfg.json", cfg.as_bytes());
    assert_eq!(code(&minfilt(&["--config", &cfg, "convolve"])), 0);
    assert_eq!(fs::read_to_string(&out).unwrap(), "6\n9\n12\n");
    fs::remove_file(&out).unwrap();

    let r = Command::new(env!("CARGO_BIN_EXE_minfilt"))
        .arg("convolve")
        .env("MINFILT_CONFIG", &cfg)
        .output()
        .unwrap();
    assert_eq!(code(&r), 0);
    assert_eq!(fs::read_to_string(&out).unwrap(), "6\n9\n12\n");

    // Flags override the file.
    let r = minfilt(&["--config", &cfg, "precompute", "--taps", "2,0,2"]);
    assert_eq!(stdout(&r), "2 2 2 2\n");

    let strict = write(&dir, "strict.json", br#"{"tpas": "1,1,1"}"#);
    assert_eq!(code(&minfilt(&["--config", &strict, "precompute"])), 2);
    let fixed = write(&dir, "fixed.json", br#"{"backend": "fixed", "taps": "1,1,1"}"#);
    let r = minfilt(&["--config", &fixed, "precompute"]);
    assert_eq!(code(&r), 2);
    assert!(String::from_utf8_lossy(&r.stderr).contains("fixed_format"));
}

#[test]
fn precompute_examples() {
    for (taps, expected) in [
        ("1,1,1", "1 3/2 1/2 1\n"),
        ("0,0,0", "0 0 0 0\n"),
        ("2,0,2", "2 2 2 2\n"),
        ("-1,1/3,2", "-1 2/3 1/3 2\n"),
    ] {
        let r = minfilt(&["precompute", "--taps", taps]);
        assert_eq!(code(&r), 0);
        assert_eq!(stdout(&r), expected, "{taps}");
    }
    let r = minfilt(&["precompute", "--taps", "1,1,1", "--backend", "float64"]);
    assert_eq!(stdout(&r), "1 1.5 0.5 1\n");
    assert_eq!(code(&minfilt(&["precompute"])), 2);
}

#[test]
fn cost_and_packing_reports() {
    let r = minfilt(&["cost", "--structure", "winograd", "--bits", "16"]);
    assert_eq!(code(&r), 0);
    assert_eq!(stdout(&r), golden("report_winograd_16.json"));
    let v: serde_json::Value = serde_json::from_str(&stdout(&r)).unwrap();
    assert_eq!(v["area"]["total"], 1152.0);

    let r = minfilt(&["cost", "--structure", "naive", "--bits", "16"]);
    assert_eq!(stdout(&r), golden("report_naive_16.json"));

    let r = minfilt(&["cost", "--structure", "naive", "--bits", "8", "--mul-coeff", "2", "--add-coeff", "0.5"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&r)).unwrap();
    assert_eq!(v["area"]["total"], 2.0 * 64.0 * 6.0 + 0.5 * 8.0 * 4.0);

    let r = minfilt(&["map-dsp", "--structure", "naive"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&r)).unwrap();
    assert_eq!(v["dsp"]["blocks_used"], 2);
    let r = minfilt(&["map-dsp", "--structure", "winograd"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&r)).unwrap();
    assert_eq!(v["dsp"]["blocks_used"], 1);
    assert_eq!(v["dsp"]["external_adders"], 2);
    let r = minfilt(&["map-dsp", "--structure", "winograd", "--dsp", "8,8,8"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&r)).unwrap();
    assert_eq!(v["dsp"]["external_adders"], 0);
    assert_eq!(v["dsp"]["unused_multipliers"], 4);

    let dir = TempDir::new().unwrap();
    let out = path(&dir, "r.json");
    assert_eq!(code(&minfilt(&["cost", "--bits", "16", "--out", &out])), 0);
    assert_eq!(fs::read_to_string(&out).unwrap(), golden("report_winograd_16.json"));

    assert_eq!(code(&minfilt(&["cost", "--bits", "0"])), 2);
    assert_eq!(code(&minfilt(&["cost", "--structure", "systolic"])), 2);
    assert_eq!(code(&minfilt(&["cost", "--mul-coeff", "2"])), 2);
    assert_eq!(code(&minfilt(&["cost", "--mul-coeff", "-2", "--add-coeff", "1"])), 2);
    assert_eq!(code(&minfilt(&["map-dsp", "--dsp", "4,3"])), 2);
    assert_eq!(code(&minfilt(&["map-dsp", "--dsp", "0,3,3"])), 2);
}

#[test]
fn graph_matches_golden_files() {
    for which in ["winograd", "naive", "precompute"] {
        let r = minfilt(&["graph", "--which", which]);
        assert_eq!(code(&r), 0);
        assert_eq!(stdout(&r), golden(&format!("{which}.dot")), "{which}");
    }
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "w.dot");
    assert_eq!(code(&minfilt(&["graph", "--which", "winograd", "--out", &out])), 0);
    assert_eq!(fs::read_to_string(&out).unwrap(), golden("winograd.dot"));
    let chained = stdout(&minfilt(&["graph", "--which", "naive", "--two-input-adders"]));
    assert_eq!(chained.matches("adder:++\"").count(), 4);
    assert_eq!(code(&minfilt(&["graph", "--which", "systolic"])), 2);
    let unwritable = Path::new("/nonexistent-dir/w.dot");
    assert_eq!(code(&minfilt(&["graph", "--out", unwritable.to_str().unwrap()])), 1);
}

#[test]
fn verify_passes_and_counts() {
    let r = minfilt(&["verify", "--trials", "2000", "--seed", "42"]);
    assert_eq!(code(&r), 0);
    let text = stdout(&r);
    assert_eq!(text.matches("2000/2000 passed").count(), 3, "{text}");
    assert_eq!(code(&minfilt(&["verify", "--trials", "0"])), 2);
    assert_eq!(code(&minfilt(&["verify", "--trials", "ten"])), 2);
}

#[test]
fn verify_catches_the_mu4_mutant() {
    let r = minfilt(&["verify", "--trials", "1000", "--seed", "42", "--mutant", "mu4-typo"]);
    assert_eq!(code(&r), 1);
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("oracle equivalence failed at trial"), "{err}");
}

#[test]
fn verify_is_deterministic() {
    let a = minfilt(&["verify", "--trials", "300", "--seed", "9", "--mutant", "mu4-typo"]);
    let b = minfilt(&["verify", "--trials", "300", "--seed", "9", "--mutant", "mu4-typo"]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stderr, b.stderr);
}

#[test]
fn bench_reports_both_modes() {
    let r = minfilt(&["bench", "--n", "64", "--iterations", "2"]);
    assert_eq!(code(&r), 0);
    let text = stdout(&r);
    assert!(text.contains("naive:") && text.contains("winograd:"), "{text}");
    assert_eq!(code(&minfilt(&["bench", "--n", "2"])), 2);
}

#[test]
fn help_and_unknown_commands() {
    assert_eq!(code(&minfilt(&["--help"])), 0);
    assert_eq!(code(&minfilt(&[])), 2);
    assert_eq!(code(&minfilt(&["frobnicate"])), 2);
}
