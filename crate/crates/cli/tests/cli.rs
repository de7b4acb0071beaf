use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn polariton(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polariton"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("small.toml");
    fs::write(
        &path,
        r#"
scenario = "custom"
workers = 1

[pulses]
t_start_ps = -2.5
t_stop_ps = 4.0
dt_ps = 0.002

[delays]
tau_start_ps = -0.2
tau_stop_ps = 0.2
tau_step_ps = 0.1
window_start_ps = -1.0
window_stop_ps = 3.0
window_step_ps = 0.04
"#,
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn catalog_lists_pump_probe_and_four_wave_mixing() {
    let out = polariton(&["catalog", "--freqs", "0.8"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let header = text.lines().next().unwrap();
    assert!(header.contains("nu_t"), "{header}");
    assert!(text.lines().count() > 3);
}

#[test]
fn run_then_spectrum_then_stats() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let out_dir = dir.path().join("out");
    let out = polariton(&["run", &config, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let scan = out_dir.join("scan.txt");
    assert!(scan.is_file());
    assert!(out_dir.join("manifest.toml").is_file());

    let out = polariton(&["spectrum", scan.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("scan_spectrum.txt").is_file());

    let out = polariton(&[
        "stats",
        scan.to_str().unwrap(),
        "--samples",
        "4",
        "--noise-fraction",
        "0.01",
        "--seed",
        "3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("samples 4"), "{text}");
}

#[test]
fn exit_codes_separate_config_and_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[pulses]\nfwhm_ps = -1.0\n").unwrap();
    let out = polariton(&["run", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fwhm_ps"));

    let missing = dir.path().join("missing.toml");
    let out = polariton(&["run", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
}
