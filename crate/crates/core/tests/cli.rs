use std::process::Command;

fn qfft(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_qfft")).args(args).output().unwrap()
}

fn body(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn transform_impulse() {
    let out = qfft(&["transform", "--n", "8", "--impulse"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows = body(&text);
    assert_eq!(rows[0], "k,re,im");
    assert_eq!(&rows[1..], &["0,1,0", "1,1,0", "2,1,0", "3,1,0", "4,1,0", "5,1,0", "6,1,0", "7,1,0"]);
    assert!(!text.contains('\r'));
}

#[test]
fn sweep_bits_is_reproducible_and_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = qfft(&[
            "sweep-bits", "--n", "256", "--bit-range", "4..12", "--quantizer", "uniform", "--trials", "10",
            "--seed", "42", "--out", path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let (a, b) = (std::fs::read_to_string(a).unwrap(), std::fs::read_to_string(b).unwrap());
    assert_eq!(body(&a), body(&b));
    let rows = body(&a);
    assert_eq!(rows[0], "bits,mean_error,std_error,var_error,percent_error,sqnr_db,theory_var");
    assert_eq!(rows.len(), 10);
    assert!(a.contains("# seed = 42"));
    assert!(a.contains("# bit_range = 4..12"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"n": 64, "quantizer": "float", "bits": 4, "n_sizes": [8, 16], "trials": 3}"#).unwrap();
    let out = qfft(&["sweep-input", "--config", cfg.to_str().unwrap(), "--bits", "9"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("# bits = 9"));
    assert!(text.contains("# quantizer = float"));
    let rows = body(&text);
    assert_eq!(rows[0], "n,mean_error,std_error,var_error,percent_error,sqnr_db");
    assert!(rows[1].starts_with("8,") && rows[2].starts_with("16,"));
}

#[test]
fn exit_codes_and_diagnostics() {
    let out = qfft(&["transform", "--n", "7"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(err.contains("\"n\"") && err.contains("must be a power of two"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"n": 8, "colour": "blue"}"#).unwrap();
    let out = qfft(&["transform", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));

    let out = qfft(&["sweep-input", "--n-sizes", "8", "--amplitude", "0", "--trials", "1"]);
    assert_eq!(out.status.code(), Some(2));
}
