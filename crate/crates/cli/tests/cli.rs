use std::process::{Command, Output};

use serde_json::Value;

fn coldboot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coldboot"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json output")
}

fn field(v: &Value, key: &str) -> String {
    v[key].as_str().unwrap().to_string()
}

const CHANNEL: [&str; 4] = ["--alpha", "0.001", "--beta", "0.05"];

#[test]
fn keygen_perturb_search_recovers_key() {
    let kp = json(&coldboot(&["lowmc", "keygen", "--paramset", "picnic-L1-FS", "--seed", "3"]));
    let secret = field(&kp, "secret");
    let mut args = vec!["perturb", "--key", &secret, "--seed", "1"];
    args.extend(CHANNEL);
    let noisy = field(&json(&coldboot(&args)), "noisy");
    assert_eq!(noisy.len(), secret.len());

    let (pt, ct) = (field(&kp, "plaintext"), field(&kp, "ciphertext"));
    for backend in ["classical", "cost-only"] {
        let mut args = vec![
            "search", "--noisy", &noisy, "--plaintext", &pt, "--ciphertext", &ct,
            "--paramset", "picnic-L1-FS", "--bits", "128", "--chunk-bits", "8", "--eta", "2",
            "--mu", "64", "--e", "16", "--backend", backend,
        ];
        args.extend(CHANNEL);
        let out = json(&coldboot(&args));
        assert_eq!(field(&out, "key"), secret, "{backend}");
    }
}

#[test]
fn enc_dec_round_trip() {
    let cipher = ["--block-bits", "16", "--sboxes", "5", "--instance-seed", "9"];
    let mut enc = vec!["lowmc", "enc", "--key", "beef", "--input", "1234"];
    enc.extend(cipher);
    let ct = field(&json(&coldboot(&enc)), "output");
    let mut dec = vec!["lowmc", "dec", "--key", "beef", "--input", &ct];
    dec.extend(cipher);
    assert_eq!(field(&json(&coldboot(&dec)), "output"), "1234");
}

#[test]
fn table_file_rank_and_getkey() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("table.txt");
    let path = path.to_str().unwrap();
    let mut args = vec![
        "enumerate", "--noisy", "00ff", "--bits", "16", "--chunk-bits", "4", "--eta", "2", "--mu", "4",
        "--out", path,
    ];
    args.extend(CHANNEL);
    assert!(coldboot(&args).status.success());

    let all = json(&coldboot(&["rank", "--table", path, "--b1", "0", "--b2", "1000000"]));
    assert_eq!(field(&all, "rank"), "16");
    let first = json(&coldboot(&["getkey", "--table", path, "--b1", "0", "--b2", "1000000", "--r", "1"]));
    assert_eq!(field(&first, "key"), "00ff");

    let none = coldboot(&["getkey", "--table", path, "--b1", "0", "--b2", "1000000", "--r", "17"]);
    assert_eq!(none.status.code(), Some(1));
}

#[test]
fn estimate_reports_clifford_discrepancy() {
    let out = json(&coldboot(&["estimate", "--cipher", "lowmc-L1", "--e", "30"]));
    assert_eq!(out["cost"]["reported"]["cnot"].as_f64(), Some(1.78e10));
    let notes = out["discrepancies"].as_array().unwrap();
    assert_eq!(notes.len(), 1);
    assert_eq!(notes[0]["column"], "cliff1q");

    let audit = json(&coldboot(&["estimate", "--table"]));
    let rows = audit["table"].as_array().unwrap();
    assert_eq!(rows.len(), 10);
    assert_eq!(rows[0]["cipher_id"], "aes-128");
    assert_eq!(rows[0]["gates"]["cnot"], 291_150);
}

#[test]
fn estimate_accounts_a_candidate_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("table.txt");
    let path = path.to_str().unwrap();
    let mut args = vec![
        "enumerate", "--noisy", "00ff00ff", "--bits", "32", "--chunk-bits", "4", "--eta", "2", "--mu", "16",
        "--out", path,
    ];
    args.extend(CHANNEL);
    assert!(coldboot(&args).status.success());
    let out = json(&coldboot(&["estimate", "--cipher", "lowmc-L1", "--e", "10", "--candidates", path]));
    let window = &out["window"];
    assert!(window["b_e"].as_u64().unwrap() > window["b_min"].as_u64().unwrap());
    let queries = window["total_queries"].as_u64().unwrap();
    assert_eq!(window["gates"]["t"].as_u64(), Some(8400 * queries));
}

#[test]
fn experiment_prints_csv() {
    let out = coldboot(&[
        "experiment", "--paramset", "picnic-L1-FS", "--trials", "2", "--betas", "0.001,0.1", "--mus", "16",
        "--es", "4,8",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "beta,mu,rate_full,rate_e4,rate_e8,trials");
    assert_eq!(lines.len(), 3);
}

#[test]
fn paramsets_listed() {
    let v = json(&coldboot(&["paramsets"]));
    assert_eq!(v.as_array().unwrap().len(), 12);
    assert_eq!(json(&coldboot(&["lowmc", "list"])), v);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(coldboot(&["rank"]).status.code(), Some(2));
    assert_eq!(coldboot(&["bogus"]).status.code(), Some(2));
    let mut args = vec!["perturb", "--key", "zz"];
    args.extend(CHANNEL);
    assert_eq!(coldboot(&args).status.code(), Some(2));
    assert_eq!(
        coldboot(&["perturb", "--key", "00", "--alpha", "1.5", "--beta", "0.1"]).status.code(),
        Some(2)
    );
}
