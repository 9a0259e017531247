//! Criterion 11: every CLI experiment, re-run with the same seed, produces
//! byte-identical CSVs under BACC_THREADS in {1, 4}.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

fn run_in(dir: &Path, threads: &str, args: &[&str]) {
    let status = Command::new(env!("CARGO_BIN_EXE_bacc"))
        .args(args)
        .env("BACC_THREADS", threads)
        .current_dir(dir)
        .status()
        .expect("spawn bacc");
    assert!(
        status.success(),
        "{args:?} failed under BACC_THREADS={threads}"
    );
}

/// All CSV and binary-share outputs of a run directory, keyed by file name.
fn collect_outputs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
                continue;
            }
            let name = path
                .strip_prefix(dir)
                .unwrap()
                .to_string_lossy()
                .into_owned();
            let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
            if ext == "csv" || ext == "bin" {
                out.insert(name, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

#[test]
fn criterion_11_cli_determinism() {
    let experiments: Vec<(&str, Vec<&str>)> = vec![
        (
            "lebesgue",
            vec![
                "lebesgue", "--N", "30", "--s", "3", "--kbar", "10", "--out", "leb.csv",
            ],
        ),
        (
            "poly-exp",
            vec![
                "poly-exp",
                "--N",
                "60",
                "--K",
                "8",
                "--deg",
                "5",
                "--s-max",
                "40",
                "--s-step",
                "20",
                "--trials-f",
                "2",
                "--trials-s",
                "5",
                "--seed",
                "11",
                "--out",
                "poly.csv",
            ],
        ),
        (
            "nonpoly-exp",
            vec![
                "nonpoly-exp",
                "--N",
                "50",
                "--K",
                "8",
                "--s-max",
                "20",
                "--s-step",
                "10",
                "--trials-s",
                "10",
                "--seed",
                "12",
                "--curve-N",
                "40",
                "--curve-K",
                "10",
                "--curve-s",
                "5",
                "--out",
                "np.csv",
            ],
        ),
        (
            "nodes-compare",
            vec![
                "nodes-compare",
                "--N",
                "60",
                "--K",
                "8",
                "--deg",
                "5",
                "--s-max",
                "20",
                "--s-step",
                "20",
                "--trials-f",
                "2",
                "--trials-s",
                "5",
                "--seed",
                "13",
                "--out",
                "cmp.csv",
            ],
        ),
        (
            "train-toy",
            vec![
                "train-toy",
                "--scheme",
                "bacc",
                "--N",
                "16",
                "--K",
                "8",
                "--s",
                "3",
                "--epochs",
                "5",
                "--eta",
                "0.1",
                "--seed",
                "14",
                "--n-samples",
                "64",
                "--out",
                "loss.csv",
            ],
        ),
    ];

    let mut all_ok = true;
    for (name, args) in &experiments {
        let mut first: Option<BTreeMap<String, Vec<u8>>> = None;
        for threads in ["1", "4"] {
            for _repeat in 0..2 {
                let dir = tempfile::tempdir().unwrap();
                run_in(dir.path(), threads, args);
                let outputs = collect_outputs(dir.path());
                assert!(!outputs.is_empty(), "{name}: no CSV outputs were produced");
                match &first {
                    None => first = Some(outputs),
                    Some(reference) => {
                        if reference != &outputs {
                            all_ok = false;
                            println!(
                                "[FAIL] criterion 11 ({name}): outputs differ under BACC_THREADS={threads}"
                            );
                        }
                    }
                }
            }
        }
    }

    // encode -> decode chain, same determinism contract
    let mut first: Option<BTreeMap<String, Vec<u8>>> = None;
    for threads in ["1", "4"] {
        for _repeat in 0..2 {
            let dir = tempfile::tempdir().unwrap();
            std::fs::write(dir.path().join("data.csv"), "0.5\n-0.25\n0.75\n0.1\n").unwrap();
            run_in(
                dir.path(),
                threads,
                &[
                    "encode",
                    "--data",
                    "data.csv",
                    "--N",
                    "16",
                    "--out-dir",
                    "shares",
                ],
            );
            run_in(
                dir.path(),
                threads,
                &[
                    "decode",
                    "--shares-dir",
                    "shares",
                    "--K",
                    "4",
                    "--N",
                    "16",
                    "--out",
                    "dec.csv",
                ],
            );
            let outputs = collect_outputs(dir.path());
            match &first {
                None => first = Some(outputs),
                Some(reference) => {
                    if reference != &outputs {
                        all_ok = false;
                        println!(
                            "[FAIL] criterion 11 (encode/decode): outputs differ under BACC_THREADS={threads}"
                        );
                    }
                }
            }
        }
    }

    println!(
        "[{}] criterion 11: byte-identical CSVs across reruns and BACC_THREADS in {{1, 4}}",
        if all_ok { "PASS" } else { "FAIL" }
    );
    assert!(all_ok);
}
