#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const BIN: &str = env!("CARGO_BIN_EXE_medusa");

pub fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

pub fn toy_graph() -> PathBuf {
    data("toy").join("graph.json")
}

pub fn toy_cases() -> PathBuf {
    data("toy").join("cases.json")
}

/// Runs the binary in `cwd` with a pinned timestamp and no inherited thread override.
pub fn medusa(cwd: &Path, args: &[&str]) -> Output {
    medusa_env(cwd, args, &[])
}

pub fn medusa_env(cwd: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.current_dir(cwd)
        .args(args)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .env_remove("MEDUSA_THREADS")
        .env_remove("RUST_LOG");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn medusa")
}

pub fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Planted module labels of the bundled toy case.
pub fn planted_labels() -> Vec<String> {
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(toy_cases()).unwrap()).unwrap();
    v[0]["positives"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s.as_str().unwrap().to_string())
        .collect()
}

/// fit → chains → detect → eval (loocv and recovery) on the toy graph,
/// all outputs under `cwd` with relative paths.
pub fn pipeline(cwd: &Path, env: &[(&str, &str)]) {
    let graph = toy_graph();
    let cases = toy_cases();
    let (graph, cases) = (graph.to_str().unwrap(), cases.to_str().unwrap());
    let pivots: Vec<String> = planted_labels().into_iter().take(6).collect();
    std::fs::write(cwd.join("pivots.txt"), pivots.join("\n")).unwrap();
    let steps: [&[&str]; 5] = [
        &[
            "fit", "--graph", graph, "--p", "0.2", "--seed", "42", "--out", "model",
        ],
        &[
            "chains",
            "model",
            "--from",
            "gene",
            "--to",
            "term",
            "--max-len",
            "3",
            "--out",
            "chains",
        ],
        &[
            "detect",
            "model",
            "--pivots",
            "pivots.txt",
            "--chain",
            "gene_term",
            "--chain",
            "gene_chemical > term_chemical!",
            "--combine",
            "--q",
            "4",
            "--k",
            "6",
            "--out",
            "detect",
        ],
        &[
            "eval",
            "--model",
            "model",
            "--cases",
            cases,
            "--protocol",
            "loocv",
            "--chain",
            "gene_term",
            "--q",
            "4",
            "--out",
            "loocv",
        ],
        &[
            "eval",
            "--model",
            "model",
            "--cases",
            cases,
            "--protocol",
            "recovery",
            "--fraction",
            "0.5",
            "--seed",
            "42",
            "--chain",
            "gene_term",
            "--q",
            "4",
            "--out",
            "recovery",
        ],
    ];
    for args in steps {
        ok(&medusa_env(cwd, args, env));
    }
}

/// Relative path and bytes of every JSON/TSV file below `root`, sorted.
pub fn outputs(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if matches!(p.extension().and_then(|e| e.to_str()), Some("json" | "tsv")) {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                files.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}
