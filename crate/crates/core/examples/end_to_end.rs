//! The command-line pipeline on the fixture corpus: build, PageRank
//! baseline, align, evaluate. Outputs go to a temporary directory.
//!
//!     cargo run --example end_to_end

use std::path::PathBuf;

fn kgsum(args: &[&str]) {
    let code = kgsum::cli::run(std::iter::once("kgsum").chain(args.iter().copied()));
    assert_eq!(code, 0, "kgsum {} failed", args.join(" "));
}

fn main() {
    let docs = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/docs.jsonl");
    let dir = tempfile::tempdir().expect("temp dir");
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let docs = docs.to_string_lossy();

    kgsum(&[
        "build",
        "--docs",
        &docs,
        "--out",
        &p("full.jsonl"),
        "--targets-out",
        &p("target.jsonl"),
    ]);
    kgsum(&[
        "baseline",
        "--method",
        "pagerank",
        "--k",
        "5",
        "--graphs",
        &p("full.jsonl"),
        "--out",
        &p("pred.jsonl"),
    ]);
    kgsum(&[
        "align",
        "--pred",
        &p("pred.jsonl"),
        "--targets",
        &p("target.jsonl"),
        "--out",
        &p("alignment.jsonl"),
    ]);
    kgsum(&[
        "eval",
        "--pred",
        &p("pred.jsonl"),
        "--targets",
        &p("target.jsonl"),
        "--alignments",
        &p("alignment.jsonl"),
    ]);
}
