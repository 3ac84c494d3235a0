use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_subrank"))
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("subrank-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn run_stdin(args: &[&str], input: &[u8]) -> Output {
    let mut child = bin().args(args).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped()).spawn().unwrap();
    child.stdin.take().unwrap().write_all(input).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn kv(o: &Output, key: &str) -> String {
    let s = stdout(o);
    s.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")).map(str::to_string))
        .unwrap_or_else(|| panic!("no {key} in {s}"))
}

#[test]
fn catalog_piped_into_subrank() {
    let w = run(&["catalog", "w_tensor", "--field", "gf:2"]);
    assert!(w.status.success());
    let cert = tmp("w.cert");
    let o = run_stdin(&["subrank", "--format", "kv", "--out", cert.to_str().unwrap()], &w.stdout);
    assert!(o.status.success(), "{o:?}");
    assert_eq!(kv(&o, "subrank"), "1");
    assert_eq!(kv(&o, "certificate"), cert.display().to_string());

    let t = tmp("w.tensor");
    std::fs::write(&t, &w.stdout).unwrap();
    let v = run(&["verify", cert.to_str().unwrap(), "--tensor", t.to_str().unwrap(), "--format", "kv"]);
    assert!(v.status.success());
    assert_eq!(kv(&v, "verified"), "true");
}

#[test]
fn slicerank_of_w_is_two() {
    let w = run(&["catalog", "w_tensor", "--field", "gf:3"]);
    let o = run_stdin(&["slicerank", "--format", "kv"], &w.stdout);
    assert_eq!(kv(&o, "slicerank"), "2");
}

#[test]
fn rho_asymmetry_and_certificate() {
    let t = fixture("remark.tensor");
    let ts = t.to_str().unwrap();
    let p12 = run(&["pivots", ts, "--orient", "1,2", "--format", "kv"]);
    assert_eq!(kv(&p12, "rho"), "1");
    let p21 = run(&["pivots", ts, "--orient", "2,1", "--format", "kv"]);
    assert_eq!(kv(&p21, "rho"), "2");

    let cert = tmp("remark.cert");
    let c = run(&["certify", "rho", ts, "--orient", "2,1", "--out", cert.to_str().unwrap(), "--format", "kv"]);
    assert!(c.status.success(), "{c:?}");
    assert_eq!(kv(&c, "r"), "2");
    let v = run(&["verify", cert.to_str().unwrap(), "--tensor", ts, "--format", "kv"]);
    assert!(v.status.success());
    assert_eq!(kv(&v, "r"), "2");
}

#[test]
fn emitted_files_round_trip() {
    let t = run(&["catalog", "gen_null_algebra", "6", "2", "--field", "gf:5"]);
    let back = run_stdin(&["power", "--m", "1"], &t.stdout);
    assert_eq!(back.stdout, t.stdout);

    let cert = run_stdin(&["certify", "exact", "--field", "gf:5"], &run(&["catalog", "matmul", "1", "2", "1", "--field", "gf:5"]).stdout);
    assert!(cert.status.success());
    let path = tmp("mm.cert");
    std::fs::write(&path, &cert.stdout).unwrap();
    let tensor = tmp("mm.tensor");
    std::fs::write(&tensor, run(&["catalog", "matmul", "1", "2", "1", "--field", "gf:5"]).stdout).unwrap();
    assert!(run(&["verify", path.to_str().unwrap(), "--tensor", tensor.to_str().unwrap()]).status.success());
}

#[test]
fn exit_codes() {
    assert_eq!(run_stdin(&["info"], b"not a tensor\n").status.code(), Some(2));
    let big = run(&["catalog", "null_algebra", "8", "--field", "gf:7"]);
    assert_eq!(run_stdin(&["subrank", "--guard", "100"], &big.stdout).status.code(), Some(3));
    let stubborn = run(&[
        "verify",
        fixture("stubborn.cert").to_str().unwrap(),
        "--tensor",
        fixture("unit1.tensor").to_str().unwrap(),
        "--extract",
        "1",
    ]);
    assert_eq!(stubborn.status.code(), Some(4));

    // A certificate claiming one more than it delivers.
    let cert = run_stdin(&["certify", "exact"], &run(&["catalog", "unit", "2", "--field", "gf:3"]).stdout);
    let forged = String::from_utf8(cert.stdout).unwrap().replace("\nr 2\n", "\nr 3\n");
    let path = tmp("forged.cert");
    std::fs::write(&path, forged).unwrap();
    let t = tmp("unit2.tensor");
    std::fs::write(&t, run(&["catalog", "unit", "2", "--field", "gf:3"]).stdout).unwrap();
    assert_eq!(run(&["verify", path.to_str().unwrap(), "--tensor", t.to_str().unwrap()]).status.code(), Some(5));
}

#[test]
fn field_flag_must_match_input() {
    let w = run(&["catalog", "w_tensor", "--field", "gf:2"]);
    assert_eq!(run_stdin(&["info", "--field", "gf:3"], &w.stdout).status.code(), Some(1));
}

#[test]
fn scan_is_deterministic_across_threads() {
    let one = run(&["scan", "--dims", "2,2,2", "--field", "gf:2", "--threads", "1"]);
    let two = run(&["scan", "--dims", "2,2,2", "--field", "gf:2", "--threads", "3"]);
    assert!(one.status.success());
    assert_eq!(one.stdout, two.stdout);
    let s = stdout(&one);
    assert!(s.contains("tensors 256"));
    assert!(s.contains("chain violations 0"));
}

#[test]
fn scan_chunks_resume() {
    let a = run(&["scan", "--dims", "1,2,3", "--field", "gf:2", "--start", "0", "--count", "40"]);
    let b = run(&["scan", "--dims", "1,2,3", "--field", "gf:2", "--start", "40"]);
    let count = |o: &Output| -> u64 {
        stdout(o).lines().find_map(|l| l.strip_prefix("tensors ").map(|v| v.parse().unwrap())).unwrap()
    };
    assert_eq!(count(&a) + count(&b), 64);
}

#[test]
fn bounds_are_consistent() {
    let t = run(&["catalog", "null_algebra", "4", "--field", "gf:5"]);
    let o = run_stdin(&["bounds", "--format", "kv"], &t.stdout);
    assert!(o.status.success());
    assert_eq!(kv(&o, "asymptotic_upper"), "4");
    assert_eq!(kv(&o, "q2"), "2..2 exhaustive");
}

#[test]
fn same_seed_same_output() {
    let t = run(&["catalog", "balanced_pivot", "4", "--field", "q"]);
    let a = run_stdin(&["maxrank", "--seed", "7", "--format", "kv"], &t.stdout);
    let b = run_stdin(&["maxrank", "--seed", "7", "--format", "kv"], &t.stdout);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}
