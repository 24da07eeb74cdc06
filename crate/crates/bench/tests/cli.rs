use std::path::PathBuf;
use std::process::{Command, Output};

use layout_gemm_bench::record::read_csv;

fn lgemm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lgemm")).args(args).output().expect("spawn lgemm")
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let p = std::env::temp_dir().join(format!("lgemm-cli-{}-{name}", std::process::id()));
    std::fs::write(&p, contents).unwrap();
    p
}

#[test]
fn verify_passes_and_prints_table() {
    let out = lgemm(&["verify"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    for suite in ["packing", "microkernel", "kernels", "layout_ops", "attention"] {
        assert!(text.contains(suite), "{suite} missing from\n{text}");
    }
    assert!(!text.contains("FAIL"));
}

#[test]
fn verify_filter_and_injected_fault() {
    let out = lgemm(&["verify", "--filter", "kernels"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success());
    assert!(text.lines().skip(1).filter(|l| l.starts_with("kernels")).count() >= 1);
    assert!(text.lines().skip(1).all(|l| !l.starts_with("packing")));

    let out = lgemm(&["verify", "--filter", "kernels", "--inject-fault"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));

    assert!(!lgemm(&["verify", "--filter", "bogus"]).status.success());
}

#[test]
fn single_writes_four_rows_with_requested_reps() {
    let sizes = scratch("one.txt", "# one problem\n64 64 64\n");
    let csv = std::env::temp_dir().join(format!("lgemm-cli-{}-one.csv", std::process::id()));
    let out = lgemm(&["bench", "single", "--sizes", sizes.to_str().unwrap(), "--reps", "10", "--warmup", "1", "--out", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_csv(std::fs::File::open(&csv).unwrap()).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.reps == 10 && r.warmup == 1));
}

#[test]
fn malformed_sizes_name_the_line() {
    let sizes = scratch("bad.txt", "64 64 64\n# ok\n12 x 3\n");
    let out = lgemm(&["bench", "single", "--sizes", sizes.to_str().unwrap(), "--reps", "1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let sizes = scratch("cfg-sizes.txt", "32 16 24\n");
    let cfg = scratch("cfg.toml", "reps = 3\nwarmup = 0\n[tiles]\nmc = 8\nmr = 4\n");
    let out = lgemm(&["bench", "single", "--sizes", sizes.to_str().unwrap(), "--config", cfg.to_str().unwrap(), "--reps", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_csv(&out.stdout[..]).unwrap();
    assert!(rows.iter().all(|r| r.reps == 2 && r.warmup == 0));

    let bad = scratch("bad.toml", "[tiles]\nmc = 6\nmr = 4\n");
    assert!(!lgemm(&["bench", "single", "--sizes", sizes.to_str().unwrap(), "--config", bad.to_str().unwrap()]).status.success());
}

#[test]
fn chain_and_attention_row_structure() {
    let sizes = scratch("chain.txt", "48 32 40\n");
    let out = lgemm(&["bench", "chain", "--depth", "2", "--sizes", sizes.to_str().unwrap(), "--reps", "1", "--warmup", "0"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_csv(&out.stdout[..]).unwrap();
    assert_eq!(rows.iter().map(|r| r.kernel.as_str()).collect::<Vec<_>>(), ["naive", "default", "lp"]);
    assert!(rows.iter().all(|r| r.depth == 2));

    let out = lgemm(&[
        "bench", "attention", "--tokens", "8..16..8", "--embed", "64", "--heads", "4", "--kv-heads", "2", "--hidden", "128",
        "--causal", "false", "--reps", "1", "--warmup", "0",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_csv(&out.stdout[..]).unwrap();
    assert_eq!(rows.len(), 8);
    assert_eq!(rows.iter().map(|r| r.n_tokens).collect::<Vec<_>>(), [8, 8, 8, 8, 16, 16, 16, 16]);

    assert!(!lgemm(&["bench", "attention", "--tokens", "0..4"]).status.success());
}
