//! Oracle checks behind `lgemm verify`.

use std::fmt::Write as _;

use layout_gemm::attention::{attention_input, attention_lp, attention_reference, AttentionConfig, AttentionWeights};
use layout_gemm::compare::{bit_equal, max_abs_diff, max_rel_error, ABS_FLOOR};
use layout_gemm::layout_ops::{
    rope_canonical, rope_inplace, scale_canonical, scale_inplace, softmax_rows, softmax_rows_canonical, Mask, ROPE_THETA,
};
use layout_gemm::{
    gemm_naive, microkernel_default, microkernel_propagate, pack_to_propagated, unpack_propagated, ChainSpec,
    Activation, GemmExecutor, GemmProblem, Matrix, PackCounters, PropagatedLayout, StoreSpec, TileParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SUITES: [&str; 5] = ["packing", "microkernel", "kernels", "layout_ops", "attention"];

#[derive(Debug, Clone, Copy, Default)]
pub struct VerifyOptions {
    /// Perturbs one element of every propagated kernel result before it is
    /// compared, to show the harness reports failures.
    pub inject_fault: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub suite: &'static str,
    pub name: &'static str,
    pub cases: usize,
    pub outcome: Result<(), String>,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.outcome.is_ok()
    }
}

type Check = fn(&mut ChaCha8Rng, &VerifyOptions) -> (usize, Result<(), String>);

fn checks(suite: &str) -> &'static [(&'static str, Check)] {
    match suite {
        "packing" => &[("layout bijection", layout_bijection), ("pack round-trip", pack_round_trip), ("store round-trip", store_round_trip)],
        "microkernel" => &[("propagate equals default", microkernel_equivalence)],
        "kernels" => &[("kernels vs oracle", kernels_vs_oracle), ("chain vs oracle", chain_vs_oracle), ("mid/end skip multiplier packing", mid_end_counters)],
        "layout_ops" => &[("operators match canonical", layout_ops_transparency), ("softmax sums and rope norms", layout_ops_invariants)],
        "attention" => &[("attention vs oracle", attention_vs_oracle)],
        _ => &[],
    }
}

/// Runs the named suites (all when `filter` is empty). Unknown names are an error.
pub fn run(filter: &[String], opts: &VerifyOptions) -> Result<Vec<CheckResult>, String> {
    let selected: Vec<&'static str> = if filter.is_empty() {
        SUITES.to_vec()
    } else {
        let mut out = Vec::new();
        for f in filter {
            let s = SUITES.iter().find(|s| **s == f).ok_or_else(|| format!("unknown suite `{f}` (have {})", SUITES.join(", ")))?;
            out.push(*s);
        }
        out
    };
    let mut results = Vec::new();
    for suite in selected {
        for (name, check) in checks(suite) {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ fxhash(name));
            let (cases, outcome) = check(&mut rng, opts);
            results.push(CheckResult { suite, name, cases, outcome });
        }
    }
    Ok(results)
}

fn fxhash(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}

pub fn render_table(results: &[CheckResult]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<12} {:<34} {:>6}  result", "suite", "check", "cases");
    for r in results {
        let status = match &r.outcome {
            Ok(()) => "PASS".to_string(),
            Err(e) => format!("FAIL: {e}"),
        };
        let _ = writeln!(out, "{:<12} {:<34} {:>6}  {status}", r.suite, r.name, r.cases);
    }
    let failed = results.iter().filter(|r| !r.passed()).count();
    let _ = writeln!(out, "{} checks, {} failed", results.len(), failed);
    out
}

fn random_params(rng: &mut ChaCha8Rng) -> TileParams {
    let mr = [1, 2, 4, 8][rng.random_range(0..4)];
    let nr = [1, 2, 4, 8][rng.random_range(0..4)];
    TileParams::new(mr * rng.random_range(1..5), nr * rng.random_range(1..5), rng.random_range(1..40), mr, nr).unwrap()
}

fn fault(data: &mut [f32], opts: &VerifyOptions) {
    if opts.inject_fault {
        if let Some(v) = data.first_mut() {
            *v += 0.5;
        }
    }
}

fn e<T: std::fmt::Display>(x: T) -> String {
    x.to_string()
}

fn layout_bijection(rng: &mut ChaCha8Rng, _: &VerifyOptions) -> (usize, Result<(), String>) {
    let cases = 60;
    let r = (|| {
        for _ in 0..cases {
            let p = random_params(rng);
            let (rows, cols) = (rng.random_range(1..48), rng.random_range(1..48));
            let layout = PropagatedLayout::new(rows, cols, p).map_err(e)?;
            let mut seen = vec![false; layout.len()];
            for i in 0..layout.pad_rows() {
                for j in 0..layout.pad_cols() {
                    let o = layout.offset(i, j).map_err(e)?;
                    if o >= seen.len() || std::mem::replace(&mut seen[o], true) {
                        return Err(format!("offset {o} repeated or out of range for {rows}x{cols} {p}"));
                    }
                }
            }
            if !seen.iter().all(|&s| s) {
                return Err(format!("offsets not onto for {rows}x{cols} {p}"));
            }
        }
        Ok(())
    })();
    (cases, r)
}

fn pack_round_trip(rng: &mut ChaCha8Rng, _: &VerifyOptions) -> (usize, Result<(), String>) {
    let cases = 50;
    let r = (|| {
        for _ in 0..cases {
            let p = random_params(rng);
            let x = Matrix::random_with(rng.random_range(1..65), rng.random_range(1..65), rng);
            let packed = pack_to_propagated(&x.view(), &p).map_err(e)?;
            let mut back = Matrix::zeros(x.rows(), x.cols());
            unpack_propagated(&packed, &mut back.view_mut()).map_err(e)?;
            if !bit_equal(back.data(), x.data()) || !packed.padding_is_zero() {
                return Err(format!("round-trip differs for {:?} {p}", x.dims()));
            }
        }
        Ok(())
    })();
    (cases, r)
}

fn store_round_trip(rng: &mut ChaCha8Rng, _: &VerifyOptions) -> (usize, Result<(), String>) {
    let cases = 30;
    let r = (|| {
        for _ in 0..cases {
            let p = random_params(rng);
            let x = Matrix::random_with(rng.random_range(1..40), rng.random_range(1..40), rng);
            let packed = pack_to_propagated(&x.view(), &p).map_err(e)?;
            let store = StoreSpec::at_offset(rng.random_range(0..17));
            let mut buf = vec![0.0; store.required_len(packed.layout()).map_err(e)?];
            store.scatter(&packed, &mut buf).map_err(e)?;
            let back = store.gather(packed.layout(), &buf).map_err(e)?;
            if !bit_equal(back.data(), packed.data()) {
                return Err(format!("store round-trip differs for {:?} {p}", x.dims()));
            }
        }
        Ok(())
    })();
    (cases, r)
}

fn microkernel_equivalence(rng: &mut ChaCha8Rng, _: &VerifyOptions) -> (usize, Result<(), String>) {
    let cases = 300;
    let r = (|| {
        for _ in 0..cases {
            let (mr, nr, kc) = ([1, 2, 4, 8, 16][rng.random_range(0..5)], [1, 2, 4, 8][rng.random_range(0..4)], rng.random_range(1..64));
            let sa = Matrix::random_with(1, mr * kc, rng).into_vec();
            let sb = Matrix::random_with(1, nr * kc, rng).into_vec();
            let mut canonical = Matrix::zeros(mr, nr);
            microkernel_default(&sa, &sb, kc, (mr, nr), &mut canonical.view_mut(), false).map_err(e)?;
            let mut tile = vec![0.0; mr * nr];
            microkernel_propagate(&sa, &sb, kc, (mr, nr), &mut tile, false).map_err(e)?;
            let unpacked = Matrix::from_fn(mr, nr, |r, c| tile[c * mr + r]);
            if !bit_equal(unpacked.data(), canonical.data()) {
                return Err(format!("tile {mr}x{nr} kc={kc} differs"));
            }
        }
        Ok(())
    })();
    (cases, r)
}

fn kernels_vs_oracle(rng: &mut ChaCha8Rng, opts: &VerifyOptions) -> (usize, Result<(), String>) {
    let cases = 60;
    let r = (|| {
        for _ in 0..cases {
            let p = random_params(rng);
            let (m, n, k) = (rng.random_range(1..97), rng.random_range(1..97), rng.random_range(1..97));
            let a = Matrix::random_with(m, k, rng);
            let b = Matrix::random_with(k, n, rng);
            let problem = GemmProblem::new(m, n, k);
            let mut want = Matrix::zeros(m, n);
            gemm_naive(&problem, &a.view(), &b.view(), &mut want.view_mut()).map_err(e)?;
            let mut exec = GemmExecutor::new(p).map_err(e)?;
            let mut counters = PackCounters::new();
            let mut c = Matrix::zeros(m, n);
            exec.gemm_default(&problem, &a.view(), &b.view(), &mut c.view_mut(), &mut counters).map_err(e)?;
            let mut ini = exec.gemm_ini(&a.view(), &b.view(), &mut counters).map_err(e)?.to_canonical();
            let packed = pack_to_propagated(&a.view(), &p).map_err(e)?;
            let mut mid = exec.gemm_mid(&packed, &b.view(), &mut counters).map_err(e)?.to_canonical();
            let mut end = Matrix::zeros(m, n);
            exec.gemm_end(&packed, &b.view(), &mut end.view_mut(), &mut counters).map_err(e)?;
            fault(ini.data_mut(), opts);
            fault(mid.data_mut(), opts);
            for (name, got) in [("default", &c), ("ini", &ini), ("mid", &mid), ("end", &end)] {
                let err = max_rel_error(got.data(), want.data(), ABS_FLOOR);
                if !(err <= 1e-4) {
                    return Err(format!("{name} on {m}x{n}x{k} {p}: rel err {err:e}"));
                }
            }
        }
        Ok(())
    })();
    (cases, r)
}

fn chain_vs_oracle(rng: &mut ChaCha8Rng, opts: &VerifyOptions) -> (usize, Result<(), String>) {
    let cases = 20;
    let r = (|| {
        for _ in 0..cases {
            let p = random_params(rng);
            let depth = rng.random_range(1..5);
            let (m, n, k) = (rng.random_range(1..60), rng.random_range(1..60), rng.random_range(1..60));
            let x = Matrix::random_with(m, k, rng);
            let ws: Vec<Matrix> = (0..depth).map(|d| Matrix::random_with(if d == 0 { k } else { n }, n, rng)).collect();
            let spec = ws.iter().fold(ChainSpec::new(x.view()), |s, w| s.stage(w.view(), Activation::Relu));
            let want = layout_gemm::chain_naive(&spec).map_err(e)?;
            let mut got = GemmExecutor::new(p).map_err(e)?.chain_gemm(&spec, &mut PackCounters::new()).map_err(e)?;
            fault(got.data_mut(), opts);
            let err = max_rel_error(got.data(), want.data(), ABS_FLOOR);
            if !(err <= 1e-4) {
                return Err(format!("depth {depth} chain {m}x{n}x{k} {p}: rel err {err:e}"));
            }
        }
        Ok(())
    })();
    (cases, r)
}

fn mid_end_counters(rng: &mut ChaCha8Rng, _: &VerifyOptions) -> (usize, Result<(), String>) {
    let cases = 30;
    let r = (|| {
        for _ in 0..cases {
            let p = random_params(rng);
            let (m, n, k) = (rng.random_range(1..70), rng.random_range(1..70), rng.random_range(1..70));
            let a = pack_to_propagated(&Matrix::random_with(m, k, rng).view(), &p).map_err(e)?;
            let b = Matrix::random_with(k, n, rng);
            let mut exec = GemmExecutor::new(p).map_err(e)?;
            let mut counters = PackCounters::new();
            exec.gemm_mid(&a, &b.view(), &mut counters).map_err(e)?;
            exec.gemm_end(&a, &b.view(), &mut Matrix::zeros(m, n).view_mut(), &mut counters).map_err(e)?;
            if counters.multiplier_pack_elems != 0 {
                return Err(format!("{} multiplier elements packed for {m}x{n}x{k} {p}", counters.multiplier_pack_elems));
            }
        }
        Ok(())
    })();
    (cases, r)
}

fn layout_ops_transparency(rng: &mut ChaCha8Rng, _: &VerifyOptions) -> (usize, Result<(), String>) {
    let cases = 40;
    let r = (|| {
        for _ in 0..cases {
            let p = random_params(rng);
            let head_dim = 2 * rng.random_range(1..6);
            let (rows, cols) = (rng.random_range(1..40), head_dim * rng.random_range(1..4));
            let x = Matrix::random_with(rows, cols, rng);
            let pos: Vec<usize> = (0..rows).collect();
            let mask = Mask::causal();
            let mut a = pack_to_propagated(&x.view(), &p).map_err(e)?;
            let mut b = x.clone();
            scale_inplace(&mut a, 0.7);
            scale_canonical(&mut b.view_mut(), 0.7);
            rope_inplace(&mut a, head_dim, &pos, ROPE_THETA).map_err(e)?;
            rope_canonical(&mut b.view_mut(), head_dim, &pos, ROPE_THETA).map_err(e)?;
            softmax_rows(&mut a, Some(&mask)).map_err(e)?;
            softmax_rows_canonical(&mut b.view_mut(), Some(&mask)).map_err(e)?;
            let d = max_abs_diff(a.to_canonical().data(), b.data());
            if !(d <= 1e-6) {
                return Err(format!("{rows}x{cols} {p}: max abs diff {d:e}"));
            }
        }
        Ok(())
    })();
    (cases, r)
}

fn layout_ops_invariants(rng: &mut ChaCha8Rng, _: &VerifyOptions) -> (usize, Result<(), String>) {
    let cases = 40;
    let r = (|| {
        for _ in 0..cases {
            let (rows, cols) = (rng.random_range(1..40), 2 * rng.random_range(1..20));
            let mut x = Matrix::random_with(rows, cols, rng);
            x.data_mut().iter_mut().for_each(|v| *v *= 8.0);
            let mut s = x.clone();
            softmax_rows_canonical(&mut s.view_mut(), None).map_err(e)?;
            for i in 0..rows {
                let sum: f64 = s.view().row(i).iter().map(|&v| v as f64).sum();
                if (sum - 1.0).abs() > 1e-6 {
                    return Err(format!("softmax row {i} sums to {sum}"));
                }
            }
            let mut r = x.clone();
            let pos: Vec<usize> = (0..rows).map(|i| i * 5).collect();
            rope_canonical(&mut r.view_mut(), cols, &pos, ROPE_THETA).map_err(e)?;
            for i in 0..rows {
                for pair in 0..cols / 2 {
                    let norm = |m: &Matrix| (m.get(i, 2 * pair) as f64).hypot(m.get(i, 2 * pair + 1) as f64);
                    let (before, after) = (norm(&x), norm(&r));
                    if (after - before).abs() > 1e-6 * before.max(1e-6) {
                        return Err(format!("rope changed pair norm {before} -> {after}"));
                    }
                }
            }
        }
        Ok(())
    })();
    (cases, r)
}

fn attention_vs_oracle(rng: &mut ChaCha8Rng, opts: &VerifyOptions) -> (usize, Result<(), String>) {
    let mut cases = 0;
    let r = (|| {
        for &n in &[4, 16, 33] {
            for &(heads, kv) in &[(1, 1), (4, 1), (4, 2)] {
                cases += 1;
                let mut cfg = AttentionConfig::new(n, heads * 8, heads, kv);
                cfg.seed = rng.random();
                let w = AttentionWeights::generate(&cfg);
                let x = attention_input(&cfg);
                let want = attention_reference(&cfg, &w, &x.view()).map_err(e)?;
                let params = cfg.tile_params(&TileParams::new(8, 8, 16, 4, 4).unwrap()).map_err(e)?;
                let mut exec = GemmExecutor::new(params).map_err(e)?;
                let mut got = attention_lp(&cfg, &w, &x.view(), &mut exec, &mut PackCounters::new()).map_err(e)?;
                fault(got.data_mut(), opts);
                let err = max_rel_error(got.data(), want.data(), 1e-5);
                if !(err <= 1e-3) {
                    return Err(format!("tokens {n} heads {heads}/{kv}: rel err {err:e}"));
                }
            }
        }
        Ok(())
    })();
    (cases, r)
}
