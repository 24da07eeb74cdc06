//! The three timed experiments: single GEMMs, GEMM chains, attention layers.

use anyhow::{bail, ensure, Context, Result};
use layout_gemm::attention::{
    attention_canonical, attention_input, attention_lp, attention_reference, mlp_block, mlp_canonical, mlp_reference,
    AttentionConfig, AttentionWeights, MlpWeights,
};
use layout_gemm::compare::{max_rel_error, ABS_FLOOR};
use layout_gemm::{
    chain_naive, gemm_naive, pack_to_propagated, Activation, ChainSpec, GemmExecutor, GemmProblem, Matrix,
    PackCounters, PropagatedLayout, TileParams,
};

use crate::config::RunSettings;
use crate::record::{set_speedups, BenchRecord, Problem};
use crate::sizes::GemmShape;
use crate::timing::time_reps;

/// Kernel rows per size, in output order.
pub const SINGLE_KERNELS: [&str; 4] = ["default", "ini", "mid", "end"];
pub const CHAIN_VARIANTS: [&str; 3] = ["naive", "default", "lp"];
pub const ATTENTION_KERNELS: [&str; 4] = ["attention_baseline", "attention_lp", "mlp_baseline", "mlp_lp"];

/// Relative error allowed by the pre-run correctness checks.
pub const GEMM_TOL: f32 = 1e-4;
pub const ATTENTION_TOL: f32 = 1e-3;
pub const ATTENTION_FLOOR: f32 = 1e-5;

fn check(label: &str, got: &[f32], want: &[f32], tol: f32, floor: f32) -> Result<()> {
    let err = max_rel_error(got, want, floor);
    if !(err <= tol) {
        bail!("correctness check failed for {label}: max relative error {err:e} > {tol:e}");
    }
    Ok(())
}

/// Times `default`, `ini`, `mid` and `end` on every shape.
///
/// `mid` and `end` receive a multiplier packed outside the timed region. The
/// first shape is checked against the naive oracle before anything is timed.
pub fn bench_single(shapes: &[GemmShape], s: &RunSettings) -> Result<Vec<BenchRecord>> {
    let mut exec = GemmExecutor::new(s.params)?;
    let mut rows = Vec::with_capacity(shapes.len() * SINGLE_KERNELS.len());
    for (idx, sh) in shapes.iter().enumerate() {
        let GemmShape { m, n, k } = *sh;
        let a = Matrix::random(m, k, s.seed.wrapping_add(2 * idx as u64));
        let b = Matrix::random(k, n, s.seed.wrapping_add(2 * idx as u64 + 1));
        let problem = GemmProblem::new(m, n, k);
        let packed_a = pack_to_propagated(&a.view(), &s.params)?;
        let out_len = PropagatedLayout::new(m, n, s.params)?.len();
        // Faulted in before timing.
        let mut c = Matrix::from_fn(m, n, |_, _| 1.0);
        let mut prop = vec![1.0f32; out_len];

        if idx == 0 {
            let mut want = Matrix::zeros(m, n);
            gemm_naive(&problem, &a.view(), &b.view(), &mut want.view_mut())?;
            let mut scratch = PackCounters::new();
            exec.gemm_default(&problem, &a.view(), &b.view(), &mut c.view_mut(), &mut scratch)?;
            check("default", c.data(), want.data(), GEMM_TOL, ABS_FLOOR)?;
            check("ini", exec.gemm_ini(&a.view(), &b.view(), &mut scratch)?.to_canonical().data(), want.data(), GEMM_TOL, ABS_FLOOR)?;
            check("mid", exec.gemm_mid(&packed_a, &b.view(), &mut scratch)?.to_canonical().data(), want.data(), GEMM_TOL, ABS_FLOOR)?;
            exec.gemm_end(&packed_a, &b.view(), &mut c.view_mut(), &mut scratch)?;
            check("end", c.data(), want.data(), GEMM_TOL, ABS_FLOOR)?;
        }

        let p = Problem { experiment: "single", m, n, k, depth: 1, n_tokens: 0, flops: problem.flops() };
        let store = layout_gemm::StoreSpec::dense();
        let mut group = Vec::with_capacity(SINGLE_KERNELS.len());
        for kernel in SINGLE_KERNELS {
            let mut run = |exec: &mut GemmExecutor, counters: &mut PackCounters| -> Result<()> {
                match kernel {
                    "default" => exec.gemm_default(&problem, &a.view(), &b.view(), &mut c.view_mut(), counters)?,
                    "ini" => exec.gemm_ini_into(&a.view(), &b.view(), &store, &mut prop, counters)?,
                    "mid" => exec.gemm_mid_into(&packed_a, &b.view(), &store, &mut prop, counters)?,
                    _ => exec.gemm_end(&packed_a, &b.view(), &mut c.view_mut(), counters)?,
                }
                Ok(())
            };
            let mut counters = PackCounters::new();
            run(&mut exec, &mut counters)?;
            let mut failure = None;
            let timing = time_reps(s.warmup, s.reps, || {
                if let Err(e) = run(&mut exec, &mut PackCounters::new()) {
                    failure.get_or_insert(e);
                }
            });
            if let Some(e) = failure {
                return Err(e.context(format!("{kernel} on {m}x{n}x{k}")));
            }
            group.push(BenchRecord::new(&p, kernel, &timing, s.warmup, &counters));
        }
        let base = group[0].median_ns;
        set_speedups(&mut group, base);
        rows.extend(group);
    }
    Ok(rows)
}

/// Input and weights of one chain: input `M x K`, first weight `K x N`, the rest `N x N`.
pub struct ChainData {
    pub input: Matrix,
    pub weights: Vec<Matrix>,
}

impl ChainData {
    pub fn generate(shape: GemmShape, depth: usize, seed: u64) -> Result<Self> {
        ensure!(depth >= 1, "chain depth must be at least 1");
        let GemmShape { m, n, k } = shape;
        let scale = |mut w: Matrix| {
            let f = 1.0 / (w.rows() as f32).sqrt();
            w.data_mut().iter_mut().for_each(|v| *v *= f);
            w
        };
        let weights = (0..depth)
            .map(|d| scale(Matrix::random(if d == 0 { k } else { n }, n, seed.wrapping_add(d as u64 + 1))))
            .collect();
        Ok(ChainData { input: Matrix::random(m, k, seed), weights })
    }

    pub fn spec(&self) -> ChainSpec<'_> {
        self.weights
            .iter()
            .fold(ChainSpec::new(self.input.view()), |spec, w| spec.stage(w.view(), Activation::None))
    }
}

/// Times each chain variant; the `default` variant is the speedup baseline.
pub fn bench_chain(shapes: &[GemmShape], depth: usize, with_naive: bool, s: &RunSettings) -> Result<Vec<BenchRecord>> {
    let mut exec = GemmExecutor::new(s.params)?;
    let mut rows = Vec::new();
    for (idx, sh) in shapes.iter().enumerate() {
        let data = ChainData::generate(*sh, depth, s.seed.wrapping_add(1000 * idx as u64))?;
        let spec = data.spec();
        spec.validate().with_context(|| format!("chain {}x{}x{}", sh.m, sh.n, sh.k))?;
        if idx == 0 {
            let want = chain_naive(&spec)?;
            let mut scratch = PackCounters::new();
            check("chain default", exec.chain_default(&spec, &mut scratch)?.data(), want.data(), GEMM_TOL, ABS_FLOOR)?;
            check("chain lp", exec.chain_gemm(&spec, &mut scratch)?.data(), want.data(), GEMM_TOL, ABS_FLOOR)?;
        }
        let p = Problem { experiment: "chain", m: sh.m, n: sh.n, k: sh.k, depth, n_tokens: 0, flops: spec.flops() };
        let mut group = Vec::new();
        for variant in CHAIN_VARIANTS {
            if variant == "naive" && !with_naive {
                continue;
            }
            let run = |exec: &mut GemmExecutor, counters: &mut PackCounters| -> Result<Matrix> {
                Ok(match variant {
                    "naive" => chain_naive(&spec)?,
                    "default" => exec.chain_default(&spec, counters)?,
                    _ => exec.chain_gemm(&spec, counters)?,
                })
            };
            let mut counters = PackCounters::new();
            run(&mut exec, &mut counters)?;
            let timing = time_reps(s.warmup, s.reps, || {
                std::hint::black_box(run(&mut exec, &mut PackCounters::new()).expect("validated chain"));
            });
            group.push(BenchRecord::new(&p, variant, &timing, s.warmup, &counters));
        }
        let base = group.iter().find(|r| r.kernel == "default").map(|r| r.median_ns).unwrap();
        set_speedups(&mut group, base);
        rows.extend(group);
    }
    Ok(rows)
}

/// Attention sweep shape, shared by every token count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttentionSweep {
    pub embed: usize,
    pub heads: usize,
    pub kv_heads: usize,
    pub head_dim: usize,
    pub hidden: usize,
    pub causal: bool,
}

impl AttentionSweep {
    pub fn config(&self, n_tokens: usize, seed: u64) -> AttentionConfig {
        AttentionConfig {
            n_tokens,
            embed_dim: self.embed,
            n_heads: self.heads,
            n_kv_heads: self.kv_heads,
            head_dim: self.head_dim,
            causal: self.causal,
            seed,
            ..AttentionConfig::default()
        }
    }
}

/// For each token count: attention on `gemm_default` against the propagated
/// pipeline, and the MLP block both ways. Baselines are the `*_baseline` rows.
pub fn bench_attention(tokens: &[usize], sweep: &AttentionSweep, s: &RunSettings) -> Result<Vec<BenchRecord>> {
    ensure!(!tokens.is_empty(), "empty token range");
    let first = sweep.config(tokens[0], s.seed);
    first.validate()?;
    let lp_params = first.tile_params(&s.params)?;
    let mut base_exec = GemmExecutor::new(s.params)?;
    let mut lp_exec = GemmExecutor::new(lp_params)?;
    let weights = AttentionWeights::generate(&first);
    let mlp = MlpWeights::generate(sweep.embed, sweep.hidden, Activation::Relu, s.seed.wrapping_add(7));

    let mut rows = Vec::new();
    for (idx, &n_tokens) in tokens.iter().enumerate() {
        let cfg = sweep.config(n_tokens, s.seed);
        let x = attention_input(&cfg);
        let x = x.view();
        if idx == 0 {
            let want = attention_reference(&cfg, &weights, &x)?;
            let mut scratch = PackCounters::new();
            let base = attention_canonical(&cfg, &weights, &x, &mut base_exec, &mut scratch)?;
            let lp = attention_lp(&cfg, &weights, &x, &mut lp_exec, &mut scratch)?;
            check("attention baseline", base.data(), want.data(), ATTENTION_TOL, ATTENTION_FLOOR)?;
            check("attention lp", lp.data(), want.data(), ATTENTION_TOL, ATTENTION_FLOOR)?;
            let want = mlp_reference(&mlp, &x)?;
            check("mlp baseline", mlp_canonical(&mlp, &x, &mut base_exec, &mut scratch)?.data(), want.data(), GEMM_TOL, ABS_FLOOR)?;
            check("mlp lp", mlp_block(&mlp, &x, &mut base_exec, &mut scratch)?.data(), want.data(), GEMM_TOL, ABS_FLOOR)?;
        }
        for (pair, names) in ATTENTION_KERNELS.chunks(2).enumerate() {
            let is_attn = pair == 0;
            let (m, n, k, flops) = if is_attn {
                (n_tokens, sweep.embed, sweep.embed, cfg.flops())
            } else {
                (n_tokens, sweep.embed, sweep.hidden, mlp.flops(n_tokens))
            };
            let p = Problem { experiment: "attention", m, n, k, depth: if is_attn { 1 } else { 2 }, n_tokens, flops };
            let mut group = Vec::new();
            for (lp, &name) in names.iter().enumerate() {
                let lp = lp == 1;
                let mut run = |counters: &mut PackCounters| -> layout_gemm::Result<Matrix> {
                    match (is_attn, lp) {
                        (true, false) => attention_canonical(&cfg, &weights, &x, &mut base_exec, counters),
                        (true, true) => attention_lp(&cfg, &weights, &x, &mut lp_exec, counters),
                        (false, false) => mlp_canonical(&mlp, &x, &mut base_exec, counters),
                        (false, true) => mlp_block(&mlp, &x, &mut base_exec, counters),
                    }
                };
                let mut counters = PackCounters::new();
                run(&mut counters)?;
                let timing = time_reps(s.warmup, s.reps, || {
                    std::hint::black_box(run(&mut PackCounters::new()).expect("validated config"));
                });
                group.push(BenchRecord::new(&p, name, &timing, s.warmup, &counters));
            }
            let base = group[0].median_ns;
            set_speedups(&mut group, base);
            rows.extend(group);
        }
    }
    Ok(rows)
}

/// Tile parameters the attention LP path runs with for `sweep` under `base`.
pub fn attention_params(sweep: &AttentionSweep, base: &TileParams) -> Result<TileParams> {
    Ok(sweep.config(1, 0).tile_params(base)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sizes::parse_sizes;

    fn quick(params: TileParams) -> RunSettings {
        RunSettings { reps: 2, warmup: 0, seed: 3, params }
    }

    #[test]
    fn single_emits_four_rows_per_size() {
        let shapes = parse_sizes("64 64 64\n17 5 9\n").unwrap();
        let rows = bench_single(&shapes, &quick(TileParams::new(16, 16, 16, 4, 4).unwrap())).unwrap();
        assert_eq!(rows.len(), 8);
        let kernels: Vec<_> = rows.iter().map(|r| r.kernel.as_str()).collect();
        assert_eq!(kernels[..4], SINGLE_KERNELS);
        assert!(rows.iter().all(|r| r.reps == 2 && r.gflops > 0.0));
        assert_eq!(rows[0].speedup_vs_baseline, 1.0);
        for r in &rows[2..4] {
            assert_eq!(r.multiplier_pack_elems, 0, "{}", r.kernel);
        }
        assert!(rows[0].multiplier_pack_elems > 0);
    }

    #[test]
    fn gflops_matches_hand_arithmetic() {
        let shapes = parse_sizes("32 48 40").unwrap();
        let r = &bench_single(&shapes, &quick(TileParams::DESK)).unwrap()[0];
        let by_hand = 2.0 * 32.0 * 48.0 * 40.0 / (r.median_ns as f64 * 1e-9) / 1e9;
        assert!((r.gflops - by_hand).abs() <= 1e-9 * by_hand);
    }

    #[test]
    fn chain_rows_and_structure() {
        let shapes = parse_sizes("40 24 32").unwrap();
        let rows = bench_chain(&shapes, 2, true, &quick(TileParams::new(8, 8, 8, 4, 4).unwrap())).unwrap();
        let kernels: Vec<_> = rows.iter().map(|r| r.kernel.as_str()).collect();
        assert_eq!(kernels, CHAIN_VARIANTS);
        assert!(rows[2].multiplier_pack_elems < rows[1].multiplier_pack_elems);
        let no_naive = bench_chain(&shapes, 2, false, &quick(TileParams::DESK)).unwrap();
        assert_eq!(no_naive.len(), 2);
    }

    #[test]
    fn attention_single_point_has_four_rows() {
        let sweep = AttentionSweep { embed: 64, heads: 4, kv_heads: 2, head_dim: 16, hidden: 96, causal: true };
        let rows = bench_attention(&[16], &sweep, &quick(TileParams::new(16, 16, 32, 4, 4).unwrap())).unwrap();
        let kernels: Vec<_> = rows.iter().map(|r| r.kernel.as_str()).collect();
        assert_eq!(kernels, ATTENTION_KERNELS);
        assert!(rows.iter().all(|r| r.n_tokens == 16));
    }

    #[test]
    fn non_timing_columns_are_reproducible() {
        let shapes = parse_sizes("20 12 28").unwrap();
        let strip = |mut rows: Vec<BenchRecord>| {
            for r in &mut rows {
                (r.mean_ns, r.median_ns, r.min_ns, r.gflops, r.speedup_vs_baseline) = (0, 0, 0, 0.0, 0.0);
            }
            rows
        };
        let s = quick(TileParams::DESK);
        assert_eq!(strip(bench_single(&shapes, &s).unwrap()), strip(bench_single(&shapes, &s).unwrap()));
    }
}
