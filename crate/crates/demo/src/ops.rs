//! The demo's operations in plain Rust, shared by the wasm exports and host tests.

use layout_gemm::attention::{attention_input, attention_lp, attention_reference, AttentionConfig, AttentionWeights};
use layout_gemm::compare::{max_abs_diff, max_rel_error};
use layout_gemm::layout_ops::{rope_canonical, rope_inplace, scale_inplace, softmax_rows, softmax_rows_canonical, Mask};
use layout_gemm::{
    chain_default, chain_gemm, gemm_naive, Activation, ChainSpec, GemmExecutor, GemmProblem, Matrix, PackCounters,
    PropagatedLayout, TileParams,
};

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Storage offset of every element of the padded `pad_rows x pad_cols` grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LayoutGrid {
    pub rows: usize,
    pub cols: usize,
    pub pad_rows: usize,
    pub pad_cols: usize,
    pub block_count: usize,
    pub offsets: Vec<u32>,
    /// Index of the outer block holding each element, same order as `offsets`.
    pub blocks: Vec<u32>,
}

pub fn layout_grid(rows: usize, cols: usize, mc: usize, nc: usize, mr: usize, nr: usize) -> Result<LayoutGrid, String> {
    if rows * cols > 1 << 16 {
        return Err(format!("{rows}x{cols} is too large to draw"));
    }
    // kc plays no part in the output layout.
    let params = TileParams::new(mc, nc, 1, mr, nr).map_err(err)?;
    let layout = PropagatedLayout::new(rows, cols, params).map_err(err)?;
    let (pr, pc) = (layout.pad_rows(), layout.pad_cols());
    let mut offsets = Vec::with_capacity(pr * pc);
    let mut blocks = Vec::with_capacity(pr * pc);
    for i in 0..pr {
        for j in 0..pc {
            offsets.push(layout.offset(i, j).map_err(err)? as u32);
            blocks.push(layout.block_index(j / nc, i / mc) as u32);
        }
    }
    Ok(LayoutGrid { rows, cols, pad_rows: pr, pad_cols: pc, block_count: layout.block_count(), offsets, blocks })
}

/// Packing traffic of one chain computed both ways.
#[derive(Debug, Clone, PartialEq)]
pub struct Traffic {
    pub default: PackCounters,
    pub propagated: PackCounters,
    /// Largest elementwise difference between the two results.
    pub max_abs_diff: f32,
}

#[allow(clippy::too_many_arguments)]
pub fn chain_traffic(
    m: usize,
    n: usize,
    k: usize,
    depth: usize,
    params: TileParams,
    seed: u64,
) -> Result<Traffic, String> {
    if depth == 0 || depth > 8 {
        return Err("depth must be between 1 and 8".into());
    }
    if m * k.max(n) > 1 << 20 || k * n > 1 << 20 {
        return Err("operands are limited to 1M elements in the demo".into());
    }
    let x = Matrix::random(m, k, seed);
    let ws: Vec<Matrix> = (0..depth)
        .map(|d| {
            let rows = if d == 0 { k } else { n };
            let mut w = Matrix::random(rows, n, seed.wrapping_add(d as u64 + 1));
            let s = 1.0 / (rows as f32).sqrt();
            w.data_mut().iter_mut().for_each(|v| *v *= s);
            w
        })
        .collect();
    let spec = ws.iter().fold(ChainSpec::new(x.view()), |s, w| s.stage(w.view(), Activation::None));
    let (mut default, mut propagated) = (PackCounters::new(), PackCounters::new());
    let a = chain_default(&spec, &params, &mut default).map_err(err)?;
    let b = chain_gemm(&spec, &params, &mut propagated).map_err(err)?;
    Ok(Traffic { default, propagated, max_abs_diff: max_abs_diff(a.data(), b.data()) })
}

/// Softmax-normalised scores of one head, computed in the propagated layout.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadScores {
    pub n_tokens: usize,
    /// Row-major `n_tokens x n_tokens`.
    pub scores: Vec<f32>,
    /// Largest difference from the same scores computed canonically with the naive GEMM.
    pub scores_abs_err: f32,
    /// Relative error of the whole propagated attention layer against the reference.
    pub layer_rel_err: f32,
}

pub fn head_scores(cfg: &AttentionConfig, head: usize) -> Result<HeadScores, String> {
    cfg.validate().map_err(err)?;
    if head >= cfg.n_heads {
        return Err(format!("head {head} out of range ({} heads)", cfg.n_heads));
    }
    if cfg.n_tokens > 256 || cfg.embed_dim > 512 {
        return Err("the demo is limited to 256 tokens and embed 512".into());
    }
    let (n, d) = (cfg.n_tokens, cfg.head_dim);
    let g = head / cfg.group_size();
    let params = cfg.tile_params(&TileParams::new(16, 16, 64, 8, 4).map_err(err)?).map_err(err)?;
    if d % params.nr != 0 {
        return Err(format!("head_dim must be a multiple of {}", params.nr));
    }
    let w = AttentionWeights::generate(cfg);
    let x = attention_input(cfg);
    let pos: Vec<usize> = (0..n).collect();
    let mask = cfg.causal.then(Mask::causal);
    let scale = 1.0 / (d as f32).sqrt();

    let mut exec = GemmExecutor::new(params).map_err(err)?;
    let mut counters = PackCounters::new();
    let mut q = exec.gemm_ini(&x.view(), &w.wq.view(), &mut counters).map_err(err)?;
    rope_inplace(&mut q, d, &pos, cfg.theta_base).map_err(err)?;
    let mut k = Matrix::zeros(n, cfg.kv_dim());
    exec.gemm_default(&GemmProblem::new(n, cfg.kv_dim(), cfg.embed_dim), &x.view(), &w.wk.view(), &mut k.view_mut(), &mut counters)
        .map_err(err)?;
    rope_canonical(&mut k.view_mut(), d, &pos, cfg.theta_base).map_err(err)?;
    let kt = k.transpose();
    let kt_g = kt.view().rows_window(g * d, d).map_err(err)?;
    let mut s = exec.gemm_mid(&q.col_block(head).map_err(err)?, &kt_g, &mut counters).map_err(err)?;
    scale_inplace(&mut s, scale);
    softmax_rows(&mut s, mask.as_ref()).map_err(err)?;
    let scores = s.to_canonical();

    let product = |a: &Matrix, b: &Matrix| -> Result<Matrix, String> {
        let mut c = Matrix::zeros(a.rows(), b.cols());
        gemm_naive(&GemmProblem::new(a.rows(), b.cols(), a.cols()), &a.view(), &b.view(), &mut c.view_mut()).map_err(err)?;
        Ok(c)
    };
    let mut q_ref = product(&x, &w.wq)?;
    rope_canonical(&mut q_ref.view_mut(), d, &pos, cfg.theta_base).map_err(err)?;
    let mut k_ref = product(&x, &w.wk)?;
    rope_canonical(&mut k_ref.view_mut(), d, &pos, cfg.theta_base).map_err(err)?;
    let q_h = q_ref.view().cols_window(head * d, d).map_err(err)?.to_matrix();
    let kt_ref = k_ref.view().cols_window(g * d, d).map_err(err)?.transpose();
    let mut s_ref = product(&q_h, &kt_ref)?;
    s_ref.data_mut().iter_mut().for_each(|v| *v *= scale);
    softmax_rows_canonical(&mut s_ref.view_mut(), mask.as_ref()).map_err(err)?;

    let want = attention_reference(cfg, &w, &x.view()).map_err(err)?;
    let got = attention_lp(cfg, &w, &x.view(), &mut exec, &mut counters).map_err(err)?;
    Ok(HeadScores {
        n_tokens: n,
        scores_abs_err: max_abs_diff(scores.data(), s_ref.data()),
        scores: scores.into_vec(),
        layer_rel_err: max_rel_error(got.data(), want.data(), 1e-5),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_a_permutation_of_storage() {
        let g = layout_grid(5, 7, 4, 4, 2, 2).unwrap();
        assert_eq!((g.pad_rows, g.pad_cols), (6, 8));
        let mut sorted = g.offsets.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..48).collect::<Vec<u32>>());
        assert_eq!(g.block_count, 4);
        // First micro-panel: column-major mr x nr tile at the origin.
        assert_eq!(&g.offsets[..2], &[0, 2]);
        assert_eq!(g.offsets[g.pad_cols], 1);
        assert!(layout_grid(4, 4, 3, 4, 2, 2).is_err());
    }

    #[test]
    fn chain_traffic_drops_multiplier_packing() {
        let p = TileParams::new(16, 16, 16, 4, 4).unwrap();
        let t = chain_traffic(32, 32, 32, 3, p, 1).unwrap();
        assert_eq!(t.default.multiplier_pack_elems, 3 * t.propagated.multiplier_pack_elems);
        assert!(t.propagated.unpack_elems < t.default.unpack_elems);
        assert_eq!(t.max_abs_diff, 0.0);
        assert!(chain_traffic(8, 8, 8, 0, p, 1).is_err());
    }

    #[test]
    fn head_scores_match_canonical() {
        let cfg = AttentionConfig { n_tokens: 12, embed_dim: 32, n_heads: 4, n_kv_heads: 2, head_dim: 8, ..Default::default() };
        let s = head_scores(&cfg, 3).unwrap();
        assert_eq!(s.scores.len(), 144);
        assert!(s.scores_abs_err <= 1e-6, "{}", s.scores_abs_err);
        assert!(s.layer_rel_err <= 1e-3);
        for i in 0..12 {
            let row = &s.scores[i * 12..(i + 1) * 12];
            assert!((row.iter().sum::<f32>() - 1.0).abs() < 1e-5);
            assert!(row[i + 1..].iter().all(|&v| v == 0.0));
        }
        assert!(head_scores(&cfg, 4).is_err());
    }
}
