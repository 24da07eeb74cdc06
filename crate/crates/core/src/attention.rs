//! Multi-head attention and MLP blocks built on the kernels.
//!
//! Three versions of attention compute the same function:
//!
//! * [`attention_reference`]: naive GEMMs, canonical layout, K/V heads
//!   replicated literally. This is the oracle.
//! * [`attention_canonical`]: the same pipeline on blocked [`gemm_default`]
//!   calls, packing and unpacking at every step. This is the timing baseline.
//! * [`attention_lp`]: the query projection starts layout propagation, scores
//!   and per-head outputs stay propagated, and the output projection ends it.
//!
//! [`gemm_default`]: crate::kernels::gemm_default

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::counters::PackCounters;
use crate::error::{mismatch, Error, Result};
use crate::kernels::{gemm_naive, Activation, ChainSpec, GemmExecutor, GemmProblem};
use crate::layout::{PropagatedMatrix, StoreSpec};
use crate::layout_ops::{
    rope_canonical, rope_inplace, scale_canonical, scale_inplace, softmax_rows, softmax_rows_canonical, Mask,
    ROPE_THETA,
};
use crate::matrix::{Matrix, MatrixView};
use crate::params::TileParams;

/// Shape and options of one attention layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttentionConfig {
    pub n_tokens: usize,
    pub embed_dim: usize,
    pub n_heads: usize,
    pub n_kv_heads: usize,
    pub head_dim: usize,
    pub causal: bool,
    pub theta_base: f32,
    pub seed: u64,
}

impl Default for AttentionConfig {
    fn default() -> Self {
        AttentionConfig {
            n_tokens: 16,
            embed_dim: 64,
            n_heads: 4,
            n_kv_heads: 2,
            head_dim: 16,
            causal: true,
            theta_base: ROPE_THETA,
            seed: 0,
        }
    }
}

impl AttentionConfig {
    /// Causal config with `head_dim = embed_dim / n_heads`.
    pub fn new(n_tokens: usize, embed_dim: usize, n_heads: usize, n_kv_heads: usize) -> Self {
        AttentionConfig {
            n_tokens,
            embed_dim,
            n_heads,
            n_kv_heads,
            head_dim: if n_heads == 0 { 0 } else { embed_dim / n_heads },
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.n_tokens == 0 || self.n_heads == 0 || self.n_kv_heads == 0 || self.head_dim == 0 {
            return bad(format!("empty attention config {self:?}"));
        }
        if self.embed_dim != self.n_heads * self.head_dim {
            return bad(format!(
                "embed_dim {} != n_heads {} * head_dim {}",
                self.embed_dim, self.n_heads, self.head_dim
            ));
        }
        if self.n_heads % self.n_kv_heads != 0 {
            return bad(format!("{} heads cannot share {} kv heads", self.n_heads, self.n_kv_heads));
        }
        if self.head_dim % 2 != 0 {
            return bad(format!("head_dim {} must be even", self.head_dim));
        }
        Ok(())
    }

    pub fn kv_dim(&self) -> usize {
        self.n_kv_heads * self.head_dim
    }

    /// Query heads served by each kv head.
    pub fn group_size(&self) -> usize {
        self.n_heads / self.n_kv_heads
    }

    /// `base` with `nc` set to the head dimension, as [`attention_lp`] requires.
    pub fn tile_params(&self, base: &TileParams) -> Result<TileParams> {
        TileParams::new(base.mc, self.head_dim, base.kc, base.mr, base.nr)
    }

    /// Projection flops plus score and weighted-sum flops.
    pub fn flops(&self) -> f64 {
        let (n, e, kv) = (self.n_tokens as f64, self.embed_dim as f64, self.kv_dim() as f64);
        2.0 * n * e * (2.0 * e + 2.0 * kv) + 4.0 * self.n_heads as f64 * n * n * self.head_dim as f64
    }

    fn mask(&self) -> Option<Mask<'static>> {
        self.causal.then(Mask::causal)
    }

    fn positions(&self) -> Vec<usize> {
        (0..self.n_tokens).collect()
    }

    fn check_input(&self, w: &AttentionWeights, x: &MatrixView<'_>) -> Result<()> {
        self.validate()?;
        let (e, kv) = (self.embed_dim, self.kv_dim());
        if x.dims() != (self.n_tokens, e) {
            return Err(mismatch(format!("input is {}x{}, config expects {}x{e}", x.rows(), x.cols(), self.n_tokens)));
        }
        if w.wq.dims() != (e, e) || w.wk.dims() != (e, kv) || w.wv.dims() != (e, kv) || w.wo.dims() != (e, e) {
            return Err(mismatch("attention weights do not match the config".to_string()));
        }
        Ok(())
    }
}

/// Projection weights, row-major `in x out`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionWeights {
    pub wq: Matrix,
    pub wk: Matrix,
    pub wv: Matrix,
    pub wo: Matrix,
}

/// Uniform `[-1, 1)` entries scaled by `1 / sqrt(rows)`.
fn scaled_random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let mut m = Matrix::random_with(rows, cols, rng);
    let s = 1.0 / (rows as f32).sqrt();
    m.data_mut().iter_mut().for_each(|v| *v *= s);
    m
}

impl AttentionWeights {
    /// Draws `wq, wk, wv, wo` in that order from ChaCha8 seeded with `cfg.seed`.
    pub fn generate(cfg: &AttentionConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let (e, kv) = (cfg.embed_dim, cfg.kv_dim());
        AttentionWeights {
            wq: scaled_random(e, e, &mut rng),
            wk: scaled_random(e, kv, &mut rng),
            wv: scaled_random(e, kv, &mut rng),
            wo: scaled_random(e, e, &mut rng),
        }
    }
}

/// Token embeddings for `cfg`, uniform in `[-1, 1)`, seeded by `cfg.seed + 1`.
pub fn attention_input(cfg: &AttentionConfig) -> Matrix {
    Matrix::random(cfg.n_tokens, cfg.embed_dim, cfg.seed.wrapping_add(1))
}

fn naive_product(a: &MatrixView<'_>, b: &MatrixView<'_>) -> Result<Matrix> {
    let mut c = Matrix::zeros(a.rows(), b.cols());
    gemm_naive(&GemmProblem::new(a.rows(), b.cols(), a.cols()), a, b, &mut c.view_mut())?;
    Ok(c)
}

fn blocked_product(
    exec: &mut GemmExecutor,
    a: &MatrixView<'_>,
    b: &MatrixView<'_>,
    counters: &mut PackCounters,
) -> Result<Matrix> {
    let mut c = Matrix::zeros(a.rows(), b.cols());
    exec.gemm_default(&GemmProblem::new(a.rows(), b.cols(), a.cols()), a, b, &mut c.view_mut(), counters)?;
    Ok(c)
}

/// Replicates each kv head `group` times along the columns.
fn replicate_heads(m: &Matrix, head_dim: usize, group: usize) -> Matrix {
    Matrix::from_fn(m.rows(), m.cols() * group, |i, j| {
        let h = j / head_dim;
        m.get(i, (h / group) * head_dim + j % head_dim)
    })
}

/// Oracle attention: naive GEMMs with `f64` accumulation, canonical layouts.
pub fn attention_reference(cfg: &AttentionConfig, w: &AttentionWeights, x: &MatrixView<'_>) -> Result<Matrix> {
    cfg.check_input(w, x)?;
    let (n, d) = (cfg.n_tokens, cfg.head_dim);
    let pos = cfg.positions();
    let mut q = naive_product(x, &w.wq.view())?;
    let mut k = naive_product(x, &w.wk.view())?;
    let v = naive_product(x, &w.wv.view())?;
    rope_canonical(&mut q.view_mut(), d, &pos, cfg.theta_base)?;
    rope_canonical(&mut k.view_mut(), d, &pos, cfg.theta_base)?;
    let k = replicate_heads(&k, d, cfg.group_size());
    let v = replicate_heads(&v, d, cfg.group_size());
    let mask = cfg.mask();
    let scale = 1.0 / (d as f32).sqrt();
    let mut y = Matrix::zeros(n, cfg.embed_dim);
    for h in 0..cfg.n_heads {
        let kt = k.view().cols_window(h * d, d)?.transpose();
        let mut s = naive_product(&q.view().cols_window(h * d, d)?, &kt.view())?;
        scale_canonical(&mut s.view_mut(), scale);
        softmax_rows_canonical(&mut s.view_mut(), mask.as_ref())?;
        let yh = naive_product(&s.view(), &v.view().cols_window(h * d, d)?)?;
        y.view_mut().submatrix_mut(0, h * d, n, d)?.copy_from(&yh.view())?;
    }
    naive_product(&y.view(), &w.wo.view())
}

/// Attention on blocked canonical GEMMs. Query heads read their kv head's
/// columns directly instead of a replicated copy.
pub fn attention_canonical(
    cfg: &AttentionConfig,
    w: &AttentionWeights,
    x: &MatrixView<'_>,
    exec: &mut GemmExecutor,
    counters: &mut PackCounters,
) -> Result<Matrix> {
    cfg.check_input(w, x)?;
    let (n, d, e) = (cfg.n_tokens, cfg.head_dim, cfg.embed_dim);
    let pos = cfg.positions();
    let mut q = blocked_product(exec, x, &w.wq.view(), counters)?;
    let mut k = blocked_product(exec, x, &w.wk.view(), counters)?;
    let v = blocked_product(exec, x, &w.wv.view(), counters)?;
    rope_canonical(&mut q.view_mut(), d, &pos, cfg.theta_base)?;
    rope_canonical(&mut k.view_mut(), d, &pos, cfg.theta_base)?;
    let kt = k.transpose();
    let mask = cfg.mask();
    let scale = 1.0 / (d as f32).sqrt();
    let mut y = Matrix::zeros(n, e);
    for h in 0..cfg.n_heads {
        let g = h / cfg.group_size();
        let mut s = blocked_product(exec, &q.view().cols_window(h * d, d)?, &kt.view().rows_window(g * d, d)?, counters)?;
        scale_canonical(&mut s.view_mut(), scale);
        softmax_rows_canonical(&mut s.view_mut(), mask.as_ref())?;
        let vg = v.view().cols_window(g * d, d)?;
        let mut yh = y.view_mut().into_submatrix(0, h * d, n, d)?;
        exec.gemm_default(&GemmProblem::new(n, d, n), &s.view(), &vg, &mut yh, counters)?;
    }
    blocked_product(exec, &y.view(), &w.wo.view(), counters)
}

/// Per-head context `softmax(Q_h K_g^T / sqrt(d)) V_g` for the listed heads,
/// written into the propagated `n x embed_dim` matrix. Head `h` occupies
/// column block `h`; heads not listed stay zero.
///
/// The executor's `nc` must equal `head_dim`, so each head is exactly one
/// outermost column block of the query projection and of the result.
pub fn attention_lp_context(
    cfg: &AttentionConfig,
    w: &AttentionWeights,
    x: &MatrixView<'_>,
    heads: &[usize],
    exec: &mut GemmExecutor,
    counters: &mut PackCounters,
) -> Result<PropagatedMatrix> {
    cfg.check_input(w, x)?;
    let params = *exec.params();
    let (n, d, e) = (cfg.n_tokens, cfg.head_dim, cfg.embed_dim);
    if params.nc != d || d % params.nr != 0 {
        return Err(Error::Layout(format!(
            "tile params {params} do not split {d}-wide heads into column blocks (need nc = head_dim, head_dim % nr = 0)"
        )));
    }
    if let Some(&h) = heads.iter().find(|&&h| h >= cfg.n_heads) {
        return Err(Error::InvalidArgument(format!("head {h} out of range ({} heads)", cfg.n_heads)));
    }
    let pos = cfg.positions();
    let mut q = exec.gemm_ini(x, &w.wq.view(), counters)?;
    rope_inplace(&mut q, d, &pos, cfg.theta_base)?;

    let mut k = Matrix::zeros(n, cfg.kv_dim());
    let mut v = Matrix::zeros(n, cfg.kv_dim());
    let kv_problem = GemmProblem::new(n, cfg.kv_dim(), e);
    exec.gemm_default(&kv_problem, x, &w.wk.view(), &mut k.view_mut(), counters)?;
    exec.gemm_default(&kv_problem, x, &w.wv.view(), &mut v.view_mut(), counters)?;
    rope_canonical(&mut k.view_mut(), d, &pos, cfg.theta_base)?;
    let kt = k.transpose();

    let mut y = PropagatedMatrix::zeros(n, e, params)?;
    let head_len = y.pad_rows() * d;
    let mask = cfg.mask();
    let scale = 1.0 / (d as f32).sqrt();
    for &h in heads {
        let g = h / cfg.group_size();
        let mut s = exec.gemm_mid(&q.col_block(h)?, &kt.view().rows_window(g * d, d)?, counters)?;
        scale_inplace(&mut s, scale);
        softmax_rows(&mut s, mask.as_ref())?;
        let vg = v.view().cols_window(g * d, d)?;
        exec.gemm_mid_into(&s, &vg, &StoreSpec::at_offset(h * head_len), y.data_mut(), counters)?;
    }
    Ok(y)
}

/// Layout-propagating attention: [`attention_lp_context`] for every head,
/// then the output projection through the ending kernel.
pub fn attention_lp(
    cfg: &AttentionConfig,
    w: &AttentionWeights,
    x: &MatrixView<'_>,
    exec: &mut GemmExecutor,
    counters: &mut PackCounters,
) -> Result<Matrix> {
    let heads: Vec<usize> = (0..cfg.n_heads).collect();
    let y = attention_lp_context(cfg, w, x, &heads, exec, counters)?;
    let mut out = Matrix::zeros(cfg.n_tokens, cfg.embed_dim);
    exec.gemm_end(&y, &w.wo.view(), &mut out.view_mut(), counters)?;
    Ok(out)
}

/// Up-projection, activation, down-projection.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpWeights {
    pub w_up: Matrix,
    pub w_down: Matrix,
    pub activation: Activation,
}

impl MlpWeights {
    /// Draws `w_up` then `w_down` from ChaCha8 seeded with `seed`.
    pub fn generate(embed_dim: usize, hidden_dim: usize, activation: Activation, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        MlpWeights {
            w_up: scaled_random(embed_dim, hidden_dim, &mut rng),
            w_down: scaled_random(hidden_dim, embed_dim, &mut rng),
            activation,
        }
    }

    pub fn chain<'a>(&'a self, x: MatrixView<'a>) -> ChainSpec<'a> {
        ChainSpec::new(x).stage(self.w_up.view(), self.activation).stage(self.w_down.view(), Activation::None)
    }

    pub fn flops(&self, n_tokens: usize) -> f64 {
        4.0 * n_tokens as f64 * self.w_up.rows() as f64 * self.w_up.cols() as f64
    }
}

/// MLP through the layout-propagating chain (initial then ending kernel).
pub fn mlp_block(w: &MlpWeights, x: &MatrixView<'_>, exec: &mut GemmExecutor, counters: &mut PackCounters) -> Result<Matrix> {
    exec.chain_gemm(&w.chain(*x), counters)
}

/// MLP on two independent blocked GEMMs.
pub fn mlp_canonical(w: &MlpWeights, x: &MatrixView<'_>, exec: &mut GemmExecutor, counters: &mut PackCounters) -> Result<Matrix> {
    exec.chain_default(&w.chain(*x), counters)
}

/// Oracle MLP on naive GEMMs.
pub fn mlp_reference(w: &MlpWeights, x: &MatrixView<'_>) -> Result<Matrix> {
    crate::kernels::chain_naive(&w.chain(*x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compare::max_rel_error;

    fn exec_for(cfg: &AttentionConfig) -> GemmExecutor {
        let base = TileParams::new(8, 8, 8, 4, 4).unwrap();
        GemmExecutor::new(cfg.tile_params(&base).unwrap()).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(AttentionConfig::default().validate().is_ok());
        assert!(AttentionConfig { n_kv_heads: 3, ..Default::default() }.validate().is_err());
        assert!(AttentionConfig { head_dim: 8, ..Default::default() }.validate().is_err());
        let c = AttentionConfig::new(8, 2048, 32, 8);
        assert_eq!((c.head_dim, c.group_size(), c.kv_dim()), (64, 4, 512));
    }

    #[test]
    fn single_token_returns_projected_value() {
        let cfg = AttentionConfig { n_tokens: 1, ..Default::default() };
        let w = AttentionWeights::generate(&cfg);
        let x = attention_input(&cfg);
        let out = attention_reference(&cfg, &w, &x.view()).unwrap();
        let v = naive_product(&x.view(), &w.wv.view()).unwrap();
        let y = replicate_heads(&v, cfg.head_dim, cfg.group_size());
        let expect = naive_product(&y.view(), &w.wo.view()).unwrap();
        assert!(max_rel_error(out.data(), expect.data(), 1e-6) < 1e-6);
    }

    #[test]
    fn zero_input_gives_zero_output() {
        let cfg = AttentionConfig::default();
        let w = AttentionWeights::generate(&cfg);
        let x = Matrix::zeros(cfg.n_tokens, cfg.embed_dim);
        assert!(attention_reference(&cfg, &w, &x.view()).unwrap().data().iter().all(|&v| v == 0.0));
        let mut c = PackCounters::new();
        let lp = attention_lp(&cfg, &w, &x.view(), &mut exec_for(&cfg), &mut c).unwrap();
        assert!(lp.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn three_paths_agree() {
        let cfg = AttentionConfig::default();
        let w = AttentionWeights::generate(&cfg);
        let x = attention_input(&cfg);
        let reference = attention_reference(&cfg, &w, &x.view()).unwrap();
        let mut exec = exec_for(&cfg);
        let mut c = PackCounters::new();
        let canon = attention_canonical(&cfg, &w, &x.view(), &mut exec, &mut c).unwrap();
        let lp = attention_lp(&cfg, &w, &x.view(), &mut exec, &mut c).unwrap();
        assert!(max_rel_error(canon.data(), reference.data(), 1e-5) <= 1e-3);
        assert!(max_rel_error(lp.data(), reference.data(), 1e-5) <= 1e-3);
        assert_eq!(c.layout_fallbacks, 0);
    }

    #[test]
    fn wrong_block_width_is_a_layout_error() {
        let cfg = AttentionConfig::default();
        let w = AttentionWeights::generate(&cfg);
        let x = attention_input(&cfg);
        let mut exec = GemmExecutor::new(TileParams::new(8, 8, 8, 4, 4).unwrap()).unwrap();
        let r = attention_lp(&cfg, &w, &x.view(), &mut exec, &mut PackCounters::new());
        assert!(matches!(r, Err(Error::Layout(_))));
    }

    #[test]
    fn mlp_identity_and_relu() {
        let x = Matrix::random(5, 8, 3);
        let id = MlpWeights { w_up: Matrix::identity(8), w_down: Matrix::identity(8), activation: Activation::None };
        let params = TileParams::new(8, 8, 8, 4, 4).unwrap();
        let mut exec = GemmExecutor::new(params).unwrap();
        let mut c = PackCounters::new();
        assert_eq!(mlp_block(&id, &x.view(), &mut exec, &mut c).unwrap(), x);
        let neg = Matrix::from_fn(5, 8, |i, j| -1.0 - (i + j) as f32);
        let relu = MlpWeights { activation: Activation::Relu, ..id };
        assert!(mlp_block(&relu, &neg.view(), &mut exec, &mut c).unwrap().data().iter().all(|&v| v == 0.0));
        assert_eq!((c.ini_calls, c.mid_calls, c.end_calls), (2, 0, 2));
    }
}
