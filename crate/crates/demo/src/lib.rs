//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Build with `cargo build --release --target wasm32-unknown-unknown -p layout-gemm-demo`
//! followed by `wasm-bindgen --target web --out-dir crates/demo/www/pkg`.

pub mod ops;

use layout_gemm::attention::AttentionConfig;
use layout_gemm::{PackCounters, TileParams};
use wasm_bindgen::prelude::*;

fn js(e: String) -> JsError {
    JsError::new(&e)
}

#[wasm_bindgen]
pub struct LayoutMap(ops::LayoutGrid);

#[wasm_bindgen]
impl LayoutMap {
    #[wasm_bindgen(getter)]
    pub fn rows(&self) -> usize {
        self.0.rows
    }
    #[wasm_bindgen(getter)]
    pub fn cols(&self) -> usize {
        self.0.cols
    }
    #[wasm_bindgen(getter, js_name = padRows)]
    pub fn pad_rows(&self) -> usize {
        self.0.pad_rows
    }
    #[wasm_bindgen(getter, js_name = padCols)]
    pub fn pad_cols(&self) -> usize {
        self.0.pad_cols
    }
    #[wasm_bindgen(getter, js_name = blockCount)]
    pub fn block_count(&self) -> usize {
        self.0.block_count
    }
    /// Storage offset per padded element, row-major.
    pub fn offsets(&self) -> Vec<u32> {
        self.0.offsets.clone()
    }
    pub fn blocks(&self) -> Vec<u32> {
        self.0.blocks.clone()
    }
}

/// Where every element of a `rows x cols` result lands in the propagated layout.
#[wasm_bindgen(js_name = layoutMap)]
pub fn layout_map(rows: usize, cols: usize, mc: usize, nc: usize, mr: usize, nr: usize) -> Result<LayoutMap, JsError> {
    ops::layout_grid(rows, cols, mc, nc, mr, nr).map(LayoutMap).map_err(js)
}

#[wasm_bindgen]
pub struct TrafficReport(ops::Traffic);

fn counters_array(c: &PackCounters) -> Vec<f64> {
    [c.multiplier_pack_elems, c.multiplicand_pack_elems, c.unpack_elems, c.propagated_store_elems]
        .map(|v| v as f64)
        .to_vec()
}

#[wasm_bindgen]
impl TrafficReport {
    /// `[multiplier packed, multiplicand packed, unpacked, stored propagated]`.
    #[wasm_bindgen(js_name = defaultCounts)]
    pub fn default_counts(&self) -> Vec<f64> {
        counters_array(&self.0.default)
    }
    #[wasm_bindgen(js_name = propagatedCounts)]
    pub fn propagated_counts(&self) -> Vec<f64> {
        counters_array(&self.0.propagated)
    }
    #[wasm_bindgen(getter, js_name = maxAbsDiff)]
    pub fn max_abs_diff(&self) -> f32 {
        self.0.max_abs_diff
    }
}

/// Runs a depth-`depth` chain canonically and with layout propagation and counts packing traffic.
#[wasm_bindgen(js_name = packTraffic)]
#[allow(clippy::too_many_arguments)]
pub fn pack_traffic(
    m: usize,
    n: usize,
    k: usize,
    depth: usize,
    mc: usize,
    nc: usize,
    kc: usize,
    mr: usize,
    nr: usize,
) -> Result<TrafficReport, JsError> {
    let params = TileParams::new(mc, nc, kc, mr, nr).map_err(|e| js(e.to_string()))?;
    ops::chain_traffic(m, n, k, depth, params, 7).map(TrafficReport).map_err(js)
}

#[wasm_bindgen]
pub struct AttentionScores(ops::HeadScores);

#[wasm_bindgen]
impl AttentionScores {
    #[wasm_bindgen(getter, js_name = nTokens)]
    pub fn n_tokens(&self) -> usize {
        self.0.n_tokens
    }
    pub fn scores(&self) -> Vec<f32> {
        self.0.scores.clone()
    }
    #[wasm_bindgen(getter, js_name = scoresAbsErr)]
    pub fn scores_abs_err(&self) -> f32 {
        self.0.scores_abs_err
    }
    #[wasm_bindgen(getter, js_name = layerRelErr)]
    pub fn layer_rel_err(&self) -> f32 {
        self.0.layer_rel_err
    }
}

/// Attention probabilities of `head` for a random layer, computed in the propagated layout.
#[wasm_bindgen(js_name = attentionScores)]
pub fn attention_scores(
    tokens: usize,
    heads: usize,
    kv_heads: usize,
    head_dim: usize,
    head: usize,
    causal: bool,
    seed: u32,
) -> Result<AttentionScores, JsError> {
    let cfg = AttentionConfig {
        n_tokens: tokens,
        embed_dim: heads * head_dim,
        n_heads: heads,
        n_kv_heads: kv_heads,
        head_dim,
        causal,
        seed: seed as u64,
        ..AttentionConfig::default()
    };
    ops::head_scores(&cfg, head).map(AttentionScores).map_err(js)
}
