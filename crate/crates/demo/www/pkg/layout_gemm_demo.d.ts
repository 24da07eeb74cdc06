/* tslint:disable */
/* eslint-disable */

export class AttentionScores {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    scores(): Float32Array;
    readonly layerRelErr: number;
    readonly nTokens: number;
    readonly scoresAbsErr: number;
}

export class LayoutMap {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    blocks(): Uint32Array;
    /**
     * Storage offset per padded element, row-major.
     */
    offsets(): Uint32Array;
    readonly blockCount: number;
    readonly cols: number;
    readonly padCols: number;
    readonly padRows: number;
    readonly rows: number;
}

export class TrafficReport {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * `[multiplier packed, multiplicand packed, unpacked, stored propagated]`.
     */
    defaultCounts(): Float64Array;
    propagatedCounts(): Float64Array;
    readonly maxAbsDiff: number;
}

/**
 * Attention probabilities of `head` for a random layer, computed in the propagated layout.
 */
export function attentionScores(tokens: number, heads: number, kv_heads: number, head_dim: number, head: number, causal: boolean, seed: number): AttentionScores;

/**
 * Where every element of a `rows x cols` result lands in the propagated layout.
 */
export function layoutMap(rows: number, cols: number, mc: number, nc: number, mr: number, nr: number): LayoutMap;

/**
 * Runs a depth-`depth` chain canonically and with layout propagation and counts packing traffic.
 */
export function packTraffic(m: number, n: number, k: number, depth: number, mc: number, nc: number, kc: number, mr: number, nr: number): TrafficReport;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_attentionscores_free: (a: number, b: number) => void;
    readonly __wbg_layoutmap_free: (a: number, b: number) => void;
    readonly __wbg_trafficreport_free: (a: number, b: number) => void;
    readonly attentionScores: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
    readonly attentionscores_layerRelErr: (a: number) => number;
    readonly attentionscores_nTokens: (a: number) => number;
    readonly attentionscores_scores: (a: number) => [number, number];
    readonly attentionscores_scoresAbsErr: (a: number) => number;
    readonly layoutMap: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
    readonly layoutmap_blockCount: (a: number) => number;
    readonly layoutmap_blocks: (a: number) => [number, number];
    readonly layoutmap_cols: (a: number) => number;
    readonly layoutmap_offsets: (a: number) => [number, number];
    readonly layoutmap_padCols: (a: number) => number;
    readonly layoutmap_padRows: (a: number) => number;
    readonly layoutmap_rows: (a: number) => number;
    readonly packTraffic: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number) => [number, number, number];
    readonly trafficreport_defaultCounts: (a: number) => [number, number];
    readonly trafficreport_maxAbsDiff: (a: number) => number;
    readonly trafficreport_propagatedCounts: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
