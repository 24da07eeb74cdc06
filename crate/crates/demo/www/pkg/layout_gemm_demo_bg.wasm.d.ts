/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_attentionscores_free: (a: number, b: number) => void;
export const __wbg_layoutmap_free: (a: number, b: number) => void;
export const __wbg_trafficreport_free: (a: number, b: number) => void;
export const attentionScores: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
export const attentionscores_layerRelErr: (a: number) => number;
export const attentionscores_nTokens: (a: number) => number;
export const attentionscores_scores: (a: number) => [number, number];
export const attentionscores_scoresAbsErr: (a: number) => number;
export const layoutMap: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
export const layoutmap_blockCount: (a: number) => number;
export const layoutmap_blocks: (a: number) => [number, number];
export const layoutmap_cols: (a: number) => number;
export const layoutmap_offsets: (a: number) => [number, number];
export const layoutmap_padCols: (a: number) => number;
export const layoutmap_padRows: (a: number) => number;
export const layoutmap_rows: (a: number) => number;
export const packTraffic: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number) => [number, number, number];
export const trafficreport_defaultCounts: (a: number) => [number, number];
export const trafficreport_maxAbsDiff: (a: number) => number;
export const trafficreport_propagatedCounts: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
