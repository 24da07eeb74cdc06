/* @ts-self-types="./layout_gemm_demo.d.ts" */

export class AttentionScores {
    static __wrap(ptr) {
        const obj = Object.create(AttentionScores.prototype);
        obj.__wbg_ptr = ptr;
        AttentionScoresFinalization.register(obj, obj.__wbg_ptr, obj);
        return obj;
    }
    __destroy_into_raw() {
        const ptr = this.__wbg_ptr;
        this.__wbg_ptr = 0;
        AttentionScoresFinalization.unregister(this);
        return ptr;
    }
    free() {
        const ptr = this.__destroy_into_raw();
        wasm.__wbg_attentionscores_free(ptr, 0);
    }
    /**
     * @returns {number}
     */
    get layerRelErr() {
        const ret = wasm.attentionscores_layerRelErr(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get nTokens() {
        const ret = wasm.attentionscores_nTokens(this.__wbg_ptr);
        return ret >>> 0;
    }
    /**
     * @returns {number}
     */
    get scoresAbsErr() {
        const ret = wasm.attentionscores_scoresAbsErr(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {Float32Array}
     */
    scores() {
        const ret = wasm.attentionscores_scores(this.__wbg_ptr);
        var v1 = getArrayF32FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 4, 4);
        return v1;
    }
}
if (Symbol.dispose) AttentionScores.prototype[Symbol.dispose] = AttentionScores.prototype.free;

export class LayoutMap {
    static __wrap(ptr) {
        const obj = Object.create(LayoutMap.prototype);
        obj.__wbg_ptr = ptr;
        LayoutMapFinalization.register(obj, obj.__wbg_ptr, obj);
        return obj;
    }
    __destroy_into_raw() {
        const ptr = this.__wbg_ptr;
        this.__wbg_ptr = 0;
        LayoutMapFinalization.unregister(this);
        return ptr;
    }
    free() {
        const ptr = this.__destroy_into_raw();
        wasm.__wbg_layoutmap_free(ptr, 0);
    }
    /**
     * @returns {number}
     */
    get blockCount() {
        const ret = wasm.layoutmap_blockCount(this.__wbg_ptr);
        return ret >>> 0;
    }
    /**
     * @returns {Uint32Array}
     */
    blocks() {
        const ret = wasm.layoutmap_blocks(this.__wbg_ptr);
        var v1 = getArrayU32FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 4, 4);
        return v1;
    }
    /**
     * @returns {number}
     */
    get cols() {
        const ret = wasm.layoutmap_cols(this.__wbg_ptr);
        return ret >>> 0;
    }
    /**
     * Storage offset per padded element, row-major.
     * @returns {Uint32Array}
     */
    offsets() {
        const ret = wasm.layoutmap_offsets(this.__wbg_ptr);
        var v1 = getArrayU32FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 4, 4);
        return v1;
    }
    /**
     * @returns {number}
     */
    get padCols() {
        const ret = wasm.layoutmap_padCols(this.__wbg_ptr);
        return ret >>> 0;
    }
    /**
     * @returns {number}
     */
    get padRows() {
        const ret = wasm.layoutmap_padRows(this.__wbg_ptr);
        return ret >>> 0;
    }
    /**
     * @returns {number}
     */
    get rows() {
        const ret = wasm.layoutmap_rows(this.__wbg_ptr);
        return ret >>> 0;
    }
}
if (Symbol.dispose) LayoutMap.prototype[Symbol.dispose] = LayoutMap.prototype.free;

export class TrafficReport {
    static __wrap(ptr) {
        const obj = Object.create(TrafficReport.prototype);
        obj.__wbg_ptr = ptr;
        TrafficReportFinalization.register(obj, obj.__wbg_ptr, obj);
        return obj;
    }
    __destroy_into_raw() {
        const ptr = this.__wbg_ptr;
        this.__wbg_ptr = 0;
        TrafficReportFinalization.unregister(this);
        return ptr;
    }
    free() {
        const ptr = this.__destroy_into_raw();
        wasm.__wbg_trafficreport_free(ptr, 0);
    }
    /**
     * `[multiplier packed, multiplicand packed, unpacked, stored propagated]`.
     * @returns {Float64Array}
     */
    defaultCounts() {
        const ret = wasm.trafficreport_defaultCounts(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
    /**
     * @returns {number}
     */
    get maxAbsDiff() {
        const ret = wasm.trafficreport_maxAbsDiff(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {Float64Array}
     */
    propagatedCounts() {
        const ret = wasm.trafficreport_propagatedCounts(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
}
if (Symbol.dispose) TrafficReport.prototype[Symbol.dispose] = TrafficReport.prototype.free;

/**
 * Attention probabilities of `head` for a random layer, computed in the propagated layout.
 * @param {number} tokens
 * @param {number} heads
 * @param {number} kv_heads
 * @param {number} head_dim
 * @param {number} head
 * @param {boolean} causal
 * @param {number} seed
 * @returns {AttentionScores}
 */
export function attentionScores(tokens, heads, kv_heads, head_dim, head, causal, seed) {
    const ret = wasm.attentionScores(tokens, heads, kv_heads, head_dim, head, causal, seed);
    if (ret[2]) {
        throw takeFromExternrefTable0(ret[1]);
    }
    return AttentionScores.__wrap(ret[0]);
}

/**
 * Where every element of a `rows x cols` result lands in the propagated layout.
 * @param {number} rows
 * @param {number} cols
 * @param {number} mc
 * @param {number} nc
 * @param {number} mr
 * @param {number} nr
 * @returns {LayoutMap}
 */
export function layoutMap(rows, cols, mc, nc, mr, nr) {
    const ret = wasm.layoutMap(rows, cols, mc, nc, mr, nr);
    if (ret[2]) {
        throw takeFromExternrefTable0(ret[1]);
    }
    return LayoutMap.__wrap(ret[0]);
}

/**
 * Runs a depth-`depth` chain canonically and with layout propagation and counts packing traffic.
 * @param {number} m
 * @param {number} n
 * @param {number} k
 * @param {number} depth
 * @param {number} mc
 * @param {number} nc
 * @param {number} kc
 * @param {number} mr
 * @param {number} nr
 * @returns {TrafficReport}
 */
export function packTraffic(m, n, k, depth, mc, nc, kc, mr, nr) {
    const ret = wasm.packTraffic(m, n, k, depth, mc, nc, kc, mr, nr);
    if (ret[2]) {
        throw takeFromExternrefTable0(ret[1]);
    }
    return TrafficReport.__wrap(ret[0]);
}
function __wbg_get_imports() {
    const import0 = {
        __proto__: null,
        __wbg_Error_30c8987f7c2ed4e2: function(arg0, arg1) {
            const ret = Error(getStringFromWasm0(arg0, arg1));
            return ret;
        },
        __wbg___wbindgen_throw_41e9ee4f547fc59a: function(arg0, arg1) {
            throw new Error(getStringFromWasm0(arg0, arg1));
        },
        __wbindgen_init_externref_table: function() {
            const table = wasm.__wbindgen_externrefs;
            const offset = table.grow(4);
            table.set(0, undefined);
            table.set(offset + 0, undefined);
            table.set(offset + 1, null);
            table.set(offset + 2, true);
            table.set(offset + 3, false);
        },
    };
    return {
        __proto__: null,
        "./layout_gemm_demo_bg.js": import0,
    };
}

const AttentionScoresFinalization = (typeof FinalizationRegistry === 'undefined')
    ? { register: () => {}, unregister: () => {} }
    : new FinalizationRegistry(ptr => wasm.__wbg_attentionscores_free(ptr, 1));
const LayoutMapFinalization = (typeof FinalizationRegistry === 'undefined')
    ? { register: () => {}, unregister: () => {} }
    : new FinalizationRegistry(ptr => wasm.__wbg_layoutmap_free(ptr, 1));
const TrafficReportFinalization = (typeof FinalizationRegistry === 'undefined')
    ? { register: () => {}, unregister: () => {} }
    : new FinalizationRegistry(ptr => wasm.__wbg_trafficreport_free(ptr, 1));

function getArrayF32FromWasm0(ptr, len) {
    ptr = ptr >>> 0;
    return getFloat32ArrayMemory0().subarray(ptr / 4, ptr / 4 + len);
}

function getArrayF64FromWasm0(ptr, len) {
    ptr = ptr >>> 0;
    return getFloat64ArrayMemory0().subarray(ptr / 8, ptr / 8 + len);
}

function getArrayU32FromWasm0(ptr, len) {
    ptr = ptr >>> 0;
    return getUint32ArrayMemory0().subarray(ptr / 4, ptr / 4 + len);
}

let cachedFloat32ArrayMemory0 = null;
function getFloat32ArrayMemory0() {
    if (cachedFloat32ArrayMemory0 === null || cachedFloat32ArrayMemory0.byteLength === 0) {
        cachedFloat32ArrayMemory0 = new Float32Array(wasm.memory.buffer);
    }
    return cachedFloat32ArrayMemory0;
}

let cachedFloat64ArrayMemory0 = null;
function getFloat64ArrayMemory0() {
    if (cachedFloat64ArrayMemory0 === null || cachedFloat64ArrayMemory0.byteLength === 0) {
        cachedFloat64ArrayMemory0 = new Float64Array(wasm.memory.buffer);
    }
    return cachedFloat64ArrayMemory0;
}

function getStringFromWasm0(ptr, len) {
    return decodeText(ptr >>> 0, len);
}

let cachedUint32ArrayMemory0 = null;
function getUint32ArrayMemory0() {
    if (cachedUint32ArrayMemory0 === null || cachedUint32ArrayMemory0.byteLength === 0) {
        cachedUint32ArrayMemory0 = new Uint32Array(wasm.memory.buffer);
    }
    return cachedUint32ArrayMemory0;
}

let cachedUint8ArrayMemory0 = null;
function getUint8ArrayMemory0() {
    if (cachedUint8ArrayMemory0 === null || cachedUint8ArrayMemory0.byteLength === 0) {
        cachedUint8ArrayMemory0 = new Uint8Array(wasm.memory.buffer);
    }
    return cachedUint8ArrayMemory0;
}

function takeFromExternrefTable0(idx) {
    const value = wasm.__wbindgen_externrefs.get(idx);
    wasm.__externref_table_dealloc(idx);
    return value;
}

let cachedTextDecoder = new TextDecoder('utf-8', { ignoreBOM: true, fatal: true });
cachedTextDecoder.decode();
const MAX_SAFARI_DECODE_BYTES = 2146435072;
let numBytesDecoded = 0;
function decodeText(ptr, len) {
    numBytesDecoded += len;
    if (numBytesDecoded >= MAX_SAFARI_DECODE_BYTES) {
        cachedTextDecoder = new TextDecoder('utf-8', { ignoreBOM: true, fatal: true });
        cachedTextDecoder.decode();
        numBytesDecoded = len;
    }
    return cachedTextDecoder.decode(getUint8ArrayMemory0().subarray(ptr, ptr + len));
}

let wasmModule, wasmInstance, wasm;
function __wbg_finalize_init(instance, module) {
    wasmInstance = instance;
    wasm = instance.exports;
    wasmModule = module;
    cachedFloat32ArrayMemory0 = null;
    cachedFloat64ArrayMemory0 = null;
    cachedUint32ArrayMemory0 = null;
    cachedUint8ArrayMemory0 = null;
    wasm.__wbindgen_start();
    return wasm;
}

async function __wbg_load(module, imports) {
    if (typeof Response === 'function' && module instanceof Response) {
        if (!module.ok) {
            throw new Error(`failed to fetch Wasm: ${module.status} ${module.statusText} fetching '${module.url}'`);
        }

        if (typeof WebAssembly.instantiateStreaming === 'function') {
            try {
                return await WebAssembly.instantiateStreaming(module, imports);
            } catch (e) {
                const validResponse = expectedResponseType(module.type);

                if (validResponse && module.headers.get('Content-Type') !== 'application/wasm') {
                    console.warn("`WebAssembly.instantiateStreaming` failed because your server does not serve Wasm with `application/wasm` MIME type. Falling back to `WebAssembly.instantiate` which is slower. Original error:\n", e);

                } else { throw e; }
            }
        }

        const bytes = await module.arrayBuffer();
        return await WebAssembly.instantiate(bytes, imports);
    } else {
        const instance = await WebAssembly.instantiate(module, imports);

        if (instance instanceof WebAssembly.Instance) {
            return { instance, module };
        } else {
            return instance;
        }
    }

    function expectedResponseType(type) {
        switch (type) {
            case 'basic': case 'cors': case 'default': return true;
        }
        return false;
    }
}

function initSync(module) {
    if (wasm !== undefined) return wasm;


    if (module !== undefined) {
        if (Object.getPrototypeOf(module) === Object.prototype) {
            ({module} = module)
        } else {
            console.warn('using deprecated parameters for `initSync()`; pass a single object instead')
        }
    }

    const imports = __wbg_get_imports();
    if (!(module instanceof WebAssembly.Module)) {
        module = new WebAssembly.Module(module);
    }
    const instance = new WebAssembly.Instance(module, imports);
    return __wbg_finalize_init(instance, module);
}

async function __wbg_init(module_or_path) {
    if (wasm !== undefined) return wasm;


    if (module_or_path !== undefined) {
        if (Object.getPrototypeOf(module_or_path) === Object.prototype) {
            ({module_or_path} = module_or_path)
        } else {
            console.warn('using deprecated parameters for the initialization function; pass a single object instead')
        }
    }

    if (module_or_path === undefined) {
        module_or_path = new URL('layout_gemm_demo_bg.wasm', import.meta.url);
    }
    const imports = __wbg_get_imports();

    if (typeof module_or_path === 'string' || (typeof Request === 'function' && module_or_path instanceof Request) || (typeof URL === 'function' && module_or_path instanceof URL)) {
        module_or_path = fetch(module_or_path);
    }

    const { instance, module } = await __wbg_load(await module_or_path, imports);

    return __wbg_finalize_init(instance, module);
}

export { initSync, __wbg_init as default };
