/* tslint:disable */
/* eslint-disable */

/**
 * Runs the cascade over two pasted `entity score` lists. `cutoff` is JSON
 * such as `{"kind":"top_k","k":3}`; `combine` is replace, min, max or mean.
 */
export function fuse(retriever: string, reranker: string, answer: string, cutoff: string, combine: string, weight: number): string;

/**
 * Clusters pasted scores into `k` groups and keeps the `m` highest.
 */
export function kmeans_pool(scores: string, k: number, m: number): string;

/**
 * Mines path rules from pasted `head relation tail` lines and ranks every
 * entity as a tail for `(head, relation, ?)`.
 */
export function mine_and_score(triples: string, head: string, relation: string, hops: number, min_support: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly fuse: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number, k: number) => [number, number];
    readonly kmeans_pool: (a: number, b: number, c: number, d: number) => [number, number];
    readonly mine_and_score: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
