/* tslint:disable */
/* eslint-disable */

/**
 * Small convergence study over N = 25, 100, 400.
 */
export function couplingStudy(epsilon: number, replicas: number, seed: number): string;

/**
 * Network run with its mean-field activity for comparison.
 */
export function simulateNetwork(n: number, epsilon: number, tau: number, horizon: number, seed: number): string;

/**
 * Mean-field activity, spike flux and a few density profiles.
 */
export function solveMeanField(epsilon: number, tau: number, horizon: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly couplingStudy: (a: number, b: number, c: number) => [number, number, number, number];
    readonly simulateNetwork: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly solveMeanField: (a: number, b: number, c: number) => [number, number, number, number];
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
