/* tslint:disable */
/* eslint-disable */

/**
 * Ensemble-mean a(t) from Langevin trajectories on an MP spectrum.
 */
export function langevin_a(q: number, n: number, a0: number, temperature_ratio: number, steps: number, ensemble: number, seed: number): string;

/**
 * G(t) and H(t) from the closed equation on an MP spectrum.
 */
export function volterra_g(q: number, n: number, a0: number, temperature_ratio: number, dt: number, steps: number): string;

/**
 * Eigenvalues of one sampled Wishart matrix against the MP law.
 */
export function wishart_spectrum(n: number, p: number, bins: number, seed: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly langevin_a: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number];
    readonly volterra_g: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number];
    readonly wishart_spectrum: (a: number, b: number, c: number, d: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
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
