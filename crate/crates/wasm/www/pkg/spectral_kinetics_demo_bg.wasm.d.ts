/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const langevin_a: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number];
export const volterra_g: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number];
export const wishart_spectrum: (a: number, b: number, c: number, d: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
