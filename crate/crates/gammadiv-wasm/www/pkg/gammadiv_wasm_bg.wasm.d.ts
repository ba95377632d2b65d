/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const gaussianCurve: (a: number, b: number, c: number) => [number, number, number];
export const scalingCurve: (a: number, b: number, c: number) => [number, number, number];
export const solveLine: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
