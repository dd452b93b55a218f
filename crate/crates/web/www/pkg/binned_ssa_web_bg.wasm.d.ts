/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_sliceview_free: (a: number, b: number) => void;
export const __wbg_trajectoryview_free: (a: number, b: number) => void;
export const search_depth_curve: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const simulate_model: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
export const sliceview_a: (a: number) => [number, number];
export const sliceview_b: (a: number) => [number, number];
export const sliceview_side: (a: number) => number;
export const sliceview_steps: (a: number) => number;
export const spatial_slice: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
export const trajectoryview_species: (a: number) => [number, number];
export const trajectoryview_times: (a: number) => [number, number];
export const trajectoryview_values: (a: number) => [number, number];
export const trajectoryview_steps: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_drop_slice: (a: number, b: number) => void;
export const __wbindgen_start: () => void;
