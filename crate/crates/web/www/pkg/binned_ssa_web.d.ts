/* tslint:disable */
/* eslint-disable */

/**
 * One `z` layer of a spatial run: `a` and `b` are `side × side` row-major.
 */
export class SliceView {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly a: Float64Array;
    readonly b: Float64Array;
    readonly side: number;
    readonly steps: number;
}

/**
 * Sampled trajectory: `values` is row-major, one row per time point.
 */
export class TrajectoryView {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly species: string[];
    readonly steps: number;
    readonly times: Float64Array;
    readonly values: Float64Array;
}

export function search_depth_curve(channels: number, widths: Float64Array, steps: number, seed: number): Float64Array;

export function simulate_model(model: string, method: string, t_final: number, dt: number, seed: number): TrajectoryView;

export function spatial_slice(domain: number, subvolume: number, t_final: number, method: string, seed: number): SliceView;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_sliceview_free: (a: number, b: number) => void;
    readonly __wbg_trajectoryview_free: (a: number, b: number) => void;
    readonly search_depth_curve: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly simulate_model: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
    readonly sliceview_a: (a: number) => [number, number];
    readonly sliceview_b: (a: number) => [number, number];
    readonly sliceview_side: (a: number) => number;
    readonly sliceview_steps: (a: number) => number;
    readonly spatial_slice: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
    readonly trajectoryview_species: (a: number) => [number, number];
    readonly trajectoryview_times: (a: number) => [number, number];
    readonly trajectoryview_values: (a: number) => [number, number];
    readonly trajectoryview_steps: (a: number) => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_drop_slice: (a: number, b: number) => void;
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
