/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_experiment_free: (a: number, b: number) => void;
export const __wbg_ordering_free: (a: number, b: number) => void;
export const experiment_data: (a: number, b: number) => [number, number];
export const experiment_fit: (a: number, b: number) => [number, number, number, number];
export const experiment_fitted_row: (a: number, b: number) => [number, number, number, number];
export const experiment_kl: (a: number) => [number, number, number];
export const experiment_len: (a: number) => number;
export const experiment_new: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number];
export const experiment_sample: (a: number, b: bigint) => [number, number, number, number];
export const experiment_true_row: (a: number, b: number) => [number, number];
export const experiment_x: (a: number) => [number, number];
export const experiment_y: (a: number) => [number, number];
export const ordering_len: (a: number) => number;
export const ordering_neighbors: (a: number, b: number) => [number, number];
export const ordering_new: (a: number, b: number, c: number) => [number, number, number];
export const ordering_perm: (a: number) => [number, number];
export const ordering_x: (a: number) => [number, number];
export const ordering_y: (a: number) => [number, number];
export const prior_coefficient_scale: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
export const prior_mean_d: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const implied_m: (a: number, b: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
