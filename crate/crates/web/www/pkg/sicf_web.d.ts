/* tslint:disable */
/* eslint-disable */

/**
 * Simulated Matérn data on a grid and the fitted factor.
 */
export class Experiment {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * One replicate of the simulated data.
     */
    data(k: number): Float64Array;
    /**
     * Empirical Bayes fit; returns theta1, theta2, theta3 and the selected m.
     */
    fit(m_max: number): Float64Array;
    /**
     * Covariances between `site` and every site under the fit.
     */
    fitted_row(site: number): Float64Array;
    /**
     * KL divergence of the fitted covariance from the truth.
     */
    kl(): number;
    len(): number;
    constructor(side: number, range: number, smoothness: number, nrep: number, seed: bigint);
    /**
     * A field drawn from the fitted model.
     */
    sample(seed: bigint): Float64Array;
    /**
     * Covariances between `site` and every site under the true model.
     */
    true_row(site: number): Float64Array;
    x(): Float64Array;
    y(): Float64Array;
}

/**
 * Maximin ordering of a grid with its conditioning sets.
 */
export class Ordering {
    free(): void;
    [Symbol.dispose](): void;
    len(): number;
    /**
     * Site indices conditioned on by ordered position `k`, nearest first.
     */
    neighbors(k: number): Uint32Array;
    constructor(rows: number, cols: number, m: number);
    /**
     * Site index at each ordered position.
     */
    perm(): Uint32Array;
    x(): Float64Array;
    y(): Float64Array;
}

/**
 * Conditioning-set size implied by theta3.
 */
export function implied_m(theta3: number, m_max: number): number;

/**
 * Prior variance of the regression coefficients on the j-th nearest
 * neighbor for j = 1..=m_max at ordered position `i`, relative to d_i.
 */
export function prior_coefficient_scale(theta1: number, theta2: number, theta3: number, i: number, p: number, m_max: number): Float64Array;

/**
 * Prior mean of the conditional variance d_i at ordered positions 1..=n.
 */
export function prior_mean_d(theta1: number, theta2: number, theta3: number, n: number, p: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_experiment_free: (a: number, b: number) => void;
    readonly __wbg_ordering_free: (a: number, b: number) => void;
    readonly experiment_data: (a: number, b: number) => [number, number];
    readonly experiment_fit: (a: number, b: number) => [number, number, number, number];
    readonly experiment_fitted_row: (a: number, b: number) => [number, number, number, number];
    readonly experiment_kl: (a: number) => [number, number, number];
    readonly experiment_len: (a: number) => number;
    readonly experiment_new: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number];
    readonly experiment_sample: (a: number, b: bigint) => [number, number, number, number];
    readonly experiment_true_row: (a: number, b: number) => [number, number];
    readonly experiment_x: (a: number) => [number, number];
    readonly experiment_y: (a: number) => [number, number];
    readonly ordering_len: (a: number) => number;
    readonly ordering_neighbors: (a: number, b: number) => [number, number];
    readonly ordering_new: (a: number, b: number, c: number) => [number, number, number];
    readonly ordering_perm: (a: number) => [number, number];
    readonly ordering_x: (a: number) => [number, number];
    readonly ordering_y: (a: number) => [number, number];
    readonly prior_coefficient_scale: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly prior_mean_d: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly implied_m: (a: number, b: number) => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_table_dealloc: (a: number) => void;
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
