/* tslint:disable */
/* eslint-disable */

export class AttackOutput {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    adversarial(): Float64Array;
    target_trace(): Float64Array;
    true_trace(): Float64Array;
    readonly l0: number;
    readonly l2: number;
    readonly linf: number;
    readonly success: boolean;
}

export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    attack(pixels: Float64Array, true_class: number, target_class: number, epsilon_step: number, iterations: number): AttackOutput;
    /**
     * Class probabilities for one image.
     */
    classify(pixels: Float64Array): Float64Array;
    image(index: number): Float64Array | undefined;
    image_count(): number;
    label(index: number): number | undefined;
    /**
     * Loads a pair of IDX files and returns the number of samples.
     */
    load_images(images: Uint8Array, labels: Uint8Array): number;
    /**
     * Builds a demo around the bytes of a `rotguard train` checkpoint.
     */
    constructor(checkpoint: Uint8Array);
    sweep(pixels: Float64Array, true_class: number, angle_min: number, angle_max: number, angle_step: number): SweepOutput;
}

export class SweepOutput {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    angles(): Int32Array;
    /**
     * Probability of `class` at every angle.
     */
    class_curve(_class: number): Float64Array;
    /**
     * True-class probability at every angle.
     */
    true_curve(): Float64Array;
    readonly best_angle: number;
    readonly best_confidence: number;
    readonly best_prediction: number;
    readonly recovered: boolean;
}

/**
 * Counterclockwise rotation with zero fill.
 */
export function rotate(pixels: Float64Array, degrees: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_attackoutput_free: (a: number, b: number) => void;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly __wbg_sweepoutput_free: (a: number, b: number) => void;
    readonly attackoutput_adversarial: (a: number) => [number, number];
    readonly attackoutput_l0: (a: number) => number;
    readonly attackoutput_l2: (a: number) => number;
    readonly attackoutput_linf: (a: number) => number;
    readonly attackoutput_success: (a: number) => number;
    readonly attackoutput_target_trace: (a: number) => [number, number];
    readonly attackoutput_true_trace: (a: number) => [number, number];
    readonly demo_attack: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
    readonly demo_classify: (a: number, b: number, c: number) => [number, number, number, number];
    readonly demo_image: (a: number, b: number) => [number, number];
    readonly demo_image_count: (a: number) => number;
    readonly demo_label: (a: number, b: number) => number;
    readonly demo_load_images: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly demo_new: (a: number, b: number) => [number, number, number];
    readonly demo_sweep: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
    readonly rotate: (a: number, b: number, c: number) => [number, number, number, number];
    readonly sweepoutput_angles: (a: number) => [number, number];
    readonly sweepoutput_best_angle: (a: number) => number;
    readonly sweepoutput_best_confidence: (a: number) => number;
    readonly sweepoutput_best_prediction: (a: number) => number;
    readonly sweepoutput_class_curve: (a: number, b: number) => [number, number];
    readonly sweepoutput_recovered: (a: number) => number;
    readonly sweepoutput_true_curve: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
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
