/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_attackoutput_free: (a: number, b: number) => void;
export const __wbg_demo_free: (a: number, b: number) => void;
export const __wbg_sweepoutput_free: (a: number, b: number) => void;
export const attackoutput_adversarial: (a: number) => [number, number];
export const attackoutput_l0: (a: number) => number;
export const attackoutput_l2: (a: number) => number;
export const attackoutput_linf: (a: number) => number;
export const attackoutput_success: (a: number) => number;
export const attackoutput_target_trace: (a: number) => [number, number];
export const attackoutput_true_trace: (a: number) => [number, number];
export const demo_attack: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
export const demo_classify: (a: number, b: number, c: number) => [number, number, number, number];
export const demo_image: (a: number, b: number) => [number, number];
export const demo_image_count: (a: number) => number;
export const demo_label: (a: number, b: number) => number;
export const demo_load_images: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const demo_new: (a: number, b: number) => [number, number, number];
export const demo_sweep: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
export const rotate: (a: number, b: number, c: number) => [number, number, number, number];
export const sweepoutput_angles: (a: number) => [number, number];
export const sweepoutput_best_angle: (a: number) => number;
export const sweepoutput_best_confidence: (a: number) => number;
export const sweepoutput_best_prediction: (a: number) => number;
export const sweepoutput_class_curve: (a: number, b: number) => [number, number];
export const sweepoutput_recovered: (a: number) => number;
export const sweepoutput_true_curve: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
