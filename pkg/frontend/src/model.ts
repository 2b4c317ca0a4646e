/**
 * Tiny feed-forward classifier over pooled grayscale patches.
 *
 * The model file is a JSON document with the full weight matrices, so
 * inference is pure arithmetic: deterministic, dependency-free, and identical
 * across runs — which is exactly what the reliability checker requires from
 * a model under test.
 */
import { readFileSync } from "node:fs";

export interface Layer {
  /** weights[out][in] */
  weights: number[][];
  bias: number[];
}

export interface ClassifierModel {
  name: string;
  /** Images are mean-pooled to input_size x input_size grayscale. */
  input_size: number;
  classes: string[];
  layers: Layer[];
}

export function loadModel(path: string): ClassifierModel {
  const doc = JSON.parse(readFileSync(path, "utf8")) as ClassifierModel;
  if (!Number.isInteger(doc.input_size) || doc.input_size < 1) {
    throw new Error(`${path}: bad input_size`);
  }
  if (!Array.isArray(doc.classes) || doc.classes.length < 2) {
    throw new Error(`${path}: need at least two classes`);
  }
  if (!Array.isArray(doc.layers) || doc.layers.length === 0) {
    throw new Error(`${path}: no layers`);
  }
  let width = doc.input_size * doc.input_size;
  for (const [i, layer] of doc.layers.entries()) {
    if (layer.weights.length !== layer.bias.length) {
      throw new Error(`${path}: layer ${i} weight/bias size mismatch`);
    }
    for (const row of layer.weights) {
      if (row.length !== width) {
        throw new Error(`${path}: layer ${i} expects input width ${width}`);
      }
    }
    width = layer.weights.length;
  }
  if (width !== doc.classes.length) {
    throw new Error(`${path}: final layer width != number of classes`);
  }
  return doc;
}

/**
 * Mean-pool an 8-bit RGB(A) pixel buffer to size x size grayscale in [0, 1].
 * Uses the Rec. 601 luma weights.
 */
export function preprocess(
  pixels: Buffer,
  width: number,
  height: number,
  channels: number,
  size: number,
): number[] {
  const out = new Array<number>(size * size).fill(0);
  const counts = new Array<number>(size * size).fill(0);
  for (let y = 0; y < height; y++) {
    const cy = Math.min(size - 1, Math.floor((y * size) / height));
    for (let x = 0; x < width; x++) {
      const cx = Math.min(size - 1, Math.floor((x * size) / width));
      const o = (y * width + x) * channels;
      const luma =
        0.299 * pixels[o] + 0.587 * pixels[o + 1] + 0.114 * pixels[o + 2];
      out[cy * size + cx] += luma / 255;
      counts[cy * size + cx] += 1;
    }
  }
  for (let i = 0; i < out.length; i++) {
    out[i] = counts[i] > 0 ? out[i] / counts[i] : 0;
  }
  return out;
}

/** Forward pass: ReLU between layers, raw scores at the output. */
export function forward(model: ClassifierModel, input: number[]): number[] {
  let acts = input;
  for (let li = 0; li < model.layers.length; li++) {
    const { weights, bias } = model.layers[li];
    const next = new Array<number>(weights.length);
    for (let o = 0; o < weights.length; o++) {
      let v = bias[o];
      const row = weights[o];
      for (let i = 0; i < row.length; i++) v += row[i] * acts[i];
      next[o] = li < model.layers.length - 1 ? Math.max(0, v) : v;
    }
    acts = next;
  }
  return acts;
}

/** Top-1 class name; ties resolve to the lowest index for determinism. */
export function classify(model: ClassifierModel, input: number[]): string {
  const scores = forward(model, input);
  let best = 0;
  for (let i = 1; i < scores.length; i++) {
    if (scores[i] > scores[best]) best = i;
  }
  return model.classes[best];
}
