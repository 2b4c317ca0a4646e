#!/usr/bin/env node
/**
 * Regenerates models/tiny-classifier.json with deterministic pseudo-random
 * weights (mulberry32 PRNG, fixed seed). The classifier carries no trained
 * knowledge — it exists so the adapter has a real, deterministic inference
 * path to wrap; the reliability checker treats it as an arbitrary black box.
 */
const { writeFileSync } = require("node:fs");
const { join } = require("node:path");

function mulberry32(seed) {
  let a = seed >>> 0;
  return function () {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

const rng = mulberry32(0xc0ffee);
const round = (x) => Math.round(x * 1e6) / 1e6;
const matrix = (rows, cols, scale) =>
  Array.from({ length: rows }, () =>
    Array.from({ length: cols }, () => round((rng() * 2 - 1) * scale)),
  );
const vector = (n, scale) =>
  Array.from({ length: n }, () => round((rng() * 2 - 1) * scale));

const INPUT = 8; // 8x8 pooled grayscale
const HIDDEN = 24;
const CLASSES = [
  "sports_car",
  "convertible",
  "jeep",
  "minivan",
  "street_sign",
  "traffic_light",
  "park_bench",
  "umbrella",
];

const model = {
  name: "tiny-pooled-grayscale-mlp",
  input_size: INPUT,
  classes: CLASSES,
  layers: [
    { weights: matrix(HIDDEN, INPUT * INPUT, 1.5), bias: vector(HIDDEN, 0.1) },
    { weights: matrix(CLASSES.length, HIDDEN, 1.0), bias: vector(CLASSES.length, 0.1) },
  ],
};

const out = join(__dirname, "..", "models", "tiny-classifier.json");
writeFileSync(out, JSON.stringify(model) + "\n");
console.log(`wrote ${out}`);
