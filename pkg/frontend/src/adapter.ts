#!/usr/bin/env node
/**
 * Wire-protocol adapter wrapping a local image classifier.
 *
 * Reads JSON-lines requests {"id": string, "path": string} on stdin until it
 * closes, and writes one JSON reply per request on stdout: {"id", "label"}
 * with label "pos" or "neg", or {"id", "error"} when the image cannot be
 * read. An unreadable image never kills the loop; only a model or class-map
 * load failure exits nonzero (before any reply). Empty input exits 0.
 *
 * Usage: adapter --model <weights.json> --classmap <classes.txt>
 */
import { readFileSync } from "node:fs";
import { createInterface } from "node:readline";
import { PNG } from "pngjs";

import { loadClassMap, toLabel } from "./classmap";
import { classify, loadModel, preprocess } from "./model";

function parseArgs(argv: string[]): { model: string; classmap: string } {
  let model: string | undefined;
  let classmap: string | undefined;
  for (let i = 0; i < argv.length; i++) {
    if (argv[i] === "--model") model = argv[++i];
    else if (argv[i] === "--classmap") classmap = argv[++i];
    else {
      process.stderr.write(`unknown argument: ${argv[i]}\n`);
      process.exit(2);
    }
  }
  if (!model || !classmap) {
    process.stderr.write(
      "usage: adapter --model <weights.json> --classmap <classes.txt>\n",
    );
    process.exit(2);
  }
  return { model: model!, classmap: classmap! };
}

function main(): void {
  const args = parseArgs(process.argv.slice(2));
  // Model or class-map problems are fatal before the first reply.
  const model = loadModel(args.model);
  const classMap = loadClassMap(args.classmap);

  const rl = createInterface({ input: process.stdin, terminal: false });
  rl.on("line", (line: string) => {
    const trimmed = line.trim();
    if (trimmed.length === 0) return;
    let id: unknown = null;
    try {
      const req = JSON.parse(trimmed) as { id?: unknown; path?: unknown };
      id = req.id ?? null;
      if (typeof req.id !== "string" || typeof req.path !== "string") {
        throw new Error("request must have string 'id' and 'path'");
      }
      const png = PNG.sync.read(readFileSync(req.path));
      const input = preprocess(
        png.data,
        png.width,
        png.height,
        4, // pngjs always expands to RGBA
        model.input_size,
      );
      const label = toLabel(classMap, classify(model, input));
      process.stdout.write(JSON.stringify({ id: req.id, label }) + "\n");
    } catch (err) {
      const msg = err instanceof Error ? err.message : String(err);
      process.stdout.write(JSON.stringify({ id, error: msg }) + "\n");
    }
  });
  rl.on("close", () => process.exit(0));
}

main();
