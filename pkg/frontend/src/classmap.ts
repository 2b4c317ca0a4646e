/**
 * Class map: the set of classifier class identifiers that count as the
 * positive ("pos") label of the binary task. Plain text, one identifier per
 * line; blank lines and #-comments are ignored.
 */
import { readFileSync } from "node:fs";

export interface ClassMap {
  positiveClassIds: Set<string>;
  labelPos: string;
  labelNeg: string;
}

export function loadClassMap(path: string): ClassMap {
  const ids = readFileSync(path, "utf8")
    .split("\n")
    .map((l) => l.trim())
    .filter((l) => l.length > 0 && !l.startsWith("#"));
  if (ids.length === 0) {
    throw new Error(`${path}: class map lists no positive classes`);
  }
  return { positiveClassIds: new Set(ids), labelPos: "pos", labelNeg: "neg" };
}

export function toLabel(map: ClassMap, className: string): string {
  return map.positiveClassIds.has(className) ? map.labelPos : map.labelNeg;
}
