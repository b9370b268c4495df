import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

/** Deterministic little PRNG so fixtures are stable across runs. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function writeXyz(file: string, coords: number[][], elements: string[]): void {
  const lines = [String(coords.length), path.basename(file)];
  coords.forEach((c, i) => {
    lines.push(`${elements[i]} ${c[0].toFixed(6)} ${c[1].toFixed(6)} ${c[2].toFixed(6)}`);
  });
  fs.writeFileSync(file, lines.join("\n") + "\n");
}

export interface Dataset {
  dir: string;
  types: string;
}

/** A small mixed-class dataset: 6 lines over 2 receptors and 6 ligands. */
export function makeDataset(tag: string): Dataset {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), `voxmol-${tag}-`));
  const rand = mulberry32(0xc0ffee);
  const elements = ["C", "N", "O", "S", "C", "N", "O", "C"];
  for (let r = 0; r < 2; r++) {
    const coords = Array.from({ length: 8 }, () =>
      [0, 1, 2].map(() => (rand() - 0.5) * 8));
    writeXyz(path.join(dir, `rec${r}.xyz`), coords, elements);
  }
  for (let i = 0; i < 6; i++) {
    const coords = Array.from({ length: 4 }, () =>
      [0, 1, 2].map(() => (rand() - 0.5) * 4));
    writeXyz(path.join(dir, `lig${i}.xyz`), coords, ["C", "O", "N", "C"]);
  }
  const lines = Array.from({ length: 6 }, (_, i) =>
    `${i % 2} rec${i % 2}.xyz lig${i}.xyz`);
  const types = path.join(dir, "data.types");
  fs.writeFileSync(types, lines.join("\n") + "\n");
  return { dir, types };
}

export function cleanup(dataset: Dataset): void {
  fs.rmSync(dataset.dir, { recursive: true, force: true });
}

export const repoRoot = path.resolve(__dirname, "..", "..");
