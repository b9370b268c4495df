/**
 * Example provider bindings: the same sampling options as the library
 * constructor, served through `voxmol inspect --dump`. A batch of n equals
 * n consecutive single draws, so the binding fetches the deterministic
 * single-draw stream for a given seed and slices batches from it.
 */

import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { CliOptions, optionFlags, runCli } from "./cli";

export interface ProviderOptions {
  shuffle?: boolean;
  balanced?: boolean;
  stratify_receptor?: boolean;
  labelpos?: number;
  stratify_pos?: number;
  stratify_abs?: boolean;
  stratify_min?: number;
  stratify_max?: number;
  stratify_step?: number;
  group_batch_size?: number;
  max_group_size?: number;
  cache_structs?: boolean;
  duplicate_first?: boolean;
  num_copies?: number;
  make_vector_types?: boolean;
  data_root?: string;
  recmolcache?: string;
  ligmolcache?: string;
  seed?: number;
}

export interface BoundExample {
  group: number | null;
  labels: number[];
  files: string[];
  seqcont: boolean;
}

interface DumpDocument {
  batches: BoundExample[][];
}

export class Provider {
  private typesFiles: string[] = [];
  private stream: BoundExample[] = [];
  private cursor = 0;

  constructor(
    readonly options: ProviderOptions = {},
    private readonly cli: CliOptions = {}
  ) {
    if (options.seed === undefined) {
      // the CLI process is re-run per fetch; a pinned seed keeps one stream
      this.options = { ...options, seed: Math.floor(Math.random() * 2 ** 31) };
    }
  }

  populate(typesFile: string | string[]): void {
    const files = Array.isArray(typesFile) ? typesFile : [typesFile];
    for (const file of files) {
      if (!fs.existsSync(file)) {
        throw new Error(`metadata file not found: ${file}`);
      }
      this.typesFiles.push(file);
    }
    this.stream = [];
    this.cursor = 0;
  }

  get size(): number {
    let lines = 0;
    for (const file of this.typesFiles) {
      for (const line of fs.readFileSync(file, "utf8").split("\n")) {
        const stripped = line.trim();
        if (stripped && !stripped.startsWith("#")) {
          lines += 1;
        }
      }
    }
    return lines;
  }

  private fetch(totalDraws: number): void {
    if (this.typesFiles.length === 0) {
      throw new Error("provider is not populated");
    }
    if (this.typesFiles.length > 1) {
      throw new Error("bindings currently populate from a single metadata file");
    }
    const dumpPath = path.join(
      fs.mkdtempSync(path.join(os.tmpdir(), "voxmol-dump-")),
      "batches.json"
    );
    try {
      runCli(
        [
          "inspect",
          this.typesFiles[0],
          "--batches",
          String(totalDraws),
          "--batch-size",
          "1",
          "--dump",
          dumpPath,
          ...optionFlags(this.options as Record<string, unknown>),
        ],
        this.cli
      );
      const doc = JSON.parse(fs.readFileSync(dumpPath, "utf8")) as DumpDocument;
      this.stream = doc.batches.flat();
    } finally {
      fs.rmSync(path.dirname(dumpPath), { recursive: true, force: true });
    }
  }

  /** The next batch of n examples; the stream cycles endlessly. */
  nextBatch(n: number): BoundExample[] {
    if (!Number.isInteger(n) || n < 1) {
      throw new RangeError(`batch size must be a positive integer, got ${n}`);
    }
    const needed = this.cursor + n;
    if (needed > this.stream.length) {
      this.fetch(Math.max(needed, this.stream.length * 2, 16));
    }
    const batch = this.stream.slice(this.cursor, this.cursor + n);
    this.cursor += n;
    return batch;
  }

  next(): BoundExample {
    return this.nextBatch(1)[0];
  }
}
