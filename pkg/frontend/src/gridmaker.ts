/**
 * GridMaker bindings: voxelize structure files or sampled batches through
 * the CLI, landing the grid in a caller-provided Float32Array without any
 * intermediate copy of the payload.
 */

import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { CliOptions, optionFlags, runCli } from "./cli";
import { readNpy, readNpyInto } from "./npy";
import { ProviderOptions } from "./provider";

export interface GridMakerOptions {
  resolution?: number;
  dimension?: number;
  binary?: boolean;
  radius_type_indexed?: boolean;
  radius_scale?: number;
  gaussian_radius_multiple?: number;
}

export interface ForwardOptions {
  /** Voxelize a sampled batch from this metadata file. */
  types?: string;
  /** Structure files forming one example (alternative to `types`). */
  molfiles?: string[];
  batchSize?: number;
  seed?: number;
  random_rotation?: boolean;
  random_translation?: number;
  /** Extra provider options when `types` is used. */
  provider?: ProviderOptions;
}

export interface GridResult {
  shape: number[];
  sidecar: Record<string, unknown>;
}

const GRIDMAKER_DEFAULTS: Required<GridMakerOptions> = {
  resolution: 0.5,
  dimension: 23.5,
  binary: false,
  radius_type_indexed: false,
  radius_scale: 1.0,
  gaussian_radius_multiple: 1.0,
};

export class GridMaker {
  readonly options: Required<GridMakerOptions>;

  constructor(options: GridMakerOptions = {}, private readonly cli: CliOptions = {}) {
    this.options = { ...GRIDMAKER_DEFAULTS, ...options };
  }

  /** Grid points per axis: round(dimension / resolution) + 1. */
  pointsPerSide(): number {
    return Math.floor(this.options.dimension / this.options.resolution + 0.5) + 1;
  }

  private run(forward: ForwardOptions, output: string): GridResult {
    const args: string[] = ["voxelize"];
    if (forward.types) {
      args.push("--types", forward.types, "--batch-size", String(forward.batchSize ?? 1));
    } else if (forward.molfiles && forward.molfiles.length > 0) {
      args.push(...forward.molfiles);
    } else {
      throw new Error("forward needs a types file or structure files");
    }
    args.push("-o", output);
    args.push(...optionFlags(this.options as unknown as Record<string, unknown>));
    if (forward.provider) {
      args.push(...optionFlags(forward.provider as Record<string, unknown>));
    }
    if (forward.seed !== undefined) {
      args.push("--seed", String(forward.seed));
    }
    if (forward.random_rotation) {
      args.push("--random_rotation");
    }
    if (forward.random_translation) {
      args.push("--random_translation", String(forward.random_translation));
    }
    runCli(args, this.cli);
    const sidecarPath = output.replace(/\.npy$/, ".json");
    const sidecar = fs.existsSync(sidecarPath)
      ? (JSON.parse(fs.readFileSync(sidecarPath, "utf8")) as Record<string, unknown>)
      : {};
    return { shape: [], sidecar };
  }

  /**
   * Voxelize into the caller's float32 buffer, in place. The buffer must
   * hold exactly the grid's element count; its identity and backing
   * ArrayBuffer are preserved. Returns the grid shape and sidecar
   * metadata.
   */
  forwardInto(forward: ForwardOptions, dest: Float32Array): GridResult {
    if (!(dest instanceof Float32Array)) {
      throw new TypeError(
        "destination must be a Float32Array; source and destination dtypes must match"
      );
    }
    const workdir = fs.mkdtempSync(path.join(os.tmpdir(), "voxmol-grid-"));
    const npyPath = path.join(workdir, "grid.npy");
    try {
      const result = this.run(forward, npyPath);
      result.shape = readNpyInto(npyPath, dest);
      return result;
    } finally {
      fs.rmSync(workdir, { recursive: true, force: true });
    }
  }

  /** Voxelize into a fresh Float32Array. */
  forward(forward: ForwardOptions): GridResult & { data: Float32Array } {
    const workdir = fs.mkdtempSync(path.join(os.tmpdir(), "voxmol-grid-"));
    const npyPath = path.join(workdir, "grid.npy");
    try {
      const result = this.run(forward, npyPath);
      const { shape, data } = readNpy(npyPath);
      return { ...result, shape, data };
    } finally {
      fs.rmSync(workdir, { recursive: true, force: true });
    }
  }
}
