/**
 * Subprocess plumbing: every binding call reaches the library through its
 * command line interface, so bindings and direct CLI use see identical
 * behavior for identical seeds.
 */

import { execFileSync } from "node:child_process";

export interface CliOptions {
  /** Python interpreter used to run the CLI (default: env PYTHON or python3). */
  python?: string;
  /** Working directory for CLI invocations. */
  cwd?: string;
  /** Kernel thread count, forwarded as --threads and NUMBA_NUM_THREADS. */
  threads?: number;
}

export class VoxmolCliError extends Error {
  constructor(message: string, readonly exitCode: number | null, readonly stderr: string) {
    super(message);
    this.name = "VoxmolCliError";
  }
}

export function runCli(args: string[], options: CliOptions = {}): string {
  const python = options.python ?? process.env.PYTHON ?? "python3";
  const env: NodeJS.ProcessEnv = { ...process.env };
  const argv = ["-m", "voxmol.cli", ...args];
  if (options.threads !== undefined) {
    env.NUMBA_NUM_THREADS = String(options.threads);
    argv.push("--threads", String(options.threads));
  }
  try {
    return execFileSync(python, argv, {
      cwd: options.cwd,
      env,
      encoding: "utf8",
      maxBuffer: 256 * 1024 * 1024,
    });
  } catch (err) {
    const e = err as { status?: number | null; stderr?: Buffer | string; message: string };
    const stderr = e.stderr ? e.stderr.toString() : "";
    const detail = stderr.trim().split("\n").slice(-3).join("\n");
    throw new VoxmolCliError(
      `voxmol CLI failed (exit ${e.status ?? "?"}): ${detail || e.message}`,
      e.status ?? null,
      stderr
    );
  }
}

/** Flag spellings follow the library's keyword names verbatim. */
export function optionFlags(options: Record<string, unknown>): string[] {
  const flags: string[] = [];
  for (const [key, value] of Object.entries(options)) {
    if (value === undefined || value === null) {
      continue;
    }
    if (typeof value === "boolean") {
      // store-true style flags; BooleanOptionalAction flags accept --no- form
      if (value) {
        flags.push(`--${key}`);
      } else if (key === "cache_structs" || key === "stratify_abs") {
        flags.push(`--no-${key}`);
      }
    } else {
      flags.push(`--${key}`, String(value));
    }
  }
  return flags;
}
