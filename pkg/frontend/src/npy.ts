/**
 * Minimal NPY v1.0 reader for the grids the voxmol CLI writes:
 * little-endian `<f4`/`<f8`, C order.
 */

import * as fs from "node:fs";
import * as os from "node:os";

export interface NpyHeader {
  /** '<f4' or '<f8' */
  descr: string;
  shape: number[];
  /** byte offset of the payload within the file */
  dataOffset: number;
  /** number of elements */
  length: number;
}

const MAGIC = Buffer.from("\x93NUMPY", "latin1");

function assertLittleEndianHost(): void {
  if (os.endianness() !== "LE") {
    throw new Error("NPY payloads are little-endian; big-endian hosts are unsupported");
  }
}

/** Parse the header of an NPY v1.0 file without touching the payload. */
export function readNpyHeader(path: string): NpyHeader {
  const fd = fs.openSync(path, "r");
  try {
    const prefix = Buffer.alloc(10);
    if (fs.readSync(fd, prefix, 0, 10, 0) !== 10) {
      throw new Error(`${path}: truncated NPY header`);
    }
    if (!prefix.subarray(0, 6).equals(MAGIC)) {
      throw new Error(`${path}: not an NPY file (bad magic)`);
    }
    if (prefix[6] !== 1) {
      throw new Error(`${path}: unsupported NPY version ${prefix[6]}.${prefix[7]}`);
    }
    const headerLen = prefix.readUInt16LE(8);
    const headerBuf = Buffer.alloc(headerLen);
    if (fs.readSync(fd, headerBuf, 0, headerLen, 10) !== headerLen) {
      throw new Error(`${path}: truncated NPY header`);
    }
    const header = headerBuf.toString("latin1");
    const descrMatch = header.match(/'descr':\s*'([^']+)'/);
    const fortranMatch = header.match(/'fortran_order':\s*(True|False)/);
    const shapeMatch = header.match(/'shape':\s*\(([^)]*)\)/);
    if (!descrMatch || !fortranMatch || !shapeMatch) {
      throw new Error(`${path}: unparseable NPY header: ${header.trim()}`);
    }
    if (fortranMatch[1] === "True") {
      throw new Error(`${path}: fortran-order NPY files are unsupported`);
    }
    const descr = descrMatch[1];
    if (descr !== "<f4" && descr !== "<f8") {
      throw new Error(`${path}: unsupported dtype ${descr}; expected <f4 or <f8`);
    }
    const shape = shapeMatch[1]
      .split(",")
      .map((s) => s.trim())
      .filter((s) => s.length > 0)
      .map((s) => {
        const v = Number(s);
        if (!Number.isInteger(v) || v < 0) {
          throw new Error(`${path}: bad shape component ${s}`);
        }
        return v;
      });
    const length = shape.reduce((a, b) => a * b, 1);
    return { descr, shape, dataOffset: 10 + headerLen, length };
  } finally {
    fs.closeSync(fd);
  }
}

/**
 * Read an `<f4` NPY payload directly into a caller-provided Float32Array.
 * The destination's backing buffer is written in place; no intermediate
 * copy of the payload is made. Returns the grid shape.
 */
export function readNpyInto(path: string, dest: Float32Array): number[] {
  assertLittleEndianHost();
  const header = readNpyHeader(path);
  if (header.descr !== "<f4") {
    throw new Error(
      `${path}: dtype ${header.descr} does not match the float32 destination; ` +
        "source and destination dtypes must match"
    );
  }
  if (dest.length !== header.length) {
    throw new Error(
      `${path}: grid shape (${header.shape.join(", ")}) holds ${header.length} ` +
        `floats, destination buffer has ${dest.length}`
    );
  }
  const byteLength = header.length * 4;
  const view = Buffer.from(dest.buffer, dest.byteOffset, dest.byteLength);
  const fd = fs.openSync(path, "r");
  try {
    let done = 0;
    while (done < byteLength) {
      const got = fs.readSync(fd, view, done, byteLength - done, header.dataOffset + done);
      if (got <= 0) {
        throw new Error(`${path}: truncated NPY payload`);
      }
      done += got;
    }
  } finally {
    fs.closeSync(fd);
  }
  return header.shape;
}

/** Read an `<f4` NPY file into a fresh Float32Array. */
export function readNpy(path: string): { shape: number[]; data: Float32Array } {
  const header = readNpyHeader(path);
  const data = new Float32Array(header.length);
  const shape = readNpyInto(path, data);
  return { shape, data };
}
