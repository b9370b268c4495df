/**
 * Rigid-transform value types mirroring the library's geometry surface:
 * a unit quaternion rotation about a center plus a translation, applied as
 * x -> R (x - center) + center + translation.
 */

export type Vec3 = [number, number, number];

export class Quaternion {
  readonly w: number;
  readonly x: number;
  readonly y: number;
  readonly z: number;

  constructor(w = 1, x = 0, y = 0, z = 0) {
    const norm = Math.sqrt(w * w + x * x + y * y + z * z);
    if (!Number.isFinite(norm) || norm === 0) {
      throw new RangeError("cannot normalize a zero or non-finite quaternion");
    }
    this.w = w / norm;
    this.x = x / norm;
    this.y = y / norm;
    this.z = z / norm;
  }

  conjugate(): Quaternion {
    return new Quaternion(this.w, -this.x, -this.y, -this.z);
  }

  /** Rotation angle in radians, in [0, pi]. */
  get angle(): number {
    return 2 * Math.acos(Math.min(1, Math.abs(this.w)));
  }

  rotationMatrix(): number[][] {
    const { w, x, y, z } = this;
    return [
      [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
      [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
      [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ];
  }

  rotate(v: Vec3): Vec3 {
    const m = this.rotationMatrix();
    return [
      m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
      m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
      m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ];
  }
}

export class Transform {
  readonly rotation: Quaternion;
  readonly center: Vec3;
  readonly translation: Vec3;

  constructor(rotation?: Quaternion, center?: Vec3, translation?: Vec3) {
    this.rotation = rotation ?? new Quaternion();
    this.center = center ?? [0, 0, 0];
    this.translation = translation ?? [0, 0, 0];
  }

  /**
   * Transform (N, 3) coordinates flattened row-major into a Float32Array
   * or number array; returns the same container type written in place when
   * `out` is given.
   */
  forward(coords: Float32Array | number[], out?: Float32Array | number[]):
      Float32Array | number[] {
    if (coords.length % 3 !== 0) {
      throw new RangeError(`coordinate array length ${coords.length} is not a multiple of 3`);
    }
    const target = out ?? (coords instanceof Float32Array
      ? new Float32Array(coords.length)
      : new Array<number>(coords.length));
    if (target.length !== coords.length) {
      throw new RangeError(`output length ${target.length} does not match input ${coords.length}`);
    }
    const [cx, cy, cz] = this.center;
    const [tx, ty, tz] = this.translation;
    const m = this.rotation.rotationMatrix();
    for (let i = 0; i < coords.length; i += 3) {
      const px = coords[i] - cx;
      const py = coords[i + 1] - cy;
      const pz = coords[i + 2] - cz;
      target[i] = m[0][0] * px + m[0][1] * py + m[0][2] * pz + cx + tx;
      target[i + 1] = m[1][0] * px + m[1][1] * py + m[1][2] * pz + cy + ty;
      target[i + 2] = m[2][0] * px + m[2][1] * py + m[2][2] * pz + cz + tz;
    }
    return target;
  }

  inverse(): Transform {
    const inv = this.rotation.conjugate();
    const [tx, ty, tz] = this.translation;
    const back = inv.rotate([-tx, -ty, -tz]);
    return new Transform(inv, this.center, back);
  }
}
