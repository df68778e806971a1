/**
 * Reader and batched query engine for SDF grid cache files ("SDFG" format).
 *
 * File layout (little-endian, 64-byte header):
 *   offset  0  magic      4 bytes  "SDFG"
 *   offset  4  version    u32      1
 *   offset  8  dims       3 x u16  nx, ny, nz
 *   offset 14  pad        u16
 *   offset 16  bounds_min 3 x f64
 *   offset 40  bounds_max 3 x f64
 *   offset 64  payload    nx*ny*nz x f32, x-fastest (index = x + nx*(y + ny*z))
 *
 * Queries run the kernel from kernel.ts, which mirrors the native engine
 * operation-for-operation in f64, so outputs are bitwise identical to the
 * native engine on the same inputs. Large batches are partitioned across a
 * small worker pool (points are independent, so partitioning preserves both
 * order and bits); the calling thread blocks until the batch completes.
 */

import * as fs from "fs";
import * as os from "os";
import * as path from "path";
import { Worker } from "worker_threads";

import { GridGeometry, interpNearestRange, interpTrilinearRange } from "./kernel";

const MAGIC = 0x47464453; // "SDFG" read as LE u32
const VERSION = 1;
const HEADER_BYTES = 64;
const PARALLEL_THRESHOLD = 16384; // points; below this the pool overhead dominates

export class GridFormatError extends Error {}

export type QueryMode = "trilinear" | "nearest";

export interface LoadOptions {
  /** Worker pool width; defaults to the machine parallelism (capped at 4).
   * Pass 0 to force single-threaded queries. */
  workers?: number;
}

export class GridHandle {
  private values: Float32Array | null;
  private pool: Worker[] = [];
  private sharedValues: SharedArrayBuffer | null = null;
  private scratchPoints: SharedArrayBuffer | null = null;
  private scratchOut: SharedArrayBuffer | null = null;
  private readonly control = new SharedArrayBuffer(4);
  readonly dims: readonly [number, number, number];
  readonly boundsMin: readonly [number, number, number];
  readonly boundsMax: readonly [number, number, number];
  readonly spacing: readonly [number, number, number];
  private readonly geometry: GridGeometry;

  private constructor(
    values: Float32Array,
    dims: [number, number, number],
    boundsMin: [number, number, number],
    boundsMax: [number, number, number],
    workers: number,
  ) {
    this.values = values;
    this.dims = dims;
    this.boundsMin = boundsMin;
    this.boundsMax = boundsMax;
    // same expression the native side evaluates in f64
    this.spacing = [
      (boundsMax[0] - boundsMin[0]) / (dims[0] - 1),
      (boundsMax[1] - boundsMin[1]) / (dims[1] - 1),
      (boundsMax[2] - boundsMin[2]) / (dims[2] - 1),
    ];
    this.geometry = {
      nx: dims[0], ny: dims[1], nz: dims[2],
      bx0: boundsMin[0], by0: boundsMin[1], bz0: boundsMin[2],
      bx1: boundsMax[0], by1: boundsMax[1], bz1: boundsMax[2],
      sx: this.spacing[0], sy: this.spacing[1], sz: this.spacing[2],
    };
    if (workers > 0) {
      this.sharedValues = new SharedArrayBuffer(values.byteLength);
      new Float32Array(this.sharedValues).set(values);
      const script = path.join(__dirname, "worker.js");
      for (let k = 0; k < workers; k++) {
        const w = new Worker(script, {
          workerData: { geometry: this.geometry, values: this.sharedValues },
        });
        w.unref();
        this.pool.push(w);
      }
    }
  }

  /** Load a grid cache file; validates magic, version, and payload length. */
  static load(filePath: string, options: LoadOptions = {}): GridHandle {
    const buf = fs.readFileSync(filePath);
    if (buf.length < HEADER_BYTES) {
      throw new GridFormatError(`${filePath}: truncated header (${buf.length} bytes)`);
    }
    if (buf.readUInt32LE(0) !== MAGIC) {
      throw new GridFormatError(`${filePath}: bad magic`);
    }
    const version = buf.readUInt32LE(4);
    if (version !== VERSION) {
      throw new GridFormatError(`${filePath}: unsupported version ${version}`);
    }
    const nx = buf.readUInt16LE(8);
    const ny = buf.readUInt16LE(10);
    const nz = buf.readUInt16LE(12);
    const boundsMin: [number, number, number] = [
      buf.readDoubleLE(16), buf.readDoubleLE(24), buf.readDoubleLE(32)];
    const boundsMax: [number, number, number] = [
      buf.readDoubleLE(40), buf.readDoubleLE(48), buf.readDoubleLE(56)];
    const count = nx * ny * nz;
    const expected = HEADER_BYTES + 4 * count;
    if (buf.length !== expected) {
      throw new GridFormatError(
        `${filePath}: payload length ${buf.length} bytes, expected ${expected}`);
    }
    if (nx < 2 || ny < 2 || nz < 2) {
      throw new GridFormatError(`${filePath}: dims must be >= 2, got ${nx}x${ny}x${nz}`);
    }
    // view over the file buffer; the payload is not copied
    const values = new Float32Array(buf.buffer, buf.byteOffset + HEADER_BYTES, count);
    // the main thread computes one chunk itself, so spawn one fewer worker
    const workers = options.workers ?? Math.min(3, Math.max(1, os.availableParallelism() - 1));
    return new GridHandle(values, [nx, ny, nz], boundsMin, boundsMax, workers);
  }

  get released(): boolean {
    return this.values === null;
  }

  /** Drop the payload and terminate pool workers; later queries throw. */
  release(): void {
    this.values = null;
    this.sharedValues = null;
    this.scratchPoints = null;
    this.scratchOut = null;
    for (const w of this.pool) {
      void w.terminate();
    }
    this.pool = [];
  }

  /**
   * Batched signed-distance lookup for a flat (n*3) coordinate array.
   * Points are clamped componentwise into the bounds; values interpolate
   * trilinearly from the 8 surrounding voxels (or snap to the nearest voxel
   * with mode "nearest"). Output order matches input order.
   */
  query(points: Float64Array, mode: QueryMode = "trilinear"): Float64Array {
    const values = this.values;
    if (values === null) {
      throw new Error("grid handle has been released");
    }
    if (points.length % 3 !== 0) {
      throw new RangeError(`points must be a flat (n, 3) batch, length ${points.length}`);
    }
    const n = points.length / 3;
    const nearest = mode === "nearest";
    if (this.pool.length > 0 && n >= PARALLEL_THRESHOLD) {
      return this.queryPooled(points, n, nearest);
    }
    const out = new Float64Array(n);
    if (nearest) {
      interpNearestRange(values, this.geometry, points, out, 0, n);
    } else {
      interpTrilinearRange(values, this.geometry, points, out, 0, n);
    }
    return out;
  }

  private queryPooled(points: Float64Array, n: number, nearest: boolean): Float64Array {
    // scratch buffers are reused across queries; query() is synchronous, so
    // a handle never runs two pooled batches at once
    if (!this.scratchPoints || this.scratchPoints.byteLength < points.byteLength) {
      this.scratchPoints = new SharedArrayBuffer(points.byteLength);
    }
    if (!this.scratchOut || this.scratchOut.byteLength < 8 * n) {
      this.scratchOut = new SharedArrayBuffer(8 * n);
    }
    const result = new Float64Array(n);
    const width = this.pool.length;
    // the main thread also marshals data, so it takes a smaller share and
    // works directly on the caller's arrays; workers cover [mainEnd, n)
    const mainEnd = Math.min(n, Math.floor((n * 0.8) / (width + 0.8)));
    const pointsView = new Float64Array(this.scratchPoints, 0, 3 * n);
    pointsView.set(points.subarray(3 * mainEnd), 3 * mainEnd);
    const outView = new Float64Array(this.scratchOut, 0, n);
    const control = new Int32Array(this.control);
    Atomics.store(control, 0, 0);
    const chunk = Math.ceil((n - mainEnd) / width);
    let issued = 0;
    for (let k = 0; k < width; k++) {
      const start = mainEnd + k * chunk;
      const end = Math.min(n, start + chunk);
      if (start >= end) continue;
      this.pool[k].postMessage({
        points: this.scratchPoints, out: this.scratchOut, control: this.control,
        nearest, start, end,
      });
      issued++;
    }
    if (nearest) {
      interpNearestRange(this.values!, this.geometry, points, result, 0, mainEnd);
    } else {
      interpTrilinearRange(this.values!, this.geometry, points, result, 0, mainEnd);
    }
    for (;;) {
      const done = Atomics.load(control, 0);
      if (done >= issued) break;
      Atomics.wait(control, 0, done);
    }
    result.set(outView.subarray(mainEnd), mainEnd);
    return result;
  }

  /**
   * Signed distances for the five fingertips of a hand given the object's
   * world pose (position + wxyz quaternion): fingertips are mapped into the
   * object frame by the inverse pose, then batch-queried.
   */
  fingertipDistances(
    position: readonly [number, number, number],
    quaternionWxyz: readonly [number, number, number, number],
    fingertips: Float64Array,
  ): Float64Array {
    if (fingertips.length !== 15) {
      throw new RangeError(`expected 5 fingertips (flat length 15), got ${fingertips.length}`);
    }
    const [w, qx, qy, qz] = quaternionWxyz;
    const norm = Math.sqrt(w * w + qx * qx + qy * qy + qz * qz);
    const iw = w / norm, ix = qx / norm, iy = qy / norm, iz = qz / norm;
    // rows of R^T (columns of R)
    const r00 = 1 - 2 * (iy * iy + iz * iz), r01 = 2 * (ix * iy - iz * iw), r02 = 2 * (ix * iz + iy * iw);
    const r10 = 2 * (ix * iy + iz * iw), r11 = 1 - 2 * (ix * ix + iz * iz), r12 = 2 * (iy * iz - ix * iw);
    const r20 = 2 * (ix * iz - iy * iw), r21 = 2 * (iy * iz + ix * iw), r22 = 1 - 2 * (ix * ix + iy * iy);
    const local = new Float64Array(15);
    for (let i = 0; i < 5; i++) {
      const dx = fingertips[3 * i] - position[0];
      const dy = fingertips[3 * i + 1] - position[1];
      const dz = fingertips[3 * i + 2] - position[2];
      local[3 * i] = r00 * dx + r10 * dy + r20 * dz;
      local[3 * i + 1] = r01 * dx + r11 * dy + r21 * dz;
      local[3 * i + 2] = r02 * dx + r12 * dy + r22 * dz;
    }
    return this.query(local);
  }
}

export function loadGrid(filePath: string, options: LoadOptions = {}): GridHandle {
  return GridHandle.load(filePath, options);
}
