/**
 * The interpolation kernels, shared verbatim by the in-thread query path and
 * the worker pool so every path produces bit-identical f64 results. The
 * operation order (clamp, scale, floor, clamp index, lerp x then y then z)
 * mirrors the native engine exactly.
 */

export interface GridGeometry {
  nx: number;
  ny: number;
  nz: number;
  bx0: number;
  by0: number;
  bz0: number;
  bx1: number;
  by1: number;
  bz1: number;
  sx: number;
  sy: number;
  sz: number;
}

export function interpTrilinearRange(
  values: Float32Array,
  g: GridGeometry,
  points: Float64Array,
  out: Float64Array,
  start: number,
  end: number,
): void {
  const { nx, ny, bx0, by0, bz0, bx1, by1, bz1, sx, sy, sz } = g;
  const nz = g.nz;
  const nxny = nx * ny;
  for (let i = start; i < end; i++) {
    let x = points[3 * i];
    let y = points[3 * i + 1];
    let z = points[3 * i + 2];
    if (x < bx0) x = bx0; else if (x > bx1) x = bx1;
    if (y < by0) y = by0; else if (y > by1) y = by1;
    if (z < bz0) z = bz0; else if (z > bz1) z = bz1;
    const tx = (x - bx0) / sx;
    const ty = (y - by0) / sy;
    const tz = (z - bz0) / sz;
    let ix = Math.floor(tx) | 0;
    let iy = Math.floor(ty) | 0;
    let iz = Math.floor(tz) | 0;
    if (ix > nx - 2) ix = nx - 2;
    if (iy > ny - 2) iy = ny - 2;
    if (iz > nz - 2) iz = nz - 2;
    if (ix < 0) ix = 0;
    if (iy < 0) iy = 0;
    if (iz < 0) iz = 0;
    const fx = tx - ix;
    const fy = ty - iy;
    const fz = tz - iz;
    const b000 = ix + nx * (iy + ny * iz);
    const b010 = b000 + nx;
    const b001 = b000 + nxny;
    const b011 = b010 + nxny;
    const c000 = values[b000];
    const c100 = values[b000 + 1];
    const c010 = values[b010];
    const c110 = values[b010 + 1];
    const c001 = values[b001];
    const c101 = values[b001 + 1];
    const c011 = values[b011];
    const c111 = values[b011 + 1];
    const c00 = c000 + fx * (c100 - c000);
    const c10 = c010 + fx * (c110 - c010);
    const c01 = c001 + fx * (c101 - c001);
    const c11 = c011 + fx * (c111 - c011);
    const c0 = c00 + fy * (c10 - c00);
    const c1 = c01 + fy * (c11 - c01);
    out[i] = c0 + fz * (c1 - c0);
  }
}

export function interpNearestRange(
  values: Float32Array,
  g: GridGeometry,
  points: Float64Array,
  out: Float64Array,
  start: number,
  end: number,
): void {
  const { nx, ny, nz, bx0, by0, bz0, bx1, by1, bz1, sx, sy, sz } = g;
  for (let i = start; i < end; i++) {
    let x = points[3 * i];
    let y = points[3 * i + 1];
    let z = points[3 * i + 2];
    if (x < bx0) x = bx0; else if (x > bx1) x = bx1;
    if (y < by0) y = by0; else if (y > by1) y = by1;
    if (z < bz0) z = bz0; else if (z > bz1) z = bz1;
    let ix = Math.floor((x - bx0) / sx + 0.5) | 0;
    let iy = Math.floor((y - by0) / sy + 0.5) | 0;
    let iz = Math.floor((z - bz0) / sz + 0.5) | 0;
    if (ix > nx - 1) ix = nx - 1;
    if (iy > ny - 1) iy = ny - 1;
    if (iz > nz - 1) iz = nz - 1;
    if (ix < 0) ix = 0;
    if (iy < 0) iy = 0;
    if (iz < 0) iz = 0;
    out[i] = values[ix + nx * (iy + ny * iz)];
  }
}
