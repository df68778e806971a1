/**
 * Batched shaped lifting reward, elementwise equal to the native evaluator
 * within 1e-12:
 *
 *   r = c1 / (|hBar - dh| + epsH) + c2 * [dh >= hBar] + c3 / (dT + epsSdf)
 *
 * with dT the sum of the five fingertip distances, negatives clamped to
 * zero unless clampPenetration is disabled.
 */

export interface RewardConfig {
  c1: number;
  c2: number;
  c3: number;
  epsH: number;
  epsSdf: number;
  hBar: number;
  clampPenetration: boolean;
}

export const DEFAULT_REWARD_CONFIG: RewardConfig = {
  c1: 0.5,
  c2: 5000.0,
  c3: 1.0,
  epsH: 0.02,
  epsSdf: 0.025,
  hBar: 0.2,
  clampPenetration: true,
};

export interface RewardBatch {
  rSdf: Float64Array;
  lift: Float64Array;
  total: Float64Array;
  success: Uint8Array;
}

/**
 * deltaH has n entries; fingertipD is a flat (n, 5) batch. Outputs keep the
 * row order.
 */
export function rewardBatch(
  deltaH: Float64Array,
  fingertipD: Float64Array,
  config: RewardConfig = DEFAULT_REWARD_CONFIG,
): RewardBatch {
  const n = deltaH.length;
  if (fingertipD.length !== 5 * n) {
    throw new RangeError(
      `batch length mismatch: ${n} heights, ${fingertipD.length / 5} distance rows`);
  }
  const rSdf = new Float64Array(n);
  const lift = new Float64Array(n);
  const total = new Float64Array(n);
  const success = new Uint8Array(n);
  const { c1, c2, c3, epsH, epsSdf, hBar, clampPenetration } = config;
  for (let i = 0; i < n; i++) {
    let dT = 0.0;
    for (let k = 0; k < 5; k++) {
      const d = fingertipD[5 * i + k];
      dT += clampPenetration ? (d > 0 ? d : 0) : d;
    }
    const r = 1.0 / (dT + epsSdf);
    const dh = deltaH[i];
    const ok = dh >= hBar;
    const l = c1 / (Math.abs(hBar - dh) + epsH) + (ok ? c2 : 0);
    rSdf[i] = r;
    lift[i] = l;
    total[i] = l + c3 * r;
    success[i] = ok ? 1 : 0;
  }
  return { rSdf, lift, total, success };
}
