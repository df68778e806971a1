/** Pool worker: runs the shared interpolation kernel over an index range. */

import { parentPort, workerData } from "node:worker_threads";

import { GridGeometry, interpNearestRange, interpTrilinearRange } from "./kernel";

interface Task {
  points: SharedArrayBuffer;
  out: SharedArrayBuffer;
  control: SharedArrayBuffer;
  nearest: boolean;
  start: number;
  end: number;
}

const geometry: GridGeometry = workerData.geometry;
const values = new Float32Array(workerData.values as SharedArrayBuffer);

parentPort!.on("message", (task: Task) => {
  const points = new Float64Array(task.points);
  const out = new Float64Array(task.out);
  if (task.nearest) {
    interpNearestRange(values, geometry, points, out, task.start, task.end);
  } else {
    interpTrilinearRange(values, geometry, points, out, task.start, task.end);
  }
  const control = new Int32Array(task.control);
  Atomics.add(control, 0, 1);
  Atomics.notify(control, 0);
});
