"""
Superquadric recovery, with and without the surface regularizer
===============================================================

Superquadrics describe boxes, cylinders, and ellipsoids with 11 numbers.
Fitting one to surface points alone can mislead: for an open shape like a
bowl, a ball covering the opening keeps every *mesh* point close to the
superquadric surface even though much of the superquadric surface is far
from any mesh. The fix is a second loss term that samples the superquadric
surface and penalizes its distance to the mesh, evaluated through the
signed-distance grid.

    PYTHONPATH=src python demos/03_superquadric_recovery.py
"""

import time

import numpy as np

from graspgeom import (FitConfig, Superquadric, build_sdf_grid,
                       fit_superquadric, sample_surface, sq_surface_sample)
from graspgeom.primitives import bowl_mesh, box_mesh

# --- sanity: generate-and-recover a known shape -----------------------------
gt = Superquadric(scale=(0.05, 0.03, 0.08), exponents=(1.0, 1.0),
                  position=(0.02, -0.01, 0.03), quaternion=(1, 0, 0, 0))
cloud = sq_surface_sample(gt, 2000, seed=11)
fit = fit_superquadric(cloud, config=FitConfig(lam=0.0, seed=1)).superquadric
print("known ellipsoid:")
print(f"  true scale {gt.scale}  recovered {np.round(fit.scale, 4)}")
print(f"  recovered exponents {np.round(fit.exponents, 3)}")

# --- a cube wants tiny exponents --------------------------------------------
cube = box_mesh()
pts = sample_surface(cube, 2000, seed=3).points
res = fit_superquadric(pts, config=FitConfig(lam=0.0, seed=2))
print("\nunit cube:")
print(f"  exponents {np.round(res.superquadric.exponents, 3)} "
      f"(boxy shapes push toward the 0.1 floor)")
print(f"  scale {np.round(res.superquadric.scale, 4)} (half-extents)")

# --- the bowl: where the regularizer earns its keep -------------------------
bowl = bowl_mesh(outer_radius=0.08, thickness=0.01)
bpts = sample_surface(bowl, 2000, seed=3).points
lo, hi = bowl.aabb()
pad = 0.35 * float(np.linalg.norm(hi - lo))
grid = build_sdf_grid(bowl, dims=(96, 96, 96), bounds=(lo - pad, hi + pad))

print("\nbowl (hemispherical shell), same data, two weights:")
t0 = time.perf_counter()
plain = fit_superquadric(bpts, grid, FitConfig(lam=0.0, seed=2))
reg = fit_superquadric(bpts, grid, FitConfig(lam=1.0, seed=2))
print(f"  (fits took {time.perf_counter() - t0:.0f}s)")
for name, r in (("lam=0", plain), ("lam=1", reg)):
    sq = r.superquadric
    print(f"  {name}: scale {np.round(sq.scale, 4)} exponents "
          f"{np.round(sq.exponents, 2)}  data_loss {r.data_loss:.4f}  "
          f"reg_loss {r.reg_loss:.4f}")
print(f"  reg_loss ratio lam=1 / lam=0: {reg.reg_loss / plain.reg_loss:.2f} "
      f"(the unregularized fit is a ball over the opening; the regularized "
      f"one flattens onto the shell)")
