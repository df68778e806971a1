"""
Explicit object representations from a triangle mesh
====================================================

A grasping policy needs a compact description of the object in front of it.
This walkthrough builds every explicit representation the library offers
from a single mesh: center of mass, oriented bounding box, seeded surface
point clouds, and (via the next demo) the dense signed-distance grid.

Run from the repository root:

    PYTHONPATH=src python demos/01_mesh_and_representations.py
"""

import numpy as np

from graspgeom import (ObjectAssets, ObjectPose, ObservationKind,
                       build_observation, center_of_mass,
                       oriented_bounding_box, sample_surface, surface_area)
from graspgeom.primitives import box_mesh, icosphere_mesh

# --- a synthetic "cracker box": 20 x 15 x 6 cm -----------------------------
mesh = box_mesh(extents=(0.20, 0.15, 0.06))
print(f"mesh: {len(mesh.vertices)} vertices, {len(mesh.triangles)} triangles")
print(f"surface area: {surface_area(mesh):.4f} m^2  (analytic 0.102)")

# center of mass: volume centroid, since the box is watertight
com, method = center_of_mass(mesh, with_method=True)
print(f"center of mass ({method}): {np.round(com, 6)}")

# oriented bounding box from principal axes of surface samples
obb = oriented_bounding_box(mesh)
print(f"obb extent (sorted desc): {np.round(obb.extent, 4)}")
print(f"obb quaternion (wxyz):    {np.round(obb.quaternion, 4)}")

# seeded surface sampling: the same seed always gives the same cloud
pc = sample_surface(mesh, n=128, seed=42)
again = sample_surface(mesh, n=128, seed=42)
print(f"sampled {len(pc.points)} surface points; "
      f"reproducible: {np.array_equal(pc.points, again.points)}")

# --- flat observation vectors for a policy ---------------------------------
# in a simulator the object pose changes every step; representations are
# precomputed once in the object frame and transformed on the fly
assets = ObjectAssets(
    com=com,
    obb=obb,
    pc_points={n: sample_surface(mesh, n, seed=n).points for n in (32, 128, 512)},
)
pose = ObjectPose(position=(0.4, -0.1, 0.03), quaternion=(1, 0, 0, 0))

for kind in (ObservationKind.COM, ObservationKind.BBOX, ObservationKind.PC32):
    obs = build_observation(assets, pose, kind)
    print(f"{kind.value:>5} observation: {obs.values.shape[0]:4d} values, "
          f"first three {np.round(obs.values[:3], 4)}")

# a sphere has no preferred axes: extents come out equal and any frame is fine
ball = icosphere_mesh(radius=0.05, subdivisions=3)
print(f"sphere obb extents: {np.round(oriented_bounding_box(ball).extent, 4)}")
