"""graspgeom: object-geometry representations and SDF reward shaping for
grasping RL.

Converts triangle meshes into compact explicit representations (center of
mass, oriented bounding box, superquadric, surface point clouds) and a dense
voxelized signed-distance grid that serves batched fingertip-distance
queries and the shaped lifting reward.
"""

from .mesh import (MeshLoadError, OrientedBoundingBox, SurfaceSample,
                   TriangleMesh, center_of_mass, is_watertight, load_mesh,
                   oriented_bounding_box, sample_surface, save_obj,
                   surface_area)
from .representation import (ObjectAssets, ObjectPose, Observation,
                             ObservationKind, build_observation,
                             fingertip_distances, fingertip_distances_batch,
                             read_asset_manifest, write_asset_manifest)
from .reward import (RewardBatch, RewardConfig, StepSignal, annotate_trace,
                     com_shaping_reward, is_success, lift_reward,
                     reward_batch, sdf_reward, total_reward)
from .sdf import (GridFormatError, SdfGrid, build_sdf_grid, load_grid, query,
                  save_grid, signed_distance_exact)
from .superquadric import (FitConfig, FitError, FitResult, Superquadric,
                           fit_superquadric, implicit_value, load_fit_result,
                           radial_distance, save_fit_result,
                           sq_surface_sample)

__version__ = "0.1.0"

__all__ = [
    "FitConfig", "FitError", "FitResult", "GridFormatError", "MeshLoadError",
    "ObjectAssets", "ObjectPose", "Observation", "ObservationKind",
    "OrientedBoundingBox", "RewardBatch", "RewardConfig", "SdfGrid",
    "StepSignal", "Superquadric", "SurfaceSample", "TriangleMesh",
    "annotate_trace", "build_observation", "build_sdf_grid",
    "center_of_mass", "com_shaping_reward", "fingertip_distances",
    "fingertip_distances_batch", "fit_superquadric", "implicit_value",
    "is_success", "is_watertight",
    "lift_reward", "load_fit_result", "load_grid", "load_mesh",
    "oriented_bounding_box", "query", "radial_distance",
    "read_asset_manifest", "reward_batch", "sample_surface",
    "save_fit_result", "save_grid", "save_obj", "sdf_reward",
    "signed_distance_exact", "sq_surface_sample", "surface_area",
    "total_reward", "write_asset_manifest",
]
