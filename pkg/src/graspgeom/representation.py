"""Observation builders: turn precomputed object assets plus a runtime pose
into the flat vectors a policy consumes.

Observation layouts (world frame):

    COM    3   center-of-mass position
    BBOX   10  box center (3) + quaternion wxyz (4) + extent (3)
    SQ     12  scale (3) + exponents (2) + position (3) + quaternion wxyz (4)
    PC-N   3N  N surface points, row-major
    SDF    5   fingertip signed distances (built by fingertip_distances)

Fingertip order is thumb, index, middle, ring, little; outputs preserve
input order either way.
"""

import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .mesh import OrientedBoundingBox
from .sdf import SdfGrid, query
from .superquadric import Superquadric
from .transforms import (inverse_transform_points, quat_multiply,
                         quat_normalize, transform_points)

PC_SIZES = (32, 128, 512)


class ObservationKind(str, Enum):
    COM = "com"
    BBOX = "bbox"
    SQ = "sq"
    PC32 = "pc32"
    PC128 = "pc128"
    PC512 = "pc512"
    SDF = "sdf"

    @property
    def length(self) -> int:
        return _LENGTHS[self]


_LENGTHS = {
    ObservationKind.COM: 3,
    ObservationKind.BBOX: 10,
    ObservationKind.SQ: 12,
    ObservationKind.PC32: 96,
    ObservationKind.PC128: 384,
    ObservationKind.PC512: 1536,
    ObservationKind.SDF: 5,
}


@dataclass(eq=False)
class ObjectPose:
    """World pose of the object, as reported by the simulator."""

    position: np.ndarray    # (3,) m
    quaternion: np.ndarray  # (4,) unit, (w, x, y, z)

    def __post_init__(self):
        p = np.asarray(self.position, dtype=np.float64).reshape(3).copy()
        q = np.asarray(self.quaternion, dtype=np.float64).reshape(4).copy()
        if abs(np.linalg.norm(q) - 1.0) > 1e-6:
            raise ValueError(f"pose quaternion is not unit norm: {q}")
        q = quat_normalize(q)
        p.flags.writeable = False
        q.flags.writeable = False
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "quaternion", q)


@dataclass(eq=False)
class ObjectAssets:
    """Everything precomputed for one object, all in its object frame."""

    com: np.ndarray = None
    obb: OrientedBoundingBox = None
    sq: Superquadric = None
    pc_points: dict = None  # {32: (32, 3), 128: (128, 3), 512: (512, 3)}
    sdf: SdfGrid = None

    def __post_init__(self):
        if self.com is not None:
            c = np.asarray(self.com, dtype=np.float64).reshape(3).copy()
            c.flags.writeable = False
            object.__setattr__(self, "com", c)
        if self.pc_points is not None:
            cleaned = {}
            for n, pts in self.pc_points.items():
                n = int(n)
                pts = np.ascontiguousarray(np.asarray(pts, dtype=np.float64))
                if pts.shape != (n, 3):
                    raise ValueError(f"pc_points[{n}] has shape {pts.shape}")
                pts.flags.writeable = False
                cleaned[n] = pts
            object.__setattr__(self, "pc_points", cleaned)


@dataclass(eq=False)
class Observation:
    kind: ObservationKind
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).ravel().copy()
        if v.size != self.kind.length:
            raise ValueError(f"{self.kind.value} observation must have "
                             f"{self.kind.length} values, got {v.size}")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)


def build_observation(assets: ObjectAssets, pose: ObjectPose,
                      kind: ObservationKind) -> Observation:
    """Rigidly transform the requested asset into the world frame.

    Positions and orientations compose with the pose; extents, scales, and
    exponents are frame-free and pass through unchanged. The SDF kind is not
    produced here: use fingertip_distances.
    """
    kind = ObservationKind(kind)
    if kind is ObservationKind.SDF:
        raise ValueError("SDF observations come from fingertip_distances")
    q, t = pose.quaternion, pose.position
    if kind is ObservationKind.COM:
        if assets.com is None:
            raise ValueError("assets have no center of mass")
        values = transform_points(q, t, assets.com)
    elif kind is ObservationKind.BBOX:
        if assets.obb is None:
            raise ValueError("assets have no oriented bounding box")
        center = transform_points(q, t, assets.obb.center)
        quat = quat_multiply(q, assets.obb.quaternion)
        values = np.concatenate([center, quat, assets.obb.extent])
    elif kind is ObservationKind.SQ:
        if assets.sq is None:
            raise ValueError("assets have no superquadric")
        sq = assets.sq
        position = transform_points(q, t, sq.position)
        quat = quat_multiply(q, sq.quaternion)
        values = np.concatenate([sq.scale, sq.exponents, position, quat])
    else:
        n = int(kind.value[2:])
        if assets.pc_points is None or n not in assets.pc_points:
            raise ValueError(f"assets have no {n}-point cloud")
        values = transform_points(q, t, assets.pc_points[n]).ravel()
    return Observation(kind=kind, values=values)


def fingertip_distances(grid: SdfGrid, pose: ObjectPose, fingertips) -> np.ndarray:
    """Signed distances from the five fingertips to the object surface.

    World-frame fingertip positions are mapped into the object frame by the
    inverse pose and batch-queried against the grid; output order matches
    input order.
    """
    tips = np.asarray(fingertips, dtype=np.float64)
    if tips.shape != (5, 3):
        raise ValueError(f"expected 5 fingertip positions (5, 3), got {tips.shape}")
    local = inverse_transform_points(pose.quaternion, pose.position, tips)
    return query(grid, local)


def fingertip_distances_batch(grid: SdfGrid, poses, fingertips) -> np.ndarray:
    """Per-environment variant: n poses and an (n, 5, 3) fingertip array in,
    (n, 5) distances out, row order preserved. One grid query serves the
    whole batch."""
    tips = np.asarray(fingertips, dtype=np.float64)
    if tips.ndim != 3 or tips.shape[1:] != (5, 3):
        raise ValueError(f"expected fingertips (n, 5, 3), got {tips.shape}")
    if len(poses) != len(tips):
        raise ValueError(f"batch length mismatch: {len(poses)} poses, {len(tips)} rows")
    local = np.empty_like(tips)
    for i, pose in enumerate(poses):
        local[i] = inverse_transform_points(pose.quaternion, pose.position, tips[i])
    return query(grid, local.reshape(-1, 3)).reshape(-1, 5)


# ---------------------------------------------------------------------------
# asset bundle manifest
# ---------------------------------------------------------------------------

def write_asset_manifest(path, entries: dict) -> None:
    """JSON index: object name -> {mesh, sdf, sq, pc paths; obb/com inline}."""
    with open(path, "w") as fh:
        json.dump(entries, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_asset_manifest(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
