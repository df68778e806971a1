"""Triangle-mesh ingestion, surface sampling, centroids, and oriented bounding boxes.

Units are meters throughout; no unit conversion is performed. Meshes are
immutable after construction and all operations here are pure, so shared
instances are safe to use from multiple threads.
"""

import io
import logging
import struct
from dataclasses import dataclass, field

import numpy as np

from .transforms import matrix_to_quat

log = logging.getLogger(__name__)

DEGENERATE_AREA = 1e-12  # triangles below this area (m^2) are dropped at load
_OBB_SAMPLE_COUNT = 10_000
_OBB_SEED = 0xC0FFEE


class MeshLoadError(ValueError):
    """Raised for unreadable, malformed, or empty mesh input."""


@dataclass(eq=False)
class TriangleMesh:
    """Indexed triangle surface.

    vertices: (V, 3) float64 positions in meters
    triangles: (T, 3) int64 vertex indices
    dropped_triangles: count of degenerate triangles removed on construction
    """

    vertices: np.ndarray
    triangles: np.ndarray
    dropped_triangles: int = 0

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64))
        t = np.ascontiguousarray(np.asarray(self.triangles, dtype=np.int64))
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshLoadError(f"vertices must be (V, 3), got {v.shape}")
        if t.ndim != 2 or t.shape[1] != 3:
            raise MeshLoadError(f"triangles must be (T, 3), got {t.shape}")
        if not np.all(np.isfinite(v)):
            raise MeshLoadError("mesh contains non-finite vertex coordinates")
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise MeshLoadError("triangle index out of range")
        # drop degenerate triangles up front so every consumer sees a clean mesh
        if t.size:
            areas = _triangle_areas(v, t)
            keep = areas >= DEGENERATE_AREA
            dropped = int(np.count_nonzero(~keep))
            if dropped:
                t = t[keep]
        else:
            dropped = 0
        if len(t) == 0:
            raise MeshLoadError("mesh has no non-degenerate triangles")
        v.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)
        object.__setattr__(self, "dropped_triangles", self.dropped_triangles + dropped)

    @property
    def triangle_vertices(self):
        """(T, 3, 3) corner positions."""
        return self.vertices[self.triangles]

    def aabb(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)


@dataclass(eq=False)
class SurfaceSample:
    """Area-uniform points on a mesh surface, reproducible from the seed."""

    points: np.ndarray  # (n, 3) float64
    seed: int

    def __post_init__(self):
        p = np.ascontiguousarray(np.asarray(self.points, dtype=np.float64))
        p.flags.writeable = False
        object.__setattr__(self, "points", p)


@dataclass(eq=False)
class OrientedBoundingBox:
    """Principal-axis box: center, rotation (columns = axes), full extents.

    Axes are ordered by descending extent and form a right-handed frame.
    """

    center: np.ndarray    # (3,)
    rotation: np.ndarray  # (3, 3), columns are the box axes in world
    extent: np.ndarray    # (3,), full side lengths, descending

    def __post_init__(self):
        for name in ("center", "rotation", "extent"):
            a = np.ascontiguousarray(np.asarray(getattr(self, name), dtype=np.float64))
            a.flags.writeable = False
            object.__setattr__(self, name, a)

    @property
    def quaternion(self):
        """Box orientation as a (w, x, y, z) unit quaternion."""
        return matrix_to_quat(self.rotation)

    @property
    def axes(self):
        """(3, 3) rows are the box axes (unit vectors)."""
        return self.rotation.T


def _triangle_areas(vertices, triangles):
    tv = vertices[triangles]
    cross = np.cross(tv[:, 1] - tv[:, 0], tv[:, 2] - tv[:, 0])
    return 0.5 * np.linalg.norm(cross, axis=1)


# ---------------------------------------------------------------------------
# loading
# ---------------------------------------------------------------------------

def load_mesh(source, format=None) -> TriangleMesh:
    """Load a triangle mesh from an OBJ (ASCII) or STL (binary) file.

    `source` is a file path or a readable binary stream. `format` is "obj" or
    "stl"; when omitted it is inferred from the path suffix. Only positions
    and faces are read from OBJ; polygonal faces are fan-triangulated.
    """
    if hasattr(source, "read"):
        data = source.read()
        if isinstance(data, str):
            data = data.encode()
        name = getattr(source, "name", "<stream>")
    else:
        name = str(source)
        with open(source, "rb") as fh:
            data = fh.read()
    if format is None:
        lowered = name.lower()
        if lowered.endswith(".obj"):
            format = "obj"
        elif lowered.endswith(".stl"):
            format = "stl"
        else:
            raise MeshLoadError(f"cannot infer mesh format from {name!r}")
    format = format.lower()
    if format == "obj":
        mesh = _parse_obj(data, name)
    elif format == "stl":
        mesh = _parse_stl(data, name)
    else:
        raise MeshLoadError(f"unsupported mesh format {format!r}")
    log.info("loaded %s: %d vertices, %d triangles (%d degenerate dropped)",
             name, len(mesh.vertices), len(mesh.triangles), mesh.dropped_triangles)
    return mesh


def _parse_obj(data: bytes, name: str) -> TriangleMesh:
    vertices = []
    faces = []
    for lineno, raw in enumerate(data.decode("utf-8", errors="replace").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "v":
            if len(parts) < 4:
                raise MeshLoadError(f"{name}:{lineno}: vertex needs 3 coordinates")
            try:
                vertices.append([float(parts[1]), float(parts[2]), float(parts[3])])
            except ValueError as exc:
                raise MeshLoadError(f"{name}:{lineno}: bad vertex: {exc}") from exc
        elif tag == "f":
            if len(parts) < 4:
                raise MeshLoadError(f"{name}:{lineno}: face needs at least 3 indices")
            idx = []
            for tok in parts[1:]:
                head = tok.split("/")[0]
                try:
                    i = int(head)
                except ValueError as exc:
                    raise MeshLoadError(f"{name}:{lineno}: bad face index {tok!r}") from exc
                # OBJ is 1-based; negative indices count from the end
                idx.append(i - 1 if i > 0 else len(vertices) + i)
            for k in range(1, len(idx) - 1):
                faces.append([idx[0], idx[k], idx[k + 1]])
        # vn / vt / usemtl / o / g / s are ignored
    if not faces:
        raise MeshLoadError(f"{name}: no faces found")
    return TriangleMesh(np.array(vertices), np.array(faces))


def _parse_stl(data: bytes, name: str) -> TriangleMesh:
    if len(data) < 84:
        raise MeshLoadError(f"{name}: truncated STL header")
    (count,) = struct.unpack_from("<I", data, 80)
    expected = 84 + 50 * count
    if len(data) < expected:
        raise MeshLoadError(f"{name}: truncated STL payload "
                            f"({len(data)} bytes, expected {expected})")
    if count == 0:
        raise MeshLoadError(f"{name}: STL contains no triangles")
    rec = np.frombuffer(data, dtype=np.uint8, count=50 * count, offset=84)
    rec = rec.reshape(count, 50)
    tri = rec[:, 12:48].copy().view("<f4").reshape(count, 3, 3).astype(np.float64)
    corners = tri.reshape(-1, 3)
    # weld bit-identical corners so watertightness is detectable
    unique, inverse = np.unique(corners, axis=0, return_inverse=True)
    return TriangleMesh(unique, inverse.reshape(count, 3))


def save_obj(mesh: TriangleMesh, path) -> None:
    """Write an ASCII OBJ with positions and triangular faces only."""
    with open(path, "w") as fh:
        for v in mesh.vertices:
            fh.write(f"v {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
        for t in mesh.triangles:
            fh.write(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}\n")


# ---------------------------------------------------------------------------
# measures
# ---------------------------------------------------------------------------

def surface_area(mesh: TriangleMesh) -> float:
    """Total triangle area in m²."""
    return float(_triangle_areas(mesh.vertices, mesh.triangles).sum())


def sample_surface(mesh: TriangleMesh, n: int, seed: int) -> SurfaceSample:
    """Draw n area-uniform points on the surface, deterministically per seed.

    Triangles are chosen with probability proportional to area, then a point
    is drawn uniformly in barycentric coordinates.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    areas = _triangle_areas(mesh.vertices, mesh.triangles)
    probs = areas / areas.sum()
    chosen = rng.choice(len(areas), size=n, p=probs)
    u = rng.random(n)
    v = rng.random(n)
    over = u + v > 1.0
    u[over] = 1.0 - u[over]
    v[over] = 1.0 - v[over]
    tv = mesh.vertices[mesh.triangles[chosen]]
    points = tv[:, 0] + u[:, None] * (tv[:, 1] - tv[:, 0]) + v[:, None] * (tv[:, 2] - tv[:, 0])
    return SurfaceSample(points=points, seed=seed)


def is_watertight(mesh: TriangleMesh) -> bool:
    """True when every undirected edge is shared by exactly two triangles."""
    t = mesh.triangles
    edges = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    edges = np.sort(edges, axis=1)
    _, counts = np.unique(edges, axis=0, return_counts=True)
    return bool(np.all(counts == 2))


def center_of_mass(mesh: TriangleMesh, with_method: bool = False):
    """Uniform-density geometric centroid.

    Watertight meshes use the divergence theorem over signed tetrahedra;
    anything else falls back to the area-weighted surface centroid. Pass
    with_method=True to also receive "volume" or "surface".
    """
    tv = mesh.triangle_vertices
    method = "surface"
    com = None
    if is_watertight(mesh):
        signed_vol = np.einsum("ij,ij->i", tv[:, 0], np.cross(tv[:, 1], tv[:, 2])) / 6.0
        total = signed_vol.sum()
        if abs(total) > 1e-12:
            tet_centroids = tv.sum(axis=1) / 4.0
            com = (signed_vol[:, None] * tet_centroids).sum(axis=0) / total
            method = "volume"
    if com is None:
        areas = _triangle_areas(mesh.vertices, mesh.triangles)
        centroids = tv.mean(axis=1)
        com = (areas[:, None] * centroids).sum(axis=0) / areas.sum()
    if with_method:
        return com, method
    return com


# ---------------------------------------------------------------------------
# oriented bounding box
# ---------------------------------------------------------------------------

def principal_axes(points: np.ndarray) -> np.ndarray:
    """Covariance eigenvectors as matrix columns, deterministically signed.

    Each axis is flipped so its largest-magnitude component is positive;
    near-equal eigenvalues (difference < 1e-9) are ordered lexicographically
    so symmetric inputs always produce the same frame.
    """
    pts = np.asarray(points, dtype=np.float64)
    centered = pts - pts.mean(axis=0)
    cov = centered.T @ centered / len(pts)
    eigvals, eigvecs = np.linalg.eigh(cov)  # ascending
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order]
    eigvecs = eigvecs[:, order]
    for k in range(3):
        axis = eigvecs[:, k]
        j = int(np.argmax(np.abs(axis)))
        if axis[j] < 0:
            eigvecs[:, k] = -axis
    # stable tie-break for degenerate eigenvalues
    for k in range(2):
        if abs(eigvals[k] - eigvals[k + 1]) < 1e-9:
            a, b = eigvecs[:, k], eigvecs[:, k + 1]
            if tuple(b) < tuple(a):
                eigvecs[:, [k, k + 1]] = eigvecs[:, [k + 1, k]]
                eigvals[[k, k + 1]] = eigvals[[k + 1, k]]
    return eigvecs


def oriented_bounding_box(mesh: TriangleMesh) -> OrientedBoundingBox:
    """Principal-axis box from surface-sample PCA with vertex-exact extents.

    Axes come from the covariance of 10,000 area-uniform surface samples
    (fixed internal seed) so tessellation density cannot skew them; extents
    are the min-max span of all mesh vertices projected onto those axes.
    """
    samples = sample_surface(mesh, _OBB_SAMPLE_COUNT, _OBB_SEED).points
    axes = principal_axes(samples)
    proj = mesh.vertices @ axes  # (V, 3) coordinates along each axis
    lo = proj.min(axis=0)
    hi = proj.max(axis=0)
    extent = hi - lo
    mid = (hi + lo) / 2.0
    center = axes @ mid
    order = np.argsort(-extent, kind="stable")
    axes = axes[:, order]
    extent = extent[order]
    if np.linalg.det(axes) < 0:
        axes[:, 2] = -axes[:, 2]
    return OrientedBoundingBox(center=center, rotation=axes, extent=extent)
