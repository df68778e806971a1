import numpy as np
import pytest

from graspgeom.primitives import box_mesh, icosphere_mesh
from graspgeom.sdf import build_sdf_grid


@pytest.fixture(scope="session")
def cube():
    """Unit cube centered at the origin."""
    return box_mesh()


@pytest.fixture(scope="session")
def sphere():
    """Radius-0.1 icosphere, 3 subdivisions (1280 triangles)."""
    return icosphere_mesh(radius=0.1, subdivisions=3)


@pytest.fixture(scope="session")
def cube_grid(cube):
    """Coarse unit-cube grid for fast unit tests."""
    return build_sdf_grid(cube, dims=(48, 48, 48))


@pytest.fixture(scope="session")
def sphere_grid(sphere):
    return build_sdf_grid(sphere, dims=(64, 64, 64))


def reference_trilinear(grid, points):
    """Test-side oracle: numpy trilinear interpolation with clamping,
    written independently of the production kernel (vectorized gather)."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    nx, ny, nz = (int(d) for d in grid.dims)
    b0, b1 = grid.bounds_min, grid.bounds_max
    s = grid.spacing
    p = np.clip(pts, b0, b1)
    t = (p - b0) / s
    i = np.floor(t).astype(np.int64)
    i = np.minimum(i, np.array([nx - 2, ny - 2, nz - 2]))
    i = np.maximum(i, 0)
    f = t - i
    vol = grid.values
    def gather(dx, dy, dz):
        idx = (i[:, 0] + dx) + nx * ((i[:, 1] + dy) + ny * (i[:, 2] + dz))
        return vol[idx].astype(np.float64)
    c000, c100 = gather(0, 0, 0), gather(1, 0, 0)
    c010, c110 = gather(0, 1, 0), gather(1, 1, 0)
    c001, c101 = gather(0, 0, 1), gather(1, 0, 1)
    c011, c111 = gather(0, 1, 1), gather(1, 1, 1)
    fx, fy, fz = f[:, 0], f[:, 1], f[:, 2]
    c00 = c000 + fx * (c100 - c000)
    c10 = c010 + fx * (c110 - c010)
    c01 = c001 + fx * (c101 - c001)
    c11 = c011 + fx * (c111 - c011)
    c0 = c00 + fy * (c10 - c00)
    c1 = c01 + fy * (c11 - c01)
    return c0 + fz * (c1 - c0)
