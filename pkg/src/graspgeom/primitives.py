"""Procedural watertight test meshes: boxes, icospheres, an L-prism, a bowl.

All constructors emit outward-oriented (counter-clockwise from outside)
triangles so winding-number signs and divergence-theorem centroids work.
"""

import numpy as np

from .mesh import TriangleMesh

# unit cube corner layout: index bit 0 -> +x, bit 1 -> +y, bit 2 -> +z
_BOX_TRIANGLES = np.array([
    [0, 2, 1], [1, 2, 3],  # -z
    [4, 5, 6], [5, 7, 6],  # +z
    [0, 1, 4], [1, 5, 4],  # -y
    [2, 6, 3], [3, 6, 7],  # +y
    [0, 4, 2], [2, 4, 6],  # -x
    [1, 3, 5], [3, 7, 5],  # +x
], dtype=np.int64)


def box_mesh(extents=(1.0, 1.0, 1.0), center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    """Axis-aligned box with the given full side lengths."""
    e = np.asarray(extents, dtype=np.float64) / 2.0
    c = np.asarray(center, dtype=np.float64)
    corners = np.array([
        [sx, sy, sz]
        for sz in (-1.0, 1.0) for sy in (-1.0, 1.0) for sx in (-1.0, 1.0)
    ])
    # reorder to bit layout (x fastest above already matches bit0=x)
    verts = c + corners[:, [0, 1, 2]] * e
    return TriangleMesh(verts, _BOX_TRIANGLES.copy())


def icosphere_mesh(radius=0.1, subdivisions=3, center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    """Icosahedron subdivided `subdivisions` times, projected to the sphere."""
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array([
        [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
        [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
        [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
    ], dtype=np.float64)
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    faces = [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ]
    verts = list(verts)
    cache = {}

    def midpoint(i, j):
        key = (min(i, j), max(i, j))
        if key not in cache:
            m = verts[i] + verts[j]
            m /= np.linalg.norm(m)
            cache[key] = len(verts)
            verts.append(m)
        return cache[key]

    for _ in range(subdivisions):
        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        faces = new_faces
    v = np.array(verts) * radius + np.asarray(center, dtype=np.float64)
    return TriangleMesh(v, np.array(faces, dtype=np.int64))


def l_prism_mesh(arm=0.1, height=0.1) -> TriangleMesh:
    """L-shaped prism: two `arm`-sized square boxes merged into one solid.

    Footprint: a 2*arm x arm bar along x plus an arm x arm block on top of
    its left half, extruded to `height` in z. Watertight, 12 vertices.
    """
    a = float(arm)
    poly = np.array([
        [0.0, 0.0], [2 * a, 0.0], [2 * a, a], [a, a], [a, 2 * a], [0.0, 2 * a],
    ])
    n = len(poly)
    bottom = np.column_stack([poly, np.zeros(n)])
    top = np.column_stack([poly, np.full(n, float(height))])
    verts = np.vstack([bottom, top])
    # fan triangulations of the L polygon from vertex 0 stay inside the L
    cap = [[0, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 5]]
    faces = []
    for i, j, k in cap:
        faces.append([i, k, j])              # bottom, normal -z
        faces.append([n + i, n + j, n + k])  # top, normal +z
    for i in range(n):
        j = (i + 1) % n
        faces.append([i, j, n + j])
        faces.append([i, n + j, n + i])
    return TriangleMesh(verts, np.array(faces, dtype=np.int64))


def bowl_mesh(outer_radius=0.08, thickness=0.01, rings=12, segments=32) -> TriangleMesh:
    """Hemispherical shell opening upward: outer and inner lower hemispheres
    joined by a flat annular rim at z = 0. Watertight.
    """
    r_out = float(outer_radius)
    r_in = r_out - float(thickness)
    if r_in <= 0:
        raise ValueError("thickness must be smaller than outer_radius")
    verts = []
    phis = np.linspace(0.0, 2.0 * np.pi, segments, endpoint=False)

    def hemisphere(radius):
        """Rings from equator (theta=0) towards the bottom pole; returns
        (list of ring index lists, pole index)."""
        ring_ids = []
        for k in range(rings):
            theta = (k / rings) * (np.pi / 2.0)  # 0 at equator
            z = -radius * np.sin(theta)
            rho = radius * np.cos(theta)
            ids = []
            for p in phis:
                ids.append(len(verts))
                verts.append([rho * np.cos(p), rho * np.sin(p), z])
            ring_ids.append(ids)
        pole = len(verts)
        verts.append([0.0, 0.0, -radius])
        return ring_ids, pole

    out_rings, out_pole = hemisphere(r_out)
    in_rings, in_pole = hemisphere(r_in)

    faces = []

    def band(upper, lower, outward):
        for s in range(segments):
            t = (s + 1) % segments
            a, b, c, d = upper[s], upper[t], lower[t], lower[s]
            if outward:
                faces.append([a, d, c])
                faces.append([a, c, b])
            else:
                faces.append([a, c, d])
                faces.append([a, b, c])

    for k in range(rings - 1):
        band(out_rings[k], out_rings[k + 1], outward=True)
        band(in_rings[k], in_rings[k + 1], outward=False)
    for s in range(segments):  # pole fans
        t = (s + 1) % segments
        faces.append([out_rings[-1][s], out_pole, out_rings[-1][t]])
        faces.append([in_rings[-1][s], in_rings[-1][t], in_pole])
    # rim annulus at z=0, normal +z
    band(out_rings[0], in_rings[0], outward=False)
    return TriangleMesh(np.array(verts), np.array(faces, dtype=np.int64))
