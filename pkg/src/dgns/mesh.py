"""Structured triangulations of rectangles with oriented edge topology.

Each rectangle cell is split along its bottom-left to top-right diagonal.
Every edge carries a fixed unit normal: for an interior edge it points from
the owner element T_m into the neighbor T_n, for a boundary edge it is the
outward normal of the domain.  Jumps and averages across an edge follow the
owner-minus-neighbor convention; on boundary edges both reduce to the trace.
"""

from dataclasses import dataclass

import numpy as np


class MeshError(Exception):
    """Invalid mesh topology or geometry."""


@dataclass(frozen=True)
class Edge:
    index: int
    vertices: tuple  # (start, end) vertex indices
    length: float
    unit_normal: np.ndarray
    owner: int  # T_m; the normal points away from it
    neighbor: int  # T_n, or -1 on the boundary
    midpoint: np.ndarray

    @property
    def is_boundary(self):
        return self.neighbor < 0


class Mesh:
    """Immutable conforming triangulation with oriented edge data.

    Geometric arrays (affine maps, diameters, inscribed diameters) are
    precomputed; all arrays are frozen after construction so the mesh can be
    shared by concurrent assembly loops.
    """

    def __init__(self, vertices, triangles, structured_info=None):
        self.vertices = np.asarray(vertices, dtype=float)
        self.triangles = np.asarray(triangles, dtype=np.int64)
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise MeshError("triangles must be an (nt, 3) index array")
        self.num_vertices = len(self.vertices)
        self.num_triangles = len(self.triangles)
        self.structured_info = structured_info

        self._build_geometry()
        self._build_edges()
        for arr in (self.vertices, self.triangles, self.elem_origin, self.elem_map,
                    self.elem_map_inv, self.elem_det, self.areas, self.centroids,
                    self.h_t, self.rho_t, self.edge_vertices, self.edge_elements,
                    self.edge_normals, self.edge_lengths, self.edge_midpoints):
            arr.setflags(write=False)

    def _build_geometry(self):
        tri_coords = self.vertices[self.triangles]  # (nt, 3, 2)
        v0 = tri_coords[:, 0]
        jac = np.stack([tri_coords[:, 1] - v0, tri_coords[:, 2] - v0], axis=-1)  # (nt, 2, 2)
        det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
        if np.any(det <= 0):
            raise MeshError("all triangles must be counter-clockwise with positive area")
        inv = np.empty_like(jac)
        inv[:, 0, 0] = jac[:, 1, 1] / det
        inv[:, 0, 1] = -jac[:, 0, 1] / det
        inv[:, 1, 0] = -jac[:, 1, 0] / det
        inv[:, 1, 1] = jac[:, 0, 0] / det

        self.elem_origin = v0.copy()
        self.elem_map = jac
        self.elem_map_inv = inv
        self.elem_det = det
        self.areas = 0.5 * det
        self.centroids = tri_coords.mean(axis=1)

        edge_vecs = np.stack([
            tri_coords[:, 1] - tri_coords[:, 0],
            tri_coords[:, 2] - tri_coords[:, 1],
            tri_coords[:, 0] - tri_coords[:, 2],
        ], axis=1)
        side_lengths = np.linalg.norm(edge_vecs, axis=2)  # (nt, 3)
        self.h_t = side_lengths.max(axis=1)
        semi = 0.5 * side_lengths.sum(axis=1)
        self.rho_t = 2.0 * self.areas / semi  # inscribed-circle diameter

    def _build_edges(self):
        """Collect unique edges in first-encounter order over the element loop."""
        edge_index = {}
        edge_owner = []
        edge_neighbor = []
        edge_verts = []
        for t in range(self.num_triangles):
            tri = self.triangles[t]
            for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                key = (min(a, b), max(a, b))
                e = edge_index.get(key)
                if e is None:
                    edge_index[key] = len(edge_verts)
                    edge_verts.append((a, b))
                    edge_owner.append(t)
                    edge_neighbor.append(-1)
                else:
                    if edge_neighbor[e] >= 0:
                        raise MeshError("edge shared by more than two triangles")
                    edge_neighbor[e] = t

        self.num_edges = len(edge_verts)
        self.edge_vertices = np.asarray(edge_verts, dtype=np.int64)
        self.edge_elements = np.stack(
            [np.asarray(edge_owner, dtype=np.int64), np.asarray(edge_neighbor, dtype=np.int64)],
            axis=1,
        )
        pa = self.vertices[self.edge_vertices[:, 0]]
        pb = self.vertices[self.edge_vertices[:, 1]]
        tang = pb - pa
        self.edge_lengths = np.linalg.norm(tang, axis=1)
        normals = np.stack([tang[:, 1], -tang[:, 0]], axis=1) / self.edge_lengths[:, None]
        self.edge_midpoints = 0.5 * (pa + pb)

        # orient away from the owner: toward the neighbor centroid (interior)
        # or away from the owner centroid (boundary)
        owner_c = self.centroids[self.edge_elements[:, 0]]
        interior = self.edge_elements[:, 1] >= 0
        target = np.where(interior[:, None],
                          self.centroids[np.maximum(self.edge_elements[:, 1], 0)],
                          2.0 * self.edge_midpoints - owner_c)
        flip = np.einsum("ij,ij->i", normals, target - owner_c) < 0
        normals[flip] *= -1.0
        self.edge_normals = normals
        self.edge_is_interior = interior
        self.edge_is_interior.setflags(write=False)

        self.edges = [
            Edge(e, (int(self.edge_vertices[e, 0]), int(self.edge_vertices[e, 1])),
                 float(self.edge_lengths[e]), self.edge_normals[e],
                 int(self.edge_elements[e, 0]), int(self.edge_elements[e, 1]),
                 self.edge_midpoints[e])
            for e in range(self.num_edges)
        ]

    @property
    def mesh_size(self):
        """Max element diameter."""
        return float(self.h_t.max())

    def reference_coords(self, elems, points):
        """Pull physical points back to reference coordinates of given elements."""
        rel = points - self.elem_origin[elems]
        return np.einsum("eij,ej->ei", self.elem_map_inv[elems], rel)

    def physical_coords(self, elems, ref_points):
        """Push shared reference points to physical space, shape (nelems, nq, 2)."""
        return self.elem_origin[elems][:, None, :] + np.einsum(
            "eij,qj->eqi", self.elem_map[elems], np.asarray(ref_points))

    def locate(self, points):
        """Containing element of each point (structured meshes only).

        Points lying exactly on a vertical (horizontal) mesh line are assigned
        to the cell on the left (below); points on a cell diagonal go to the
        lower-right triangle.
        """
        if self.structured_info is None:
            raise MeshError("point location requires a structured mesh")
        n, (x0, x1, y0, y1) = self.structured_info
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        hx = (x1 - x0) / n
        hy = (y1 - y0) / n
        sx = (pts[:, 0] - x0) / hx
        sy = (pts[:, 1] - y0) / hy
        i = np.floor(sx).astype(np.int64)
        j = np.floor(sy).astype(np.int64)
        i = np.where((sx == i) & (i > 0), i - 1, i)
        j = np.where((sy == j) & (j > 0), j - 1, j)
        i = np.clip(i, 0, n - 1)
        j = np.clip(j, 0, n - 1)
        lx = sx - i
        ly = sy - j
        lower = ly <= lx  # below or on the bottom-left/top-right diagonal
        return 2 * (j * n + i) + np.where(lower, 0, 1)


def build_uniform_mesh(n: int, domain=(0.0, 1.0, 0.0, 1.0)) -> Mesh:
    """Uniform triangulation of an axis-aligned rectangle.

    n subdivisions per side give 2 n^2 triangles; each cell is split along
    its bottom-left to top-right diagonal.
    """
    if n < 1:
        raise ValueError("need at least one subdivision per side")
    x0, x1, y0, y1 = map(float, domain)
    if not (x1 > x0 and y1 > y0):
        raise ValueError("domain rectangle must have positive extent")

    xs = np.linspace(x0, x1, n + 1)
    ys = np.linspace(y0, y1, n + 1)
    xx, yy = np.meshgrid(xs, ys, indexing="xy")
    vertices = np.column_stack([xx.ravel(), yy.ravel()])

    def vid(i, j):
        return j * (n + 1) + i

    triangles = np.empty((2 * n * n, 3), dtype=np.int64)
    t = 0
    for j in range(n):
        for i in range(n):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v01, v11 = vid(i, j + 1), vid(i + 1, j + 1)
            triangles[t] = (v00, v10, v11)  # lower-right of the diagonal
            triangles[t + 1] = (v00, v11, v01)  # upper-left
            t += 2
    return Mesh(vertices, triangles, structured_info=(n, (x0, x1, y0, y1)))


def triangle_shape_ratio(coords) -> float:
    """Diameter over inscribed-circle diameter for a single triangle."""
    coords = np.asarray(coords, dtype=float)
    sides = np.array([
        np.linalg.norm(coords[1] - coords[0]),
        np.linalg.norm(coords[2] - coords[1]),
        np.linalg.norm(coords[0] - coords[2]),
    ])
    d1 = coords[1] - coords[0]
    d2 = coords[2] - coords[0]
    area = 0.5 * abs(d1[0] * d2[1] - d1[1] * d2[0])
    rho = 2.0 * area / (0.5 * sides.sum())
    return float(sides.max() / rho)


def mesh_regularity(mesh: Mesh) -> float:
    """Max over elements of diameter / inscribed diameter."""
    return float((mesh.h_t / mesh.rho_t).max())


@dataclass(frozen=True)
class EdgeFrames:
    """Per-edge evaluation frames at edge quadrature points.

    physical: (ne, nq, 2) points on each edge; ref_owner / ref_neighbor map
    them to reference coordinates of the adjacent elements so traces, jumps
    and averages can be evaluated.  ref_neighbor rows of boundary edges are
    NaN; there jump and average both mean the owner trace.
    """

    physical: np.ndarray
    ref_owner: np.ndarray
    ref_neighbor: np.ndarray


def jump_average_frames(mesh: Mesh, edge_params) -> EdgeFrames:
    """Evaluation frames for jump/average operators at edge parameter points.

    edge_params are points in [0, 1] along each edge from its first to its
    second stored vertex.
    """
    t = np.asarray(edge_params, dtype=float).ravel()
    pa = mesh.vertices[mesh.edge_vertices[:, 0]]
    pb = mesh.vertices[mesh.edge_vertices[:, 1]]
    phys = pa[:, None, :] + t[None, :, None] * (pb - pa)[:, None, :]

    ne, nq = phys.shape[:2]
    flat = phys.reshape(ne * nq, 2)
    owner = np.repeat(mesh.edge_elements[:, 0], nq)
    ref_m = mesh.reference_coords(owner, flat).reshape(ne, nq, 2)

    ref_n = np.full((ne, nq, 2), np.nan)
    interior = mesh.edge_is_interior
    if interior.any():
        nbr = np.repeat(mesh.edge_elements[interior, 1], nq)
        ref_n[interior] = mesh.reference_coords(
            nbr, phys[interior].reshape(-1, 2)).reshape(-1, nq, 2)
    return EdgeFrames(phys, ref_m, ref_n)
