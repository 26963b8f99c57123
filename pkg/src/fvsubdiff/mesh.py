"""Primal triangulations, barycentric dual meshes and P1 evaluation."""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .errors import GeometryError, InvalidParameterError, OutOfDomainError
from .quadrature import triangle_areas

_LOCATE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class PrimalMesh:
    """Conforming triangulation with homogeneous Dirichlet boundary nodes.

    ``interior_index[v]`` is the unknown number of vertex ``v`` or -1 for a
    boundary vertex.  ``structured_M`` is set for the built-in unit-square
    mesh and enables index-arithmetic point location.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary: np.ndarray
    interior_index: np.ndarray
    interior_nodes: np.ndarray
    h: float
    structured_M: Optional[int] = None

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def n_interior(self):
        return len(self.interior_nodes)

    @property
    def corners(self):
        return self.vertices[self.triangles]

    @property
    def areas(self):
        return triangle_areas(self.corners)

    @property
    def domain_area(self):
        return float(self.areas.sum())

    @classmethod
    def from_arrays(cls, vertices, triangles, boundary=None, structured_M=None, h=None):
        vertices = np.ascontiguousarray(vertices, dtype=float)
        triangles = np.array(triangles, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] != 2:
            raise InvalidParameterError("vertices must have shape (n, 2)")
        if triangles.ndim != 2 or triangles.shape[1] != 3:
            raise InvalidParameterError("triangles must have shape (m, 3)")
        if triangles.min() < 0 or triangles.max() >= len(vertices):
            raise InvalidParameterError("triangle references unknown vertex")

        signed = triangle_areas(vertices[triangles], signed=True)
        scale = np.ptp(vertices, axis=0).max() ** 2
        if np.any(np.abs(signed) <= 1e-14 * scale):
            bad = int(np.flatnonzero(np.abs(signed) <= 1e-14 * scale)[0])
            raise GeometryError(f"triangle {bad} is degenerate (zero area)")
        cw = signed < 0
        triangles[cw] = triangles[cw][:, [0, 2, 1]]

        if boundary is None:
            boundary = _boundary_from_edges(len(vertices), triangles)
        boundary = np.asarray(boundary, dtype=bool)

        interior_index = np.full(len(vertices), -1, dtype=np.int64)
        interior_nodes = np.flatnonzero(~boundary)
        interior_index[interior_nodes] = np.arange(len(interior_nodes))

        if h is None:
            c = vertices[triangles]
            edges = np.stack([c[:, 1] - c[:, 0], c[:, 2] - c[:, 1], c[:, 0] - c[:, 2]], axis=1)
            h = float(np.sqrt((edges**2).sum(axis=2)).max())

        for arr in (vertices, triangles, boundary, interior_index, interior_nodes):
            arr.setflags(write=False)
        return cls(vertices, triangles, boundary, interior_index, interior_nodes, h, structured_M)


def _boundary_from_edges(nv, triangles):
    e = np.sort(triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
    uniq, counts = np.unique(e, axis=0, return_counts=True)
    flags = np.zeros(nv, dtype=bool)
    flags[uniq[counts == 1].ravel()] = True
    return flags


def build_uniform_mesh(M):
    """Right-angle triangulation of the unit square with M cells per side.

    Each grid cell is split along its (i, j)-(i+1, j+1) diagonal, so every
    interior node has four axis neighbours and two diagonal neighbours.
    """
    if int(M) != M or M < 2:
        raise InvalidParameterError(f"M must be an integer >= 2, got {M!r}")
    M = int(M)
    idx = np.arange(M + 1)
    I, J = np.meshgrid(idx, idx, indexing="xy")
    vertices = np.column_stack([I.ravel() / M, J.ravel() / M])

    def vid(i, j):
        return j * (M + 1) + i

    ci, cj = np.meshgrid(np.arange(M), np.arange(M), indexing="xy")
    ci, cj = ci.ravel(), cj.ravel()
    lower = np.column_stack([vid(ci, cj), vid(ci + 1, cj), vid(ci + 1, cj + 1)])
    upper = np.column_stack([vid(ci, cj), vid(ci + 1, cj + 1), vid(ci, cj + 1)])
    # cell c owns triangles 2c (lower) and 2c + 1 (upper)
    triangles = np.stack([lower, upper], axis=1).reshape(-1, 3)

    on_edge = (I == 0) | (I == M) | (J == 0) | (J == M)
    return PrimalMesh.from_arrays(vertices, triangles, on_edge.ravel(), structured_M=M, h=np.sqrt(2.0) / M)


def read_mesh(path):
    """Read a ``$nodes`` / ``$triangles`` text mesh (1-based ids)."""
    path = Path(path)
    section = None
    nodes, tris = {}, []
    with path.open() as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("$"):
                section = line.lower()
                if section not in ("$nodes", "$triangles"):
                    raise InvalidParameterError(f"{path}:{lineno}: unknown section {line}")
                continue
            parts = line.split()
            try:
                if section == "$nodes":
                    nodes[int(parts[0])] = (float(parts[1]), float(parts[2]), int(parts[3]))
                elif section == "$triangles":
                    tris.append([int(p) for p in parts[1:4]])
                else:
                    raise InvalidParameterError(f"{path}:{lineno}: data outside a section")
            except (IndexError, ValueError) as exc:
                raise InvalidParameterError(f"{path}:{lineno}: malformed line {raw!r}") from exc

    ids = sorted(nodes)
    if ids != list(range(1, len(ids) + 1)):
        raise InvalidParameterError(f"{path}: node ids must be 1..n")
    verts = np.array([nodes[i][:2] for i in ids])
    flags = np.array([nodes[i][2] != 0 for i in ids])
    return PrimalMesh.from_arrays(verts, np.array(tris) - 1, flags)


def write_mesh(mesh, path):
    with Path(path).open("w") as fh:
        fh.write("$nodes\n")
        for i, (x, y) in enumerate(mesh.vertices, 1):
            fh.write(f"{i} {x:.17g} {y:.17g} {int(mesh.boundary[i - 1])}\n")
        fh.write("$triangles\n")
        for i, t in enumerate(mesh.triangles, 1):
            fh.write(f"{i} {t[0] + 1} {t[1] + 1} {t[2] + 1}\n")


@dataclass(frozen=True, eq=False)
class DualMesh:
    """Barycentric control volumes of a primal mesh.

    Flux segments of interior node ``i`` are ``seg_start[s] -> seg_end[s]``
    for ``s`` in ``seg_offsets[i]:seg_offsets[i+1]``; they chain into the
    closed counterclockwise boundary of the control volume and
    ``seg_normal`` is the outward normal scaled by the segment length.

    ``piece_*`` arrays describe every control volume (boundary nodes
    included) as quadrilaterals ``[P, M_ab, Q, M_ac]``, one per
    (triangle, vertex) pair.
    """

    seg_offsets: np.ndarray
    seg_start: np.ndarray
    seg_end: np.ndarray
    seg_tri: np.ndarray
    piece_node: np.ndarray
    piece_tri: np.ndarray
    piece_corners: np.ndarray
    control_volume_area: np.ndarray

    @property
    def seg_normal(self):
        d = self.seg_end - self.seg_start
        return np.column_stack([d[:, 1], -d[:, 0]])

    def segments(self, i):
        s = slice(self.seg_offsets[i], self.seg_offsets[i + 1])
        return self.seg_start[s], self.seg_end[s], self.seg_tri[s]

    def piece_subtriangles(self):
        """Split each quadrilateral piece into two triangles [P, M_ab, Q], [P, Q, M_ac]."""
        c = self.piece_corners
        first = c[:, [0, 1, 2]]
        second = c[:, [0, 2, 3]]
        corners = np.concatenate([first, second])
        return corners, np.concatenate([self.piece_node, self.piece_node]), np.concatenate([self.piece_tri, self.piece_tri])


def build_dual_mesh(mesh):
    tris = mesh.triangles
    c = mesh.corners
    if np.any(triangle_areas(c, signed=True) <= 0):
        bad = int(np.flatnonzero(triangle_areas(c, signed=True) <= 0)[0])
        raise GeometryError(f"triangle {bad} is degenerate or clockwise")

    bary = c.mean(axis=1)
    nt = len(tris)
    piece_node = tris.ravel()
    piece_tri = np.repeat(np.arange(nt), 3)
    corners = np.empty((nt, 3, 4, 2))
    for a in range(3):
        b, d = (a + 1) % 3, (a + 2) % 3
        corners[:, a, 0] = c[:, a]
        corners[:, a, 1] = 0.5 * (c[:, a] + c[:, b])
        corners[:, a, 2] = bary
        corners[:, a, 3] = 0.5 * (c[:, a] + c[:, d])
    corners = corners.reshape(-1, 4, 2)

    x, y = corners[..., 0], corners[..., 1]
    quad_area = 0.5 * (x * np.roll(y, -1, axis=1) - np.roll(x, -1, axis=1) * y).sum(axis=1)
    cv_area = np.bincount(piece_node, weights=quad_area, minlength=mesh.n_vertices)

    # flux segments: order the pieces of every interior node by the angle of
    # the barycenter around the node so that consecutive pieces share a midpoint
    owner = mesh.interior_index[piece_node]
    keep = np.flatnonzero(owner >= 0)
    rel = bary[piece_tri[keep]] - mesh.vertices[piece_node[keep]]
    angle = np.arctan2(rel[:, 1], rel[:, 0])
    order = keep[np.lexsort((angle, owner[keep]))]
    counts = np.bincount(owner[order], minlength=mesh.n_interior)

    seg_start = np.empty((2 * len(order), 2))
    seg_end = np.empty_like(seg_start)
    seg_start[0::2] = corners[order, 1]
    seg_end[0::2] = corners[order, 2]
    seg_start[1::2] = corners[order, 2]
    seg_end[1::2] = corners[order, 3]
    seg_tri = np.repeat(piece_tri[order], 2)
    seg_offsets = np.concatenate([[0], np.cumsum(2 * counts)])

    arrays = (seg_offsets, seg_start, seg_end, seg_tri, piece_node, piece_tri, corners, cv_area)
    for arr in arrays:
        arr.setflags(write=False)
    return DualMesh(*arrays)


def p1_gradients(mesh):
    """Constant gradients of the three hat functions on every triangle, shape (nt, 3, 2)."""
    c = mesh.corners
    area2 = 2.0 * triangle_areas(c, signed=True)
    grads = np.empty((len(c), 3, 2))
    for a in range(3):
        b, d = (a + 1) % 3, (a + 2) % 3
        # gradient of the hat at vertex a is the inward normal of the opposite edge
        grads[:, a, 0] = (c[:, b, 1] - c[:, d, 1]) / area2
        grads[:, a, 1] = (c[:, d, 0] - c[:, b, 0]) / area2
    return grads


def locate(mesh, points):
    """Containing triangle and barycentric coordinates for each point."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if mesh.structured_M is not None:
        return _locate_structured(mesh, pts)
    return _locate_scan(mesh, pts)


def _locate_structured(mesh, pts):
    M = mesh.structured_M
    x, y = pts[:, 0], pts[:, 1]
    outside = (x < -_LOCATE_TOL) | (x > 1 + _LOCATE_TOL) | (y < -_LOCATE_TOL) | (y > 1 + _LOCATE_TOL)
    if np.any(outside):
        raise OutOfDomainError(f"point {pts[np.argmax(outside)]} lies outside the unit square")
    sx, sy = x * M, y * M
    i = np.clip(np.floor(sx).astype(np.int64), 0, M - 1)
    j = np.clip(np.floor(sy).astype(np.int64), 0, M - 1)
    fx, fy = sx - i, sy - j
    upper = fy > fx
    tri = 2 * (j * M + i) + upper
    # lower: (i,j) (i+1,j) (i+1,j+1); upper: (i,j) (i+1,j+1) (i,j+1)
    lam = np.where(
        upper[:, None],
        np.column_stack([1 - fy, fx, fy - fx]),
        np.column_stack([1 - fx, fx - fy, fy]),
    )
    return tri, lam


def _locate_scan(mesh, pts):
    c = mesh.corners
    area2 = 2.0 * triangle_areas(c, signed=True)
    tri = np.empty(len(pts), dtype=np.int64)
    lam = np.empty((len(pts), 3))
    for k, p in enumerate(pts):
        l0 = ((c[:, 1, 0] - p[0]) * (c[:, 2, 1] - p[1]) - (c[:, 2, 0] - p[0]) * (c[:, 1, 1] - p[1])) / area2
        l1 = ((c[:, 2, 0] - p[0]) * (c[:, 0, 1] - p[1]) - (c[:, 0, 0] - p[0]) * (c[:, 2, 1] - p[1])) / area2
        l2 = 1.0 - l0 - l1
        worst = np.minimum(np.minimum(l0, l1), l2)
        t = int(np.argmax(worst))
        if worst[t] < -1e-10:
            raise OutOfDomainError(f"point {p} lies outside the mesh")
        tri[k] = t
        lam[k] = (l0[t], l1[t], l2[t])
    return tri, lam


def interpolation_matrix(mesh, points):
    """Sparse map from interior coefficients to P1 values at ``points``."""
    tri, lam = locate(mesh, points)
    cols = mesh.interior_index[mesh.triangles[tri]]
    rows = np.repeat(np.arange(len(tri)), 3).reshape(-1, 3)
    mask = cols >= 0
    return sp.csr_matrix(
        (lam[mask], (rows[mask], cols[mask])), shape=(len(tri), mesh.n_interior)
    )


def eval_p1(mesh, coeffs, point):
    """Value at ``point`` of the P1 field with interior values ``coeffs`` and zero boundary values."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (mesh.n_interior,):
        raise InvalidParameterError(f"expected {mesh.n_interior} coefficients, got {coeffs.shape}")
    point = np.asarray(point, dtype=float)
    vals = interpolation_matrix(mesh, point.reshape(-1, 2)) @ coeffs
    return float(vals[0]) if point.ndim == 1 else vals


def nodal_interpolant(mesh, g):
    """Interior nodal values of ``g(x, y)``."""
    p = mesh.vertices[mesh.interior_nodes]
    return np.asarray(g(p[:, 0], p[:, 1]), dtype=float) * np.ones(mesh.n_interior)
