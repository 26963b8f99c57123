"""Finite volume element operators on the barycentric dual mesh."""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SolverError
from .linalg import as_csr
from .mesh import DualMesh, PrimalMesh, build_dual_mesh, p1_gradients
from .quadrature import triangle_rule, triangle_areas

DEFAULT_QUAD_DEGREE = 4


@dataclass(frozen=True, eq=False)
class FvOperators:
    """Stiffness ``S[i, j] = -flux of grad(phi_j) out of K*_i`` and FV mass ``M[i, j] = int_{K*_i} phi_j``."""

    mesh: PrimalMesh
    dual: DualMesh
    stiffness: sp.csr_matrix
    mass: sp.csr_matrix

    @property
    def n(self):
        return self.mesh.n_interior


def build_operators(mesh, dual=None):
    if dual is None:
        dual = build_dual_mesh(mesh)
    return FvOperators(mesh, dual, assemble_stiffness(mesh, dual), assemble_fv_mass(mesh, dual))


def assemble_stiffness(mesh, dual):
    """Assemble ``A_h`` row by row from the fluxes through the control-volume boundaries."""
    grads = p1_gradients(mesh)
    owner = np.repeat(np.arange(mesh.n_interior), np.diff(dual.seg_offsets))
    tri = dual.seg_tri
    normals = dual.seg_normal
    # flux of grad(phi_b) through each segment, for the 3 vertices b of its triangle
    flux = np.einsum("sbd,sd->sb", grads[tri], normals)
    cols = mesh.interior_index[mesh.triangles[tri]]
    rows = np.broadcast_to(owner[:, None], cols.shape)
    keep = cols >= 0
    S = sp.coo_matrix((-flux[keep], (rows[keep], cols[keep])), shape=(mesh.n_interior,) * 2)
    return as_csr(S)


def assemble_fv_mass(mesh, dual, include_boundary=False):
    """``M[i, j] = int_{K*_i} phi_j``, exact for the linear ``phi_j``.

    With ``include_boundary`` the matrix runs over all vertices, boundary
    control volumes and hat functions included.
    """
    sub, node, tri = dual.piece_subtriangles()
    area = triangle_areas(sub)
    # hats are linear, so the vertex average times the area is exact
    centroid = sub.mean(axis=1)
    lam = _barycentric(mesh, tri, centroid)
    rows = np.repeat(node, 3)
    cols = mesh.triangles[tri].ravel()
    vals = (area[:, None] * lam).ravel()
    if include_boundary:
        shape = (mesh.n_vertices,) * 2
    else:
        rows = mesh.interior_index[rows]
        cols = mesh.interior_index[cols]
        keep = (rows >= 0) & (cols >= 0)
        rows, cols, vals = rows[keep], cols[keep], vals[keep]
        shape = (mesh.n_interior,) * 2
    return as_csr(sp.coo_matrix((vals, (rows, cols)), shape=shape))


def _barycentric(mesh, tri, points):
    c = mesh.corners[tri]
    area2 = 2.0 * triangle_areas(c, signed=True)
    p = points
    l0 = ((c[:, 1, 0] - p[:, 0]) * (c[:, 2, 1] - p[:, 1]) - (c[:, 2, 0] - p[:, 0]) * (c[:, 1, 1] - p[:, 1])) / area2
    l1 = ((c[:, 2, 0] - p[:, 0]) * (c[:, 0, 1] - p[:, 1]) - (c[:, 0, 0] - p[:, 0]) * (c[:, 2, 1] - p[:, 1])) / area2
    return np.column_stack([l0, l1, 1.0 - l0 - l1])


def assemble_load(g, mesh, dual, quad_degree=DEFAULT_QUAD_DEGREE, include_boundary=False):
    """``b_i = int_{K*_i} g`` by Gauss quadrature on the six sub-triangles of each primal triangle."""
    sub, node, _ = dual.piece_subtriangles()
    bary, w = triangle_rule(quad_degree)
    pts = np.einsum("qk,tkd->tqd", bary, sub)
    vals = np.broadcast_to(np.asarray(g(pts[..., 0], pts[..., 1]), dtype=float), pts.shape[:2])
    contrib = triangle_areas(sub) * (vals @ w)
    b = np.bincount(node, weights=contrib, minlength=mesh.n_vertices)
    return b if include_boundary else b[mesh.interior_nodes]


def elliptic_projection(neg_laplacian, ops, quad_degree=DEFAULT_QUAD_DEGREE):
    """Interior coefficients of the FV elliptic projection of a smooth ``u0`` vanishing on the boundary.

    ``neg_laplacian(x, y)`` evaluates ``-Δu0``; by Green's formula its
    control-volume integrals equal the fluxes of ``grad u0``.
    """
    b = assemble_load(neg_laplacian, ops.mesh, ops.dual, quad_degree)
    if not np.any(b):
        return np.zeros(ops.n)
    c = spla.spsolve(ops.stiffness.tocsc(), b)
    res = np.linalg.norm(ops.stiffness @ c - b) / np.linalg.norm(b)
    if not np.isfinite(res) or res > 1e-10:
        raise SolverError(f"elliptic projection solve residual {res:.3e}", residual=res)
    return c
