"""Discrete space-time error norms and convergence-rate tables."""

import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np

from .errors import InvalidParameterError
from .mesh import build_uniform_mesh, interpolation_matrix
from .quadrature import triangle_areas, triangle_rule


def fine_nodes(M_finest):
    """Nodes of the right-angle mesh whose diameter is half that of the finest mesh in a sweep."""
    return build_uniform_mesh(2 * M_finest).vertices


def sample_times(time_mesh, m):
    """``t_{j-1} + (q/m) k_j`` for q = 1..m on every interval, as (interval, theta) pairs.

    q = 0 coincides with q = m of the previous interval (left limit) or with t = 0,
    which is excluded.
    """
    if int(m) != m or m < 1:
        raise InvalidParameterError(f"m must be a positive integer, got {m!r}")
    return np.arange(1, int(m) + 1) / m


def discrete_max_error(sol, problem, points, m=10, mesh=None):
    """``max |U - u|`` over ``points`` x the refined time grid."""
    mesh = sol.mesh if mesh is None else mesh
    points = np.asarray(points, dtype=float)
    P = interpolation_matrix(mesh, points)
    shape_vals = problem.shape(points[:, 0], points[:, 1])
    theta = sample_times(sol.time_mesh, m)
    nodes = sol.time_mesh.nodes
    worst = 0.0
    for j in range(1, sol.completed + 1):
        t = nodes[j - 1] + theta * (nodes[j] - nodes[j - 1])
        ua = P @ sol.a[j - 1]
        ub = P @ sol.b[j - 1]
        U = ua[None, :] + theta[:, None] * ub[None, :]
        u = problem.time_factor(t)[:, None] * shape_vals[None, :]
        worst = max(worst, float(np.abs(U - u).max()))
    return worst


def l2_error_at(sol, problem, t, mesh=None, degree=4):
    """``||U(., t) - u(., t)||_{L2}`` by Gauss quadrature on every triangle."""
    mesh = sol.mesh if mesh is None else mesh
    coeffs = sol.coeffs_at(t)
    nodal = np.zeros(mesh.n_vertices)
    nodal[mesh.interior_nodes] = coeffs
    bary, w = triangle_rule(degree)
    corners = mesh.corners
    pts = np.einsum("qk,tkd->tqd", bary, corners)
    U = nodal[mesh.triangles] @ bary.T
    u = problem.exact(pts[..., 0], pts[..., 1], t)
    err2 = triangle_areas(corners) * (((U - u) ** 2) @ w)
    return math.sqrt(err2.sum())


@dataclass
class Level:
    M: int
    N: int
    gamma: float
    error: float
    rate: Optional[float] = None
    wall_time: float = 0.0


@dataclass
class ErrorReport:
    kind: str
    alpha: float
    levels: List[Level] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def refined(self):
        return "N" if self.kind == "temporal" else "M"

    def errors(self):
        return np.array([lv.error for lv in self.levels])

    def rates(self):
        return [lv.rate for lv in self.levels[1:]]

    def as_dict(self):
        return {"kind": self.kind, "alpha": self.alpha, "metadata": self.metadata, "levels": [asdict(lv) for lv in self.levels]}


def observed_rate(e_prev, e_cur, ref_prev, ref_cur):
    """``log(e_prev / e_cur) / log(ref_cur / ref_prev)``; None when undefined."""
    if not (e_prev > 0 and e_cur > 0) or ref_cur == ref_prev:
        return None
    return math.log(e_prev / e_cur) / math.log(ref_cur / ref_prev)


def rate_table(levels, kind="spatial", alpha=float("nan"), metadata=None):
    """Fill in observed rates with the actual refinement ratio of the varied parameter."""
    levels = list(levels)
    if not levels:
        raise InvalidParameterError("a rate table needs at least one level")
    key = "N" if kind == "temporal" else "M"
    for prev, cur in zip(levels[:-1], levels[1:]):
        cur.rate = observed_rate(prev.error, cur.error, getattr(prev, key), getattr(cur, key))
    levels[0].rate = None
    return ErrorReport(kind, alpha, levels, dict(metadata or {}))
