"""Quadrature rules on intervals and triangles."""

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def gauss_legendre(npts):
    """Gauss-Legendre nodes and weights mapped to [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(npts)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def triangle_rule(degree):
    """Collapsed (Duffy) Gauss rule on the reference triangle (0,0), (1,0), (0,1).

    Exact for polynomials of total degree ``degree``.  Returns barycentric
    coordinates of shape (npts, 3) and weights summing to 1, so that
    ``area * weights @ f(points)`` integrates over a physical triangle.
    """
    if degree < 0:
        raise ValueError("degree must be non-negative")
    n = max(1, -(-(degree + 2) // 2))
    u, wu = gauss_legendre(n)
    U, V = np.meshgrid(u, u, indexing="ij")
    W = np.outer(wu, wu) * (1.0 - U)
    xi = U.ravel()
    eta = (V * (1.0 - U)).ravel()
    bary = np.column_stack([1.0 - xi - eta, xi, eta])
    w = 2.0 * W.ravel()
    bary.setflags(write=False)
    w.setflags(write=False)
    return bary, w


def integrate_over_triangles(func, corners, degree=4):
    """Integrate ``func(x, y)`` over each triangle in ``corners``.

    corners has shape (ntri, 3, 2); returns an array of length ntri.
    """
    corners = np.asarray(corners, dtype=float)
    bary, w = triangle_rule(degree)
    pts = np.einsum("qk,tkd->tqd", bary, corners)
    vals = np.asarray(func(pts[..., 0], pts[..., 1]), dtype=float)
    vals = np.broadcast_to(vals, pts.shape[:2])
    return triangle_areas(corners) * (vals @ w)


def triangle_areas(corners, signed=False):
    corners = np.asarray(corners, dtype=float)
    e1 = corners[:, 1] - corners[:, 0]
    e2 = corners[:, 2] - corners[:, 0]
    a = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    return a if signed else np.abs(a)
