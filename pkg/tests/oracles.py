"""Independent reference computations used by the test suite.

Nothing here calls the moment formulas of the stepper; integrals are done by
adaptive quadrature or by the interval-wise fractional-integral closed form.
"""

import math

import numpy as np
from scipy import integrate

from fvsubdiff.fractional_kernel import FracKernel, fractional_integral_moment, fractional_integral_oracle

QUAD = dict(epsabs=1e-14, epsrel=1e-13, limit=400)


def fem_stiffness_dense(mesh):
    """``int grad(phi_i).grad(phi_j)`` via the cotangent formula on every triangle."""
    n = mesh.n_interior
    S = np.zeros((n, n))
    for tri in mesh.triangles:
        for k in range(3):
            i, j, o = tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]
            u = mesh.vertices[i] - mesh.vertices[o]
            v = mesh.vertices[j] - mesh.vertices[o]
            cot = float(u @ v) / abs(u[0] * v[1] - u[1] * v[0])
            w = 0.5 * cot
            ii, jj = mesh.interior_index[i], mesh.interior_index[j]
            # edge (i, j) opposite vertex o
            if ii >= 0:
                S[ii, ii] += w
            if jj >= 0:
                S[jj, jj] += w
            if ii >= 0 and jj >= 0:
                S[ii, jj] -= w
                S[jj, ii] -= w
    return S


def polygon_area(points):
    x, y = np.asarray(points).T
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


# ---------------------------------------------------------------------------
# scalar DG surrogate: u' + lam * B^alpha u = f, piecewise-linear DG in time


def _frac_integral_basis(alpha, nodes, m, p, t):
    """``I^alpha`` of basis (m, p) at time t by adaptive quadrature."""
    lo, hi = nodes[m - 1], nodes[m]
    if t <= lo:
        return 0.0
    b = min(t, hi)
    f = (lambda s: 1.0) if p == 0 else (lambda s: (s - lo) / (hi - lo))
    if t <= hi:
        val, _ = integrate.quad(f, lo, t, weight="alg", wvar=(0.0, alpha - 1.0), **QUAD)
    else:
        val, _ = integrate.quad(lambda s: f(s) * (t - s) ** (alpha - 1.0), lo, b, **QUAD)
    return val / math.gamma(alpha)


def _b_alpha_moment(alpha, nodes, m, p, n, q):
    """``int_{I_n} (B^alpha phi_{m,p}) psi_q dt`` with B^alpha = d/dt I^alpha, by parts on I_n."""
    t0, t1 = nodes[n - 1], nodes[n]
    k = t1 - t0
    Ia = lambda s: _frac_integral_basis(alpha, nodes, m, p, s)
    # I^alpha phi is continuous, psi_0 = 1, psi_1 runs from 0 to 1
    if q == 0:
        return Ia(t1) - Ia(t0)
    inner, _ = integrate.quad(Ia, t0, t1, **QUAD)
    return Ia(t1) - inner / k


def brute_force_scalar_dg(alpha, lam, nodes, u0, powers):
    """Dense Galerkin solve of the scalar DG scheme; returns arrays (a, b).

    The source is ``f(t) = sum coef * t**(beta - 1)`` over ``powers``.
    """
    nodes = np.asarray(nodes, dtype=float)
    N = len(nodes) - 1
    A = np.zeros((2 * N, 2 * N))
    rhs = np.zeros(2 * N)
    for n in range(1, N + 1):
        t0, t1 = nodes[n - 1], nodes[n]
        k = t1 - t0
        for q in (0, 1):
            row = 2 * (n - 1) + q
            # jump term (U_+^{n-1} - U^{n-1}) psi_q(t_{n-1}^+): psi_1 vanishes there
            if q == 0:
                A[row, 2 * (n - 1)] += 1.0
                if n == 1:
                    rhs[row] += u0
                else:
                    A[row, 2 * (n - 2)] -= 1.0
                    A[row, 2 * (n - 2) + 1] -= 1.0
            # int U' psi_q with U' = b_n / k
            A[row, 2 * (n - 1) + 1] += 1.0 if q == 0 else 0.5
            for m in range(1, n + 1):
                for p in (0, 1):
                    A[row, 2 * (m - 1) + p] += lam * _b_alpha_moment(alpha, nodes, m, p, n, q)
            psi = (lambda s: 1.0) if q == 0 else (lambda s: (s - t0) / k)
            for coef, beta in powers:
                if t0 == 0.0:
                    val, _ = integrate.quad(psi, 0.0, t1, weight="alg", wvar=(beta - 1.0, 0.0), **QUAD)
                else:
                    val, _ = integrate.quad(lambda s: psi(s) * s ** (beta - 1.0), t0, t1, **QUAD)
                rhs[row] += coef * val
    sol = np.linalg.solve(A, rhs)
    return sol[0::2], sol[1::2]


# ---------------------------------------------------------------------------
# global form of the DG scheme, assembled interval by interval


def global_b_alpha_form(alpha, nodes, cW, dW, cX, dX):
    """``sum_n int_{I_n} (B^alpha W) X dt`` for scalar piecewise-linear W, X.

    ``B^alpha W = d/dt I^alpha W``; on each interval this is integrated by parts
    against X, with ``I^alpha W`` from the closed-form fractional integral.
    """
    kern = FracKernel(alpha)
    nodes = np.asarray(nodes, dtype=float)
    total = 0.0
    for n in range(1, len(nodes)):
        t0, t1 = nodes[n - 1], nodes[n]
        k = t1 - t0
        I1 = fractional_integral_oracle(kern, nodes, cW, dW, t1)
        I0 = fractional_integral_oracle(kern, nodes, cW, dW, t0) if t0 > 0 else 0.0
        total += I1 * (cX[n - 1] + dX[n - 1]) - I0 * cX[n - 1]
        total -= dX[n - 1] / k * fractional_integral_moment(kern, nodes, cW, dW, n, 0)
    return total
