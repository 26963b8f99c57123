"""Fast self-checks run by ``fvsubdiff verify``.

Each check returns a :class:`CheckResult`; the reference quantities are
computed independently of the production code paths they test.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy import integrate

from .dg_stepper import graded_mesh, run
from .fractional_kernel import FracKernel, jump_moment, slope_moment
from .fv_assembly import build_operators, elliptic_projection
from .mesh import build_uniform_mesh
from .problems import ManufacturedProblem, paper_problem, zero_problem
from .quadrature import triangle_areas, triangle_rule


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {self.value:.3e} (threshold {self.threshold:.3e}) {self.detail}".rstrip()


def fem_stiffness(mesh):
    """P1 stiffness ``int grad(phi_i) . grad(phi_j)`` over interior vertices, one triangle at a time."""
    n = mesh.n_interior
    S = np.zeros((n, n))
    for tri in mesh.triangles:
        p = mesh.vertices[tri]
        B = np.array([[p[1, 0] - p[0, 0], p[2, 0] - p[0, 0]], [p[1, 1] - p[0, 1], p[2, 1] - p[0, 1]]])
        area = 0.5 * abs(np.linalg.det(B))
        G = np.linalg.solve(B.T, np.array([[-1.0, 1.0, 0.0], [-1.0, 0.0, 1.0]]))
        K = area * G.T @ G
        idx = mesh.interior_index[tri]
        for a in range(3):
            for b in range(3):
                if idx[a] >= 0 and idx[b] >= 0:
                    S[idx[a], idx[b]] += K[a, b]
    return S


def consistent_mass(mesh):
    """P1 mass ``int phi_i phi_j`` over interior vertices."""
    areas = mesh.areas
    local = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0
    idx = mesh.interior_index[mesh.triangles]
    rows = np.repeat(idx, 3, axis=1).ravel()
    cols = np.tile(idx, (1, 3)).ravel()
    vals = (areas[:, None, None] * local).reshape(len(areas), 9).ravel()
    keep = (rows >= 0) & (cols >= 0)
    n = mesh.n_interior
    return sp.coo_matrix((vals[keep], (rows[keep], cols[keep])), shape=(n, n)).toarray()


def stiffness_identity(Ms=(4, 8, 16), tol=1e-12):
    worst = 0.0
    for M in Ms:
        mesh = build_uniform_mesh(M)
        ops = build_operators(mesh)
        worst = max(worst, float(np.abs(ops.stiffness.toarray() - fem_stiffness(mesh)).max()))
    return CheckResult("FV stiffness equals P1 FEM stiffness", worst <= tol, worst, tol, f"M in {list(Ms)}")


def projection_stability(Ms=(8, 16), bound=2.0):
    """Largest ``||Pi* chi|| / ||chi||`` over V_h and smallest FV-mass eigenvalue."""
    worst, min_eig = 0.0, math.inf
    for M in Ms:
        mesh = build_uniform_mesh(M)
        ops = build_operators(mesh)
        D = np.diag(ops.dual.control_volume_area[mesh.interior_nodes])
        Mc = consistent_mass(mesh)
        worst = max(worst, math.sqrt(sla.eigh(D, Mc, eigvals_only=True).max()))
        Mfv = ops.mass.toarray()
        min_eig = min(min_eig, float(np.linalg.eigvalsh(0.5 * (Mfv + Mfv.T)).min()))
    ok = worst <= bound and min_eig > 0
    return CheckResult("FV mass SPD and Pi* stability", ok, worst, bound, f"min eig {min_eig:.3e}")


def kernel_moments(samples=50, tol=1e-9, seed=0):
    rng = np.random.default_rng(seed)
    opts = dict(epsabs=1e-14, epsrel=1e-13, limit=200)
    worst = 0.0
    for _ in range(samples):
        alpha = rng.uniform(0.05, 0.95)
        kern = FracKernel(alpha)
        s0 = rng.uniform(0, 1)
        s1 = s0 + rng.uniform(0.01, 1)
        t0 = s1 + rng.uniform(0.01, 1)
        t1 = t0 + rng.uniform(0.01, 1)
        q = int(rng.integers(0, 2))
        psi = (lambda t: 1.0) if q == 0 else (lambda t: (t - t0) / (t1 - t0))
        g = math.gamma(alpha)
        # jump moment with the source at the start of the test interval: endpoint singularity
        ref, _ = integrate.quad(psi, t0, t1, weight="alg", wvar=(alpha - 1.0, 0.0), **opts)
        worst = max(worst, abs(jump_moment(kern, t0, (t0, t1), q) - ref / g))
        # slope moment of an earlier interval: integrate the inner antiderivative
        inner = lambda t: ((t - s0) ** alpha - (t - s1) ** alpha) / (alpha * g * (s1 - s0))
        ref, _ = integrate.quad(lambda t: psi(t) * inner(t), t0, t1, **opts)
        worst = max(worst, abs(slope_moment(kern, (s0, s1), (t0, t1), q) - ref))
    return CheckResult("kernel moments vs adaptive quadrature", worst <= tol, worst, tol, f"{samples} samples")


def projection_rate(Ms=(8, 16, 32), min_rate=1.9):
    prob = ManufacturedProblem(0.5, ((1.0, 0.0),))
    errs = []
    for M in Ms:
        ops = build_operators(build_uniform_mesh(M))
        c = elliptic_projection(prob.neg_laplacian_u0, ops)
        errs.append(_l2_static(ops.mesh, c, prob.u0))
    rates = [math.log2(a / b) for a, b in zip(errs[:-1], errs[1:])]
    return CheckResult("elliptic projection L2 rate", min(rates) >= min_rate, min(rates), min_rate, f"rates {rates}")


def _l2_static(mesh, coeffs, g):
    nodal = np.zeros(mesh.n_vertices)
    nodal[mesh.interior_nodes] = coeffs
    bary, w = triangle_rule(6)
    pts = np.einsum("qk,tkd->tqd", bary, mesh.corners)
    diff = nodal[mesh.triangles] @ bary.T - g(pts[..., 0], pts[..., 1])
    return math.sqrt(float((triangle_areas(mesh.corners) * ((diff**2) @ w)).sum()))


def zero_run(alpha=0.5, M=6, N=8):
    sol = run(zero_problem(alpha), M, N, 2.0)
    val = float(max(np.abs(sol.a).max(), np.abs(sol.b).max()))
    return CheckResult("zero data gives zero solution", val == 0.0, val, 0.0)


def temporal_trend(alpha=0.5, M=16, Ns=(4, 8, 16)):
    """L2 error at T against a 4x finer-in-time run on the same spatial mesh."""
    gamma = 2.0 / alpha
    prob = paper_problem(alpha)
    ops = build_operators(build_uniform_mesh(M))
    Mc = consistent_mass(ops.mesh)
    ref = run(prob, M, 4 * Ns[-1], gamma, ops=ops).node_value(4 * Ns[-1])
    errs = []
    for N in Ns:
        d = run(prob, M, N, gamma, ops=ops).node_value(N) - ref
        errs.append(math.sqrt(d @ Mc @ d))
    ks = [graded_mesh(N, gamma).k for N in Ns]
    rates = [math.log(a / b) / math.log(ka / kb) for a, b, ka, kb in zip(errs[:-1], errs[1:], ks[:-1], ks[1:])]
    need = 1.0 + alpha - 0.2
    return CheckResult("temporal L2 error trend at T", min(rates) >= need, min(rates), need, f"rates {rates}")


ALL_CHECKS = (stiffness_identity, projection_stability, kernel_moments, projection_rate, zero_run, temporal_trend)


def run_checks(checks=ALL_CHECKS):
    return [check() for check in checks]
