"""Piecewise-linear discontinuous Galerkin time stepping for the FV system.

On ``I_n = (t_{n-1}, t_n]`` the discrete solution is
``U(t) = a_n + b_n (t - t_{n-1}) / k_n``.  Testing the scheme with
``X = chi_i psi_q`` (q = 0, 1) gives the block system

    q=0:  M a_n + M b_n + S (J0 a_n + W0 b_n) = M U^{n-1} + F_0 - S H_0
    q=1:          M b_n / 2 + S (J1 a_n + W1 b_n) = F_1 - S H_1

where ``Jq = jump_moment(t_{n-1}, I_n, q)``, ``Wq = slope_moment(I_n, I_n, q)``
and ``H_q`` collects the memory of intervals 1..n-1 through the expansion

    B^a U(t) = a_1 w_a(t) + sum_j [U]^j w_a(t - t_j) + sum_j (b_j / k_j) int_{I_j, s<t} w_a(t - s) ds.
"""

import logging
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidParameterError, OutOfDomainError, SolverError
from .fractional_kernel import FracKernel, step_moments
from .fv_assembly import assemble_load, build_operators, elliptic_projection
from .linalg import DEFAULT_TOL, BlockOperator, BlockSystem, solve_block
from .mesh import build_uniform_mesh, eval_p1, nodal_interpolant
from .problems import rhs_time_moments
from .quadrature import gauss_legendre

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TimeMesh:
    nodes: np.ndarray
    gamma: float = 1.0

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or len(nodes) < 2:
            raise InvalidParameterError("a time mesh needs at least two nodes")
        if nodes[0] != 0.0 or np.any(np.diff(nodes) <= 0):
            raise InvalidParameterError("time nodes must start at 0 and increase strictly")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @property
    def N(self):
        return len(self.nodes) - 1

    @property
    def T(self):
        return float(self.nodes[-1])

    @property
    def widths(self):
        return np.diff(self.nodes)

    @property
    def k(self):
        return float(self.widths.max())

    def interval(self, n):
        return float(self.nodes[n - 1]), float(self.nodes[n])

    def find_interval(self, t):
        """1-based index n with ``t`` in ``(t_{n-1}, t_n]``."""
        if not 0.0 < t <= self.T:
            raise OutOfDomainError(f"time {t} outside (0, {self.T}]")
        return max(1, int(np.searchsorted(self.nodes, t, side="left")))


def graded_mesh(N, gamma, T=1.0):
    """``t_n = (n / N)**gamma * T``."""
    if int(N) != N or N < 1:
        raise InvalidParameterError(f"N must be a positive integer, got {N!r}")
    if not gamma >= 1:
        raise InvalidParameterError(f"grading parameter must be >= 1, got {gamma}")
    if not T > 0:
        raise InvalidParameterError(f"final time must be positive, got {T}")
    N = int(N)
    nodes = (np.arange(N + 1) / N) ** gamma * T
    return TimeMesh(nodes, float(gamma))


@dataclass(eq=False)
class DGSolution:
    """Per-interval coefficients: row ``n-1`` of ``a``/``b`` belongs to ``I_n``."""

    time_mesh: TimeMesh
    U0: np.ndarray
    a: np.ndarray
    b: np.ndarray
    completed: int = 0
    mesh: Optional[object] = None

    @classmethod
    def empty(cls, time_mesh, U0, mesh=None):
        n = len(U0)
        N = time_mesh.N
        return cls(time_mesh, np.asarray(U0, dtype=float), np.zeros((N, n)), np.zeros((N, n)), 0, mesh)

    def right_limit(self, n):
        """``U^{n}_+`` = ``a_{n+1}``."""
        return self.a[n]

    def node_value(self, n):
        """``U^n = U(t_n^-)``; ``U^0`` is the initial vector."""
        return self.U0 if n == 0 else self.a[n - 1] + self.b[n - 1]

    def jump(self, n):
        """``[U]^n = U^n_+ - U^n`` for 0 <= n < N."""
        return self.a[n] - self.node_value(n)

    def coeffs_at(self, t):
        n = self.time_mesh.find_interval(t)
        t0, t1 = self.time_mesh.interval(n)
        theta = (t - t0) / (t1 - t0)
        return self.a[n - 1] + theta * self.b[n - 1]


def eval_solution(sol, mesh, x, t):
    """``U(x, t)``; at a time node the left limit is returned."""
    return eval_p1(mesh, sol.coeffs_at(t), x)


@dataclass
class OperationCounter:
    stiffness_applications: int = 0
    history_terms: int = 0
    per_step: list = field(default_factory=list)


def memory_rhs(n, history, stiffness, kern, counter=None, moments=None):
    """``(S H_0, S H_1)``: memory of intervals 1..n-1 tested against ``psi_0, psi_1`` on ``I_n``."""
    nvec = stiffness.shape[0]
    if n == 1:
        return np.zeros(nvec), np.zeros(nvec)
    J, W = step_moments(kern, history.time_mesh.nodes, n) if moments is None else moments
    A = history.a[: n - 1]
    B = history.b[: n - 1]
    # a_1 J_0 + sum_{j<n} [U]^j J_j with the unknown a_n removed, regrouped per coefficient
    ca = J[:, : n - 1] - J[:, 1:n]
    cb = W[:, : n - 1] - J[:, 1:n]
    H = ca @ A + cb @ B
    out = stiffness @ H.T
    if counter is not None:
        counter.history_terms += n - 1
        counter.stiffness_applications += 2
    return out[:, 0], out[:, 1]


class DGStepper:
    """Marches the DG FV scheme interval by interval.

    ``source_loads`` is a sequence of ``(coef, beta, vector)`` with
    ``(f(t), chi_i) = sum coef * t**(beta-1) * vector[i]``.  A callable
    ``load_fn(t)`` returning the load vector is accepted for non-separable
    sources and integrated in time with a 6-point Gauss rule.
    """

    def __init__(self, mass, stiffness, kern, time_mesh, U0, source_loads=(), load_fn=None, tol=DEFAULT_TOL, mesh=None):
        if not isinstance(kern, FracKernel):
            kern = FracKernel(kern)
        self.mass = mass
        self.stiffness = stiffness
        self.kern = kern
        self.time_mesh = time_mesh
        self.source_loads = [(float(c), float(beta), np.asarray(v, dtype=float)) for c, beta, v in source_loads]
        self.load_fn = load_fn
        if load_fn is not None:
            warnings.warn(
                "non-separable source: time integrals use 6-point Gauss, inaccurate for t^(alpha-1) forcing on I_1",
                stacklevel=2,
            )
        self.tol = tol
        self.op = BlockOperator(mass, stiffness)
        self.counter = OperationCounter()
        self.solution = DGSolution.empty(time_mesh, U0, mesh)

    def load_moments(self, n):
        interval = self.time_mesh.interval(n)
        F = np.zeros((2, self.mass.shape[0]))
        for c, beta, vec in self.source_loads:
            for q in (0, 1):
                F[q] += c * rhs_time_moments(beta, interval, q) * vec
        if self.load_fn is not None:
            t0, t1 = interval
            x, w = gauss_legendre(6)
            for xg, wg in zip(x, w):
                v = (t1 - t0) * wg * np.asarray(self.load_fn(t0 + (t1 - t0) * xg), dtype=float)
                F[0] += v
                F[1] += xg * v
        return F

    def assemble_step(self, n):
        J, W = step_moments(self.kern, self.time_mesh.nodes, n)
        before = self.counter.stiffness_applications
        h0, h1 = memory_rhs(n, self.solution, self.stiffness, self.kern, self.counter, (J, W))
        F = self.load_moments(n)
        r0 = self.mass @ self.solution.node_value(n - 1) + F[0] - h0
        r1 = F[1] - h1
        self.counter.per_step.append(self.counter.stiffness_applications - before)
        weights = ((1.0, J[0, -1]), (1.0, W[0, -1]), (0.0, J[1, -1]), (0.5, W[1, -1]))
        return BlockSystem(self.op, weights, (r0, r1))

    def step(self, n):
        if n != self.solution.completed + 1:
            raise InvalidParameterError(f"step {n} requested after {self.solution.completed} completed steps")
        system = self.assemble_step(n)
        try:
            a, b = solve_block(system, self.tol)
        except SolverError as exc:
            exc.step = n
            raise
        self.solution.a[n - 1] = a
        self.solution.b[n - 1] = b
        self.solution.completed = n
        return a, b

    def run(self, callback=None):
        for n in range(self.solution.completed + 1, self.time_mesh.N + 1):
            self.step(n)
            if callback is not None:
                callback(n, self.solution)
        return self.solution


def initial_vector(problem, ops, initial="projection"):
    if initial == "projection":
        return elliptic_projection(problem.neg_laplacian_u0, ops)
    if initial == "interpolant":
        return nodal_interpolant(ops.mesh, problem.u0)
    raise InvalidParameterError(f"unknown initial-data rule {initial!r}")


def stepper_for_problem(problem, ops, time_mesh, tol=DEFAULT_TOL, initial="projection", quad_degree=4):
    loads = {}
    source_loads = []
    for term in problem.source.terms:
        if term.g not in loads:
            loads[term.g] = assemble_load(term.g, ops.mesh, ops.dual, quad_degree)
        source_loads.append((term.coef, term.beta, loads[term.g]))
    U0 = initial_vector(problem, ops, initial)
    return DGStepper(
        ops.mass, ops.stiffness, FracKernel(problem.alpha), time_mesh, U0, source_loads, tol=tol, mesh=ops.mesh
    )


def run(problem, M, N, gamma, T=None, tol=DEFAULT_TOL, initial="projection", callback=None, ops=None):
    """Solve ``problem`` on the M x M right-angle mesh with an N-step graded time mesh."""
    T = problem.T if T is None else T
    if ops is None:
        ops = build_operators(build_uniform_mesh(M))
    stepper = stepper_for_problem(problem, ops, graded_mesh(N, gamma, T), tol, initial)
    log.info("DG run: alpha=%g M=%d N=%d gamma=%g", problem.alpha, M, N, gamma)
    return stepper.run(callback)
