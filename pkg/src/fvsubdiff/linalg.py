"""Sparse operators and the per-step 2x2 block solve.

Matrices are plain ``scipy.sparse.csr_matrix`` objects over the interior
unknowns.  Block systems have the form

    [ a00*M + b00*S   a01*M + b01*S ] [x0]   [r0]
    [ a10*M + b10*S   a11*M + b11*S ] [x1] = [r1]

with a shared mass-like ``M`` and stiffness-like ``S``.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import InvalidParameterError, SolverError

DEFAULT_TOL = 1e-10


def as_csr(A):
    A = sp.csr_matrix(A, dtype=float)
    if A.shape[0] != A.shape[1]:
        raise InvalidParameterError(f"matrix must be square, got {A.shape}")
    A.sum_duplicates()
    A.sort_indices()
    return A


def spmv(A, x):
    x = np.asarray(x, dtype=float)
    if A.shape[1] != x.shape[0]:
        raise InvalidParameterError(f"dimension mismatch: {A.shape} @ {x.shape}")
    return A @ x


def union_pattern(*mats):
    """Return copies of ``mats`` stored on the union of their sparsity patterns."""
    pattern = sum(abs(A) for A in mats)
    pattern = as_csr(pattern)
    pattern.data[:] = 1.0
    out = []
    for A in mats:
        # explicit zeros are kept so every output shares ``pattern``'s indices
        B = sp.csr_matrix((_data_on_pattern(A, pattern), pattern.indices, pattern.indptr), shape=A.shape)
        out.append(B)
    return out


def _data_on_pattern(A, pattern):
    A = as_csr(A).tocoo()
    if A.nnz == 0:
        return np.zeros(pattern.nnz)
    lookup = sp.csr_matrix(
        (np.arange(1, pattern.nnz + 1, dtype=float), pattern.indices, pattern.indptr), shape=pattern.shape
    )
    pos = np.asarray(lookup[A.row, A.col]).ravel().astype(np.int64) - 1
    data = np.zeros(pattern.nnz)
    np.add.at(data, pos, A.data)
    return data


class BlockOperator:
    """Precomputed 2n x 2n structure for blocks built from ``M`` and ``S``."""

    def __init__(self, mass, stiff):
        self.mass, self.stiff = union_pattern(mass, stiff)
        self.n = self.mass.shape[0]
        P = self.mass
        template = sp.bmat([[P, P], [P, P]], format="csr")
        self._indices = template.indices
        self._indptr = template.indptr
        # for each of the 4 blocks, the slots it occupies in the big data array
        self._slots = []
        marker = sp.bmat(
            [[_tag(P, 1), _tag(P, 2)], [_tag(P, 3), _tag(P, 4)]], format="csr"
        )
        for b in range(1, 5):
            self._slots.append(np.flatnonzero(marker.data == b))

    def matrix(self, weights):
        """Assemble the block matrix for ``weights = ((a00, b00), (a01, b01), (a10, b10), (a11, b11))``."""
        data = np.empty(len(self._indices))
        for slot, (a, b) in zip(self._slots, weights):
            data[slot] = a * self.mass.data + b * self.stiff.data
        return sp.csr_matrix((data, self._indices, self._indptr), shape=(2 * self.n, 2 * self.n))


def _tag(P, value):
    return sp.csr_matrix((np.full(P.nnz, float(value)), P.indices, P.indptr), shape=P.shape)


@dataclass
class BlockSystem:
    op: BlockOperator
    weights: tuple
    rhs: tuple

    def matrix(self):
        return self.op.matrix(self.weights)

    def apply(self, x0, x1):
        M, S = self.op.mass, self.op.stiff
        Mx0, Sx0, Mx1, Sx1 = M @ x0, S @ x0, M @ x1, S @ x1
        (a00, b00), (a01, b01), (a10, b10), (a11, b11) = self.weights
        return (
            a00 * Mx0 + b00 * Sx0 + a01 * Mx1 + b01 * Sx1,
            a10 * Mx0 + b10 * Sx0 + a11 * Mx1 + b11 * Sx1,
        )

    def residual(self, x0, x1):
        y0, y1 = self.apply(x0, x1)
        r = np.concatenate([y0 - self.rhs[0], y1 - self.rhs[1]])
        return np.linalg.norm(r) / np.linalg.norm(np.concatenate(self.rhs))


def solve_block(system, tol=DEFAULT_TOL, method="auto"):
    """Solve a block system and verify its relative residual.

    ``method="eigen"`` diagonalises the 2x2 weight pencil so that only
    n x n systems ``M + lam S`` are factorised (one complex factorisation
    for a conjugate pair); ``"direct"`` factorises the full 2n x 2n
    matrix.  ``"auto"`` tries the former and falls back to the latter.
    """
    if not tol > 0:
        raise InvalidParameterError("tol must be positive")
    if method not in ("auto", "eigen", "direct"):
        raise InvalidParameterError(f"unknown solve method {method!r}")
    n = system.op.n
    r0, r1 = (np.asarray(r, dtype=float) for r in system.rhs)
    if r0.shape != (n,) or r1.shape != (n,):
        raise InvalidParameterError(f"right-hand side blocks must have shape ({n},)")
    if not (np.any(r0) or np.any(r1)):
        return np.zeros(n), np.zeros(n)

    res = np.inf
    if method in ("auto", "eigen"):
        try:
            x0, x1 = _solve_eigen(system, r0, r1)
            res = system.residual(x0, x1)
        except (np.linalg.LinAlgError, RuntimeError):
            res = np.inf
        if res <= tol:
            return x0, x1
        if method == "eigen":
            raise SolverError(f"relative residual {res:.3e} exceeds tol {tol:.1e}", residual=res)

    A = system.matrix()
    rhs = np.concatenate([r0, r1])
    try:
        lu = spla.splu(A.tocsc(), permc_spec="MMD_AT_PLUS_A")
        x = lu.solve(rhs)
    except RuntimeError as exc:
        raise SolverError(f"factorization failed: {exc}", residual=np.inf) from exc
    res = system.residual(x[:n], x[n:])
    if not res <= tol:
        x += lu.solve(rhs - A @ x)
        res = system.residual(x[:n], x[n:])
        if not res <= tol:
            raise SolverError(f"relative residual {res:.3e} exceeds tol {tol:.1e}", residual=res)
    return x[:n], x[n:]


def _solve_eigen(system, r0, r1):
    (a00, b00), (a01, b01), (a10, b10), (a11, b11) = system.weights
    CM = np.array([[a00, a01], [a10, a11]], dtype=float)
    CS = np.array([[b00, b01], [b10, b11]], dtype=float)
    # (CM x M + CS x S) x = r  ->  (I x M + C x S) x = CM^-1 r,  C = V diag(lam) V^-1
    C = np.linalg.solve(CM, CS)
    lam, V = np.linalg.eig(C)
    g = np.linalg.solve(V, np.linalg.solve(CM, np.vstack([r0, r1])))
    op = system.op
    if np.iscomplexobj(lam) and abs(lam[0].imag) > 0:
        y = _shifted_solve(op, lam[0], g[0])
        # the second eigenpair is the conjugate of the first
        x0 = 2.0 * (V[0, 0] * y).real
        x1 = 2.0 * (V[1, 0] * y).real
    else:
        lam, V, g = lam.real, V.real, g.real
        y = [_shifted_solve(op, lam[i], g[i]) for i in range(2)]
        x0 = V[0, 0] * y[0] + V[0, 1] * y[1]
        x1 = V[1, 0] * y[0] + V[1, 1] * y[1]
    return x0, x1


def _shifted_solve(op, lam, rhs):
    A = sp.csr_matrix((op.mass.data + lam * op.stiff.data, op.mass.indices, op.mass.indptr), shape=op.mass.shape)
    lu = spla.splu(A.tocsc(), permc_spec="MMD_AT_PLUS_A", options=dict(SymmetricMode=True))
    return lu.solve(rhs)
