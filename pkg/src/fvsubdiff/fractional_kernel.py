"""Riemann-Liouville kernel moments on time intervals.

Everything is expressed through ``omega(mu, t) = t**(mu - 1) / Gamma(mu)``,
which satisfies ``int_0^t omega(mu, s) ds = omega(mu + 1, t)``.  On a test
interval ``I_n = (t_{n-1}, t_n]`` the temporal basis is ``psi_0 = 1`` and
``psi_1 = (t - t_{n-1}) / k_n``.

Closed forms difference antiderivatives, which cancels badly when the
source point sits far from the test interval; past ``FAR_RATIO`` interval
widths we integrate the (then smooth) integrand with a Gauss rule instead.
Slope moments of earlier intervals difference twice more, so their relative
error grows like eps * ratio**3 and they switch at ``SLOPE_FAR_RATIO``.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import InvalidParameterError, OrderingError, SingularityError
from .quadrature import gauss_legendre

FAR_RATIO = 1e3
SLOPE_FAR_RATIO = 30.0
FAR_GAUSS_POINTS = 4


def omega(mu, t, gamma_mu=None):
    """``t**(mu-1) / Gamma(mu)`` for ``t >= 0``; zero for ``t < 0`` (causal kernel)."""
    if mu <= 0:
        raise InvalidParameterError(f"order must be positive, got {mu}")
    t = np.asarray(t, dtype=float)
    if mu < 1 and np.any(t == 0):
        raise SingularityError(f"omega_{mu} is singular at t = 0")
    g = math.gamma(mu) if gamma_mu is None else gamma_mu
    pos = np.where(t > 0, t, 1.0)
    val = np.where(t > 0, pos ** (mu - 1.0), 1.0 if mu == 1 else 0.0) / g
    val = np.where(t < 0, 0.0, val)
    return float(val) if val.ndim == 0 else val


@dataclass(frozen=True)
class FracKernel:
    alpha: float
    gammas: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise InvalidParameterError(f"alpha must lie in (0, 1), got {self.alpha}")
        object.__setattr__(self, "gammas", tuple(math.gamma(self.alpha + k) for k in range(5)))

    def omega(self, k, t):
        """``omega(alpha + k, t)`` using the cached Gamma values."""
        return omega(self.alpha + k, t, self.gammas[k])


def kernel_moment(mu, c, t0, t1, q):
    """``int_{t0}^{t1} omega(mu, t - c) psi_q(t) dt`` for source points ``c <= t0``.

    ``c`` may be an array; ``mu > 0`` and ``q`` in {0, 1}.
    """
    if q not in (0, 1):
        raise InvalidParameterError(f"test degree must be 0 or 1, got {q}")
    c = np.asarray(c, dtype=float)
    if np.any(c > t0):
        raise OrderingError("source point lies after the start of the test interval")
    k = t1 - t0
    d0 = t0 - c
    d1 = t1 - c
    if q == 0:
        out = omega(mu + 1, d1) - omega(mu + 1, d0)
    else:
        out = (k * omega(mu + 1, d1) - omega(mu + 2, d1) + omega(mu + 2, d0)) / k
    out = np.asarray(out, dtype=float)
    far = d0 > FAR_RATIO * k
    if np.any(far):
        x, w = gauss_legendre(FAR_GAUSS_POINTS)
        tau = d0[far][..., None] + k * x
        vals = tau ** (mu - 1.0) / math.gamma(mu)
        if q == 1:
            vals = vals * x
        out[far] = k * (vals @ w)
    return float(out) if out.ndim == 0 else out


def jump_moment(kern, t_j, interval, q):
    """``int_{I_n} omega_alpha(t - t_j) psi_q(t) dt`` with ``interval = (t_{n-1}, t_n)``."""
    t0, t1 = interval
    if np.any(np.asarray(t_j) > t0):
        raise OrderingError(f"source time {t_j} lies after t_(n-1) = {t0}")
    return kernel_moment(kern.alpha, t_j, t0, t1, q)


def slope_moment(kern, source, interval, q):
    """Weight of the slope coefficient ``b_j`` of interval ``source`` in ``int_{I_n} B^alpha U psi_q``.

    Equals ``int_{I_n} [int_{I_j, s<t} omega_alpha(t - s) ds / k_j] psi_q(t) dt``.
    ``source`` is either the test interval itself or lies entirely before it.
    """
    s0, s1 = source
    t0, t1 = interval
    if s0 == t0 and s1 == t1:
        return kernel_moment(kern.alpha + 1, t0, t0, t1, q) / (t1 - t0)
    if s1 > t0:
        raise OrderingError("source interval overlaps the test interval")
    return float(_slope_moments_before(kern.alpha, np.array([s0]), np.array([s1]), t0, t1, q)[0])


def _slope_moments_before(alpha, s0, s1, t0, t1, q):
    kj = s1 - s0
    out = (kernel_moment(alpha + 1, s0, t0, t1, q) - kernel_moment(alpha + 1, s1, t0, t1, q)) / kj
    out = np.asarray(out, dtype=float)
    far = (t0 - s1) > SLOPE_FAR_RATIO * kj
    if np.any(far):
        # average over the source interval of the jump moment, which is smooth there
        x, w = gauss_legendre(FAR_GAUSS_POINTS)
        s = s0[far][:, None] + kj[far][:, None] * x
        jm = kernel_moment(alpha, s.ravel(), t0, t1, q).reshape(s.shape)
        out[far] = jm @ w
    return out


def step_moments(kern, nodes, n):
    """All moments needed on ``I_n`` (1-based): ``(J, W)`` with shapes (2, n).

    ``J[q, j] = jump_moment(t_j, I_n, q)`` for j = 0..n-1 and
    ``W[q, j-1] = slope_moment(I_j, I_n, q)`` for j = 1..n.
    """
    t0, t1 = nodes[n - 1], nodes[n]
    k = t1 - t0
    J = np.empty((2, n))
    W = np.empty((2, n))
    for q in (0, 1):
        J[q] = kernel_moment(kern.alpha, nodes[:n], t0, t1, q)
        if n > 1:
            W[q, :-1] = _slope_moments_before(kern.alpha, nodes[: n - 1], nodes[1:n], t0, t1, q)
        W[q, -1] = kernel_moment(kern.alpha + 1, t0, t0, t1, q) / k
    return J, W


def fractional_integral_oracle(kern, nodes, c, d, t, order=None):
    """Exact ``I^mu phi(t)`` for ``phi = c_j + d_j (s - t_{j-1}) / k_j`` on each ``I_j``.

    ``mu`` defaults to ``kern.alpha``.  ``c`` and ``d`` have one entry per
    interval; jumps between intervals are allowed.
    """
    mu = kern.alpha if order is None else order
    nodes = np.asarray(nodes, dtype=float)
    c = np.asarray(c, dtype=float)
    d = np.asarray(d, dtype=float)
    lo, hi = nodes[:-1], nodes[1:]
    kj = hi - lo
    tt = np.atleast_1d(np.asarray(t, dtype=float))[:, None]
    val = c * (omega(mu + 1, tt - lo) - omega(mu + 1, tt - hi))
    val += d / kj * (omega(mu + 2, tt - lo) - omega(mu + 2, tt - hi) - kj * omega(mu + 1, tt - hi))
    out = val.sum(axis=1)
    return float(out[0]) if np.ndim(t) == 0 else out


def fractional_integral_moment(kern, nodes, c, d, n, q):
    """``int_{I_n} (I^alpha phi) psi_q dt`` for the piecewise-linear ``phi`` of :func:`fractional_integral_oracle`."""
    a = kern.alpha
    t0, t1 = nodes[n - 1], nodes[n]
    total = 0.0
    for j in range(1, n + 1):
        lo, hi = nodes[j - 1], nodes[j]
        kj = hi - lo
        total += c[j - 1] * kernel_moment(a + 1, lo, t0, t1, q)
        total += d[j - 1] / kj * kernel_moment(a + 2, lo, t0, t1, q)
        if j < n:
            total -= c[j - 1] * kernel_moment(a + 1, hi, t0, t1, q)
            total -= d[j - 1] / kj * (kernel_moment(a + 2, hi, t0, t1, q) + kj * kernel_moment(a + 1, hi, t0, t1, q))
    return total


# ---------------------------------------------------------------------------
# quadrature oracles, used for validation only


def fractional_integral_quad(mu, phi, t, breakpoints=()):
    """``I^mu phi(t)`` by adaptive quadrature; the last piece carries the algebraic end weight."""
    if t <= 0:
        return 0.0
    pts = sorted({0.0, t, *[b for b in breakpoints if 0 < b < t]})
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        if hi == t:
            val, _ = integrate.quad(phi, lo, hi, weight="alg", wvar=(0.0, mu - 1.0), epsabs=1e-14, epsrel=1e-13, limit=200)
        else:
            val, _ = integrate.quad(lambda s: phi(s) * (t - s) ** (mu - 1.0), lo, hi, epsabs=1e-14, epsrel=1e-13, limit=200)
        total += val
    return total / math.gamma(mu)


def rl_derivative_quad(alpha, phi0, dphi, t, singular_exponent=0.0):
    """``B^alpha phi(t) = omega_alpha(t) phi(0) + int_0^t omega_alpha(t - s) phi'(s) ds``.

    ``phi'(s)`` may behave like ``s**singular_exponent`` near 0; the
    algebraic weight handles both endpoint singularities.
    """
    g = math.gamma(alpha)
    if singular_exponent:
        f = lambda s: dphi(s) / s**singular_exponent if s > 0 else 0.0
        wvar = (singular_exponent, alpha - 1.0)
    else:
        f, wvar = dphi, (0.0, alpha - 1.0)
    val, _ = integrate.quad(f, 0.0, t, weight="alg", wvar=wvar, epsabs=1e-14, epsrel=1e-13, limit=200)
    return phi0 * t ** (alpha - 1.0) / g + val / g


def adjoint_integral_quad(mu, phi, t, T):
    """``int_t^T omega_mu(s - t) phi(s) ds``."""
    if t >= T:
        return 0.0
    val, _ = integrate.quad(phi, t, T, weight="alg", wvar=(mu - 1.0, 0.0), epsabs=1e-14, epsrel=1e-13, limit=200)
    return val / math.gamma(mu)
