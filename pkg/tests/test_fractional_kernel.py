import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from fvsubdiff.errors import InvalidParameterError, OrderingError, SingularityError
from fvsubdiff.fractional_kernel import (
    SLOPE_FAR_RATIO,
    FracKernel,
    adjoint_integral_quad,
    fractional_integral_moment,
    fractional_integral_oracle,
    fractional_integral_quad,
    jump_moment,
    kernel_moment,
    omega,
    rl_derivative_quad,
    slope_moment,
    step_moments,
)

QUAD = dict(epsabs=1e-14, epsrel=1e-13, limit=400)


def test_omega_values():
    assert omega(1.5, 1.0) == pytest.approx(1.1283792, abs=1e-7)
    assert omega(1.5, 1.0) == pytest.approx(2 / math.sqrt(math.pi), rel=1e-15)
    np.testing.assert_allclose(omega(2.0, np.array([0.0, 0.3, 2.0])), [0.0, 0.3, 2.0], rtol=1e-15)
    np.testing.assert_allclose(omega(1.0, np.array([0.0, 0.3, 2.0])), 1.0)
    assert omega(0.5, -1.0) == 0.0


def test_omega_errors():
    with pytest.raises(SingularityError):
        omega(0.4, 0.0)
    with pytest.raises(InvalidParameterError):
        omega(0.0, 1.0)


@pytest.mark.parametrize("alpha", [0.1, 0.4, 0.75, 0.99])
def test_kernel_gamma_cache(alpha):
    kern = FracKernel(alpha)
    for k, g in enumerate(kern.gammas):
        assert g == pytest.approx(math.gamma(alpha + k), rel=1e-14)
    assert kern.omega(1, 2.0) == pytest.approx(omega(alpha + 1, 2.0), rel=1e-15)


@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.2, 1.5])
def test_kernel_rejects_alpha(alpha):
    with pytest.raises(InvalidParameterError):
        FracKernel(alpha)


# ---------------------------------------------------------------------------
# moments against adaptive quadrature


def _jump_quad(alpha, tj, t0, t1, q):
    psi = (lambda t: 1.0) if q == 0 else (lambda t: (t - t0) / (t1 - t0))
    if tj == t0:
        val, _ = integrate.quad(psi, t0, t1, weight="alg", wvar=(alpha - 1.0, 0.0), **QUAD)
    else:
        val, _ = integrate.quad(lambda t: psi(t) * (t - tj) ** (alpha - 1.0), t0, t1, **QUAD)
    return val / math.gamma(alpha)


def _slope_quad(alpha, s0, s1, t0, t1, q):
    """Inner integral in closed form (elementary power), outer by adaptive quadrature."""
    psi = (lambda t: 1.0) if q == 0 else (lambda t: (t - t0) / (t1 - t0))
    g = math.gamma(alpha + 1.0) * (s1 - s0)
    if s1 > t0:
        # same interval: int_{s0}^{t} omega_alpha(t - s) ds = (t - s0)^alpha / Gamma(alpha + 1)
        val, _ = integrate.quad(psi, t0, t1, weight="alg", wvar=(alpha, 0.0), **QUAD)
        return val / g
    val, _ = integrate.quad(lambda t: psi(t) * ((t - s0) ** alpha - (t - s1) ** alpha), t0, t1, **QUAD)
    return val / g


def test_jump_moment_examples():
    kern = FracKernel(0.5)
    assert jump_moment(kern, 0.0, (0.0, 1.0), 0) == pytest.approx(2 / math.sqrt(math.pi), rel=1e-14)
    for alpha, k in [(0.3, 0.2), (0.5, 0.3), (0.8, 1.7)]:
        kern = FracKernel(alpha)
        assert jump_moment(kern, 1.0, (1.0, 1.0 + k), 0) == pytest.approx(omega(alpha + 1, k), rel=1e-14)


@pytest.mark.parametrize("alpha, k", [(0.3, 0.2), (0.5, 0.3), (0.8, 1.7)])
def test_jump_moment_first_order_same_start(alpha, k):
    # int_0^k omega_alpha(s) s / k ds = alpha * omega_{alpha+2}(k) / k
    kern = FracKernel(alpha)
    val = jump_moment(kern, 2.0, (2.0, 2.0 + k), 1)
    assert val == pytest.approx(_jump_quad(alpha, 2.0, 2.0, 2.0 + k, 1), rel=1e-12)
    assert val == pytest.approx(alpha * omega(alpha + 2, k) / k, rel=1e-13)


def test_jump_moment_ordering():
    with pytest.raises(OrderingError):
        jump_moment(FracKernel(0.5), 0.6, (0.5, 1.0), 0)


def test_slope_moment_examples():
    kern = FracKernel(0.5)
    val = slope_moment(kern, (0.0, 1.0), (0.0, 1.0), 0)
    assert val == pytest.approx(1 / math.gamma(2.5), rel=1e-14)
    assert val == pytest.approx(0.7522528, abs=1e-7)
    with pytest.raises(OrderingError):
        slope_moment(kern, (0.0, 0.6), (0.5, 1.0), 0)


@settings(max_examples=100, deadline=None)
@given(
    alpha=st.floats(0.02, 0.98),
    s0=st.floats(0.0, 2.0),
    ks=st.floats(1e-3, 1.0),
    gap=st.floats(0.0, 3.0),
    kn=st.floats(1e-3, 1.0),
    q=st.sampled_from([0, 1]),
)
def test_moments_match_quadrature(alpha, s0, ks, gap, kn, q):
    kern = FracKernel(alpha)
    s1 = s0 + ks
    t0 = s1 + gap
    t1 = t0 + kn
    for tj in (s0, s1):
        assert jump_moment(kern, tj, (t0, t1), q) == pytest.approx(_jump_quad(alpha, tj, t0, t1, q), abs=1e-9)
    if gap > 0:
        assert slope_moment(kern, (s0, s1), (t0, t1), q) == pytest.approx(_slope_quad(alpha, s0, s1, t0, t1, q), abs=1e-9)
    assert slope_moment(kern, (t0, t1), (t0, t1), q) == pytest.approx(_slope_quad(alpha, t0, t1, t0, t1, q), abs=1e-9)


@pytest.mark.parametrize("alpha", [0.3, 0.6])
def test_far_slope_moment_matches_quadrature(alpha):
    kern = FracKernel(alpha)
    # far enough for the Gauss branch
    s0, s1, t0, t1 = 0.0, 1e-4, 0.5, 0.7
    assert (t0 - s1) > SLOPE_FAR_RATIO * (s1 - s0)
    for q in (0, 1):
        assert slope_moment(kern, (s0, s1), (t0, t1), q) == pytest.approx(_slope_quad(alpha, s0, s1, t0, t1, q), abs=1e-9)


def test_zero_slope_contributes_nothing():
    kern = FracKernel(0.4)
    nodes = np.array([0.0, 1.0])
    c, d = np.array([1.0]), np.array([0.0])
    # I^alpha of a constant only sees the value, the slope weight multiplies 0
    direct = fractional_integral_moment(kern, nodes, c, d, 1, 0)
    assert direct == pytest.approx(kernel_moment(1.4, 0.0, 0.0, 1.0, 0), rel=1e-14)


# ---------------------------------------------------------------------------
# cancellation guard against a high-precision evaluation


def _mp_omega(mu, t):
    return mp.mpf(0) if t <= 0 else t ** (mu - 1) / mp.gamma(mu)


def _mp_kernel_moment(mu, c, t0, t1, q):
    k = t1 - t0
    d0, d1 = t0 - c, t1 - c
    if q == 0:
        return _mp_omega(mu + 1, d1) - _mp_omega(mu + 1, d0)
    return (k * _mp_omega(mu + 1, d1) - _mp_omega(mu + 2, d1) + _mp_omega(mu + 2, d0)) / k


@pytest.mark.parametrize("ratio", [3.0, 29.0, 31.0, 1e2, 999.0, 1001.0, 1e4, 1e5, 1e6])
@pytest.mark.parametrize("alpha", [0.25, 0.6, 0.9])
def test_moments_stable_for_large_gap_ratios(ratio, alpha):
    kern = FracKernel(alpha)
    s0, s1 = 0.3, 0.3 + 1e-6
    kj = s1 - s0
    t0 = s1 + ratio * kj
    t1 = t0 + kj
    with mp.workdps(60):
        a = mp.mpf(alpha)
        S0, S1, T0, T1 = (mp.mpf(v) for v in (s0, s1, t0, t1))
        for q in (0, 1):
            ref_jump = _mp_kernel_moment(a, S1, T0, T1, q)
            ref_slope = (_mp_kernel_moment(a + 1, S0, T0, T1, q) - _mp_kernel_moment(a + 1, S1, T0, T1, q)) / (S1 - S0)
            got_jump = jump_moment(kern, s1, (t0, t1), q)
            got_slope = slope_moment(kern, (s0, s1), (t0, t1), q)
            assert abs(got_jump - float(ref_jump)) <= 1e-8 * abs(float(ref_jump))
            assert abs(got_slope - float(ref_slope)) <= 1e-8 * abs(float(ref_slope))


def test_step_moments_agree_with_single_calls():
    kern = FracKernel(0.45)
    nodes = (np.arange(8) / 7) ** 2.5
    n = 6
    J, W = step_moments(kern, nodes, n)
    interval = (nodes[n - 1], nodes[n])
    for q in (0, 1):
        for j in range(n):
            assert J[q, j] == pytest.approx(jump_moment(kern, nodes[j], interval, q), rel=1e-14)
        for j in range(1, n + 1):
            assert W[q, j - 1] == pytest.approx(slope_moment(kern, (nodes[j - 1], nodes[j]), interval, q), rel=1e-13)


def test_kernel_moment_q_validation():
    with pytest.raises(InvalidParameterError):
        kernel_moment(0.5, 0.0, 0.0, 1.0, 2)


# ---------------------------------------------------------------------------
# fractional integral oracles


def test_fractional_integral_examples():
    kern = FracKernel(0.5)
    nodes = np.array([0.0, 0.4, 1.0])
    one = fractional_integral_oracle(kern, nodes, [1.0, 1.0], [0.0, 0.0], 0.7)
    assert one == pytest.approx(0.7**0.5 / math.gamma(1.5), rel=1e-14)
    # phi(s) = s on both intervals
    lin = fractional_integral_oracle(kern, nodes, [0.0, 0.4], [0.4, 0.6], 1.0)
    assert lin == pytest.approx(0.7522528, abs=1e-7)
    assert lin == pytest.approx(1 / math.gamma(2.5), rel=1e-14)
    assert fractional_integral_oracle(kern, nodes, [0.0, 0.0], [0.0, 0.0], 0.9) == 0.0


@settings(max_examples=30, deadline=None)
@given(alpha=st.floats(0.05, 0.95), seed=st.integers(0, 10**6), t=st.floats(0.01, 1.0))
def test_fractional_integral_oracle_matches_quadrature(alpha, seed, t):
    rng = np.random.default_rng(seed)
    nodes = np.linspace(0, 1, 5) ** 2
    c, d = rng.normal(size=4), rng.normal(size=4)

    def phi(s):
        j = min(max(int(np.searchsorted(nodes, s, side="left")), 1), 4)
        return c[j - 1] + d[j - 1] * (s - nodes[j - 1]) / (nodes[j] - nodes[j - 1])

    kern = FracKernel(alpha)
    ref = fractional_integral_quad(alpha, phi, t, breakpoints=nodes[1:-1])
    assert fractional_integral_oracle(kern, nodes, c, d, t) == pytest.approx(ref, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(alpha=st.floats(0.05, 0.95), gamma=st.floats(1.0, 4.0), N=st.integers(1, 12), seed=st.integers(0, 10**6))
def test_fractional_integral_positivity(alpha, gamma, N, seed):
    rng = np.random.default_rng(seed)
    nodes = (np.arange(N + 1) / N) ** gamma
    c, d = rng.normal(size=N), rng.normal(size=N)
    kern = FracKernel(alpha)
    form = sum(
        c[n - 1] * fractional_integral_moment(kern, nodes, c, d, n, 0)
        + d[n - 1] * fractional_integral_moment(kern, nodes, c, d, n, 1)
        for n in range(1, N + 1)
    )
    assert form >= -1e-12


@pytest.mark.parametrize("alpha", [0.3, 0.7])
@pytest.mark.parametrize("beta", [1.0, 1.5, 2.0, 3.0])
def test_identity_fractional_integral_of_derivative(alpha, beta):
    # I^(1-alpha) B^alpha t^beta = t^beta, both operators by quadrature
    b_alpha = lambda s: rl_derivative_quad(alpha, 0.0, lambda r: beta * r ** (beta - 1.0), s) if s > 0 else 0.0
    for t in (0.2, 0.65, 1.0):
        val = fractional_integral_quad(1.0 - alpha, b_alpha, t)
        assert val == pytest.approx(t**beta, abs=1e-8)


def test_rl_derivative_power_rule():
    alpha, p = 0.4, 0.4
    t = 0.5
    val = rl_derivative_quad(alpha, 0.0, lambda s: p * s ** (p - 1.0), t, singular_exponent=p - 1.0)
    assert val == pytest.approx(math.gamma(p + 1) / math.gamma(p + alpha) * t ** (p + alpha - 1), rel=1e-10)


def test_adjoint_pairing():
    alpha, T = 0.55, 1.0
    phi = lambda s: 1.0 + s
    psi = lambda s: math.cos(3 * s)
    lhs, _ = integrate.quad(lambda t: fractional_integral_quad(alpha, phi, t) * psi(t), 0, T, epsabs=1e-12)
    rhs, _ = integrate.quad(lambda t: phi(t) * adjoint_integral_quad(alpha, psi, t, T), 0, T, epsabs=1e-12)
    assert lhs == pytest.approx(rhs, abs=1e-9)
