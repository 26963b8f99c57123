"""Manufactured test problems with sources separable in space and time."""

import math
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from .errors import InvalidParameterError
from .fractional_kernel import kernel_moment


@dataclass(frozen=True)
class SourceTerm:
    """``coef * t**(beta - 1) * g(x, y)``."""

    coef: float
    beta: float
    g: Callable

    def __post_init__(self):
        if not self.beta > 0:
            raise InvalidParameterError(f"temporal exponent beta must be positive, got {self.beta}")


@dataclass(frozen=True)
class SeparableSource:
    terms: Tuple[SourceTerm, ...] = ()

    def __call__(self, x, y, t):
        x = np.asarray(x, dtype=float)
        out = np.zeros(np.broadcast(x, np.asarray(y)).shape)
        for term in self.terms:
            out = out + term.coef * t ** (term.beta - 1.0) * term.g(x, y)
        return out


def rhs_time_moments(beta, interval, q):
    """``int_{I_n} t**(beta - 1) psi_q(t) dt``, exact also for intervals starting at 0."""
    if not beta > 0:
        raise InvalidParameterError(f"beta must be positive, got {beta}")
    t0, t1 = interval
    # t^(beta-1) = Gamma(beta) * omega_beta(t - 0)
    return math.gamma(beta) * kernel_moment(beta, 0.0, t0, t1, q)


def sin_sin(x, y):
    return np.sin(np.pi * x) * np.sin(np.pi * y)


SIN_SIN_EIGENVALUE = 2.0 * np.pi**2


@dataclass(frozen=True)
class ManufacturedProblem:
    """``u(x, t) = sum_m c_m t**p_m * shape(x)`` with ``-Δ shape = eigenvalue * shape``.

    The source is derived exactly from the power rule
    ``B^alpha t**p = Gamma(p + 1) / Gamma(p + alpha) * t**(p + alpha - 1)``.
    """

    alpha: float
    time_powers: Tuple[Tuple[float, float], ...]
    shape: Callable = sin_sin
    eigenvalue: float = SIN_SIN_EIGENVALUE
    T: float = 1.0
    name: str = "manufactured"

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise InvalidParameterError(f"alpha must lie in (0, 1), got {self.alpha}")
        if any(p < 0 for _, p in self.time_powers):
            raise InvalidParameterError("time exponents must be non-negative")

    def time_factor(self, t):
        t = np.asarray(t, dtype=float)
        return sum((c * t**p for c, p in self.time_powers), np.zeros_like(t))

    def exact(self, x, y, t):
        return self.time_factor(t) * self.shape(x, y)

    def u0(self, x, y):
        return self.exact(x, y, 0.0)

    def neg_laplacian_u0(self, x, y):
        return self.eigenvalue * self.u0(x, y)

    @property
    def source(self):
        terms = []
        for c, p in self.time_powers:
            if p > 0:
                terms.append(SourceTerm(c * p, p, self.shape))
            coef = self.eigenvalue * c * math.gamma(p + 1) / math.gamma(p + self.alpha)
            terms.append(SourceTerm(coef, p + self.alpha, self.shape))
        return SeparableSource(tuple(terms))


def paper_problem(alpha, T=1.0):
    """``u = t**alpha sin(pi x) sin(pi y)`` on the unit square, ``u0 = 0``."""
    return ManufacturedProblem(alpha, ((1.0, alpha),), T=T, name="power")


def smooth_problem(alpha, T=1.0):
    """``u = (t**2 + t**alpha) sin(pi x) sin(pi y)``."""
    return ManufacturedProblem(alpha, ((1.0, 2.0), (1.0, alpha)), T=T, name="power-plus-quadratic")


def zero_problem(alpha, T=1.0):
    """``f = 0``, ``u0 = 0``; the discrete solution must vanish identically."""
    return ManufacturedProblem(alpha, (), T=T, name="zero")
