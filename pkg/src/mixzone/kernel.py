"""Closed-form kernels of the averaged-velocity interface equation.

The driving kernel is the double transverse average, over a strip of
half-width ``eps``, of the Poisson-type kernel

    dx / (dx^2 + (delta_f + (lam - lam'))^2),

normalized by ``1 / (4 pi eps^2)``.  Both averaging integrals can be done
exactly, which collapses the kernel to a second central difference of the
antiderivative ``u * arctan(u/dx) - (dx/2) log(dx^2 + u^2)`` evaluated at
``delta_f`` and ``delta_f +- 2 eps``.  This module provides that closed
form, a Gauss-Legendre tensor oracle for it, the frozen-slope kernel
``K_A``, the transport coefficient ``a(x)`` (a principal value of the
kernel over the separation), and the differentiated kernels ``ktilde`` /
``ktilde_c`` together with their L1 statistics.

Conventions adopted here (asserted by the test suite):

* the ``1/(4 pi eps^2)`` normalization, so the ``eps -> 0`` limit is the
  Muskat kernel ``(1/pi) dx / (dx^2 + delta_f^2)``;
* ``kernel_closed_form`` at ``dx == 0`` returns 0 (the kernel is odd and
  every consumer multiplies it by a difference vanishing there), which
  sidesteps the arctan branch at ``dx = 0``;
* principal values use symmetric node placement around 0 and a hard
  truncation at ``trunc_radius``, with the truncation error reported.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad

from .grid import GridFunction1D

__all__ = [
    "KernelParams",
    "KernelPoint",
    "kernel_closed_form",
    "kernel_values",
    "kernel_quadrature_oracle",
    "kernel_frozen",
    "muskat_limit",
    "coefficient_a",
    "CoefficientValue",
    "ktilde",
    "ktilde_c",
    "ktilde_slope_derivative",
    "ktilde_c_l1",
    "ktilde_slope_l1",
]


@dataclass(frozen=True)
class KernelParams:
    """Kernel evaluation parameters.

    eps is the mixing half-width, kappa the regularization shift added to
    it on the regularized path, trunc_radius the principal-value window.
    """

    eps: float
    trunc_radius: float
    kappa: float = 0.0

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.kappa < 0:
            raise ValueError("kappa must be nonnegative")
        if self.trunc_radius < 10.0 * self.eps:
            raise ValueError("trunc_radius must be at least 10*eps")

    @property
    def width(self) -> float:
        """Effective kernel half-width eps + kappa."""
        return self.eps + self.kappa


@dataclass(frozen=True)
class KernelPoint:
    """One kernel evaluation point: separation, height difference, slope."""

    dx: float
    delta_f: float
    slope_a: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.delta_f):
            raise ValueError("delta_f must be finite")


def _antiderivative(u, dx):
    """u * arctan(u/dx) - (dx/2) * log(dx^2 + u^2); valid for dx != 0."""
    return u * np.arctan(u / dx) - 0.5 * dx * np.log(dx * dx + u * u)


def _maybe_scalar(out: np.ndarray):
    return out if out.ndim else float(out)


def kernel_values(dx, delta_f, eps: float):
    """Vectorized closed-form kernel; dx == 0 entries return 0."""
    dx = np.asarray(dx, dtype=float)
    delta_f = np.asarray(delta_f, dtype=float)
    safe = np.where(dx == 0.0, 1.0, dx)
    bracket = (
        _antiderivative(delta_f + 2.0 * eps, safe)
        - 2.0 * _antiderivative(delta_f, safe)
        + _antiderivative(delta_f - 2.0 * eps, safe)
    )
    out = bracket / (4.0 * np.pi * eps * eps)
    return _maybe_scalar(np.where(dx == 0.0, 0.0, out))


def kernel_closed_form(p: KernelPoint, eps: float) -> float:
    """Exactly integrated double-average kernel at one point."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    return float(kernel_values(p.dx, p.delta_f, eps))


def kernel_quadrature_oracle(p: KernelPoint, eps: float, nodes: int = 64) -> float:
    """Tensor Gauss-Legendre average of the unintegrated kernel.

    Independent oracle for :func:`kernel_closed_form`: integrates
    ``dx / (dx^2 + (delta_f + (lam - lam'))^2)`` over the square
    ``[-eps, eps]^2`` and applies the ``1/(4 pi eps^2)`` normalization.
    """
    if nodes < 8:
        raise ValueError("nodes must be at least 8")
    if not eps > 0:
        raise ValueError("eps must be positive")
    xg, wg = leggauss(nodes)
    lam = eps * xg
    wl = eps * wg
    l1, l2 = np.meshgrid(lam, lam, indexing="ij")
    w2 = np.outer(wl, wl)
    integrand = p.dx / (p.dx**2 + (p.delta_f + (l1 - l2)) ** 2)
    return float(np.sum(w2 * integrand) / (4.0 * np.pi * eps * eps))


def kernel_frozen(slope_a: float, y, eps: float):
    """Frozen-slope kernel K_A(y): the closed form at ``delta_f = A*y``.

    Odd in y, with a jump of height ``1/eps`` across ``y = 0``.
    """
    y = np.asarray(y, dtype=float)
    return kernel_values(y, slope_a * y, eps)


def muskat_limit(dx, delta_f):
    """The eps -> 0 limit ``(1/pi) dx / (dx^2 + delta_f^2)``."""
    dx = np.asarray(dx, dtype=float)
    delta_f = np.asarray(delta_f, dtype=float)
    return _maybe_scalar(np.asarray(dx / (np.pi * (dx * dx + delta_f * delta_f))))


@dataclass(frozen=True)
class CoefficientValue:
    """P.V. coefficient value with its reported truncation estimate."""

    value: float
    truncation_estimate: float


def coefficient_a(
    f: GridFunction1D,
    eps: float,
    index: int,
    trunc_radius: float | None = None,
) -> CoefficientValue:
    """Transport coefficient ``a(x_j) = -P.V. int K_eps(x_j, y) dy``.

    Symmetric grid-aligned nodes around the singularity, hard truncation at
    ``trunc_radius``.  The truncation estimate is the change produced by
    halving the window, an O(1/R) self-estimate.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    n, h = f.n, f.h
    if trunc_radius is None:
        trunc_radius = f.length / 2.0 - h
    m_max = min(int(np.floor(trunc_radius / h)), n // 2 - 1)
    if m_max < 2:
        raise ValueError("trunc_radius too small for this grid")
    offsets = np.concatenate([np.arange(-m_max, 0), np.arange(1, m_max + 1)])
    vals = f.values
    df = vals[index] - vals[(index - offsets) % n]
    kern = kernel_values(offsets * h, df, eps)
    weights = np.ones(offsets.size)
    weights[0] = weights[-1] = 0.5
    full = -float(np.sum(kern * weights) * h)

    half = offsets[np.abs(offsets) <= m_max // 2]
    dfh = vals[index] - vals[(index - half) % n]
    kh = kernel_values(half * h, dfh, eps)
    wh = np.ones(half.size)
    wh[0] = wh[-1] = 0.5
    halved = -float(np.sum(kh * wh) * h)
    return CoefficientValue(value=full, truncation_estimate=abs(full - halved))


# ---------------------------------------------------------------------------
# Differentiated kernels: ktilde = dK_A/dy away from the jump, and its
# slow-part subtraction ktilde_c = ktilde(A) - ktilde(0).
# ---------------------------------------------------------------------------


def ktilde(slope_a: float, y, t: float):
    """Derivative kernel K~(A; y) at mixing half-width t.

    Equals ``d/dy K_A(y)`` for ``y != 0`` (checked against finite
    differences of :func:`kernel_frozen` in the tests).
    """
    if not t > 0:
        raise ValueError("t must be positive")
    y = np.asarray(y, dtype=float)
    a = slope_a
    arct = a * (
        -2.0 * np.arctan(a) + np.arctan(a - 2.0 * t / y) + np.arctan(a + 2.0 * t / y)
    )
    logs = (
        np.log(y * y * (1.0 + a * a))
        - 0.5 * np.log(y * y + (a * y - 2.0 * t) ** 2)
        - 0.5 * np.log(y * y + (a * y + 2.0 * t) ** 2)
    )
    return _maybe_scalar(np.asarray((arct + logs) / (4.0 * np.pi * t * t)))


def ktilde_c(slope_a: float, y, t: float):
    """Centered derivative kernel ``K~(A; y) - K~(0; y)``.

    Integrable in y (the log(y^2) singularity cancels); identically zero
    for A = 0.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    y = np.asarray(y, dtype=float)
    a = slope_a
    arct = a * (
        -2.0 * np.arctan(a) + np.arctan(a - 2.0 * t / y) + np.arctan(a + 2.0 * t / y)
    )
    logs = (
        np.log(1.0 + a * a)
        + np.log(y * y + 4.0 * t * t)
        - 0.5 * np.log(y * y + (a * y - 2.0 * t) ** 2)
        - 0.5 * np.log(y * y + (a * y + 2.0 * t) ** 2)
    )
    return _maybe_scalar(np.asarray((arct + logs) / (4.0 * np.pi * t * t)))


def ktilde_slope_derivative(slope_a: float, y, t: float):
    """Partial derivative of K~ with respect to the frozen slope A."""
    if not t > 0:
        raise ValueError("t must be positive")
    y = np.asarray(y, dtype=float)
    a = slope_a
    yp = y / t
    arct = -2.0 * np.arctan(a) + np.arctan(a - 2.0 / yp) + np.arctan(a + 2.0 / yp)
    rational = (
        16.0
        * a
        * yp**2
        / (16.0 - 8.0 * (a * a - 1.0) * yp**2 + (1.0 + a * a) ** 2 * yp**4)
    )
    return _maybe_scalar(np.asarray((arct + rational) / (4.0 * np.pi * t * t)))


def _scaled_l1(scaled_integrand, quad_limit: int = 400) -> float:
    """Integrate |g(y')| over the line for an even scaled integrand g."""
    val, _ = quad(
        lambda yp: abs(scaled_integrand(yp)),
        0.0,
        np.inf,
        limit=quad_limit,
    )
    return 2.0 * val


def ktilde_c_l1(slope_a: float, t: float) -> float:
    """``int t * |ktilde_c(A; y)| dy``; bounded by ``2 A^2 / (1 + A^2)``.

    The integral is scale invariant, so it is computed in the scaled
    variable ``y' = y/t`` where the adaptive quadrature needs no tail
    truncation.
    """
    a = slope_a

    def scaled(yp):
        arct = a * (
            -2.0 * np.arctan(a)
            + np.arctan(a - 2.0 / yp)
            + np.arctan(a + 2.0 / yp)
        )
        logs = (
            np.log(1.0 + a * a)
            + np.log(yp * yp + 4.0)
            - 0.5 * np.log(yp * yp + (a * yp - 2.0) ** 2)
            - 0.5 * np.log(yp * yp + (a * yp + 2.0) ** 2)
        )
        return arct + logs

    return _scaled_l1(scaled) / (4.0 * np.pi)


def ktilde_slope_l1(slope_a: float, t: float) -> float:
    """``int t * |d/dA ktilde(A; y)| dy``; strictly below 2 for every A."""
    a = slope_a

    def scaled(yp):
        arct = -2.0 * np.arctan(a) + np.arctan(a - 2.0 / yp) + np.arctan(a + 2.0 / yp)
        rational = (
            16.0
            * a
            * yp**2
            / (16.0 - 8.0 * (a * a - 1.0) * yp**2 + (1.0 + a * a) ** 2 * yp**4)
        )
        return arct + rational

    return _scaled_l1(scaled) / (4.0 * np.pi)


def slope_factor(slope_a: float) -> float:
    """sigma = 1 / (1 + A^2), the flattening factor of the frozen slope."""
    return 1.0 / (1.0 + slope_a * slope_a)
