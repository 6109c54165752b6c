"""Candidate subsolution fields on the mixing strip and their hull checks.

From an interface height f and strip half-width eps this module rebuilds
the relaxed state (rho, u, m) at points ``x(s, lam) = (s, f(s) + lam)``:
the density is the linear profile ``rho = lam/eps``, the velocity is the
strip-averaged Poisson integral, and the flux m carries the normal defect
``gamma`` obtained by integrating the modified-velocity imbalance across
the strip.  The four lamination-hull inequalities are evaluated as signed
slacks, with the velocity bound M chosen from the sampled speeds.

Quadrature layout (shared with :mod:`mixzone.evolution` so the averaged
velocity identity holds at quadrature accuracy): PV trapezoid over
grid-aligned horizontal offsets with the singular cells integrated on
geometric Gauss-Legendre panels, transverse averages by composite
Gauss-Legendre for the regular offsets and in closed form inside the
singular cells.  The modified velocity and the full velocity share their
moment integrals, which makes the tangential identity
``u_c . dz_perp = u . dz_perp`` exact by construction.

For a run of the regularized flow the strip half-width handed to these
routines is the kernel half-width ``eps(t) + kappa`` of the evolution
actually computed, so all consistency identities refer to one kernel.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .evolution import (
    DEFAULT_TRUNC_RADIUS,
    Trajectory,
    _near_nodes,
    _offset_structure,
    _trapezoid_weights,
    kernel_quadrature,
)
from .grid import GridFunction1D, spectral_derivative

__all__ = [
    "MixCoords",
    "SubsolutionSample",
    "HullMargin",
    "velocity_field",
    "velocity_modified",
    "gamma_sharp",
    "build_fields",
    "hull_check",
    "choose_M",
    "zero_mean_residual",
    "subsolution_report",
    "worker_count",
    "SLACK_VIOLATION_BAND",
]

EDGE_CLAMP = 1e-6
SLACK_VIOLATION_BAND = 1e-5
_GL8 = leggauss(8)
_LAMBDA_PRIME_PANELS = 12
_LAMBDA_PANELS = 16


def worker_count() -> int:
    """Worker cap from the MIX_THREADS environment variable (default 1)."""
    try:
        return max(1, int(os.environ.get("MIX_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class MixCoords:
    """Strip coordinates: horizontal position s, transverse offset lam."""

    s: float
    lam: float


@dataclass(frozen=True)
class SubsolutionSample:
    """Relaxed state (rho, u, m) and its normal defect gamma at one point."""

    rho: float
    u: np.ndarray
    m: np.ndarray
    gamma: float


@dataclass(frozen=True)
class HullMargin:
    """Signed slacks of the four hull inequalities; positive = strict."""

    slack1: float
    slack2: float
    slack3: float
    slack4: float
    m_bound: float

    @property
    def min_slack(self) -> float:
        return min(self.slack1, self.slack2, self.slack3, self.slack4)

    @property
    def strict(self) -> bool:
        return self.min_slack > 0.0


def _composite_gl(a: float, b: float, panels: int):
    xg, wg = _GL8
    edges = np.linspace(a, b, panels + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mids[:, None] + half[:, None] * xg[None, :]).ravel()
    weights = (half[:, None] * wg[None, :]).ravel()
    return nodes, weights


class _SiteVelocity:
    """Velocity quadratures at one grid site, cached over offsets.

    Evaluates u1, u2 and the modified vertical velocity u_c2 at arbitrary
    transverse offsets lam, plus the strip average and the partial
    integrals gamma needs.
    """

    def __init__(self, f: GridFunction1D, width: float, s_index: int,
                 trunc_radius: float | None = None, prime_panels: int = _LAMBDA_PRIME_PANELS):
        if not width > 0:
            raise ValueError("strip half-width must be positive")
        self.f = f
        self.width = width
        self.j = int(s_index) % f.n
        n, h, length = f.n, f.h, f.length
        if trunc_radius is None:
            trunc_radius = length / 2.0 - h
        self.trunc_radius = trunc_radius
        vals = f.values
        g = spectral_derivative(vals, length)
        self.slope = float(g[self.j])
        offs, near = _offset_structure(n, h, trunc_radius)
        self.offsets = offs
        self.wts = _trapezoid_weights(offs) * h
        idx = (self.j - offs) % n
        self.dx = offs * h
        self.df = vals[self.j] - vals[idx]
        self.g_far = g[idx]
        self.dg = self.slope - self.g_far
        # transverse-average nodes for the regular offsets
        self.lp_nodes, self.lp_wts = _composite_gl(-width, width, prime_panels)
        # singular-cell nodes (both signs) and site Taylor data
        ypos, wpos = _near_nodes(near * h)
        self.y_near = np.concatenate([-ypos[::-1], ypos])
        self.w_near = np.concatenate([wpos[::-1], wpos])
        self.g_derivs = [
            float(spectral_derivative(g, length, k)[self.j]) for k in range(6)
        ]

    # -- elementary pieces -------------------------------------------------

    def _inner_far(self, lams: np.ndarray) -> np.ndarray:
        """GL transverse average of the Poisson kernel, (n_offsets, n_lam)."""
        out = np.empty((self.offsets.size, lams.size))
        for q, lam in enumerate(lams):
            den = self.dx[:, None] ** 2 + (self.df[:, None] + lam - self.lp_nodes[None, :]) ** 2
            out[:, q] = (self.dx[:, None] / den * self.lp_wts[None, :]).sum(axis=1)
        return out / (2.0 * self.width)

    def _inner_near(self, lams: np.ndarray) -> np.ndarray:
        """Closed-form transverse average inside the singular cell."""
        w = self.width
        y = self.y_near[:, None]
        d = self.slope * y + lams[None, :]
        return (np.arctan((d + w) / y) - np.arctan((d - w) / y)) / (2.0 * w)

    def _near_moments(self, lams: np.ndarray) -> np.ndarray:
        """J_k(lam) = int over the near cell of y^k inner(y, lam), k = 0..5."""
        inner = self._inner_near(lams)
        powers = self.y_near[:, None] ** np.arange(6)[None, :]
        return np.einsum("yk,yq,y->kq", powers, inner, self.w_near)

    # -- assembled velocities ----------------------------------------------

    def velocities(self, lams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(u1, u2, u_c2) at the requested transverse offsets."""
        lams = np.atleast_1d(np.asarray(lams, dtype=float))
        inner = self._inner_far(lams)
        far1 = (self.wts[:, None] * inner).sum(axis=0)
        far2 = (self.wts[:, None] * self.g_far[:, None] * inner).sum(axis=0)
        farc = (self.wts[:, None] * self.dg[:, None] * inner).sum(axis=0)
        jk = self._near_moments(lams)
        g0, g1, g2, g3, g4, g5 = self.g_derivs
        # g(x - y) Taylor'd through y^5; Delta g uses the same coefficients
        near2 = (
            g0 * jk[0] - g1 * jk[1] + g2 / 2.0 * jk[2]
            - g3 / 6.0 * jk[3] + g4 / 24.0 * jk[4] - g5 / 120.0 * jk[5]
        )
        nearc = (
            g1 * jk[1] - g2 / 2.0 * jk[2] + g3 / 6.0 * jk[3]
            - g4 / 24.0 * jk[4] + g5 / 120.0 * jk[5]
        )
        u1 = (far1 + jk[0]) / np.pi
        u2 = (far2 + near2) / np.pi
        uc2 = -(farc + nearc) / np.pi
        return u1, u2, uc2

    def strip_average(self, panels: int = _LAMBDA_PANELS) -> float:
        """Transverse average of u_c2: the averaged velocity at this site."""
        nodes, wts = _composite_gl(-self.width, self.width, panels)
        _, _, uc2 = self.velocities(nodes)
        return float((uc2 * wts).sum() / (2.0 * self.width))

    def zero_mean_residual(self, dtz: float, panels: int = _LAMBDA_PANELS) -> float:
        """``int (u_c - dtz).dz_perp dlam`` over the strip (should vanish)."""
        nodes, wts = _composite_gl(-self.width, self.width, panels)
        _, _, uc2 = self.velocities(nodes)
        return float(((uc2 - dtz) * wts).sum())

    def gamma(self, lam: float, c: float, dtz: float) -> float:
        """Normal defect gamma at offset lam, half-strip integral form.

        For lam <= 0 integrates the imbalance up from the lower edge; for
        lam > 0 down from the upper edge (the full-strip integral
        vanishes), which keeps the ``1/(1 - rho^2)`` factor harmless.
        """
        w = self.width
        if abs(lam) >= w:
            raise ValueError("gamma is defined in the open strip |lam| < width")
        lam = float(np.clip(lam, -(1.0 - EDGE_CLAMP) * w, (1.0 - EDGE_CLAMP) * w))
        rho = lam / w
        if lam <= 0.0:
            a, b, sign = -w, lam, 1.0
        else:
            a, b, sign = lam, w, -1.0
        panels = max(2, int(np.ceil(_LAMBDA_PANELS * (b - a) / (2.0 * w))))
        nodes, wts = _composite_gl(a, b, panels)
        _, _, uc2 = self.velocities(nodes)
        integral = sign * float(((uc2 - dtz) * wts).sum())
        return -(1.0 - c) / 2.0 + integral / ((1.0 - rho * rho) * w)


def _site_index(f: GridFunction1D, s: float) -> int:
    j = (s + 0.5 * f.length) / f.h
    jr = int(round(j))
    if abs(j - jr) > 1e-9:
        raise ValueError("s must lie on a grid node (PV nodes are grid aligned)")
    return jr % f.n


def velocity_field(
    f: GridFunction1D,
    eps: float,
    point: MixCoords,
    trunc_radius: float | None = None,
    prime_panels: int = _LAMBDA_PRIME_PANELS,
) -> np.ndarray:
    """Strip-averaged velocity u at ``x(s, lam)``.

    Finite for all points of the closed strip; the second component
    vanishes identically for flat data.
    """
    if abs(point.lam) > eps:
        raise ValueError("|lam| must not exceed the strip half-width")
    site = _SiteVelocity(f, eps, _site_index(f, point.s), trunc_radius, prime_panels)
    u1, u2, _ = site.velocities(point.lam)
    return np.array([u1[0], u2[0]])


def velocity_modified(
    f: GridFunction1D,
    eps: float,
    point: MixCoords,
    trunc_radius: float | None = None,
    prime_panels: int = _LAMBDA_PRIME_PANELS,
) -> np.ndarray:
    """Modified velocity u_c (velocity minus a tangential correction).

    In graph form the correction cancels the horizontal component, so
    ``u_c = (0, u_c2)`` with ``u_c.dz_perp = u.dz_perp`` exactly.
    """
    if abs(point.lam) > eps:
        raise ValueError("|lam| must not exceed the strip half-width")
    site = _SiteVelocity(f, eps, _site_index(f, point.s), trunc_radius, prime_panels)
    _, _, uc2 = site.velocities(point.lam)
    return np.array([0.0, uc2[0]])


def _default_dtz(f: GridFunction1D, width: float, trunc_radius: float | None) -> np.ndarray:
    """Instantaneous interface velocity: the evolution right-hand side."""
    r = trunc_radius if trunc_radius is not None else f.length / 2.0 - f.h
    g = spectral_derivative(f.values, f.length)
    return -kernel_quadrature(f.values, g, f.length, width, r)


def gamma_sharp(
    f: GridFunction1D,
    eps: float,
    c: float,
    point: MixCoords,
    dtz: float | None = None,
    trunc_radius: float | None = None,
) -> float:
    """Normal defect gamma at one strip point.

    ``dtz`` is the vertical interface speed at s; by default it is the
    instantaneous evolution right-hand side there.  Points with
    ``|lam| >= eps`` are rejected; the admissible range is clamped a
    relative 1e-6 inside the strip.
    """
    if abs(point.lam) >= eps:
        raise ValueError("gamma is defined in the open strip |lam| < eps")
    j = _site_index(f, point.s)
    if dtz is None:
        dtz = float(_default_dtz(f, eps, trunc_radius)[j])
    site = _SiteVelocity(f, eps, j, trunc_radius)
    return site.gamma(point.lam, c, dtz)


def build_fields(
    f: GridFunction1D,
    eps: float,
    c: float,
    lattice,
    trunc_radius: float | None = None,
) -> list[SubsolutionSample]:
    """Assemble (rho, u, m, gamma) samples over an (s, lam) lattice.

    ``rho = lam/eps``, u is the strip-averaged velocity and
    ``m = rho u - (gamma + 1/2)(1 - rho^2) e2``; at ``lam = +-eps`` the
    density is exactly +-1 and m collapses to ``rho u``.
    """
    dtz_all = _default_dtz(f, eps, trunc_radius)
    sites: dict[int, _SiteVelocity] = {}
    samples = []
    for point in lattice:
        if abs(point.lam) > eps:
            raise ValueError("|lam| must not exceed the strip half-width")
        j = _site_index(f, point.s)
        if j not in sites:
            sites[j] = _SiteVelocity(f, eps, j, trunc_radius)
        site = sites[j]
        u1, u2, _ = site.velocities(point.lam)
        u = np.array([u1[0], u2[0]])
        rho = point.lam / eps
        lam_g = float(np.clip(point.lam, -(1 - EDGE_CLAMP) * eps, (1 - EDGE_CLAMP) * eps))
        gamma = site.gamma(lam_g, c, float(dtz_all[j]))
        m = rho * u - (gamma + 0.5) * (1.0 - rho * rho) * np.array([0.0, 1.0])
        samples.append(SubsolutionSample(rho=float(rho), u=u, m=m, gamma=gamma))
    return samples


def hull_check(sample: SubsolutionSample, m_bound: float) -> HullMargin:
    """Signed slacks of the four relaxation inequalities at one sample."""
    if not m_bound > 1.0:
        raise ValueError("the velocity bound M must exceed 1")
    rho, u, m = sample.rho, sample.u, sample.m
    e2 = np.array([0.0, 1.0])
    one = 1.0 - rho * rho
    s1 = 0.5 * one - float(np.linalg.norm(m - rho * u + 0.5 * one * e2))
    s2 = m_bound**2 - one - float(np.sum((2.0 * u + rho * e2) ** 2))
    s3 = 0.5 * m_bound * (1.0 - rho) - float(
        np.linalg.norm(m - u - 0.5 * (1.0 - rho) * e2)
    )
    s4 = 0.5 * m_bound * (1.0 + rho) - float(
        np.linalg.norm(m + u + 0.5 * (1.0 + rho) * e2)
    )
    return HullMargin(slack1=s1, slack2=s2, slack3=s3, slack4=s4, m_bound=m_bound)


def choose_M(u_samples) -> float:
    """Velocity bound ``8 (max|u| + 1)`` with a small safety margin."""
    u = np.asarray(u_samples, dtype=float)
    if u.size == 0:
        raise ValueError("u_samples must be nonempty")
    speeds = np.linalg.norm(u.reshape(-1, 2), axis=1) if u.ndim > 1 else np.abs(u)
    return 8.0 * (float(speeds.max()) + 1.0) * (1.0 + 1e-6)


def zero_mean_residual(
    f: GridFunction1D,
    eps: float,
    s: float,
    dtz: float | None = None,
    trunc_radius: float | None = None,
) -> float:
    """Residual of ``int (u_c - dtz).dz_perp dlam = 0`` at one site."""
    j = _site_index(f, s)
    if dtz is None:
        dtz = float(_default_dtz(f, eps, trunc_radius)[j])
    site = _SiteVelocity(f, eps, j, trunc_radius)
    return site.zero_mean_residual(dtz)


def _lambda_fractions(n_lambda: int) -> np.ndarray:
    fr = np.linspace(-1.0, 1.0, n_lambda)
    return fr * (1.0 - EDGE_CLAMP)


def subsolution_report(
    trajectory: Trajectory,
    s_indices=None,
    n_lambda: int = 9,
    trunc_radius: float = DEFAULT_TRUNC_RADIUS,
) -> list[dict]:
    """Per-snapshot record of max|gamma|, hull slacks, M and the identity.

    Sites default to every eighth grid node.  Each row flags whether the
    subsolution conditions hold; the first failing time (|gamma| >= 1/2 or
    a slack below the violation band) is marked on the row.
    """
    rows = []
    for state in trajectory.snapshots:
        f = state.f
        width = state.width
        if not width > 0:
            continue
        if s_indices is None:
            idxs = list(range(0, f.n, max(1, f.n // 32)))
        else:
            idxs = list(s_indices)
        dtz_all = -kernel_quadrature(
            f.values,
            spectral_derivative(f.values, f.length),
            f.length,
            width,
            trunc_radius,
        )
        fractions = _lambda_fractions(n_lambda)
        x = f.x

        def one_site(j: int):
            site = _SiteVelocity(f, width, j, trunc_radius)
            dtz = float(dtz_all[j])
            out = []
            resid = site.zero_mean_residual(dtz)
            for fr in fractions:
                lam = fr * width
                u1, u2, _ = site.velocities(lam)
                u = np.array([u1[0], u2[0]])
                gamma = site.gamma(lam, state.c, dtz)
                rho = lam / width
                m = rho * u - (gamma + 0.5) * (1.0 - rho * rho) * np.array([0.0, 1.0])
                out.append((SubsolutionSample(rho, u, m, gamma), resid))
            return out

        workers = worker_count()
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                per_site = list(pool.map(one_site, idxs))
        else:
            per_site = [one_site(j) for j in idxs]

        samples = [s for chunk in per_site for (s, _) in chunk]
        resids = [abs(r) for chunk in per_site for (_, r) in chunk]
        m_bound = choose_M(np.array([s.u for s in samples]))
        slacks = [hull_check(s, m_bound).min_slack for s in samples]
        max_gamma = max(abs(s.gamma) for s in samples)
        min_slack = float(min(slacks))
        ok = max_gamma < 0.5 and min_slack >= -SLACK_VIOLATION_BAND
        rows.append(
            {
                "t": state.t,
                "max_gamma": float(max_gamma),
                "min_slack": min_slack,
                "m_bound": float(m_bound),
                "zero_mean_residual": float(max(resids)),
                "ok": bool(ok),
                "s_sites": [float(x[j]) for j in idxs],
            }
        )
    return rows
