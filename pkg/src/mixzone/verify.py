"""Self-contained verification suites behind the ``verify`` subcommand.

Each suite re-runs a fast subset of the module invariants and returns
machine-readable check records; the CLI serializes them as JSON and turns
any failure into a nonzero exit code.  The heavyweight convergence
studies live in the acceptance tests, not here.
"""

from __future__ import annotations

import numpy as np

from . import evolution, flatlab, kernel, spectral, subsolution
from .grid import GridFunction1D

__all__ = ["available_suites", "run_suite"]


def _check(name: str, passed: bool, measured) -> dict:
    return {"name": name, "passed": bool(passed), "measured": measured}


def _kernel_suite() -> list[dict]:
    rng = np.random.default_rng(7)
    checks = []

    worst = 0.0
    for _ in range(20):
        eps = rng.uniform(0.01, 1.0)
        dx = rng.uniform(0.01, 10.0) * rng.choice([-1.0, 1.0])
        df = rng.uniform(-2.0, 2.0) * abs(dx)
        p = kernel.KernelPoint(dx=dx, delta_f=df)
        a = kernel.kernel_closed_form(p, eps)
        b = kernel.kernel_quadrature_oracle(p, eps, nodes=128)
        worst = max(worst, abs(a - b) / max(abs(b), 1e-300))
    checks.append(_check("closed_form_vs_oracle_rel_err", worst <= 1e-8, worst))

    odd = 0.0
    for _ in range(50):
        a = rng.uniform(-2, 2)
        y = rng.uniform(-5, 5)
        eps = rng.uniform(0.05, 1.0)
        odd = max(
            odd,
            abs(
                kernel.kernel_frozen(a, y, eps) + kernel.kernel_frozen(a, -y, eps)
            ),
        )
    checks.append(_check("frozen_kernel_oddness", odd <= 1e-13, odd))

    dx, df = 1.0, 0.3
    lim = float(kernel.muskat_limit(dx, df))
    errs = [
        abs(kernel.kernel_closed_form(kernel.KernelPoint(dx, df), e) - lim)
        for e in (0.1, 0.05, 0.025)
    ]
    orders = [float(np.log2(errs[0] / errs[1])), float(np.log2(errs[1] / errs[2]))]
    checks.append(_check("small_eps_richardson_order", min(orders) >= 1.9, orders))

    for a in (0.5, 1.0):
        val = kernel.ktilde_c_l1(a, 0.5)
        bound = 2.0 * a * a / (1.0 + a * a)
        checks.append(_check(f"ktilde_c_l1_bound_A={a}", val <= bound + 1e-9, [val, bound]))
        slope = kernel.ktilde_slope_l1(a, 0.5)
        checks.append(_check(f"ktilde_slope_l1_below_2_A={a}", slope < 2.0, slope))
    return checks


def _spectral_suite() -> list[dict]:
    rng = np.random.default_rng(11)
    checks = []

    herm = 0.0
    for _ in range(30):
        a = rng.uniform(-2, 2)
        xi = rng.uniform(0.05, 50.0)
        eps = rng.uniform(0.02, 0.5)
        herm = max(
            herm,
            abs(np.conj(spectral.k_hat(a, xi, eps)) - spectral.k_hat(a, -xi, eps)),
        )
    checks.append(_check("k_hat_hermitian_symmetry", herm <= 1e-14, herm))

    worst = 0.0
    for a in (-2.0, 0.0, 1.5):
        for s in np.logspace(-3, 3, 8):
            r = 1e-5
            d = (spectral.H_integral(s * (1 + r), a) - spectral.H_integral(s * (1 - r), a)) / (
                2 * s * r
            )
            ig = spectral.h_integrand(s, a)
            worst = max(worst, abs(d - ig) / (1.0 + abs(ig)))
    checks.append(_check("h_fundamental_theorem", worst <= 1e-6, worst))

    diff = 0.0
    for a in (-1.0, 0.3, 2.0):
        ss = np.logspace(-3, 3, 9)
        hq = np.array([spectral.H_integral(s, a) for s in ss])
        diff = max(diff, float(np.max(np.abs(hq - spectral.h_values(ss, a)))))
    checks.append(_check("h_closed_form_vs_quadrature", diff <= 1e-10, diff))

    f = GridFunction1D.from_callable(lambda x: np.sin(2 * np.pi * x / 20.0) + 0.2 * np.cos(6 * np.pi * x / 20.0), 128, 20.0)
    field = spectral.SpectralField.from_grid(f)
    t = 0.7
    roundtrip = spectral.apply_multiplier(
        spectral.apply_dinv(field, t), lambda xi: 1.0 + t * np.abs(xi)
    )
    err = float(np.max(np.abs(roundtrip.to_grid().values - f.values)))
    checks.append(_check("dinv_multiplier_roundtrip", err <= 1e-12, err))

    s = np.linspace(0.0, 100.0, 301)
    band_lo, band_hi = np.inf, 0.0
    for a in np.linspace(-2, 2, 21):
        vals = (1.0 + s) * np.exp(-spectral.h_values(s, float(a)))
        band_lo = min(band_lo, float(vals.min()))
        band_hi = max(band_hi, float(vals.max()))
    checks.append(
        _check("mtilde_positive_bounded_band", band_lo > 0.0 and band_hi < np.inf, [band_lo, band_hi])
    )
    return checks


def _subsolution_suite() -> list[dict]:
    checks = []
    length, n = 40.0, 128
    flat = GridFunction1D.zeros(n, length)
    eps = 0.05

    gam = subsolution.gamma_sharp(flat, eps, 0.5, subsolution.MixCoords(0.0, 0.2 * eps))
    checks.append(_check("flat_gamma_exact", abs(gam - (-(1 - 0.5) / 2)) <= 1e-12, gam))

    bump = GridFunction1D.from_callable(lambda x: 0.1 * np.exp(-(x**2)), n, length)
    pt = subsolution.MixCoords(bump.x[n // 2 + 3], 0.3 * eps)
    u = subsolution.velocity_field(bump, eps, pt)
    uc = subsolution.velocity_modified(bump, eps, pt)
    fp = float(bump.derivative().values[n // 2 + 3])
    perp = np.array([-fp, 1.0])
    tang = abs(uc @ perp - u @ perp) / (1.0 + float(np.linalg.norm(u)))
    checks.append(_check("tangential_identity", tang <= 1e-8, tang))

    samples = subsolution.build_fields(
        bump, eps, 1.0,
        [subsolution.MixCoords(bump.x[n // 2], lam) for lam in (-eps, 0.0, eps)],
    )
    rho_edges = [samples[0].rho, samples[-1].rho]
    checks.append(_check("rho_boundary_matching", rho_edges == [-1.0, 1.0], rho_edges))
    edge_gap = float(np.linalg.norm(samples[-1].m - samples[-1].rho * samples[-1].u))
    checks.append(_check("boundary_flux_collapse", edge_gap <= 1e-14, edge_gap))

    resid = abs(subsolution.zero_mean_residual(bump, eps, float(bump.x[n // 2 + 5])))
    checks.append(_check("zero_mean_identity", resid <= 1e-6, resid))
    return checks


def _flat_suite() -> list[dict]:
    checks = []
    cases = [
        ((1.0, 0.0, -1), (0.0, 2.0)),
        ((1.0, 0.0, 1), None),
        ((1.0, 1.0, 1), (0.0, 1.0 - 1.0 / np.sqrt(2.0))),
        ((0.0, 1.0, -1), (0.0, 1.0)),
    ]
    ok = True
    measured = []
    for (m1, m2, sg), expected in cases:
        got = flatlab.flat_admissible_c(m1, m2, sg)
        measured.append(got)
        if expected is None:
            ok = ok and got is None
        else:
            ok = ok and got is not None and abs(got[1] - expected[1]) <= 1e-14
    checks.append(_check("admissible_intervals", ok, [list(m) if m else None for m in measured]))

    worst = 0.0
    rng = np.random.default_rng(3)
    for _ in range(20):
        cfg = flatlab.FlatConfig(
            mu1=rng.uniform(0, 2), mu2=rng.uniform(-2, 2) or 1.0,
            sigma_sign=int(rng.choice([-1, 1])), c=rng.uniform(0.1, 1.5),
        )
        t = rng.uniform(0.2, 1.0)
        lam = rng.uniform(-0.9, 0.9) * cfg.c * t
        x = flatlab.to_physical(cfg, rng.uniform(-1, 1), lam)
        worst = max(worst, abs(flatlab.transport_residual(cfg, x, t)))
    checks.append(_check("transport_identity", worst <= 1e-12, worst))

    sweep = flatlab.flat_hull_sweep(1.0, 0.0, -1, [1.0, 2.0, 2.5])
    statuses = [row["status"] for row in sweep]
    checks.append(
        _check("horizontal_unstable_sweep", statuses == ["pass", "boundary", "fail"], statuses)
    )

    alg = True
    for c in np.linspace(0.05, 3.0, 30):
        cfg = flatlab.FlatConfig(mu1=1.0, mu2=1.0, sigma_sign=-1, c=float(c))
        interval = flatlab.flat_admissible_c(1.0, 1.0, -1)
        inside = interval[0] < c < interval[1]
        alg = alg and (abs(flatlab.flat_gamma(cfg)) < 0.5) == inside
    checks.append(_check("gamma_interval_equivalence", alg, alg))
    return checks


def _evolution_suite() -> list[dict]:
    checks = []
    length, n = 40.0, 128
    h = length / n
    zero = GridFunction1D.zeros(n, length)
    state = evolution.InterfaceState(f=zero, t=0.05, c=1.0, delta=4 * h, kappa=1e-3)
    rhs = evolution.rhs_regularized(state)
    checks.append(_check("zero_fixed_point", float(np.max(np.abs(rhs.values))) == 0.0, 0.0))

    ones = GridFunction1D(np.ones(n), length)
    moll = evolution.mollify(ones, 4 * h)
    err = float(np.max(np.abs(moll.values - 1.0)))
    checks.append(_check("mollifier_preserves_constants", err <= 1e-15, err))

    bump = GridFunction1D.from_callable(lambda x: 0.1 * np.exp(-(x**2)), n, length)
    m1 = evolution.mollify(evolution.mollify(bump, 4 * h), 4 * h)
    m2 = evolution.mollify(bump, np.sqrt(2.0) * 4 * h)
    semi = float(np.max(np.abs(m1.values - m2.values)))
    checks.append(_check("mollifier_semigroup", semi <= 1e-10, semi))

    par = abs(evolution.sobolev_norm(bump, 0) - bump.l2_norm())
    checks.append(_check("sobolev_parseval", par <= 1e-12, par))
    return checks


_SUITES = {
    "kernel": _kernel_suite,
    "spectral": _spectral_suite,
    "subsolution": _subsolution_suite,
    "flat": _flat_suite,
    "evolution": _evolution_suite,
}


def available_suites() -> list[str]:
    return sorted(_SUITES)


def run_suite(name: str) -> list[dict]:
    """Run one verification suite; raises KeyError for unknown names."""
    return _SUITES[name]()
