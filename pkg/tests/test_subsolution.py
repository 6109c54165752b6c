import numpy as np
import pytest

from mixzone import evolution, subsolution
from mixzone.grid import GridFunction1D, spectral_derivative
from mixzone.subsolution import HullMargin, MixCoords, SubsolutionSample

LENGTH = 40.0
EPS = 0.05


@pytest.fixture(scope="module")
def bump():
    return GridFunction1D.from_callable(lambda x: 0.1 * np.exp(-(x**2)), 256, LENGTH)


@pytest.fixture(scope="module")
def flat():
    return GridFunction1D.zeros(128, LENGTH)


def evolution_rhs(f, width, trunc_radius=None):
    r = trunc_radius if trunc_radius is not None else f.length / 2 - f.h
    g = spectral_derivative(f.values, f.length)
    return -evolution.kernel_quadrature(f.values, g, f.length, width, r)


def test_flat_velocity_vanishes(flat):
    u = subsolution.velocity_field(flat, EPS, MixCoords(0.0, 0.2 * EPS))
    assert abs(u[1]) == 0.0
    assert abs(u[0]) <= 1e-15


def test_flat_velocity_translation_invariant(flat):
    u1 = subsolution.velocity_field(flat, EPS, MixCoords(0.0, 0.0))
    u2 = subsolution.velocity_field(flat, EPS, MixCoords(5.0, 0.0))
    assert u1[0] == pytest.approx(u2[0], abs=1e-15)


def test_velocity_rejects_outside_strip(bump):
    with pytest.raises(ValueError):
        subsolution.velocity_field(bump, EPS, MixCoords(0.0, 2 * EPS))


def test_velocity_requires_grid_aligned_site(bump):
    with pytest.raises(ValueError):
        subsolution.velocity_field(bump, EPS, MixCoords(0.077, 0.0))


def test_velocity_refinement_stability(bump):
    # doubling the transverse Gauss-Legendre panels moves the value < 1e-6
    pt = MixCoords(bump.x[131], 0.3 * EPS)
    u_base = subsolution.velocity_field(bump, EPS, pt, prime_panels=12)
    u_fine = subsolution.velocity_field(bump, EPS, pt, prime_panels=24)
    assert np.max(np.abs(u_base - u_fine)) <= 1e-6


def test_tangential_identity(bump):
    slope = bump.derivative().values
    for j, frac in ((131, 0.3), (120, -0.7), (128, 0.0)):
        pt = MixCoords(bump.x[j], frac * EPS)
        u = subsolution.velocity_field(bump, EPS, pt)
        uc = subsolution.velocity_modified(bump, EPS, pt)
        perp = np.array([-slope[j], 1.0])
        assert abs(uc @ perp - u @ perp) <= 1e-8 * (1 + np.linalg.norm(u))


def test_modified_velocity_is_vertical(bump):
    uc = subsolution.velocity_modified(bump, EPS, MixCoords(bump.x[131], 0.2 * EPS))
    assert uc[0] == 0.0


def test_strip_average_matches_evolution_rhs(bump):
    # the transverse mean of the modified velocity is the interface speed
    dtz = evolution_rhs(bump, EPS, trunc_radius=10.0)
    for j in (120, 128, 140):
        site = subsolution._SiteVelocity(bump, EPS, j, trunc_radius=10.0)
        assert site.strip_average() == pytest.approx(dtz[j], abs=1e-6)


def test_zero_mean_identity(bump):
    dtz = evolution_rhs(bump, EPS, trunc_radius=10.0)
    for j in (122, 128, 137):
        resid = subsolution.zero_mean_residual(
            bump, EPS, float(bump.x[j]), dtz=float(dtz[j]), trunc_radius=10.0
        )
        assert abs(resid) <= 1e-6


def test_gamma_flat_exact(flat):
    for c in (0.5, 1.0, 1.5):
        for lam in (-0.9 * EPS, 0.0, 0.4 * EPS):
            g = subsolution.gamma_sharp(flat, EPS, c, MixCoords(0.0, lam))
            assert g == pytest.approx(-(1 - c) / 2, abs=1e-12)


def test_gamma_rejects_closed_strip(bump):
    with pytest.raises(ValueError):
        subsolution.gamma_sharp(bump, EPS, 1.0, MixCoords(0.0, EPS))


def test_gamma_continuous_across_zero(bump):
    j = 131
    dtz = float(evolution_rhs(bump, EPS, 10.0)[j])
    site = subsolution._SiteVelocity(bump, EPS, j, trunc_radius=10.0)
    lo = site.gamma(-1e-9 * EPS, 1.0, dtz)
    hi = site.gamma(1e-9 * EPS, 1.0, dtz)
    assert abs(hi - lo) <= 1e-6


def test_gamma_bounded_near_edges(bump):
    j = 131
    dtz = float(evolution_rhs(bump, EPS, 10.0)[j])
    site = subsolution._SiteVelocity(bump, EPS, j, trunc_radius=10.0)
    for frac in (-1 + 1e-6, 1 - 1e-6):
        g = site.gamma(frac * EPS, 1.0, dtz)
        assert np.isfinite(g) and abs(g) < 0.5


def test_build_fields_boundary_matching(bump):
    lattice = [MixCoords(bump.x[128], lam) for lam in (-EPS, -0.5 * EPS, 0.0, 0.5 * EPS, EPS)]
    samples = subsolution.build_fields(bump, EPS, 1.0, lattice, trunc_radius=10.0)
    assert samples[0].rho == -1.0 and samples[-1].rho == 1.0
    for s in samples[1:-1]:
        assert abs(s.rho) < 1.0
    for s in (samples[0], samples[-1]):
        assert np.linalg.norm(s.m - s.rho * s.u) <= 1e-15


def test_build_fields_center_sample(bump):
    (sample,) = subsolution.build_fields(
        bump, EPS, 1.0, [MixCoords(bump.x[128], 0.0)], trunc_radius=10.0
    )
    assert sample.rho == 0.0
    # m = rho u - (gamma + 1/2)(1 - rho^2) e2: at rho = 0 the e-part is (0, 1/2)
    assert sample.m[1] == pytest.approx(-(sample.gamma + 0.5), rel=1e-12)
    assert sample.m[0] == pytest.approx(0.0, abs=1e-15)


def test_build_fields_flat_unit_rate(flat):
    lattice = [MixCoords(0.0, lam) for lam in (-0.6 * EPS, 0.2 * EPS)]
    samples = subsolution.build_fields(flat, EPS, 1.0, lattice)
    for s, lam in zip(samples, (-0.6 * EPS, 0.2 * EPS)):
        rho = lam / EPS
        expected_m = rho * s.u - 0.5 * (1 - rho**2) * np.array([0.0, 1.0])
        assert np.allclose(s.m, expected_m, atol=1e-12)
        assert abs(s.gamma) <= 1e-12


def test_hull_check_interior_point():
    s = SubsolutionSample(rho=0.0, u=np.zeros(2), m=np.array([0.0, -0.25]), gamma=0.0)
    margin = subsolution.hull_check(s, 2.0)
    assert margin.slack1 == pytest.approx(0.25)
    assert margin.strict


def test_hull_check_equality_case():
    # m = 0 at rho = 0, u = 0 sits exactly on the first constraint sphere
    s = SubsolutionSample(rho=0.0, u=np.zeros(2), m=np.zeros(2), gamma=0.0)
    margin = subsolution.hull_check(s, 2.0)
    assert margin.slack1 == 0.0
    assert not margin.strict
    # pushing m upward violates the constraint by exactly the push
    for zeta in (1e-3, 1e-6):
        s2 = SubsolutionSample(rho=0.0, u=np.zeros(2), m=np.array([0.0, zeta]), gamma=0.0)
        assert subsolution.hull_check(s2, 2.0).slack1 == pytest.approx(-zeta)


def test_hull_check_rejects_small_bound():
    s = SubsolutionSample(rho=0.0, u=np.zeros(2), m=np.zeros(2), gamma=0.0)
    with pytest.raises(ValueError):
        subsolution.hull_check(s, 1.0)


def test_hull_margin_min_slack():
    m = HullMargin(slack1=0.1, slack2=3.0, slack3=-0.2, slack4=1.0, m_bound=9.0)
    assert m.min_slack == -0.2 and not m.strict


def test_choose_m_values():
    assert subsolution.choose_M(np.zeros((3, 2))) == pytest.approx(8.0, rel=1e-5)
    u = np.array([[1.0, 0.0], [0.0, 0.5]])
    assert subsolution.choose_M(u) == pytest.approx(16.0, rel=1e-5)
    with pytest.raises(ValueError):
        subsolution.choose_M(np.zeros((0, 2)))


def test_choose_m_stable_under_lattice_refinement(bump):
    def m_for(n_lambda):
        lams = np.linspace(-EPS, EPS, n_lambda)
        lattice = [MixCoords(bump.x[j], lam) for j in (120, 128, 136) for lam in lams]
        samples = subsolution.build_fields(bump, EPS, 1.0, lattice, trunc_radius=10.0)
        return subsolution.choose_M(np.array([s.u for s in samples]))

    m9, m17 = m_for(9), m_for(17)
    assert abs(m9 - m17) / m17 <= 0.02


def test_report_flat_trajectory():
    f = GridFunction1D.zeros(128, LENGTH)
    c = 0.5
    traj = evolution.integrate(f, c=c, delta=4 * f.h, kappa=1e-3, dt=0.025, t_end=0.05)
    rows = subsolution.subsolution_report(traj, s_indices=[32, 64], n_lambda=5)
    assert rows
    for row in rows:
        assert row["max_gamma"] == pytest.approx(abs(1 - c) / 2, abs=1e-10)
        assert row["ok"]


def test_report_empty_trajectory():
    assert subsolution.subsolution_report(evolution.Trajectory()) == []


def test_report_reproducible(bump):
    traj = evolution.integrate(
        bump, c=1.0, delta=4 * bump.h, kappa=1e-3, dt=0.025, t_end=0.025, output_every=1
    )
    r1 = subsolution.subsolution_report(traj, s_indices=[120, 128], n_lambda=5)
    r2 = subsolution.subsolution_report(traj, s_indices=[120, 128], n_lambda=5)
    assert r1 == r2


def test_report_threaded_matches_serial(bump, monkeypatch):
    traj = evolution.integrate(
        bump, c=1.0, delta=4 * bump.h, kappa=1e-3, dt=0.025, t_end=0.025, output_every=1
    )
    serial = subsolution.subsolution_report(traj, s_indices=[118, 128, 138], n_lambda=5)
    monkeypatch.setenv("MIX_THREADS", "3")
    assert subsolution.worker_count() == 3
    threaded = subsolution.subsolution_report(traj, s_indices=[118, 128, 138], n_lambda=5)
    assert serial == threaded


def test_worker_count_defaults(monkeypatch):
    monkeypatch.delenv("MIX_THREADS", raising=False)
    assert subsolution.worker_count() == 1
    monkeypatch.setenv("MIX_THREADS", "not-a-number")
    assert subsolution.worker_count() == 1
