import numpy as np
import pytest

from mixzone import flatlab, subsolution
from mixzone.flatlab import FlatConfig
from mixzone.grid import GridFunction1D


def test_config_validation():
    with pytest.raises(ValueError):
        FlatConfig(mu1=-1.0, mu2=0.0, sigma_sign=-1, c=1.0)
    with pytest.raises(ValueError):
        FlatConfig(mu1=0.0, mu2=0.0, sigma_sign=-1, c=1.0)
    with pytest.raises(ValueError):
        FlatConfig(mu1=1.0, mu2=0.0, sigma_sign=0, c=1.0)
    with pytest.raises(ValueError):
        FlatConfig(mu1=1.0, mu2=0.0, sigma_sign=-1, c=0.0)


def test_gamma_closed_form_values():
    assert flatlab.flat_gamma(FlatConfig(1.0, 0.0, -1, 1.0)) == pytest.approx(0.0, abs=1e-15)
    assert flatlab.flat_gamma(FlatConfig(0.0, 1.0, 1, 0.5)) == pytest.approx(0.25)
    assert flatlab.flat_gamma(
        FlatConfig(1.0, 1.0, -1, 1.0 / np.sqrt(2.0))
    ) == pytest.approx(0.0, abs=1e-15)


def test_admissible_intervals():
    assert flatlab.flat_admissible_c(1.0, 0.0, -1) == pytest.approx((0.0, 2.0))
    assert flatlab.flat_admissible_c(1.0, 0.0, 1) is None
    lo, hi = flatlab.flat_admissible_c(1.0, 1.0, 1)
    assert (lo, hi) == pytest.approx((0.0, 1.0 - 1.0 / np.sqrt(2.0)))
    assert flatlab.flat_admissible_c(0.0, 1.0, 1) == pytest.approx((0.0, 1.0))


def test_gamma_interval_equivalence():
    # |gamma| < 1/2 exactly on the admissible interval (algebraic identity)
    rng = np.random.default_rng(9)
    for _ in range(40):
        mu1 = rng.uniform(0.0, 3.0)
        mu2 = rng.uniform(-3.0, 3.0)
        if mu1 == 0 and mu2 == 0:
            continue
        sg = int(rng.choice([-1, 1]))
        interval = flatlab.flat_admissible_c(mu1, mu2, sg)
        for c in rng.uniform(0.01, 3.0, 6):
            cfg = FlatConfig(mu1, mu2, sg, float(c))
            inside = interval is not None and interval[0] < c < interval[1]
            assert (abs(flatlab.flat_gamma(cfg)) < 0.5) == inside


def test_fields_center_and_boundary():
    cfg = FlatConfig(1.0, 1.0, -1, 1.0)
    eps = 0.3
    center = flatlab.flat_fields(cfg, 0.0, 0.0, eps)
    assert center.rho == 0.0
    assert np.allclose(center.u, 0.0)
    top = flatlab.flat_fields(cfg, 0.0, eps, eps)
    bottom = flatlab.flat_fields(cfg, 0.0, -eps, eps)
    assert {abs(top.rho), abs(bottom.rho)} == {1.0}
    for s in (top, bottom):
        assert np.linalg.norm(s.m - s.rho * s.u) <= 1e-15


def test_fields_divergence_structure():
    # u is tangential and rho varies along the normal: div u and u.grad rho
    # vanish identically, and the curl equals -d(rho)/dx1
    cfg = FlatConfig(1.0, 0.7, -1, 0.8)
    t_vec, n_vec = cfg.tangent, cfg.normal
    assert abs(t_vec @ n_vec) <= 1e-15
    eps, tval = 0.4, 0.5
    d = 1e-6

    def u_at(x):
        _, lam = flatlab.from_physical(cfg, x)
        return flatlab.flat_fields(cfg, 0.0, lam, eps).u

    def rho_at(x):
        _, lam = flatlab.from_physical(cfg, x)
        return -cfg.sigma_sign * lam / eps

    x0 = flatlab.to_physical(cfg, 0.3, 0.1 * eps)
    e1, e2 = np.array([d, 0.0]), np.array([0.0, d])
    div = (u_at(x0 + e1)[0] - u_at(x0 - e1)[0]) / (2 * d) + (
        u_at(x0 + e2)[1] - u_at(x0 - e2)[1]
    ) / (2 * d)
    curl = (u_at(x0 + e1)[1] - u_at(x0 - e1)[1]) / (2 * d) - (
        u_at(x0 + e2)[0] - u_at(x0 - e2)[0]
    ) / (2 * d)
    drho_dx1 = (rho_at(x0 + e1) - rho_at(x0 - e1)) / (2 * d)
    grad_rho = np.array(
        [drho_dx1, (rho_at(x0 + e2) - rho_at(x0 - e2)) / (2 * d)]
    )
    assert abs(div) <= 1e-9
    assert curl == pytest.approx(-drho_dx1, abs=1e-9)
    assert abs(u_at(x0) @ grad_rho) <= 1e-9


def test_transport_identity_random_points():
    rng = np.random.default_rng(12)
    worst = 0.0
    for _ in range(20):
        cfg = FlatConfig(
            mu1=float(rng.uniform(0, 2)),
            mu2=float(rng.uniform(0.1, 2) * rng.choice([-1, 1])),
            sigma_sign=int(rng.choice([-1, 1])),
            c=float(rng.uniform(0.1, 1.5)),
        )
        t = float(rng.uniform(0.2, 1.0))
        lam = float(rng.uniform(-0.9, 0.9)) * cfg.c * t
        x = flatlab.to_physical(cfg, float(rng.uniform(-2, 2)), lam)
        worst = max(worst, abs(flatlab.transport_residual(cfg, x, t)))
    assert worst <= 1e-12


def test_fields_reject_outside_strip():
    cfg = FlatConfig(1.0, 0.0, -1, 1.0)
    with pytest.raises(ValueError):
        flatlab.flat_fields(cfg, 0.0, 0.4, 0.3)


def test_coordinate_shim_roundtrip():
    cfg = FlatConfig(1.0, 2.0, -1, 1.0)
    s, lam = 1.7, -0.2
    x = flatlab.to_physical(cfg, s, lam)
    s2, lam2 = flatlab.from_physical(cfg, x)
    assert (s2, lam2) == pytest.approx((s, lam))
    # horizontal tangent: normal offset equals vertical offset
    flatcfg = FlatConfig(1.0, 0.0, -1, 1.0)
    assert np.allclose(flatlab.to_physical(flatcfg, 0.5, 0.1), [0.5, 0.1])


def test_hull_slacks_match_analytic_closed_forms():
    # the straight-interface state makes every slack explicit:
    #   slack1 = (1 - rho^2)(1/2 - |gamma|)
    #   slack2 = M^2 - 1                       (|2u + rho e2|^2 collapses to rho^2)
    #   slack3 = (1 - rho)(M/2 - |rho w + gamma(1+rho) n + (rho+2)/2 e2|)
    #   slack4 = (1 + rho)(M/2 - |rho w - gamma(1-rho) n + rho/2 e2|)
    # with w the tangential unit velocity, u = rho w
    cfg = FlatConfig(1.0, 1.3, -1, 0.8)
    eps, m_bound = 0.4, 9.0
    sin_a = cfg.mu2 / np.hypot(cfg.mu1, cfg.mu2)
    w = -sin_a * cfg.tangent
    n = cfg.normal
    e2 = np.array([0.0, 1.0])
    for lam in (-0.9 * eps, -0.3 * eps, 0.0, 0.55 * eps):
        s = flatlab.flat_fields(cfg, 0.0, lam, eps)
        margin = subsolution.hull_check(s, m_bound)
        rho, gamma = s.rho, s.gamma
        s1 = (1 - rho**2) * (0.5 - abs(gamma))
        s2 = m_bound**2 - 1.0
        s3 = (1 - rho) * (
            0.5 * m_bound
            - np.linalg.norm(rho * w + gamma * (1 + rho) * n + 0.5 * (rho + 2) * e2)
        )
        s4 = (1 + rho) * (
            0.5 * m_bound
            - np.linalg.norm(rho * w - gamma * (1 - rho) * n + 0.5 * rho * e2)
        )
        assert margin.slack1 == pytest.approx(s1, abs=1e-12)
        assert margin.slack2 == pytest.approx(s2, abs=1e-12)
        assert margin.slack3 == pytest.approx(s3, abs=1e-12)
        assert margin.slack4 == pytest.approx(s4, abs=1e-12)


def test_hull_sweep_horizontal_unstable():
    rows = flatlab.flat_hull_sweep(1.0, 0.0, -1, [1.0, 2.0, 2.5])
    assert [r["status"] for r in rows] == ["pass", "boundary", "fail"]
    assert rows[1]["min_slack"] == pytest.approx(0.0, abs=2e-6)


def test_hull_sweep_matches_interval_everywhere():
    # 20 directions x 10 growth rates, classification matches the interval
    rng = np.random.default_rng(21)
    for _ in range(20):
        angle = rng.uniform(-np.pi / 2 + 0.05, np.pi / 2 - 0.05)
        mu1, mu2 = float(np.cos(angle)), float(np.sin(angle))
        sg = int(rng.choice([-1, 1]))
        interval = flatlab.flat_admissible_c(mu1, mu2, sg)
        if interval is None:
            cs = np.linspace(0.1, 2.0, 10)
        else:
            cs = np.concatenate(
                [np.linspace(0.1, 0.9, 5) * interval[1], interval[1] * np.array([1.05, 1.2, 1.5, 2.0, 3.0])]
            )
        rows = flatlab.flat_hull_sweep(mu1, mu2, sg, cs)
        for row in rows:
            inside = interval is not None and interval[0] < row["c"] < interval[1]
            if row["status"] == "boundary":
                continue
            assert (row["status"] == "pass") == inside, (mu1, mu2, sg, row)


def test_flat_fields_agree_with_curved_pipeline_flat_data():
    # horizontal unstable straight interface == zero-height curved pipeline
    c = 0.7
    cfg = FlatConfig(1.0, 0.0, -1, c)
    f = GridFunction1D.zeros(128, 40.0)
    eps = 0.05
    gamma_curved = subsolution.gamma_sharp(f, eps, c, subsolution.MixCoords(0.0, 0.2 * eps))
    sample = flatlab.flat_fields(cfg, 0.0, 0.2 * eps, eps)
    assert sample.gamma == pytest.approx(gamma_curved, abs=1e-12)
    assert sample.gamma == pytest.approx(-flatlab.flat_gamma(cfg), abs=1e-15)
    curved = subsolution.build_fields(
        f, eps, c, [subsolution.MixCoords(0.0, 0.2 * eps)]
    )[0]
    assert np.allclose(curved.m, sample.m, atol=1e-12)
    assert np.allclose(curved.u, sample.u, atol=1e-12)
