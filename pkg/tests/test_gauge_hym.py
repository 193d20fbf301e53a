"""Gauge configurations, HYM residuals, slope, and the metric flow."""

import numpy as np
import pytest

from higgslab.fields import (
    FormField,
    l2_norm,
    random_band_limited,
    spectral_derivative,
)
from higgslab.gauge import GaugeConfig
from higgslab.hym import (
    determine_lambda,
    hym_flow,
    hym_residual,
    make_flat_abelian,
    make_normal_config,
    solve_direct_abelian,
)


def test_flat_abelian_witness(unit_torus):
    cfg = make_flat_abelian(unit_torus, [0.7 + 0.2j], [0.1 - 0.3j])
    res, lam = hym_residual(cfg)
    assert res.sup_norm() < 1e-14
    assert abs(lam) < 1e-14
    assert cfg.integrability_residual() == 0.0
    assert cfg.holomorphy_residual() < 1e-14


def test_normal_config_witness(unit_torus):
    cfg = make_normal_config(unit_torus, 2, [[1.0, -1.0]])
    res, lam = hym_residual(cfg)
    assert res.sup_norm() < 1e-14 and abs(lam) < 1e-14


def test_normal_config_rejects_offdiagonal(unit_torus):
    with pytest.raises(ValueError):
        make_normal_config(unit_torus, 2, [[1.0, -1.0, 0.0]])


def test_nilpotent_higgs_residual(unit_torus):
    """phi = [[0,1],[0,0]] dz on the trivial bundle: the residual is the
    commutator [phi, phi*] = diag(1, -1) contracted with g."""
    geom = unit_torus
    phi = FormField.constant(geom, 2, 1, 0, np.array([[0., 1.], [0., 0.]]))
    cfg = GaugeConfig(geom, 2, FormField.zeros(geom, 2, 0, 1), phi)
    res, lam = hym_residual(cfg)
    g11 = geom.g_inv[0, 0].real
    expect = g11 * np.diag([1.0, -1.0])
    assert abs(lam) < 1e-14
    assert np.max(np.abs(res.data[0, 0] - expect)) < 1e-13
    assert abs(res.sup_norm() - g11) < 1e-13


def test_residual_trace_integrates_to_zero(unit_torus, rng):
    geom = unit_torus
    cfg = GaugeConfig(geom, 2,
                      random_band_limited(geom, rng, 2, 0, 1, 2, scale=0.2),
                      random_band_limited(geom, rng, 2, 1, 0, 2, scale=0.2))
    res, _ = hym_residual(cfg)
    tr = np.trace(res.data[0, 0], axis1=-2, axis2=-1)
    assert abs(geom.integrate(tr)) < 1e-12


def test_twisted_slope(unit_torus):
    # degree-one model: K = pi d / (L M) gives lambda = 2 pi d / Vol
    d = 1
    L, M = unit_torus.periods[0]
    K = np.array([[np.pi * d / (L * M)]])
    cfg = make_flat_abelian(unit_torus, [0.0], scalar_curvature=K)
    lam = determine_lambda(cfg)
    assert abs(lam - 2 * np.pi * d / unit_torus.volume) < 1e-12


def test_flow_already_solved_is_noop(unit_torus):
    cfg = make_normal_config(unit_torus, 2, [[1.0, -1.0]])
    out, rep = hym_flow(cfg, tol=1e-10)
    assert rep.iterations == 0 and rep.converged
    assert np.max(np.abs(out.h - cfg.h)) == 0.0


def test_flow_perturbed_normal(unit_torus):
    geom = unit_torus
    phi = FormField.constant(geom, 2, 1, 0, np.diag([1.0, -1.0]))
    h0 = np.broadcast_to(
        np.array([[1.0, 0.05], [0.05, 1.0]], dtype=complex),
        geom.spatial_shape + (2, 2)).copy()
    cfg = GaugeConfig(geom, 2, FormField.zeros(geom, 2, 0, 1), phi, h0)
    out, rep = hym_flow(cfg, tol=1e-8, max_steps=2000)
    assert rep.converged and rep.residual_sup <= 1e-8
    # accepted steps never increase the L2 residual
    l2s = [row[2] for row in rep.history if row[3] >= 0]
    assert all(l2s[i + 1] <= l2s[i] * (1 + 1e-12) for i in range(len(l2s) - 1))


def test_flow_rank1_matches_direct_solve(unit_torus, rng):
    geom = unit_torus
    A = random_band_limited(geom, rng, 1, 0, 1, 2, scale=0.25)
    phi = random_band_limited(geom, rng, 1, 1, 0, 2, scale=0.25)
    cfg = GaugeConfig(geom, 1, A, phi)
    out, rep = hym_flow(cfg, tol=1e-10, max_steps=200)
    assert rep.converged and rep.iterations <= 200
    direct = solve_direct_abelian(cfg)
    resd, _ = hym_residual(direct)
    assert resd.sup_norm() < 1e-11
    assert np.max(np.abs(out.h - direct.h)) < 1e-9


def test_gauge_invariance_of_residual(unit_torus, rng):
    geom = unit_torus
    cfg = GaugeConfig(geom, 2,
                      random_band_limited(geom, rng, 2, 0, 1, 2, scale=0.2),
                      random_band_limited(geom, rng, 2, 1, 0, 2, scale=0.2))
    res, _ = hym_residual(cfg)
    th = rng.standard_normal()
    U = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]],
                 dtype=complex)
    res2, _ = hym_residual(cfg.gauge_transform(U))
    # pointwise spectral norm is the unitarily invariant quantity
    def specsup(r):
        return float(np.max(np.linalg.svd(r.data[0, 0],
                                          compute_uv=False)))
    assert abs(specsup(res) - specsup(res2)) < 1e-12


def test_twisted_bundle_holonomy(unit_torus):
    """A unitary twist diag(1, -1) per period: the configuration is exactly
    flat but a constant off-diagonal endomorphism is not holomorphic."""
    geom = unit_torus
    twist = np.zeros((2, 2))
    twist[1, 0] = 0.5   # half-integer shift for the second fibre, x-period
    cfg = make_normal_config(geom, 2, [[0.7, -0.7]], twist=twist)
    res, _ = hym_residual(cfg)
    assert res.sup_norm() < 1e-12
    offdiag = FormField.constant(geom, 2, 0, 0,
                                 np.array([[0., 1.], [0., 0.]]), twist=twist)
    d = spectral_derivative(offdiag, 0, anti=True)
    assert d.sup_norm() > 0.1  # the twist shifts the mode off zero


def test_determine_lambda_under_flow(unit_torus, rng):
    geom = unit_torus
    A = random_band_limited(geom, rng, 1, 0, 1, 2, scale=0.2)
    cfg = GaugeConfig(geom, 1, A, FormField.zeros(geom, 1, 1, 0))
    lam0 = determine_lambda(cfg)
    out, _ = hym_flow(cfg, tol=1e-10, max_steps=200)
    assert abs(determine_lambda(out) - lam0) < 1e-11
