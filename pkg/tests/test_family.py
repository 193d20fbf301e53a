"""Family charts: harmonic representatives, metric, curvature, forms."""

import numpy as np
import pytest

from higgslab.complexes import complex_inner, complex_norm, d_star, d_total
from higgslab.family import (
    FamilyChart,
    FamilyGenerator,
    c1_slope_integral,
    chern_forms,
)
from higgslab.geometry import TorusGeometry
from higgslab.hym import determine_lambda, hym_residual


def test_eta_values_mixed_chart(chart_rank1):
    """A(s) = -s1 dz-bar, phi(s) = s2 dz at the origin gives the constant
    representatives (0, dz-bar) and (dz, 0)."""
    _, chart = chart_rank1
    e1 = chart.eta(0)
    assert e1.parts[(1, 0)].sup_norm() < 1e-12
    assert np.max(np.abs(e1.parts[(0, 1)].data[0, 0] - 1.0)) < 1e-10
    e2 = chart.eta(1)
    assert e2.parts[(0, 1)].sup_norm() < 1e-12
    assert np.max(np.abs(e2.parts[(1, 0)].data[0, 0] - 1.0)) < 1e-12


def test_eta_constant_family_vanishes(unit_torus):
    gen = FamilyGenerator(unit_torus, 1, 1, [
        {"kind": "phi", "direction": 0, "powers": (0,), "matrix": [[0.7]]},
        {"kind": "A", "direction": 0, "powers": (0,), "matrix": [[0.2]]},
    ])
    chart = FamilyChart(unit_torus, 1, gen, center=[0.0], step=1e-2)
    assert chart.eta(0).sup_norm() < 1e-12
    assert np.max(np.abs(chart.pw_metric())) < 1e-12
    pi, nu = chart.sigma_forms()
    assert np.max(np.abs(pi)) < 1e-12 and np.max(np.abs(nu)) < 1e-12


def test_metric_values_and_bilinearity(chart_rank1, unit_torus):
    _, chart = chart_rank1
    G = chart.pw_metric()
    assert np.max(np.abs(G - np.eye(2))) < 1e-10
    # scaling the parameter by 2 scales G by 4
    gen2 = FamilyGenerator(unit_torus, 1, 2, [
        {"kind": "A", "direction": 0, "powers": (1, 0), "matrix": [[-2.0]]},
        {"kind": "phi", "direction": 0, "powers": (0, 1), "matrix": [[2.0]]},
    ])
    chart2 = FamilyChart(unit_torus, 1, gen2, center=[0.0, 0.0], step=1e-2)
    assert np.max(np.abs(chart2.pw_metric() - 4.0 * G)) < 1e-9


def test_harmonicity(chart_rank1, chart_rank2, chart_twisted):
    for _, chart in (chart_rank1, chart_rank2, chart_twisted):
        for row in chart.harmonicity_report():
            assert row["dstar_residual"] <= 1e-7
            assert row["d_residual"] <= 1e-7


def test_normal_family_keeps_identity_metric(unit_torus):
    gen = FamilyGenerator(unit_torus, 2, 1, [
        {"kind": "phi", "direction": 0, "powers": (1,),
         "matrix": np.diag([1.0, -1.0])},
    ])
    chart = FamilyChart(unit_torus, 2, gen, center=[0.3], step=1e-2)
    cfg = chart.config()
    assert np.max(np.abs(cfg.h - np.eye(2))) < 1e-12
    res, _ = hym_residual(cfg)
    assert res.sup_norm() < 1e-13


def test_lambda_constant_across_stencil(chart_rank1, chart_rank2,
                                        chart_twisted):
    for _, chart in (chart_rank1, chart_rank2, chart_twisted):
        vals = chart.lambda_values()
        assert max(vals) - min(vals) < 1e-10


def test_identity_suite_orders(chart_rank2):
    _, chart = chart_rank2
    rep = chart.identity_orders()
    for key in rep["coarse"]:
        coarse, fine = rep["coarse"][key], rep["fine"][key]
        order = rep["orders"][key]
        exact = coarse <= rep["floor"] and fine <= rep["floor"]
        assert exact or order >= 1.9, (key, coarse, fine, order)
        assert coarse <= 1e-2


def test_kahler_property(chart_rank1, chart_rank2):
    for _, chart in (chart_rank1, chart_rank2):
        kc = chart.kahler_check()
        assert kc["orthogonality"] < 1e-9
    # convergence of the rank-2 symmetry residual under chart refinement
    _, chart = chart_rank2
    coarse = chart.kahler_check(scale=4)
    fine = chart.refined().kahler_check(scale=4)
    c = max(coarse["fd_vs_pairing"], coarse["kahler_symmetry"])
    f = max(fine["fd_vs_pairing"], fine["kahler_symmetry"])
    assert f <= 1e-8 or np.log2(c / f) >= 1.9


def test_curvature_vanishes_rank1(chart_rank1):
    _, chart = chart_rank1
    R = chart.curvature_eq112()
    assert np.max(np.abs(R)) < 1e-8
    assert np.max(np.abs(chart.curvature_eq111() - R)) < 1e-8
    assert np.max(np.abs(chart.curvature_fd_oracle())) < 1e-6


def test_curvature_consistency_rank2(chart_rank2):
    _, chart = chart_rank2
    G = chart.pw_metric()
    scale = float(np.max(np.abs(G))) ** 2
    R112 = chart.curvature_eq112()
    R111 = chart.curvature_eq111()
    assert np.max(np.abs(R111 - R112)) / scale < 1e-6
    oracle = chart.curvature_fd_oracle()
    denom = max(np.max(np.abs(R112)), np.max(np.abs(oracle)), 1e-2 * scale)
    assert np.max(np.abs(R112 - oracle)) / denom < 1e-3
    assert chart.curvature_symmetry_residual(R112) / scale < 1e-6
    blocks = chart.curvature_sign_blocks()
    assert blocks["box_block_min_eig"] > -1e-9
    assert blocks["green_block_min_eig"] > -1e-9


def test_holomorphic_sectional(chart_rank1, rng):
    _, chart = chart_rank1
    R = chart.curvature_eq112()
    for _ in range(5):
        v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        sec = chart.holomorphic_sectional(v, R=R)
        assert sec["sectional"] >= -1e-10
        assert sec["difference"] < 1e-6


def test_sectional_rejects_ineffective_direction(unit_torus):
    gen = FamilyGenerator(unit_torus, 1, 1, [
        {"kind": "phi", "direction": 0, "powers": (0,), "matrix": [[1.0]]},
    ])
    chart = FamilyChart(unit_torus, 1, gen, center=[0.0], step=1e-2)
    with pytest.raises(ValueError):
        chart.holomorphic_sectional([1.0])


def test_sigma_forms_mixed_chart(chart_rank1):
    _, chart = chart_rank1
    sg = chart.sigma_report()
    assert abs(sg["pi"][0, 1] + 1.0) < 1e-10       # pi_12 = -1 for unit data
    assert np.max(np.abs(sg["nu"])) < 1e-12        # phi vanishes at centre
    assert sg["antisymmetry"] < 1e-15
    assert abs(sg["dnu_constant"] - 2.0) < 1e-8    # d nu = 2 pi (logged)
    assert sg["dnu_residual"] < 1e-9
    assert sg["nu_antiholomorphic"] < 1e-9
    assert sg["pi_antiholomorphic"] < 1e-9


def test_sigma_vanishes_on_pure_higgs_family(chart_twisted):
    _, chart = chart_twisted
    pi, nu = chart.sigma_forms()
    assert np.max(np.abs(pi)) < 1e-9
    assert np.max(np.abs(nu)) < 1e-9


def test_fiber_integral(chart_rank1, chart_rank2):
    for _, chart in (chart_rank1, chart_rank2):
        G = chart.pw_metric()
        fib = chart.fiber_integral_form()
        scale = float(np.max(np.abs(G)))
        assert np.max(np.abs(fib["total"] - G)) / scale < 1e-3
    # pure del-bar direction reproduced exactly by the curvature term
    _, chart = chart_rank1
    fib = chart.fiber_integral_form()
    assert abs(fib["curvature_term"][0, 0] - 1.0) < 1e-8
    assert abs(fib["hessian_term"][1, 1] - 1.0) < 1e-6


def test_chern_forms_and_chi(unit_torus, chart_twisted, rng):
    from higgslab.hym import make_flat_abelian
    flat = make_flat_abelian(unit_torus, [0.6])
    c1, ch2 = chern_forms(flat)
    assert c1.sup_norm() < 1e-14
    assert ch2 is None
    # chi of phi = c dz on the volume-one torus with unit metric is |c|^2
    chart = FamilyChart(unit_torus, 1, FamilyGenerator(unit_torus, 1, 1, [
        {"kind": "phi", "direction": 0, "powers": (1,), "matrix": [[1.0]]},
    ]), center=[0.3 + 0.1j], step=1e-2)
    assert abs(chart.chi_value() - abs(0.3 + 0.1j) ** 2) < 1e-12
    # slope integral consistent with lambda on the twisted bundle
    _, twisted = chart_twisted
    cfg = twisted.config()
    lam = determine_lambda(cfg)
    slope = c1_slope_integral(cfg)
    assert abs(2 * np.pi * slope - lam * cfg.rank * cfg.geom.volume) < 1e-9


def test_chi_of_zero_higgs(unit_torus):
    gen = FamilyGenerator(unit_torus, 1, 1, [
        {"kind": "A", "direction": 0, "powers": (1,), "matrix": [[0.5]]},
    ])
    chart = FamilyChart(unit_torus, 1, gen, center=[0.0], step=1e-2)
    assert abs(chart.chi_value()) < 1e-14


def test_normal_coordinate_projection(chart_rank2):
    _, chart = chart_rank2
    assert chart.normal_coordinate_check() < 100 * chart.step ** 2


def test_box_source_matches_laplacian(chart_rank2):
    """The bracket formula equals the Laplacian of the mixed curvature up
    to finite-difference error."""
    _, chart = chart_rank2
    from higgslab.complexes import ComplexElement, laplacian
    cfg = chart.config()
    worst = 0.0
    for i in range(chart.m):
        for j in range(chart.m):
            Rij = chart.base_curvature(i, j)
            box = laplacian(ComplexElement.from_parts(0, [Rij]), cfg)
            src = chart.box_source(i, j)
            worst = max(worst, (box.parts[(0, 0)] - src).sup_norm())
    assert worst < 100 * chart.step ** 2


def test_solve_all_first_order(unit_torus):
    gen = FamilyGenerator(unit_torus, 1, 1, [
        {"kind": "phi", "direction": 0, "powers": (1,), "matrix": [[1.0]]},
    ])
    chart = FamilyChart(unit_torus, 1, gen, center=[0.1], step=1e-2)
    chart.solve_all_first_order()
    # centre plus +-1 and +-2 half-steps in both real directions
    assert chart.solve_count == 9
    res, _ = hym_residual(chart.config())
    assert res.sup_norm() <= chart.tol_hym


def test_stencil_solves_have_unit_determinant(chart_rank2):
    _, chart = chart_rank2
    cfg = chart.config((2, 0, 0, 0))
    sign, logdet = np.linalg.slogdet(cfg.h)
    assert abs(np.mean(logdet.real)) < 1e-12
