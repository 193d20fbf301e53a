"""Involution, assumptions, obstruction field, quaternionic structure."""

import numpy as np
import pytest

from higgslab.complexes import canonical_h2_class, complex_inner, \
    complex_norm, d_star, d_total
from higgslab.fields import FormField, random_band_limited
from higgslab.gauge import GaugeConfig
from higgslab.hym import determine_lambda, make_flat_abelian, \
    make_normal_config
from higgslab.hyperkahler import (
    check_assumptions,
    hyperkahler_forms,
    iota,
    iota_harmonic_report,
    quaternion_suite,
    xi_field,
    xi_report,
)


def test_iota_componentwise(unit_torus, rng):
    geom = unit_torus
    cfg = make_normal_config(geom, 2, [[1.0, -1.0]])
    a = random_band_limited(geom, rng, 2, 1, 0, 2)
    b = random_band_limited(geom, rng, 2, 0, 1, 2)
    from higgslab.complexes import ComplexElement
    x = ComplexElement.from_parts(1, [a, b])
    ix = iota(x, cfg)
    assert (ix.parts[(1, 0)] + cfg.star(b)).sup_norm() < 1e-15
    assert (ix.parts[(0, 1)] - cfg.star(a)).sup_norm() < 1e-15
    # involution squares to minus the identity, exactly
    assert (iota(ix, cfg) + x).sup_norm() == 0.0
    # isometry of the L2 structure
    assert abs(complex_norm(ix, cfg) - complex_norm(x, cfg)) \
        < 1e-12 * complex_norm(x, cfg)


def test_iota_of_flat_eta(chart_rank1):
    _, chart = chart_rank1
    cfg = chart.config()
    e2 = chart.eta(1)                   # (dz, 0)
    ie2 = iota(e2, cfg)                 # should be (0, dz-bar), harmonic
    assert (ie2.parts[(0, 1)].data[0, 0] - 1.0).max() < 1e-12
    assert complex_norm(d_total(ie2, cfg), cfg) < 1e-12
    assert complex_norm(d_star(ie2, cfg), cfg) < 1e-12


def test_assumptions_flat_and_twisted(chart_rank1, chart_twisted):
    _, chart = chart_rank1
    rep, _ = check_assumptions(chart.config())
    assert rep["proj_flat_residual"] < 1e-12
    assert rep["dbar_theta_sym_residual"] == 0.0   # n = 1
    assert rep["h2_dim_estimate"] == 1
    assert rep["h2_spectral_gap"] > 100
    _, twisted = chart_twisted
    rept, _ = check_assumptions(twisted.config())
    assert rept["proj_flat_residual"] < 1e-10
    assert rept["h2_dim_estimate"] >= 1


def test_assumption_aprime_n2(chart_n2):
    _, chart = chart_n2
    rep, _ = check_assumptions(chart.config())
    assert rep["dbar_theta_sym_residual"] < 1e-10


def test_xi_flat_vanishes(chart_rank1):
    _, chart = chart_rank1
    xr, xi = xi_report(chart.config())
    assert xi.sup_norm() < 1e-12
    assert xr["d_xi"] < 1e-12 and xr["dstar_xi"] < 1e-12


def test_xi_twisted_proportional_to_canonical_class(chart_twisted):
    """On the twisted bundle xi = -i lambda (0, omega id, 0), at every
    family point, with lambda = 2 pi deg / Vol."""
    _, chart = chart_twisted
    for off in (None, (4, 0), (0, -4)):
        cfg = chart.config(off)
        xr, _ = xi_report(cfg)
        assert xr["d_xi"] < 1e-10 and xr["dstar_xi"] < 1e-10
        assert xr["coefficient_vs_lambda"] < 1e-10
        assert abs(xr["lambda"] - 2 * np.pi / cfg.geom.volume) < 1e-10


def test_xi_vector_bundle_case(unit_torus):
    """phi = 0 with projectively flat curvature: xi closed and coclosed."""
    K = np.array([[2.0]])
    cfg = make_flat_abelian(unit_torus, [0.0], scalar_curvature=K)
    xr, xi = xi_report(cfg)
    assert xi.parts[(1, 1)].sup_norm() > 0.1
    assert xr["d_xi"] < 1e-12 and xr["dstar_xi"] < 1e-12


def test_iota_preserves_harmonicity(chart_rank1, chart_rank2):
    for _, chart in (chart_rank1, chart_rank2):
        for row in iota_harmonic_report(chart):
            tol = 1e-7 + 100 * chart.step ** 2
            assert row["claim1_residual"] < tol
            assert row["claim2_residual"] < tol
            assert row["d_residual"] < tol


def test_claims_scale_with_assumption_violation(unit_torus, rng):
    """Perturbing an exact witness by a size-delta bundle deformation
    breaks projective flatness at O(delta); the obstruction-field residuals
    scale linearly with delta."""
    geom = unit_torus
    pert = random_band_limited(geom, rng, 2, 0, 1, 1, scale=1.0)
    pert = pert * (1.0 / pert.sup_norm())
    base = make_normal_config(geom, 2, [[1.0, -1.0]])
    residuals = {}
    flatness = {}
    for delta in (1e-3, 1e-4):
        cfg = GaugeConfig(geom, 2, pert * delta, base.phi)
        rep_xi, _ = xi_report(cfg)
        residuals[delta] = max(rep_xi["d_xi"], rep_xi["dstar_xi"])
        R = cfg.curvature()
        flatness[delta] = R.sup_norm()
        assert flatness[delta] < 10 * delta * 40  # violation is O(delta)
    ratio = residuals[1e-3] / max(residuals[1e-4], 1e-300)
    assert 3.0 < ratio < 30.0


def test_quaternion_structure(chart_rank1):
    _, chart = chart_rank1
    qs = quaternion_suite(chart)
    assert qs["closure_residual"] < 1e-10
    for val in qs["relations"].values():
        assert val < 1e-12
    assert qs["pi_match"] < 1e-9
    assert qs["pi_smallest_singular_value"] > 0.5
    assert qs["even_dimension"]


def test_hyperkahler_forms_flat_chart(chart_rank1):
    _, chart = chart_rank1
    hk = hyperkahler_forms(chart)
    assert np.max(np.abs(hk["omega_I"] - np.eye(2))) < 1e-10
    expect_J = np.conj(np.array([[0.0, -1.0], [1.0, 0.0]]))
    assert np.max(np.abs(hk["omega_J"] - expect_J.real)) < 1e-9
    assert hk["closedness_I"] < 1e-9
    assert hk["closedness_pi_cyclic"] < 1e-9
    assert hk["closedness_pi_antiholomorphic"] < 1e-9


def test_degenerate_family_flagged(unit_torus):
    from higgslab.family import FamilyChart, FamilyGenerator
    gen = FamilyGenerator(unit_torus, 1, 2, [
        {"kind": "phi", "direction": 0, "powers": (1, 0), "matrix": [[1.0]]},
        {"kind": "phi", "direction": 0, "powers": (0, 1), "matrix": [[1.0]]},
    ])
    chart = FamilyChart(unit_torus, 1, gen, center=[0.0, 0.0], step=1e-2)
    qs = quaternion_suite(chart)
    # both directions deform phi identically: pi degenerate
    assert qs["pi_smallest_singular_value"] < 1e-10
